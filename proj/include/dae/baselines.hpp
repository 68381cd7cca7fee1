#pragma once

#include <vector>

#include "dae/image.hpp"

namespace dae {

/// Mirror index about the border pixel without repeating it (..., 2, 1 | 0, 1, 2, ...).
int reflect_index(int i, int n) noexcept;

/// Median of each k x k neighbourhood, reflected at the borders. k must be odd.
Image median_filter(const Image& img, int k = 3);

struct NlMeansConfig {
    int patch_radius = 3;
    int search_radius = 10;
    double h = 0.1;
    double sigma = 0.0;  // noise estimate subtracted from patch distances

    void validate() const;
};

/// Non-local means: every output pixel is the normalised weighted mean of the pixels in its
/// search window (clipped to the image), with weight exp(-max(d2 - 2 sigma^2, 0) / h^2) and
/// d2 the mean squared difference of reflected patches.
Image nl_means(const Image& img, const NlMeansConfig& cfg = {});

struct NlMeansWeights {
    int y0 = 0, x0 = 0;    // top-left of the clipped search window
    int height = 0, width = 0;
    std::vector<double> weights;  // normalised, row-major over the search window
};

/// Weights used for output pixel (y, x), computed patch by patch from the definition.
NlMeansWeights nl_means_weights(const Image& img, const NlMeansConfig& cfg, int y, int x);

}  // namespace dae
