#pragma once

#include <span>
#include <string>
#include <vector>

#include "dae/image.hpp"

namespace dae {

enum class StructureNumerator {
    reference,  // (sigma_xy + C3): s(x, x) = 1
    literal     // (2 sigma_xy + C3): does not normalise to 1 for identical images
};

/// SSIM(x, y) = l^alpha * c^beta * s^gamma with C1 = (k1 L)^2, C2 = (k2 L)^2, C3 = C2 / 2.
/// `window` 0 compares whole images; otherwise the score is the mean over every
/// window x window patch at stride 1.
struct SsimConfig {
    double alpha = 1.0;
    double beta = 1.0;
    double gamma = 1.0;
    double k1 = 0.01;
    double k2 = 0.03;
    double dynamic_range = 1.0;
    int window = 8;
    StructureNumerator numerator = StructureNumerator::reference;

    double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
    double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }
    double c3() const noexcept { return c2() / 2.0; }
    void validate() const;
    std::string window_name() const;  // "global" or the side length
};

struct SsimComponents {
    double l = 1.0;
    double c = 1.0;
    double s = 1.0;
};

/// Luminance, contrast and structure over the whole image, population statistics.
SsimComponents ssim_components(const Image& x, const Image& y, const SsimConfig& cfg = {});
double ssim(const Image& x, const Image& y, const SsimConfig& cfg = {});
/// Arithmetic mean of per-pair SSIM.
double mean_ssim(std::span<const Image> clean, std::span<const Image> processed, const SsimConfig& cfg = {});
/// 10 log10(peak^2 / MSE); +infinity when the images are identical.
double psnr(const Image& x, const Image& y, double peak = 1.0);

/// Pairwise (cascade) summation, independent of how the caller later splits work.
double pairwise_sum(std::span<const double> values);

}  // namespace dae
