#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

enum class NoiseKind : std::uint8_t { gaussian, poisson };

/// How a Poisson draw is applied to a selected pixel.
enum class PoissonMode : std::uint8_t {
    additive,     // x + P(lambda), clamped
    substitutive  // P(lambda) / (lambda + 3 sqrt(lambda)), clamped
};

/// Pixel corruption: each pixel is selected independently with probability `p`, and selected
/// pixels receive Gaussian N(mu, sigma) or Poisson(lambda) noise before clamping to [0, 1].
struct NoiseSpec {
    NoiseKind kind = NoiseKind::gaussian;
    double p = 0.1;
    double mu = 0.0;
    double sigma = 1.0;
    double lambda = 1.0;
    PoissonMode poisson_mode = PoissonMode::additive;

    static NoiseSpec gaussian(double p, double mu, double sigma);
    static NoiseSpec poisson(double p, double lambda);

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Short identifier such as "gaussian_p0.1_mu0_sigma1".
    std::string id() const;
    bool operator==(const NoiseSpec&) const = default;
};

/// The six corruption settings used for the reported experiments.
std::vector<NoiseSpec> table1_presets();
/// Heaviest Gaussian setting (p = 0.2, sigma = 10), reported alongside the presets.
NoiseSpec sigma10_preset();
/// Resolves "0".."5" to a preset, "sd10" to sigma10_preset(); throws ConfigError otherwise.
NoiseSpec preset_by_id(const std::string& id);

/// Corrupts every pixel of `dataset` (values in [0, 1]). The random numbers for pixel i
/// depend only on (seed, i), so the result is independent of thread count.
Tensor corrupt(const Tensor& dataset, const NoiseSpec& spec, std::uint64_t seed);

/// Boolean mask of which flat pixel indices `corrupt` selects for (size, spec.p, seed).
std::vector<bool> corruption_mask(std::size_t size, double p, std::uint64_t seed);

}  // namespace dae
