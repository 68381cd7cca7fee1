#include "dae/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "dae/error.hpp"
#include "dae/rng.hpp"

namespace dae {
namespace {

// Counter word 3 tags the purpose so noise draws never collide with other streams.
constexpr std::uint32_t kNoiseDomain = 0x4E4F4953u;  // "NOIS"

PhiloxCounter pixel_block(std::uint64_t pixel, std::uint32_t block, PhiloxKey key) {
    return philox4x32({static_cast<std::uint32_t>(pixel), static_cast<std::uint32_t>(pixel >> 32),
                       block, kNoiseDomain},
                      key);
}

// Knuth's multiplicative method over the pixel's private sequence of uniforms, starting at
// word 3 of block 0. Rates above 30 are split into chunks (a sum of Poissons is Poisson).
int poisson_draw(std::uint64_t pixel, double lambda, PhiloxKey key, const PhiloxCounter& first) {
    std::uint32_t block = 0;
    PhiloxCounter words = first;
    int word = 3;
    auto next_uniform = [&]() {
        if (word == 4) {
            words = pixel_block(pixel, ++block, key);
            word = 0;
        }
        return unit_open(words[word++]);
    };
    int total = 0;
    double remaining = lambda;
    while (remaining > 0.0) {
        const double chunk = std::min(remaining, 30.0);
        remaining -= chunk;
        const double limit = std::exp(-chunk);
        double prod = next_uniform();
        while (prod > limit) {
            ++total;
            prod *= next_uniform();
        }
    }
    return total;
}

std::string fmt_number(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

}  // namespace

NoiseSpec NoiseSpec::gaussian(double p, double mu, double sigma) {
    NoiseSpec s;
    s.kind = NoiseKind::gaussian;
    s.p = p;
    s.mu = mu;
    s.sigma = sigma;
    return s;
}

NoiseSpec NoiseSpec::poisson(double p, double lambda) {
    NoiseSpec s;
    s.kind = NoiseKind::poisson;
    s.p = p;
    s.mu = 0.0;
    s.sigma = 0.0;
    s.lambda = lambda;
    return s;
}

void NoiseSpec::validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("noise p must lie in [0, 1], got " + fmt_number(p));
    if (kind == NoiseKind::gaussian) {
        if (!std::isfinite(mu)) throw ConfigError("noise mu must be finite");
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw ConfigError("noise sigma must be >= 0, got " + fmt_number(sigma));
    } else if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw ConfigError("noise lambda must be > 0, got " + fmt_number(lambda));
    }
}

std::string NoiseSpec::id() const {
    if (kind == NoiseKind::gaussian)
        return "gaussian_p" + fmt_number(p) + "_mu" + fmt_number(mu) + "_sigma" + fmt_number(sigma);
    std::string s = "poisson_p" + fmt_number(p) + "_lambda" + fmt_number(lambda);
    if (poisson_mode == PoissonMode::substitutive) s += "_subst";
    return s;
}

std::vector<NoiseSpec> table1_presets() {
    return {NoiseSpec::gaussian(0.1, 0.0, 1.0), NoiseSpec::gaussian(0.5, 0.0, 1.0),
            NoiseSpec::gaussian(0.2, 0.0, 2.0), NoiseSpec::gaussian(0.2, 0.0, 5.0),
            NoiseSpec::poisson(0.2, 1.0),       NoiseSpec::poisson(0.2, 5.0)};
}

NoiseSpec sigma10_preset() { return NoiseSpec::gaussian(0.2, 0.0, 10.0); }

NoiseSpec preset_by_id(const std::string& id) {
    if (id == "sd10") return sigma10_preset();
    const auto presets = table1_presets();
    if (id.size() == 1 && id[0] >= '0' && id[0] < '0' + static_cast<char>(presets.size()))
        return presets[static_cast<std::size_t>(id[0] - '0')];
    throw ConfigError("unknown noise preset '" + id + "' (expected 0-5 or sd10)");
}

std::vector<bool> corruption_mask(std::size_t size, double p, std::uint64_t seed) {
    const PhiloxKey key = key_from_seed(seed);
    std::vector<bool> mask(size);
    for (std::size_t i = 0; i < size; ++i) mask[i] = unit_open(pixel_block(i, 0, key)[0]) < p;
    return mask;
}

Tensor corrupt(const Tensor& dataset, const NoiseSpec& spec, std::uint64_t seed) {
    spec.validate();
    Tensor out = dataset;
    if (spec.p == 0.0) return out;
    const PhiloxKey key = key_from_seed(seed);
    const std::int64_t n = static_cast<std::int64_t>(out.size());
    float* px = out.raw();

#pragma omp parallel for schedule(static)
    for (std::int64_t i = 0; i < n; ++i) {
        const auto pixel = static_cast<std::uint64_t>(i);
        const PhiloxCounter w = pixel_block(pixel, 0, key);
        if (!(unit_open(w[0]) < spec.p)) continue;
        double v = px[i];
        if (spec.kind == NoiseKind::gaussian) {
            const double z = std::sqrt(-2.0 * std::log(unit_open(w[1]))) *
                             std::cos(2.0 * std::numbers::pi * unit_open(w[2]));
            v += spec.mu + spec.sigma * z;
        } else {
            const int k = poisson_draw(pixel, spec.lambda, key, w);
            if (spec.poisson_mode == PoissonMode::additive)
                v += k;
            else
                v = k / (spec.lambda + 3.0 * std::sqrt(spec.lambda));
        }
        px[i] = static_cast<float>(std::clamp(v, 0.0, 1.0));
    }
    return out;
}

}  // namespace dae
