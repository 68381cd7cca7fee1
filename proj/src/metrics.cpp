#include "dae/metrics.hpp"

#include <cmath>
#include <limits>

#include "dae/error.hpp"

namespace dae {
namespace {

void check_pair(const Image& x, const Image& y) {
    if (x.height != y.height) throw ShapeError("height", "SSIM inputs differ in height");
    if (x.width != y.width) throw ShapeError("width", "SSIM inputs differ in width");
    if (x.empty()) throw ShapeError("size", "SSIM of an empty image");
}

// Statistics of the h x w region with top-left corner (y0, x0), two-pass for accuracy.
SsimComponents region_components(const Image& x, const Image& y, int y0, int x0, int h, int w,
                                 const SsimConfig& cfg) {
    double sx = 0.0, sy = 0.0;
    for (int r = y0; r < y0 + h; ++r)
        for (int c = x0; c < x0 + w; ++c) {
            sx += x.at(r, c);
            sy += y.at(r, c);
        }
    const double n = static_cast<double>(h) * w;
    const double mx = sx / n, my = sy / n;
    double vx = 0.0, vy = 0.0, cxy = 0.0;
    for (int r = y0; r < y0 + h; ++r)
        for (int c = x0; c < x0 + w; ++c) {
            const double dx = x.at(r, c) - mx, dy = y.at(r, c) - my;
            vx += dx * dx;
            vy += dy * dy;
            cxy += dx * dy;
        }
    vx /= n;
    vy /= n;
    cxy /= n;
    // sqrt(vx * vy) rather than sqrt(vx) * sqrt(vy): exact when vx == vy.
    const double sxsy = std::sqrt(vx * vy);
    const double c1 = cfg.c1(), c2 = cfg.c2(), c3 = cfg.c3();
    SsimComponents out;
    out.l = (2.0 * mx * my + c1) / (mx * mx + my * my + c1);
    out.c = (2.0 * sxsy + c2) / (vx + vy + c2);
    const double num = cfg.numerator == StructureNumerator::reference ? cxy + c3 : 2.0 * cxy + c3;
    out.s = num / (sxsy + c3);
    return out;
}

double combine(const SsimComponents& k, const SsimConfig& cfg) {
    auto power = [](double base, double e, const char* name) {
        if (e == 1.0) return base;
        if (base < 0.0 && e != std::floor(e))
            throw NumericError(std::string("SSIM ") + name +
                               " component is negative; a non-integer exponent is undefined");
        return std::pow(base, e);
    };
    return power(k.l, cfg.alpha, "luminance") * power(k.c, cfg.beta, "contrast") *
           power(k.s, cfg.gamma, "structure");
}

}  // namespace

void SsimConfig::validate() const {
    if (!(alpha > 0.0 && beta > 0.0 && gamma > 0.0)) throw ConfigError("SSIM exponents must be positive");
    if (!(k1 > 0.0 && k2 > 0.0)) throw ConfigError("SSIM stabiliser coefficients must be positive");
    if (!(dynamic_range > 0.0)) throw ConfigError("SSIM dynamic range must be positive");
    if (window < 0) throw ConfigError("SSIM window must be 0 (global) or a positive side length");
}

std::string SsimConfig::window_name() const { return window == 0 ? "global" : std::to_string(window); }

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 8) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

SsimComponents ssim_components(const Image& x, const Image& y, const SsimConfig& cfg) {
    check_pair(x, y);
    return region_components(x, y, 0, 0, x.height, x.width, cfg);
}

double ssim(const Image& x, const Image& y, const SsimConfig& cfg) {
    cfg.validate();
    check_pair(x, y);
    if (cfg.window == 0) return combine(region_components(x, y, 0, 0, x.height, x.width, cfg), cfg);
    if (cfg.window > x.height || cfg.window > x.width)
        throw ShapeError(cfg.window > x.height ? "height" : "width",
                         "SSIM window " + std::to_string(cfg.window) + " exceeds the image");
    const int ny = x.height - cfg.window + 1, nx = x.width - cfg.window + 1;
    std::vector<double> scores(static_cast<std::size_t>(ny) * nx);

#pragma omp parallel for schedule(static)
    for (int r = 0; r < ny; ++r)
        for (int c = 0; c < nx; ++c)
            scores[static_cast<std::size_t>(r) * nx + c] =
                combine(region_components(x, y, r, c, cfg.window, cfg.window, cfg), cfg);
    return pairwise_sum(scores) / static_cast<double>(scores.size());
}

double mean_ssim(std::span<const Image> clean, std::span<const Image> processed, const SsimConfig& cfg) {
    if (clean.size() != processed.size())
        throw DataError("mean_ssim: " + std::to_string(clean.size()) + " clean images but " +
                        std::to_string(processed.size()) + " processed");
    if (clean.empty()) throw DataError("mean_ssim of an empty set");
    std::vector<double> scores(clean.size());
    for (std::size_t i = 0; i < clean.size(); ++i) scores[i] = ssim(clean[i], processed[i], cfg);
    double s = 0.0;
    for (double v : scores) s += v;
    return s / static_cast<double>(scores.size());
}

double psnr(const Image& x, const Image& y, double peak) {
    check_pair(x, y);
    double se = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double d = static_cast<double>(x.pixels[i]) - y.pixels[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(x.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(peak * peak / mse);
}

}  // namespace dae
