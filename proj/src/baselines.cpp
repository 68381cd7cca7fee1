#include "dae/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "dae/error.hpp"

namespace dae {

int reflect_index(int i, int n) noexcept {
    if (n == 1) return 0;
    const int period = 2 * (n - 1);
    i %= period;
    if (i < 0) i += period;
    return i < n ? i : period - i;
}

Image median_filter(const Image& img, int k) {
    if (k < 1 || k % 2 == 0) throw ConfigError("median window must be odd and positive, got " + std::to_string(k));
    const int r = k / 2;
    Image out(img.height, img.width);

#pragma omp parallel
    {
        std::vector<float> window(static_cast<std::size_t>(k) * k);
#pragma omp for schedule(static)
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                std::size_t n = 0;
                for (int dy = -r; dy <= r; ++dy)
                    for (int dx = -r; dx <= r; ++dx)
                        window[n++] = img.at(reflect_index(y + dy, img.height), reflect_index(x + dx, img.width));
                auto mid = window.begin() + static_cast<std::ptrdiff_t>(n / 2);
                std::nth_element(window.begin(), mid, window.end());
                out.at(y, x) = *mid;
            }
    }
    return out;
}

void NlMeansConfig::validate() const {
    if (patch_radius < 1) throw ConfigError("NL-means patch radius must be >= 1");
    if (search_radius < patch_radius) throw ConfigError("NL-means search radius must be >= patch radius");
    if (!(h > 0.0)) throw ConfigError("NL-means h must be positive");
    if (!(sigma >= 0.0)) throw ConfigError("NL-means sigma must be >= 0");
}

namespace {

void check_size(const Image& img, const NlMeansConfig& cfg) {
    cfg.validate();
    const int side = 2 * cfg.search_radius + 1;
    if (img.height < side || img.width < side)
        throw ShapeError(img.height < side ? "height" : "width",
                         "NL-means search window " + std::to_string(side) + " exceeds the " +
                             std::to_string(img.height) + "x" + std::to_string(img.width) + " image");
}

double weight_of(double d2, const NlMeansConfig& cfg) {
    return std::exp(-std::max(d2 - 2.0 * cfg.sigma * cfg.sigma, 0.0) / (cfg.h * cfg.h));
}

}  // namespace

NlMeansWeights nl_means_weights(const Image& img, const NlMeansConfig& cfg, int y, int x) {
    check_size(img, cfg);
    const int R = cfg.search_radius, P = cfg.patch_radius;
    NlMeansWeights w;
    w.y0 = std::max(0, y - R);
    w.x0 = std::max(0, x - R);
    w.height = std::min(img.height - 1, y + R) - w.y0 + 1;
    w.width = std::min(img.width - 1, x + R) - w.x0 + 1;
    w.weights.resize(static_cast<std::size_t>(w.height) * w.width);
    const double patch_n = static_cast<double>(2 * P + 1) * (2 * P + 1);
    double total = 0.0;
    for (int qy = w.y0; qy < w.y0 + w.height; ++qy)
        for (int qx = w.x0; qx < w.x0 + w.width; ++qx) {
            double d2 = 0.0;
            for (int py = -P; py <= P; ++py)
                for (int px = -P; px <= P; ++px) {
                    const double a = img.at(reflect_index(y + py, img.height), reflect_index(x + px, img.width));
                    const double b = img.at(reflect_index(qy + py, img.height), reflect_index(qx + px, img.width));
                    d2 += (a - b) * (a - b);
                }
            const double wt = weight_of(d2 / patch_n, cfg);
            w.weights[static_cast<std::size_t>(qy - w.y0) * w.width + (qx - w.x0)] = wt;
            total += wt;
        }
    for (double& v : w.weights) v /= total;
    return w;
}

Image nl_means(const Image& img, const NlMeansConfig& cfg) {
    check_size(img, cfg);
    const int R = cfg.search_radius, P = cfg.patch_radius;
    const int H = img.height, W = img.width;
    const int pad = R + P;
    const int hp = H + 2 * pad, wp = W + 2 * pad;
    std::vector<double> padded(static_cast<std::size_t>(hp) * wp);
    for (int y = 0; y < hp; ++y)
        for (int x = 0; x < wp; ++x)
            padded[static_cast<std::size_t>(y) * wp + x] = img.at(reflect_index(y - pad, H), reflect_index(x - pad, W));

    std::vector<double> value_sum(static_cast<std::size_t>(H) * W, 0.0);
    std::vector<double> weight_sum(value_sum.size(), 0.0);
    const double patch_n = static_cast<double>(2 * P + 1) * (2 * P + 1);

    // For each displacement, squared differences over the patch-extended image are box-summed
    // to give every pixel's patch distance at once. Displacements are processed in a fixed
    // order, so each pixel's accumulation order does not depend on threading.
    const int side = 2 * R + 1;
    std::vector<std::vector<double>> partial_v(static_cast<std::size_t>(side));
    std::vector<std::vector<double>> partial_w(static_cast<std::size_t>(side));

#pragma omp parallel for schedule(static)
    for (int dy = -R; dy <= R; ++dy) {
        auto& pv = partial_v[static_cast<std::size_t>(dy + R)];
        auto& pw = partial_w[static_cast<std::size_t>(dy + R)];
        pv.assign(static_cast<std::size_t>(H) * W, 0.0);
        pw.assign(static_cast<std::size_t>(H) * W, 0.0);
        const int eh = H + 2 * P, ew = W + 2 * P;
        std::vector<double> diff(static_cast<std::size_t>(eh) * ew);
        std::vector<double> rows(static_cast<std::size_t>(H) * ew);
        for (int dx = -R; dx <= R; ++dx) {
            for (int y = 0; y < eh; ++y)
                for (int x = 0; x < ew; ++x) {
                    const double a = padded[static_cast<std::size_t>(y + R) * wp + (x + R)];
                    const double b = padded[static_cast<std::size_t>(y + R + dy) * wp + (x + R + dx)];
                    diff[static_cast<std::size_t>(y) * ew + x] = (a - b) * (a - b);
                }
            for (int y = 0; y < H; ++y)
                for (int x = 0; x < ew; ++x) {
                    double s = 0.0;
                    for (int k = 0; k <= 2 * P; ++k) s += diff[static_cast<std::size_t>(y + k) * ew + x];
                    rows[static_cast<std::size_t>(y) * ew + x] = s;
                }
            for (int y = 0; y < H; ++y) {
                const int qy = y + dy;
                if (qy < 0 || qy >= H) continue;
                for (int x = 0; x < W; ++x) {
                    const int qx = x + dx;
                    if (qx < 0 || qx >= W) continue;
                    double s = 0.0;
                    for (int k = 0; k <= 2 * P; ++k) s += rows[static_cast<std::size_t>(y) * ew + x + k];
                    const double wt = weight_of(s / patch_n, cfg);
                    const std::size_t o = static_cast<std::size_t>(y) * W + x;
                    pv[o] += wt * img.at(qy, qx);
                    pw[o] += wt;
                }
            }
        }
    }
    for (int k = 0; k < side; ++k)
        for (std::size_t o = 0; o < value_sum.size(); ++o) {
            value_sum[o] += partial_v[static_cast<std::size_t>(k)][o];
            weight_sum[o] += partial_w[static_cast<std::size_t>(k)][o];
        }

    // Convex combination: clamp away rounding excursions beyond the input range.
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    Image out(H, W);
    for (std::size_t o = 0; o < out.size(); ++o)
        out.pixels[o] = std::clamp(static_cast<float>(value_sum[o] / weight_sum[o]), *lo, *hi);
    return out;
}

}  // namespace dae
