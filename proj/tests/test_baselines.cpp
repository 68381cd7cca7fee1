#include <gtest/gtest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "dae/baselines.hpp"
#include "dae/error.hpp"
#include "dae/rng.hpp"
#include "support/test_support.hpp"

using namespace dae;
using dae::testing::random_image;

namespace {

// Median by full sort of the explicitly padded neighbourhood.
Image sorted_median(const Image& img, int k) {
    const int r = k / 2;
    auto mirror = [](int i, int n) {
        while (i < 0 || i >= n) i = i < 0 ? -i : 2 * (n - 1) - i;
        return i;
    };
    Image out(img.height, img.width);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x) {
            std::vector<float> v;
            for (int dy = -r; dy <= r; ++dy)
                for (int dx = -r; dx <= r; ++dx) v.push_back(img.at(mirror(y + dy, img.height), mirror(x + dx, img.width)));
            std::sort(v.begin(), v.end());
            out.at(y, x) = v[v.size() / 2];
        }
    return out;
}

std::pair<float, float> range_of(const Image& img) {
    const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
    return {*lo, *hi};
}

double variance(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

NlMeansConfig small_nl(double h = 0.1) {
    NlMeansConfig cfg;
    cfg.patch_radius = 2;
    cfg.search_radius = 5;
    cfg.h = h;
    return cfg;
}

}  // namespace

TEST(ReflectIndex, MirrorsWithoutRepeatingTheBorder) {
    EXPECT_EQ(reflect_index(-1, 5), 1);
    EXPECT_EQ(reflect_index(-2, 5), 2);
    EXPECT_EQ(reflect_index(5, 5), 3);
    EXPECT_EQ(reflect_index(6, 5), 2);
    EXPECT_EQ(reflect_index(3, 5), 3);
    EXPECT_EQ(reflect_index(-7, 3), 1);
    EXPECT_EQ(reflect_index(4, 1), 0);
}

TEST(MedianFilter, MatchesSortOracleOnRandomImages) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const Image img = random_image(16, 16, seed);
        ASSERT_EQ(median_filter(img, 3), sorted_median(img, 3)) << "seed " << seed;
    }
    const Image img = random_image(13, 9, 99);
    EXPECT_EQ(median_filter(img, 5), sorted_median(img, 5));
}

TEST(MedianFilter, ConstantImageIsUnchanged) {
    const Image c(10, 12, 0.37f);
    EXPECT_EQ(median_filter(c, 3), c);
    EXPECT_EQ(median_filter(c, 7), c);
}

TEST(MedianFilter, RemovesSingleImpulse) {
    Image img(9, 9, 0.0f);
    img.at(4, 4) = 1.0f;
    EXPECT_EQ(median_filter(img, 3), Image(9, 9, 0.0f));
    Image corner(9, 9, 0.0f);
    corner.at(0, 0) = 1.0f;  // reflection does not duplicate the corner pixel
    EXPECT_EQ(median_filter(corner, 3), Image(9, 9, 0.0f));
}

TEST(MedianFilter, UnitWindowIsIdentity) {
    const Image img = random_image(11, 7, 3);
    EXPECT_EQ(median_filter(img, 1), img);
}

TEST(MedianFilter, CommutesWithIntensityFlip) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Image img = random_image(16, 16, seed);
        for (float& v : img.pixels) v = std::round(v * 255.0f) / 255.0f;
        Image flipped = img;
        for (float& v : flipped.pixels) v = 1.0f - v;
        Image expected = median_filter(img, 3);
        for (float& v : expected.pixels) v = 1.0f - v;
        EXPECT_EQ(median_filter(flipped, 3), expected);
    }
}

TEST(MedianFilter, OutputStaysInInputRange) {
    const Image img = random_image(20, 20, 4);
    const auto [lo, hi] = range_of(img);
    const auto [olo, ohi] = range_of(median_filter(img, 5));
    EXPECT_GE(olo, lo);
    EXPECT_LE(ohi, hi);
}

TEST(MedianFilter, RejectsEvenOrNonPositiveWindow) {
    const Image img(8, 8);
    EXPECT_THROW(median_filter(img, 2), ConfigError);
    EXPECT_THROW(median_filter(img, 0), ConfigError);
    EXPECT_THROW(median_filter(img, -3), ConfigError);
}

TEST(NlMeansWeights, AreNonNegativeAndSumToOne) {
    const Image img = random_image(24, 24, 5);
    const NlMeansConfig cfg = small_nl();
    for (auto [y, x] : {std::pair{0, 0}, {12, 12}, {23, 5}, {3, 22}}) {
        const NlMeansWeights w = nl_means_weights(img, cfg, y, x);
        double sum = 0.0;
        for (double v : w.weights) {
            EXPECT_GE(v, 0.0);
            sum += v;
        }
        EXPECT_NEAR(sum, 1.0, 1e-12);
        EXPECT_EQ(static_cast<std::size_t>(w.height) * w.width, w.weights.size());
    }
    const NlMeansWeights corner = nl_means_weights(img, cfg, 0, 0);
    EXPECT_EQ(corner.y0, 0);
    EXPECT_EQ(corner.height, 6);
    EXPECT_EQ(corner.width, 6);
}

TEST(NlMeans, FastPathMatchesWeightDefinition) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        const Image img = random_image(18, 21, seed);
        NlMeansConfig cfg = small_nl(0.2);
        cfg.sigma = seed == 3 ? 0.05 : 0.0;
        const Image fast = nl_means(img, cfg);
        for (int y = 0; y < img.height; ++y)
            for (int x = 0; x < img.width; ++x) {
                const NlMeansWeights w = nl_means_weights(img, cfg, y, x);
                double v = 0.0;
                for (int r = 0; r < w.height; ++r)
                    for (int c = 0; c < w.width; ++c)
                        v += w.weights[static_cast<std::size_t>(r) * w.width + c] * img.at(w.y0 + r, w.x0 + c);
                ASSERT_NEAR(fast.at(y, x), v, 2e-6) << "seed " << seed << " at " << y << "," << x;
            }
    }
}

TEST(NlMeans, DefaultParametersOnFullSizeImage) {
    const Image img = random_image(64, 64, 8);
    const NlMeansConfig cfg;
    const Image out = nl_means(img, cfg);
    for (auto [y, x] : {std::pair{0, 0}, {31, 40}, {63, 63}}) {
        const NlMeansWeights w = nl_means_weights(img, cfg, y, x);
        double v = 0.0;
        for (int r = 0; r < w.height; ++r)
            for (int c = 0; c < w.width; ++c)
                v += w.weights[static_cast<std::size_t>(r) * w.width + c] * img.at(w.y0 + r, w.x0 + c);
        EXPECT_NEAR(out.at(y, x), v, 2e-6);
    }
}

TEST(NlMeans, ConstantImageIsUnchanged) {
    const Image c(25, 25, 0.6f);
    EXPECT_EQ(nl_means(c, small_nl()), c);
}

TEST(NlMeans, ReducesVarianceWithinPiecewiseConstantRegions) {
    Image img(32, 32);
    RandomStream rng(4, 4);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) img.at(y, x) = (x < 16 ? 0.3f : 0.7f) + static_cast<float>(0.02 * rng.normal());
    const Image out = nl_means(img, small_nl());
    for (int half = 0; half < 2; ++half) {
        std::vector<double> in_v, out_v;
        for (int y = 0; y < 32; ++y)
            for (int x = half * 16 + 3; x < half * 16 + 13; ++x) {
                in_v.push_back(img.at(y, x));
                out_v.push_back(out.at(y, x));
            }
        EXPECT_LT(variance(out_v), variance(in_v)) << "region " << half;
    }
}

TEST(NlMeans, SmallFilteringStrengthApproachesIdentity) {
    const Image img = random_image(20, 20, 6);
    const Image out = nl_means(img, small_nl(1e-3));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(out.pixels[i], img.pixels[i], 1e-6);
}

TEST(NlMeans, OutputStaysInInputRange) {
    Image img = random_image(22, 22, 7);
    for (float& v : img.pixels) v = 0.2f + 0.5f * v;
    const auto [lo, hi] = range_of(img);
    const auto [olo, ohi] = range_of(nl_means(img, small_nl(0.3)));
    EXPECT_GE(olo, lo);
    EXPECT_LE(ohi, hi);
}

TEST(NlMeans, IndependentOfThreadCount) {
    const Image img = random_image(30, 30, 9);
    const Image parallel = nl_means(img, small_nl());
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Image serial = nl_means(img, small_nl());
    omp_set_num_threads(saved);
    EXPECT_EQ(parallel, serial);
}

TEST(NlMeans, RejectsBadConfigurationAndSmallImages) {
    const Image img(30, 30);
    EXPECT_THROW(nl_means(Image(20, 30), NlMeansConfig{}), ShapeError);  // 21 x 21 search window
    EXPECT_THROW(nl_means(img, NlMeansConfig{0, 10, 0.1, 0.0}), ConfigError);
    EXPECT_THROW(nl_means(img, NlMeansConfig{3, 2, 0.1, 0.0}), ConfigError);
    EXPECT_THROW(nl_means(img, NlMeansConfig{3, 10, 0.0, 0.0}), ConfigError);
    EXPECT_THROW(nl_means(img, NlMeansConfig{3, 10, 0.1, -1.0}), ConfigError);
    EXPECT_THROW(nl_means_weights(Image(5, 5), NlMeansConfig{}, 0, 0), ShapeError);
}
