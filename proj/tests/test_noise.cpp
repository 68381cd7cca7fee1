#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <set>

#include "dae/error.hpp"
#include "dae/noise.hpp"
#include "support/test_support.hpp"

using namespace dae;

namespace {

Tensor dataset(int n, std::uint64_t seed) { return dae::testing::random_tensor({n, 64, 64, 1}, seed, 0.0, 1.0); }

}  // namespace

TEST(NoisePresets, MatchTheSixPublishedSettings) {
    const auto p = table1_presets();
    ASSERT_EQ(p.size(), 6u);
    EXPECT_EQ(p[0], NoiseSpec::gaussian(0.1, 0.0, 1.0));
    EXPECT_EQ(p[1], NoiseSpec::gaussian(0.5, 0.0, 1.0));
    EXPECT_EQ(p[2], NoiseSpec::gaussian(0.2, 0.0, 2.0));
    EXPECT_EQ(p[3], NoiseSpec::gaussian(0.2, 0.0, 5.0));
    EXPECT_EQ(p[4], NoiseSpec::poisson(0.2, 1.0));
    EXPECT_EQ(p[5], NoiseSpec::poisson(0.2, 5.0));
    EXPECT_EQ(sigma10_preset(), NoiseSpec::gaussian(0.2, 0.0, 10.0));
    EXPECT_EQ(preset_by_id("3"), p[3]);
    EXPECT_EQ(preset_by_id("sd10"), sigma10_preset());
    EXPECT_THROW(preset_by_id("6"), ConfigError);
    EXPECT_THROW(preset_by_id("x"), ConfigError);
}

TEST(NoiseSpec, ValidationRejectsOutOfRangeFields) {
    EXPECT_THROW(NoiseSpec::gaussian(1.5, 0.0, 1.0).validate(), ConfigError);
    EXPECT_THROW(NoiseSpec::gaussian(-0.1, 0.0, 1.0).validate(), ConfigError);
    EXPECT_THROW(NoiseSpec::gaussian(0.1, 0.0, -1.0).validate(), ConfigError);
    EXPECT_THROW(NoiseSpec::poisson(0.1, 0.0).validate(), ConfigError);
    EXPECT_THROW(corrupt(dataset(1, 1), NoiseSpec::poisson(0.1, -2.0), 0), ConfigError);
    EXPECT_NO_THROW(NoiseSpec::gaussian(0.0, 0.0, 0.0).validate());
}

TEST(NoiseSpec, IdentifiersAreDistinct) {
    std::set<std::string> ids;
    for (const auto& p : table1_presets()) ids.insert(p.id());
    ids.insert(sigma10_preset().id());
    EXPECT_EQ(ids.size(), 7u);
    EXPECT_EQ(table1_presets()[0].id(), "gaussian_p0.1_mu0_sigma1");
}

TEST(Corrupt, ZeroProportionIsBitIdentical) {
    const Tensor d = dataset(3, 1);
    EXPECT_EQ(corrupt(d, NoiseSpec::gaussian(0.0, 0.0, 5.0), 7), d);
    EXPECT_EQ(corrupt(d, NoiseSpec::poisson(0.0, 5.0), 7), d);
}

TEST(Corrupt, DegenerateGaussianIsBitIdentical) {
    const Tensor d = dataset(3, 2);
    EXPECT_EQ(corrupt(d, NoiseSpec::gaussian(1.0, 0.0, 0.0), 7), d);
}

TEST(Corrupt, OutputStaysInUnitRangeAndUnselectedPixelsAreUntouched) {
    const Tensor d = dataset(4, 3);
    for (const NoiseSpec& spec : table1_presets()) {
        const Tensor c = corrupt(d, spec, 21);
        const auto mask = corruption_mask(d.size(), spec.p, 21);
        for (std::size_t i = 0; i < c.size(); ++i) {
            ASSERT_GE(c[i], 0.0f);
            ASSERT_LE(c[i], 1.0f);
            if (!mask[i]) {
                ASSERT_EQ(c[i], d[i]) << spec.id();
            }
        }
    }
}

TEST(Corrupt, SelectedFractionMatchesProportion) {
    // Mid-grey input: every selected Gaussian pixel moves, so changed pixels count selections.
    const Tensor grey({300, 64, 64, 1}, 0.5f);
    const Tensor c = corrupt(grey, NoiseSpec::gaussian(0.1, 0.0, 1.0), 5);
    std::size_t changed = 0;
    for (std::size_t i = 0; i < c.size(); ++i) changed += c[i] != grey[i];
    const double frac = static_cast<double>(changed) / static_cast<double>(c.size());
    EXPECT_NEAR(frac, 0.1, 0.005);
}

TEST(Corrupt, PoissonChangesPixelsAtTheExpectedRate) {
    // Additive Poisson moves a selected pixel unless the draw is 0 (probability e^-lambda).
    const Tensor grey({100, 64, 64, 1}, 0.5f);
    for (double lambda : {1.0, 5.0}) {
        const Tensor c = corrupt(grey, NoiseSpec::poisson(0.2, lambda), 9);
        std::size_t changed = 0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            changed += c[i] != grey[i];
            if (c[i] != grey[i]) {
                ASSERT_EQ(c[i], 1.0f);  // any k >= 1 saturates
            }
        }
        const double n = static_cast<double>(c.size());
        const double expected = 0.2 * (1.0 - std::exp(-lambda));
        EXPECT_NEAR(changed / n, expected, 5.0 * std::sqrt(expected * (1 - expected) / n)) << lambda;
    }
}

TEST(Corrupt, PoissonDrawsFollowThePoissonLaw) {
    // Substitutive mode exposes k directly: v = k / (lambda + 3 sqrt(lambda)), clamped.
    const Tensor grey({100, 64, 64, 1}, 0.5f);
    const double lambda = 5.0, scale = lambda + 3.0 * std::sqrt(lambda);
    NoiseSpec spec = NoiseSpec::poisson(1.0, lambda);
    spec.poisson_mode = PoissonMode::substitutive;
    const Tensor c = corrupt(grey, spec, 13);
    std::vector<double> hist(12, 0.0);
    for (float v : c.data()) {
        const int k = static_cast<int>(std::lround(v * scale));
        if (k < 11) hist[static_cast<std::size_t>(k)] += 1.0;
    }
    const double n = static_cast<double>(c.size());
    double pk = std::exp(-lambda);
    for (int k = 0; k < 8; ++k) {
        EXPECT_NEAR(hist[static_cast<std::size_t>(k)] / n, pk, 5.0 * std::sqrt(pk * (1 - pk) / n)) << "k=" << k;
        pk *= lambda / (k + 1);
    }
}

TEST(Corrupt, GaussianValuesFollowTheNormalLaw) {
    // With mu = 0.5 and sigma = 0.05 on a zero image, clamping almost never engages.
    const Tensor zero({50, 64, 64, 1}, 0.0f);
    const Tensor c = corrupt(zero, NoiseSpec::gaussian(1.0, 0.5, 0.05), 17);
    double s = 0.0, s2 = 0.0;
    for (float v : c.data()) {
        s += v;
        s2 += static_cast<double>(v) * v;
    }
    const double n = static_cast<double>(c.size()), mean = s / n, var = s2 / n - mean * mean;
    EXPECT_NEAR(mean, 0.5, 5.0 * 0.05 / std::sqrt(n));
    EXPECT_NEAR(std::sqrt(var), 0.05, 1e-3);
}

TEST(Corrupt, DeterministicInSeedAndIndependentOfThreads) {
    const Tensor d = dataset(8, 4);
    const NoiseSpec spec = table1_presets()[2];
    const Tensor a = corrupt(d, spec, 99);
    EXPECT_EQ(a, corrupt(d, spec, 99));
    EXPECT_NE(a, corrupt(d, spec, 100));
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const Tensor single = corrupt(d, spec, 99);
    omp_set_num_threads(saved);
    EXPECT_EQ(a, single);
    EXPECT_NE(corruption_mask(d.size(), 0.2, 99), corruption_mask(d.size(), 0.2, 100));
}

TEST(Corrupt, PixelNoiseDependsOnlyOnPosition) {
    // Corrupting a prefix of the dataset gives the same pixels as corrupting the whole set.
    const Tensor d = dataset(6, 5);
    const NoiseSpec spec = table1_presets()[5];
    const Tensor whole = corrupt(d, spec, 3);
    const Tensor part = corrupt(d.slice_batch(0, 2), spec, 3);
    for (std::size_t i = 0; i < part.size(); ++i) ASSERT_EQ(part[i], whole[i]);
}
