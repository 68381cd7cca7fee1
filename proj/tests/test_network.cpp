#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "dae/error.hpp"
#include "dae/network.hpp"
#include "support/test_support.hpp"

using namespace dae;
using namespace dae::testing;

namespace {

// Two conv layers without resampling: the smallest network with hidden structure.
Architecture two_layer() {
    return {LayerSpec::conv(3, 1, 4), LayerSpec::act(Activation::relu), LayerSpec::conv(3, 4, 1),
            LayerSpec::act(Activation::sigmoid)};
}

NetworkParams random_params(const Architecture& arch, std::uint64_t seed) {
    NetworkParams p = init_params(arch, seed);
    RandomStream rng(seed, 99);
    for (auto& b : p.blocks)
        for (float& v : b.bias) v = static_cast<float>(rng.uniform(-0.1, 0.1));
    return p;
}

GradCheckStats network_gradcheck(const Architecture& arch, NetworkParams params, const Tensor& input,
                                 const Tensor& target, LossKind kind, std::size_t samples_per_block) {
    const ForwardResult fwd = forward(params, arch, input);
    const LossResult l = loss(fwd.reconstruction, target, kind);
    const NetworkParams g = backward(params, arch, fwd.cache, l.grad);
    auto objective = [&] { return oracle_loss(oracle_forward(params, arch, input), target, kind); };
    GradCheckStats all;
    for (std::size_t b = 0; b < params.blocks.size(); ++b) {
        GradCheckOptions opt;
        opt.max_samples = samples_per_block;
        opt.seed = b + 1;
        all.merge(check_gradient(objective, std::span<float>(params.blocks[b].kernels), g.blocks[b].kernels, opt));
        all.merge(check_gradient(objective, std::span<float>(params.blocks[b].bias), g.blocks[b].bias, opt));
    }
    return all;
}

}  // namespace

TEST(Architecture, DefaultHasFourteenLayersAndPublishedParameterCount) {
    const Architecture a = default_architecture();
    EXPECT_EQ(a.size(), 14u);
    EXPECT_NO_THROW(validate_architecture(a));
    const std::size_t expected = (3 * 3 * 1 * 32 + 32) + 3 * (3 * 3 * 32 * 32 + 32) + (3 * 3 * 32 * 1 + 1);
    EXPECT_EQ(parameter_count(a), expected);
    EXPECT_EQ(parameter_count(a), 28353u);
    EXPECT_EQ(spatial_divisor(a), 4);
    EXPECT_EQ(input_channels(a), 1);
    EXPECT_EQ(output_channels(a), 1);
}

TEST(Architecture, BottleneckIsSixteenBySixteenByThirtyTwo) {
    const Architecture a = default_architecture();
    const NetworkParams p = init_params(a, 1);
    const ForwardResult r = forward(p, a, Tensor({1, 64, 64, 1}, 0.5f));
    // input of the third conv layer
    EXPECT_EQ(r.cache.layer_inputs[6].shape(), (Shape{1, 16, 16, 32}));
    EXPECT_EQ(r.reconstruction.shape(), (Shape{1, 64, 64, 1}));
}

TEST(Architecture, ValidationRejectsBrokenChains) {
    Architecture a = default_architecture();
    a[3].in_channels = 16;
    EXPECT_THROW(validate_architecture(a), ConfigError);
    Architecture unbalanced = default_architecture();
    unbalanced.erase(unbalanced.begin() + 8);  // drop an upsample
    EXPECT_THROW(validate_architecture(unbalanced), ConfigError);
    EXPECT_THROW(validate_architecture({}), ConfigError);
    Architecture even = two_layer();
    even[0].kernel_h = even[0].kernel_w = 2;
    EXPECT_THROW(validate_architecture(even), ConfigError);
}

TEST(InitParams, DeterministicGlorotWithZeroBiases) {
    const Architecture a = default_architecture();
    const NetworkParams p = init_params(a, 5);
    EXPECT_EQ(p, init_params(a, 5));
    EXPECT_NE(p, init_params(a, 6));
    ASSERT_EQ(p.blocks.size(), 5u);
    for (const ConvWeights& b : p.blocks) {
        for (float v : b.bias) EXPECT_EQ(v, 0.0f);
        const double limit = std::sqrt(6.0 / (9.0 * b.in_channels + 9.0 * b.out_channels));
        double sum = 0.0;
        for (float v : b.kernels) {
            EXPECT_LE(std::abs(v), limit);
            sum += v;
        }
        if (b.kernels.size() >= 9216) {
            // 10^4-scale sample: mean within 3 standard errors of 0 (uniform variance limit^2 / 3)
            const double n = static_cast<double>(b.kernels.size());
            EXPECT_NEAR(sum / n, 0.0, 3.0 * limit / std::sqrt(3.0 * n));
        }
    }
}

TEST(Forward, OutputIsStrictlyInsideUnitInterval) {
    const Architecture a = default_architecture();
    const NetworkParams p = init_params(a, 2);
    const Tensor out = predict(p, a, random_tensor({3, 64, 64, 1}, 3, 0.0, 1.0));
    for (float v : out.data()) {
        ASSERT_GT(v, 0.0f);
        ASSERT_LT(v, 1.0f);
    }
    // all-zero input with zero biases: every activation is zero and the output is sigmoid(0)
    const Tensor zero_out = predict(p, a, Tensor({1, 64, 64, 1}));
    for (float v : zero_out.data()) ASSERT_EQ(v, 0.5f);
}

TEST(Forward, EqualsManualComposition) {
    const Architecture a = default_architecture(8);
    const NetworkParams p = random_params(a, 4);
    const Tensor x = random_tensor({2, 16, 16, 1}, 5, 0.0, 1.0);
    Tensor h = activate(conv2d(x, p.blocks[0]), Activation::relu);
    h = maxpool2(h).output;
    h = maxpool2(activate(conv2d(h, p.blocks[1]), Activation::relu)).output;
    h = upsample2(activate(conv2d(h, p.blocks[2]), Activation::relu));
    h = upsample2(activate(conv2d(h, p.blocks[3]), Activation::relu));
    h = activate(conv2d(h, p.blocks[4]), Activation::sigmoid);
    EXPECT_EQ(predict(p, a, x), h);
    EXPECT_EQ(forward(p, a, x).reconstruction, h);
}

TEST(Forward, ShapeErrorsNameTheLayer) {
    const Architecture a = default_architecture(8);
    const NetworkParams p = init_params(a, 1);
    EXPECT_THROW(forward(p, a, Tensor({1, 18, 16, 1})), ShapeError);  // not divisible by 4
    try {
        forward(p, a, Tensor({1, 16, 16, 2}));
        FAIL() << "expected ShapeError";
    } catch (const ShapeError& e) {
        EXPECT_NE(std::string(e.what()).find("layer 0"), std::string::npos) << e.what();
    }
}

TEST(PredictBatched, MatchesSingleCall) {
    const Architecture a = default_architecture(8);
    const NetworkParams p = random_params(a, 6);
    const Tensor x = random_tensor({7, 16, 16, 1}, 7, 0.0, 1.0);
    EXPECT_EQ(predict_batched(p, a, x, 3), predict(p, a, x));
}

TEST(Backward, ZeroUpstreamGivesZeroGradientsWithParameterStructure) {
    const Architecture a = default_architecture(8);
    const NetworkParams p = random_params(a, 8);
    const ForwardResult r = forward(p, a, random_tensor({2, 8, 8, 1}, 9, 0.0, 1.0));
    const NetworkParams g = backward(p, a, r.cache, Tensor(r.reconstruction.shape()));
    EXPECT_EQ(g, zeros_like(a));
}

TEST(Backward, TwoLayerNetworkMatchesFiniteDifferences) {
    const Architecture a = two_layer();
    const Tensor x = random_tensor({1, 8, 8, 1}, 10, 0.0, 1.0), t = random_tensor({1, 8, 8, 1}, 11, 0.0, 1.0);
    // A central difference straddling a relu kink measures a one-sided slope, not the gradient.
    // Perturbing a first-layer weight or bias moves a pre-activation by at most one step (|x| <= 1),
    // so pick parameters whose pre-activations all keep a margin of several steps from zero.
    constexpr double margin = 4e-3;
    NetworkParams p;
    std::uint64_t seed = 12;
    for (;; ++seed) {
        p = random_params(a, seed);
        const DTensor pre = oracle_conv(DTensor(x), p.blocks[0]);
        if (std::ranges::all_of(pre.v, [](double v) { return std::abs(v) > margin; })) break;
        ASSERT_LT(seed, 200u) << "no kink-free parameter draw found";
    }
    const GradCheckStats st = network_gradcheck(a, p, x, t, LossKind::bce, 0);
    EXPECT_GE(st.pass_rate(), 0.99) << st.passed << "/" << st.checked << " worst " << st.worst;
}

TEST(Backward, ReducedDefaultNetworkMatchesFiniteDifferences) {
    const Architecture a = default_architecture(8);
    const Tensor x = random_tensor({2, 8, 8, 1}, 13, 0.0, 1.0), t = random_tensor({2, 8, 8, 1}, 14, 0.0, 1.0);
    for (LossKind kind : {LossKind::bce, LossKind::mse}) {
        const GradCheckStats st = network_gradcheck(a, random_params(a, 15), x, t, kind, 60);
        EXPECT_GE(st.pass_rate(), 0.99) << to_string(kind) << " " << st.passed << "/" << st.checked << " worst " << st.worst;
    }
}

TEST(Backward, RejectsStaleOrForeignCache) {
    const Architecture a = default_architecture(8);
    NetworkParams p = random_params(a, 16);
    const ForwardResult r = forward(p, a, random_tensor({1, 8, 8, 1}, 17));
    p.blocks[0].kernels[0] += 0.5f;
    EXPECT_THROW(backward(p, a, r.cache, r.reconstruction), ConfigError);
    const Architecture other = default_architecture(4);
    EXPECT_THROW(backward(init_params(other, 1), other, r.cache, r.reconstruction), ConfigError);
}

TEST(NetworkParams, FingerprintTracksEveryValue) {
    const Architecture a = default_architecture(8);
    NetworkParams p = init_params(a, 1);
    const auto f = p.fingerprint();
    p.blocks[4].bias[0] = 1e-30f;
    EXPECT_NE(p.fingerprint(), f);
    EXPECT_TRUE(p.all_finite());
    p.blocks[2].kernels[3] = std::nanf("");
    EXPECT_FALSE(p.all_finite());
}
