#include <gtest/gtest.h>
#include <omp.h>

#include <cmath>
#include <numeric>
#include <set>

#include "dae/dataset.hpp"
#include "dae/error.hpp"
#include "dae/noise.hpp"
#include "dae/training.hpp"
#include "support/test_support.hpp"

using namespace dae;
using dae::testing::random_tensor;

namespace {

NetworkParams single_scalar(float value) {
    NetworkParams p;
    ConvWeights w(1, 1, 1, 1);
    w.kernels[0] = value;
    w.bias.clear();
    p.blocks.push_back(w);
    return p;
}

TrainConfig small_config(int epochs) {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 4;
    c.seed = 3;
    return c;
}

}  // namespace

TEST(TrainConfig, DefaultsAndValidation) {
    const TrainConfig c;
    EXPECT_EQ(c.epochs, 100);
    EXPECT_EQ(c.batch_size, 10);
    EXPECT_EQ(c.loss, LossKind::bce);
    EXPECT_DOUBLE_EQ(c.validation_fraction, 0.1);
    EXPECT_DOUBLE_EQ(c.adam.step_size, 1e-3);
    EXPECT_DOUBLE_EQ(c.adam.beta1, 0.9);
    EXPECT_DOUBLE_EQ(c.adam.beta2, 0.999);
    EXPECT_DOUBLE_EQ(c.adam.eps, 1e-8);
    TrainConfig bad = c;
    bad.epochs = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = c;
    bad.validation_fraction = 1.0;
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(AdamStep, ZeroGradientLeavesParametersUnchanged) {
    NetworkParams p = single_scalar(0.3f);
    OptimizerState s = OptimizerState::for_params(p);
    adam_step(p, single_scalar(0.0f), s, {});
    EXPECT_EQ(p.blocks[0].kernels[0], 0.3f);
    EXPECT_EQ(s.step, 1);
}

TEST(AdamStep, FirstStepMovesByStepSizeAgainstTheGradient) {
    for (float g : {2.5f, -0.01f}) {
        NetworkParams p = single_scalar(1.0f);
        OptimizerState s = OptimizerState::for_params(p);
        adam_step(p, single_scalar(g), s, {});
        // m_hat = g, v_hat = g^2, so the move is step_size * g / (|g| + eps)
        const double expected = 1.0 - 1e-3 * g / (std::abs(g) + 1e-8);
        EXPECT_NEAR(p.blocks[0].kernels[0], expected, 1e-7) << g;
    }
}

TEST(AdamStep, ConstantGradientKeepsUnitSteps) {
    NetworkParams p = single_scalar(0.0f);
    OptimizerState s = OptimizerState::for_params(p);
    for (int i = 0; i < 5; ++i) adam_step(p, single_scalar(0.7f), s, {});
    EXPECT_NEAR(p.blocks[0].kernels[0], -5e-3, 1e-6);
}

TEST(AdamStep, RejectsIncongruentStructures) {
    NetworkParams p = single_scalar(0.0f);
    OptimizerState s = OptimizerState::for_params(p);
    NetworkParams g = single_scalar(0.0f);
    g.blocks[0].kernels.push_back(0.0f);
    EXPECT_THROW(adam_step(p, g, s, {}), ConfigError);
}

TEST(ValidationSplit, PartitionsWithRoundedSize) {
    const IndexSplit none = validation_split(10, 0.0, 1);
    EXPECT_TRUE(none.validation.empty());
    EXPECT_EQ(none.train.size(), 10u);
    EXPECT_EQ(validation_split(10, 0.1, 1).validation.size(), 1u);
    EXPECT_EQ(validation_split(300, 0.1, 1).validation.size(), 30u);
    const IndexSplit s = validation_split(57, 0.25, 4);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (std::size_t v : s.validation) EXPECT_TRUE(all.insert(v).second) << "overlap at " << v;
    EXPECT_EQ(all.size(), 57u);
    EXPECT_EQ(*all.rbegin(), 56u);
    EXPECT_EQ(s.validation, validation_split(57, 0.25, 4).validation);
    EXPECT_NE(s.validation, validation_split(57, 0.25, 5).validation);
}

TEST(Train, HistoryLengthsEqualEpochs) {
    const Tensor x = random_tensor({12, 8, 8, 1}, 1, 0.0, 1.0);
    const TrainResult r = train(x, x, default_architecture(4), small_config(3));
    EXPECT_EQ(r.history.train_loss.size(), 3u);
    EXPECT_EQ(r.history.validation_loss.size(), 3u);
    for (double v : r.history.validation_loss) EXPECT_TRUE(std::isfinite(v));
}

TEST(Train, NoValidationSetRecordsNaN) {
    const Tensor x = random_tensor({8, 8, 8, 1}, 1, 0.0, 1.0);
    TrainConfig c = small_config(2);
    c.validation_fraction = 0.0;
    const TrainResult r = train(x, x, default_architecture(4), c);
    for (double v : r.history.validation_loss) EXPECT_TRUE(std::isnan(v));
}

TEST(Train, BitIdenticalAcrossRunsAndThreadCounts) {
    const Tensor clean = random_tensor({10, 16, 16, 1}, 2, 0.0, 1.0);
    const Tensor noisy = corrupt(clean, table1_presets()[0], 3);
    const TrainResult a = train(noisy, clean, default_architecture(8), small_config(3));
    const TrainResult b = train(noisy, clean, default_architecture(8), small_config(3));
    EXPECT_EQ(a.params, b.params);
    EXPECT_EQ(a.history.train_loss, b.history.train_loss);
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const TrainResult c = train(noisy, clean, default_architecture(8), small_config(3));
    omp_set_num_threads(saved);
    EXPECT_EQ(a.params, c.params);
    EXPECT_EQ(a.history.validation_loss, c.history.validation_loss);
}

TEST(Train, ValidationLossIsPureEvaluation) {
    const Tensor x = random_tensor({6, 8, 8, 1}, 5, 0.0, 1.0);
    const Architecture arch = default_architecture(4);
    const NetworkParams p = init_params(arch, 1);
    const double first = evaluate_loss(p, arch, x, x, LossKind::bce, 4);
    EXPECT_EQ(first, evaluate_loss(p, arch, x, x, LossKind::bce, 4));
    EXPECT_NEAR(first, evaluate_loss(p, arch, x, x, LossKind::bce, 6), 1e-6);
}

TEST(Train, OverfitCorpusReducesTrainingLoss) {
    const auto images = synth_corpus(20, 11);
    const Tensor clean = stack(images);
    const Tensor noisy = corrupt(clean, table1_presets()[0], 12);
    TrainConfig c;  // 100 epochs, batch 10
    const TrainResult r = train(noisy, clean, default_architecture(), c);
    EXPECT_LT(r.history.train_loss.back(), r.history.train_loss.front());
}

TEST(Train, PreconditionErrors) {
    const Tensor x = random_tensor({4, 8, 8, 1}, 5, 0.0, 1.0);
    const Architecture arch = default_architecture(4);
    TrainConfig c = small_config(1);
    c.batch_size = 10;
    EXPECT_THROW(train(x, x, arch, c), ConfigError);  // batch larger than the training set
    EXPECT_THROW(train(Tensor({0, 8, 8, 1}), Tensor({0, 8, 8, 1}), arch, small_config(1)), DataError);
    EXPECT_THROW(train(x, x.slice_batch(0, 3), arch, small_config(1)), ShapeError);
    c = small_config(0);
    EXPECT_THROW(train(x, x, arch, c), ConfigError);
}

TEST(Train, NonFiniteLossAborts) {
    Tensor x = random_tensor({4, 8, 8, 1}, 5, 0.0, 1.0);
    x[3] = std::nanf("");
    TrainConfig c = small_config(1);
    c.batch_size = 2;
    c.validation_fraction = 0.0;
    EXPECT_THROW(train(x, x, default_architecture(4), c), NumericError);
}
