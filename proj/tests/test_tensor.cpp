#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "dae/error.hpp"
#include "dae/tensor.hpp"

using namespace dae;

TEST(Shape, SizeAndDescription) {
    const Shape s{2, 3, 4, 5};
    EXPECT_EQ(s.size(), 120u);
    EXPECT_NE(s.str().find('3'), std::string::npos);
    EXPECT_EQ((Shape{0, 64, 64, 1}).size(), 0u);
}

TEST(Tensor, LayoutIsBatchHeightWidthChannels) {
    Tensor t({2, 3, 4, 5});
    EXPECT_EQ(t.size(), 120u);
    EXPECT_EQ(t.index(0, 0, 0, 1), 1u);
    EXPECT_EQ(t.index(0, 0, 1, 0), 5u);
    EXPECT_EQ(t.index(0, 1, 0, 0), 20u);
    EXPECT_EQ(t.index(1, 0, 0, 0), 60u);
    t.at(1, 2, 3, 4) = 7.0f;
    EXPECT_EQ(t[119], 7.0f);
}

TEST(Tensor, RejectsInconsistentData) {
    EXPECT_THROW(Tensor(Shape{1, 2, 2, 1}, std::vector<float>(3)), ShapeError);
    EXPECT_THROW(Tensor(Shape{1, -2, 2, 1}), ShapeError);
}

TEST(Tensor, SliceAndGatherCopySamples) {
    std::vector<float> v(4 * 2 * 2);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(i);
    const Tensor t({4, 2, 2, 1}, v);
    const Tensor s = t.slice_batch(1, 2);
    EXPECT_EQ(s.shape(), (Shape{2, 2, 2, 1}));
    EXPECT_EQ(s[0], 4.0f);
    EXPECT_EQ(s[7], 11.0f);
    const std::vector<std::size_t> idx{3, 0};
    const Tensor g = t.gather_batch(idx);
    EXPECT_EQ(g[0], 12.0f);
    EXPECT_EQ(g[4], 0.0f);
    EXPECT_THROW(t.slice_batch(3, 2), ShapeError);
    const std::vector<std::size_t> bad{4};
    EXPECT_THROW(t.gather_batch(bad), ShapeError);
}

TEST(Tensor, FinitenessCheck) {
    Tensor t({1, 2, 2, 1}, 0.5f);
    EXPECT_TRUE(t.all_finite());
    t[2] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
    t[2] = std::numeric_limits<float>::infinity();
    EXPECT_FALSE(t.all_finite());
}

TEST(ConvWeights, LayoutAndFlip) {
    ConvWeights w(3, 1, 2, 2);
    EXPECT_EQ(w.kernels.size(), 12u);
    EXPECT_EQ(w.bias.size(), 2u);
    EXPECT_EQ(w.parameter_count(), 14u);
    EXPECT_EQ(w.index(0, 0, 0, 1), 1u);
    EXPECT_EQ(w.index(0, 0, 1, 0), 2u);
    EXPECT_EQ(w.index(1, 0, 0, 0), 4u);
    for (std::size_t i = 0; i < w.kernels.size(); ++i) w.kernels[i] = static_cast<float>(i);
    const ConvWeights f = w.flipped();
    for (int ky = 0; ky < 3; ++ky)
        for (int ci = 0; ci < 2; ++ci)
            for (int co = 0; co < 2; ++co) EXPECT_EQ(f.k(ky, 0, ci, co), w.k(2 - ky, 0, ci, co));
    EXPECT_EQ(f.flipped(), w);
}
