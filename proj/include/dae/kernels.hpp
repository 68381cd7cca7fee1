#pragma once

// Numerical kernels for the convolutional autoencoder. Every routine here is a pure
// function of its arguments. Work is split across OpenMP threads, but each output
// element is always accumulated by one thread in a fixed order, so results are
// bit-identical for any thread count. Serial reference versions live in reference.hpp.

#include <cstdint>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

enum class Activation : std::uint8_t { relu, sigmoid };
enum class LossKind : std::uint8_t { bce, mse };

/// Same-padded stride-1 convolution. With `flip_kernels` the kernels are reversed along
/// both spatial axes (true convolution); otherwise this is cross-correlation.
/// Per output element the sum runs over (ky, kx, ci) in that order and the bias is added last.
Tensor conv2d(const Tensor& input, const ConvWeights& w, bool flip_kernels = false);

struct ConvGrads {
    Tensor input;        // empty when not requested
    ConvWeights weights;
};

/// Partial derivatives of sum(upstream * conv2d(input, w, flip_kernels)).
ConvGrads conv2d_grads(const Tensor& input, const ConvWeights& w, const Tensor& upstream,
                       bool flip_kernels = false, bool want_input_grad = true);

/// Winning position (0..3, row-major within the 2x2 window) for every pooled element.
struct PoolMask {
    Shape pooled;
    std::vector<std::uint8_t> argmax;
};

struct PoolResult {
    Tensor output;
    PoolMask mask;
};

/// 2x2 max pooling with stride 2. Ties go to the first position in row-major order.
PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const PoolMask& mask, const Tensor& upstream);

/// Nearest-neighbour 2x upsampling and its adjoint (sum over each 2x2 block).
Tensor upsample2(const Tensor& input);
Tensor upsample2_backward(const Tensor& upstream);

Tensor activate(const Tensor& x, Activation kind);
/// upstream * s'(x); relu'(0) is 0.
Tensor activation_grad(const Tensor& x, const Tensor& upstream, Activation kind);

inline constexpr float kBceEpsilon = 1e-7f;

struct LossResult {
    double value = 0.0;
    Tensor grad;  // d(value)/d(pred)
};

/// Mean squared error or mean binary cross-entropy (pred clamped to [eps, 1-eps]).
LossResult loss(const Tensor& pred, const Tensor& target, LossKind kind);
/// Loss value only.
double loss_value(const Tensor& pred, const Tensor& target, LossKind kind);

const char* to_string(Activation a);
const char* to_string(LossKind k);
LossKind parse_loss_kind(const std::string& s);

}  // namespace dae
