#pragma once

// Straightforward serial implementations of the kernels in kernels.hpp, written
// directly from the defining sums. Used as oracles by the tests and as the baseline
// in the benchmark target; not used on any production path.

#include "dae/kernels.hpp"

namespace dae::reference {

Tensor conv2d(const Tensor& input, const ConvWeights& w, bool flip_kernels = false);
ConvGrads conv2d_grads(const Tensor& input, const ConvWeights& w, const Tensor& upstream,
                       bool flip_kernels = false);
PoolResult maxpool2(const Tensor& input);
Tensor maxpool2_backward(const PoolMask& mask, const Tensor& upstream);
Tensor upsample2(const Tensor& input);
Tensor upsample2_backward(const Tensor& upstream);

}  // namespace dae::reference
