#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dae/kernels.hpp"
#include "dae/tensor.hpp"

namespace dae {

enum class LayerKind : std::uint8_t { conv, activation, maxpool, upsample };

struct LayerSpec {
    LayerKind kind = LayerKind::conv;
    int kernel_h = 0;
    int kernel_w = 0;
    int in_channels = 0;
    int out_channels = 0;
    Activation activation = Activation::relu;

    static LayerSpec conv(int kernel, int in_channels, int out_channels);
    static LayerSpec act(Activation a);
    static LayerSpec maxpool();
    static LayerSpec upsample();

    std::string describe() const;
    bool operator==(const LayerSpec&) const = default;
};

using Architecture = std::vector<LayerSpec>;

/// Encoder: two (conv + relu, maxpool) stages; bottleneck conv + relu; decoder: two
/// (upsample, conv + relu) stages reversed, ending in a single-channel conv + sigmoid.
/// With the defaults the 64x64x1 input passes through a 16x16x32 bottleneck.
Architecture default_architecture(int filters = 32, int kernel = 3);

/// Checks channel chaining and pooling balance; throws ConfigError naming the layer index.
void validate_architecture(const Architecture& arch);
int input_channels(const Architecture& arch);
int output_channels(const Architecture& arch);
/// Spatial extents of the input must be divisible by this.
int spatial_divisor(const Architecture& arch);

/// One ConvWeights block per conv layer, in layer order.
struct NetworkParams {
    std::vector<ConvWeights> blocks;

    std::size_t parameter_count() const noexcept;
    bool all_finite() const noexcept;
    /// FNV-1a over the raw parameter bytes.
    std::uint64_t fingerprint() const noexcept;
    bool operator==(const NetworkParams&) const = default;
};

std::size_t parameter_count(const Architecture& arch);

/// Glorot-uniform kernels (limit sqrt(6 / (fan_in + fan_out)) with fan = kh * kw * channels)
/// and zero biases, fully determined by `seed`.
NetworkParams init_params(const Architecture& arch, std::uint64_t seed);

/// Zero-valued parameters shaped like `arch`.
NetworkParams zeros_like(const Architecture& arch);

/// Everything backward() needs from one forward pass.
struct ForwardCache {
    Architecture arch;
    std::uint64_t params_fingerprint = 0;
    std::vector<Tensor> layer_inputs;
    std::vector<PoolMask> pool_masks;  // indexed by layer; empty for non-pool layers
};

struct ForwardResult {
    Tensor reconstruction;
    ForwardCache cache;
};

ForwardResult forward(const NetworkParams& params, const Architecture& arch, const Tensor& batch);
/// Forward pass without keeping intermediates.
Tensor predict(const NetworkParams& params, const Architecture& arch, const Tensor& batch);
/// predict() in chunks of `chunk` samples to bound memory.
Tensor predict_batched(const NetworkParams& params, const Architecture& arch, const Tensor& data,
                       int chunk = 10);

/// Gradient of the scalar loss whose derivative with respect to the reconstruction is
/// `d_reconstruction`, for every kernel and bias. Throws ConfigError on a stale cache.
NetworkParams backward(const NetworkParams& params, const Architecture& arch, const ForwardCache& cache,
                       const Tensor& d_reconstruction);

}  // namespace dae
