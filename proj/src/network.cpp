#include "dae/network.hpp"

#include <cmath>

#include "dae/error.hpp"
#include "dae/rng.hpp"

namespace dae {

LayerSpec LayerSpec::conv(int kernel, int in_channels, int out_channels) {
    LayerSpec l;
    l.kind = LayerKind::conv;
    l.kernel_h = l.kernel_w = kernel;
    l.in_channels = in_channels;
    l.out_channels = out_channels;
    return l;
}

LayerSpec LayerSpec::act(Activation a) {
    LayerSpec l;
    l.kind = LayerKind::activation;
    l.activation = a;
    return l;
}

LayerSpec LayerSpec::maxpool() {
    LayerSpec l;
    l.kind = LayerKind::maxpool;
    return l;
}

LayerSpec LayerSpec::upsample() {
    LayerSpec l;
    l.kind = LayerKind::upsample;
    return l;
}

std::string LayerSpec::describe() const {
    switch (kind) {
        case LayerKind::conv:
            return "conv " + std::to_string(kernel_h) + "x" + std::to_string(kernel_w) + "x" +
                   std::to_string(in_channels) + "x" + std::to_string(out_channels);
        case LayerKind::activation: return to_string(activation);
        case LayerKind::maxpool: return "maxpool2";
        case LayerKind::upsample: return "upsample2";
    }
    return "?";
}

Architecture default_architecture(int filters, int kernel) {
    return {
        LayerSpec::conv(kernel, 1, filters),       LayerSpec::act(Activation::relu),
        LayerSpec::maxpool(),
        LayerSpec::conv(kernel, filters, filters), LayerSpec::act(Activation::relu),
        LayerSpec::maxpool(),
        LayerSpec::conv(kernel, filters, filters), LayerSpec::act(Activation::relu),
        LayerSpec::upsample(),
        LayerSpec::conv(kernel, filters, filters), LayerSpec::act(Activation::relu),
        LayerSpec::upsample(),
        LayerSpec::conv(kernel, filters, 1),       LayerSpec::act(Activation::sigmoid),
    };
}

void validate_architecture(const Architecture& arch) {
    if (arch.empty()) throw ConfigError("architecture has no layers");
    int channels = -1;
    int depth = 0;
    bool any_conv = false;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& l = arch[i];
        const std::string where = "layer " + std::to_string(i) + " (" + l.describe() + "): ";
        switch (l.kind) {
            case LayerKind::conv:
                if (l.kernel_h <= 0 || l.kernel_w <= 0 || l.kernel_h % 2 == 0 || l.kernel_w % 2 == 0)
                    throw ConfigError(where + "kernel extents must be positive and odd");
                if (l.in_channels <= 0 || l.out_channels <= 0)
                    throw ConfigError(where + "channel counts must be positive");
                if (channels >= 0 && l.in_channels != channels)
                    throw ConfigError(where + "expects " + std::to_string(l.in_channels) +
                                      " input channels but receives " + std::to_string(channels));
                channels = l.out_channels;
                any_conv = true;
                break;
            case LayerKind::maxpool: ++depth; break;
            case LayerKind::upsample:
                if (--depth < 0) throw ConfigError(where + "upsampling beyond the input resolution");
                break;
            case LayerKind::activation: break;
        }
    }
    if (!any_conv) throw ConfigError("architecture has no convolution layers");
    if (depth != 0) throw ConfigError("downsampling and upsampling stages are unbalanced");
    if (output_channels(arch) != input_channels(arch))
        throw ConfigError("reconstruction channels differ from input channels");
}

int input_channels(const Architecture& arch) {
    for (const auto& l : arch)
        if (l.kind == LayerKind::conv) return l.in_channels;
    return 0;
}

int output_channels(const Architecture& arch) {
    for (auto it = arch.rbegin(); it != arch.rend(); ++it)
        if (it->kind == LayerKind::conv) return it->out_channels;
    return 0;
}

int spatial_divisor(const Architecture& arch) {
    int depth = 0, deepest = 0;
    for (const auto& l : arch) {
        if (l.kind == LayerKind::maxpool) deepest = std::max(deepest, ++depth);
        if (l.kind == LayerKind::upsample) --depth;
    }
    return 1 << deepest;
}

std::size_t NetworkParams::parameter_count() const noexcept {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.parameter_count();
    return n;
}

bool NetworkParams::all_finite() const noexcept {
    for (const auto& b : blocks) {
        for (float v : b.kernels)
            if (!std::isfinite(v)) return false;
        for (float v : b.bias)
            if (!std::isfinite(v)) return false;
    }
    return true;
}

std::uint64_t NetworkParams::fingerprint() const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::vector<float>& v) {
        const auto* bytes = reinterpret_cast<const unsigned char*>(v.data());
        for (std::size_t i = 0; i < v.size() * sizeof(float); ++i) {
            h ^= bytes[i];
            h *= 1099511628211ull;
        }
    };
    for (const auto& b : blocks) {
        mix(b.kernels);
        mix(b.bias);
    }
    return h;
}

std::size_t parameter_count(const Architecture& arch) { return zeros_like(arch).parameter_count(); }

NetworkParams zeros_like(const Architecture& arch) {
    NetworkParams p;
    for (const auto& l : arch)
        if (l.kind == LayerKind::conv)
            p.blocks.emplace_back(l.kernel_h, l.kernel_w, l.in_channels, l.out_channels);
    return p;
}

NetworkParams init_params(const Architecture& arch, std::uint64_t seed) {
    validate_architecture(arch);
    NetworkParams p = zeros_like(arch);
    RandomStream rng(seed, /*stream_id=*/0x494E4954);  // "INIT"
    for (auto& b : p.blocks) {
        const double fan_in = static_cast<double>(b.kernel_h) * b.kernel_w * b.in_channels;
        const double fan_out = static_cast<double>(b.kernel_h) * b.kernel_w * b.out_channels;
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (float& w : b.kernels) w = static_cast<float>(rng.uniform(-limit, limit));
    }
    return p;
}

namespace {

void check_params(const NetworkParams& params, const Architecture& arch) {
    std::size_t block = 0;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& l = arch[i];
        if (l.kind != LayerKind::conv) continue;
        if (block >= params.blocks.size())
            throw ConfigError("parameters are missing a block for layer " + std::to_string(i));
        const ConvWeights& w = params.blocks[block++];
        if (w.kernel_h != l.kernel_h || w.kernel_w != l.kernel_w || w.in_channels != l.in_channels ||
            w.out_channels != l.out_channels)
            throw ConfigError("parameter block for layer " + std::to_string(i) +
                              " does not match " + l.describe());
    }
    if (block != params.blocks.size()) throw ConfigError("parameters have extra blocks");
}

Tensor run_forward(const NetworkParams& params, const Architecture& arch, const Tensor& batch,
                   ForwardCache* cache) {
    check_params(params, arch);
    const int div = spatial_divisor(arch);
    if (batch.height() % div != 0 || batch.width() % div != 0)
        throw ShapeError(batch.height() % div ? "height" : "width",
                         "input " + batch.shape().str() + " is not divisible by " + std::to_string(div));
    if (cache) {
        cache->arch = arch;
        cache->params_fingerprint = params.fingerprint();
        cache->layer_inputs.clear();
        cache->pool_masks.assign(arch.size(), PoolMask{});
    }
    Tensor x = batch;
    std::size_t block = 0;
    for (std::size_t i = 0; i < arch.size(); ++i) {
        const LayerSpec& l = arch[i];
        if (cache) cache->layer_inputs.push_back(x);
        try {
            switch (l.kind) {
                case LayerKind::conv: x = conv2d(x, params.blocks[block++]); break;
                case LayerKind::activation: x = activate(x, l.activation); break;
                case LayerKind::maxpool: {
                    PoolResult r = maxpool2(x);
                    x = std::move(r.output);
                    if (cache) cache->pool_masks[i] = std::move(r.mask);
                    break;
                }
                case LayerKind::upsample: x = upsample2(x); break;
            }
        } catch (const ShapeError& e) {
            throw ShapeError(e.dimension(), "layer " + std::to_string(i) + " (" + l.describe() + "): " + e.what());
        }
    }
    return x;
}

}  // namespace

ForwardResult forward(const NetworkParams& params, const Architecture& arch, const Tensor& batch) {
    ForwardResult r;
    r.reconstruction = run_forward(params, arch, batch, &r.cache);
    return r;
}

Tensor predict(const NetworkParams& params, const Architecture& arch, const Tensor& batch) {
    return run_forward(params, arch, batch, nullptr);
}

Tensor predict_batched(const NetworkParams& params, const Architecture& arch, const Tensor& data,
                       int chunk) {
    Shape s = data.shape();
    s.channels = output_channels(arch);
    Tensor out(s);
    const std::size_t per = static_cast<std::size_t>(s.height) * s.width * s.channels;
    for (int first = 0; first < data.batch(); first += chunk) {
        const int count = std::min(chunk, data.batch() - first);
        const Tensor part = predict(params, arch, data.slice_batch(first, count));
        std::copy(part.data().begin(), part.data().end(), out.raw() + first * per);
    }
    return out;
}

NetworkParams backward(const NetworkParams& params, const Architecture& arch, const ForwardCache& cache,
                       const Tensor& d_reconstruction) {
    check_params(params, arch);
    if (cache.arch != arch || cache.layer_inputs.size() != arch.size())
        throw ConfigError("forward cache was produced by a different architecture");
    if (cache.params_fingerprint != params.fingerprint())
        throw ConfigError("forward cache is stale: parameters changed since the forward pass");

    NetworkParams grads = zeros_like(arch);
    std::size_t block = params.blocks.size();
    bool earlier_conv = false;
    Tensor g = d_reconstruction;
    for (std::size_t i = arch.size(); i-- > 0;) {
        const LayerSpec& l = arch[i];
        const Tensor& input = cache.layer_inputs[i];
        switch (l.kind) {
            case LayerKind::conv: {
                --block;
                earlier_conv = false;
                for (std::size_t j = 0; j < i; ++j) earlier_conv |= arch[j].kind == LayerKind::conv;
                ConvGrads cg = conv2d_grads(input, params.blocks[block], g, false, earlier_conv);
                grads.blocks[block] = std::move(cg.weights);
                g = std::move(cg.input);
                break;
            }
            case LayerKind::activation: g = activation_grad(input, g, l.activation); break;
            case LayerKind::maxpool: g = maxpool2_backward(cache.pool_masks[i], g); break;
            case LayerKind::upsample: g = upsample2_backward(g); break;
        }
        if (!earlier_conv && l.kind == LayerKind::conv) break;  // nothing upstream has parameters
    }
    return grads;
}

}  // namespace dae
