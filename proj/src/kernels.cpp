#include "dae/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dae/error.hpp"

namespace dae {
namespace {

void check_conv(const Tensor& input, const ConvWeights& w) {
    if (w.kernel_h % 2 == 0)
        throw ShapeError("kernel_h", "kernel height must be odd, got " + std::to_string(w.kernel_h));
    if (w.kernel_w % 2 == 0)
        throw ShapeError("kernel_w", "kernel width must be odd, got " + std::to_string(w.kernel_w));
    if (input.channels() != w.in_channels)
        throw ShapeError("channels", "input has " + std::to_string(input.channels()) +
                                         " channels, kernels expect " +
                                         std::to_string(w.in_channels));
    if (w.kernels.size() != static_cast<std::size_t>(w.kernel_h) * w.kernel_w * w.in_channels *
                                w.out_channels ||
        w.bias.size() != static_cast<std::size_t>(w.out_channels))
        throw ShapeError("kernel", "kernel storage does not match its declared extents");
}

// Zero-extends the spatial border by (ry, rx). Summing the extra zero products leaves every
// accumulator unchanged, so the padded loops reproduce the bounds-checked sums exactly.
Tensor pad_zero(const Tensor& in, int ry, int rx) {
    const Shape s = in.shape();
    Tensor out({s.batch, s.height + 2 * ry, s.width + 2 * rx, s.channels});
    const std::size_t row = static_cast<std::size_t>(s.width) * s.channels;
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height; ++y)
            std::copy_n(in.raw() + in.index(b, y, 0, 0), row, out.raw() + out.index(b, y + ry, rx, 0));
    return out;
}

struct CorrelateArgs {
    const float* padded;  // batch x (h + 2ry) x (w + 2rx) x cin
    const float* kernels; // kh x kw x cin x cout
    const float* bias;    // may be null
    float* out;           // batch x h x w x cout
    int height, width, cin, cout, kh, kw;

    std::size_t padded_offset(int b, int y, int x) const {
        const std::size_t hp = static_cast<std::size_t>(height + kh - 1);
        const std::size_t wp = static_cast<std::size_t>(width + kw - 1);
        return ((static_cast<std::size_t>(b) * hp + y) * wp + x) * cin;
    }
    std::size_t out_offset(int b, int y, int x) const {
        return ((static_cast<std::size_t>(b) * height + y) * width + x) * cout;
    }
};

// Output channels held in registers; used for the common channel counts.
template <int CO>
void correlate_row_fixed(const CorrelateArgs& a, int b, int y) {
    const int span = a.kw * a.cin;
    for (int x = 0; x < a.width; ++x) {
        float acc[CO] = {};
        for (int ky = 0; ky < a.kh; ++ky) {
            const float* px = a.padded + a.padded_offset(b, y + ky, x);
            const float* k = a.kernels + static_cast<std::size_t>(ky) * span * CO;
            for (int t = 0; t < span; ++t) {
                const float v = px[t];
                const float* kr = k + static_cast<std::size_t>(t) * CO;
                for (int co = 0; co < CO; ++co) acc[co] += v * kr[co];
            }
        }
        float* o = a.out + a.out_offset(b, y, x);
        if (a.bias)
            for (int co = 0; co < CO; ++co) o[co] = acc[co] + a.bias[co];
        else
            for (int co = 0; co < CO; ++co) o[co] = acc[co];
    }
}

// Single output channel. Reads a channel-planar copy of the padded input so that
// consecutive output pixels are contiguous and the row accumulates as a vector.
void correlate_row_single(const CorrelateArgs& a, const float* planar, int b, int y,
                          std::vector<float>& acc) {
    const std::size_t hp = static_cast<std::size_t>(a.height + a.kh - 1);
    const std::size_t wp = static_cast<std::size_t>(a.width + a.kw - 1);
    acc.assign(static_cast<std::size_t>(a.width), 0.0f);
    float* __restrict row_acc = acc.data();
    for (int ky = 0; ky < a.kh; ++ky)
        for (int kx = 0; kx < a.kw; ++kx)
            for (int ci = 0; ci < a.cin; ++ci) {
                const float kv = a.kernels[(static_cast<std::size_t>(ky) * a.kw + kx) * a.cin + ci];
                const float* __restrict src =
                    planar + ((static_cast<std::size_t>(b) * a.cin + ci) * hp + y + ky) * wp + kx;
                for (int x = 0; x < a.width; ++x) row_acc[x] += src[x] * kv;
            }
    float* o = a.out + a.out_offset(b, y, 0);
    for (int x = 0; x < a.width; ++x) o[x] = a.bias ? row_acc[x] + a.bias[0] : row_acc[x];
}

// (batch, h, w, c) -> (batch, c, h, w)
std::vector<float> to_planar(const Tensor& t) {
    const Shape s = t.shape();
    std::vector<float> out(t.size());
    const std::size_t plane = static_cast<std::size_t>(s.height) * s.width;
    for (int b = 0; b < s.batch; ++b)
        for (std::size_t p = 0; p < plane; ++p)
            for (int c = 0; c < s.channels; ++c)
                out[(static_cast<std::size_t>(b) * s.channels + c) * plane + p] =
                    t[(static_cast<std::size_t>(b) * plane + p) * s.channels + c];
    return out;
}

void correlate_row_generic(const CorrelateArgs& a, int b, int y, std::vector<float>& acc) {
    const int span = a.kw * a.cin;
    acc.assign(static_cast<std::size_t>(a.cout), 0.0f);
    for (int x = 0; x < a.width; ++x) {
        std::fill(acc.begin(), acc.end(), 0.0f);
        for (int ky = 0; ky < a.kh; ++ky) {
            const float* px = a.padded + a.padded_offset(b, y + ky, x);
            const float* k = a.kernels + static_cast<std::size_t>(ky) * span * a.cout;
            for (int t = 0; t < span; ++t) {
                const float v = px[t];
                const float* kr = k + static_cast<std::size_t>(t) * a.cout;
                for (int co = 0; co < a.cout; ++co) acc[co] += v * kr[co];
            }
        }
        float* o = a.out + a.out_offset(b, y, x);
        for (int co = 0; co < a.cout; ++co) o[co] = a.bias ? acc[co] + a.bias[co] : acc[co];
    }
}

// Cross-correlation of `input` with kernels laid out (kh, kw, cin, cout), same padding.
Tensor correlate(const Tensor& input, const std::vector<float>& kernels, int kh, int kw,
                 int cout, const float* bias) {
    const Shape s = input.shape();
    const Tensor padded = pad_zero(input, kh / 2, kw / 2);
    Tensor out({s.batch, s.height, s.width, cout});
    const CorrelateArgs args{padded.raw(), kernels.data(), bias, out.raw(),
                             s.height,     s.width,        s.channels, cout, kh, kw};
    const std::vector<float> planar = cout == 1 ? to_planar(padded) : std::vector<float>{};

#pragma omp parallel
    {
        std::vector<float> scratch;
#pragma omp for collapse(2) schedule(static)
        for (int b = 0; b < s.batch; ++b) {
            for (int y = 0; y < s.height; ++y) {
                switch (cout) {
                    case 1: correlate_row_single(args, planar.data(), b, y, scratch); break;
                    case 8: correlate_row_fixed<8>(args, b, y); break;
                    case 16: correlate_row_fixed<16>(args, b, y); break;
                    case 32: correlate_row_fixed<32>(args, b, y); break;
                    case 64: correlate_row_fixed<64>(args, b, y); break;
                    default: correlate_row_generic(args, b, y, scratch); break;
                }
            }
        }
    }
    return out;
}

template <int CO>
void accumulate_kernel_row(float* row_block, const float* px, const float* u, int span) {
    for (int t = 0; t < span; ++t) {
        const float v = px[t];
        float* r = row_block + static_cast<std::size_t>(t) * CO;
        for (int co = 0; co < CO; ++co) r[co] += v * u[co];
    }
}

// dK[ky,kx,ci,co] = sum over (b, y, x) of padded[b, y+ky, x+kx, ci] * upstream[b, y, x, co].
// Each kernel row ky is owned by one thread and its pixels are visited in raster order.
std::vector<float> kernel_gradient(const Tensor& padded, const Tensor& upstream, int kh, int kw) {
    const Shape u = upstream.shape();
    const int cin = padded.channels();
    const int cout = u.channels;
    const int span = kw * cin;
    std::vector<float> grad(static_cast<std::size_t>(kh) * span * cout, 0.0f);

#pragma omp parallel for schedule(static)
    for (int ky = 0; ky < kh; ++ky) {
        float* block = grad.data() + static_cast<std::size_t>(ky) * span * cout;
        for (int b = 0; b < u.batch; ++b) {
            for (int y = 0; y < u.height; ++y) {
                for (int x = 0; x < u.width; ++x) {
                    const float* px = padded.raw() + padded.index(b, y + ky, x, 0);
                    const float* up = upstream.raw() + upstream.index(b, y, x, 0);
                    switch (cout) {
                        case 1: {
                            const float g = up[0];
                            for (int t = 0; t < span; ++t) block[t] += px[t] * g;
                            break;
                        }
                        case 8: accumulate_kernel_row<8>(block, px, up, span); break;
                        case 16: accumulate_kernel_row<16>(block, px, up, span); break;
                        case 32: accumulate_kernel_row<32>(block, px, up, span); break;
                        case 64: accumulate_kernel_row<64>(block, px, up, span); break;
                        default:
                            for (int t = 0; t < span; ++t) {
                                const float v = px[t];
                                float* r = block + static_cast<std::size_t>(t) * cout;
                                for (int co = 0; co < cout; ++co) r[co] += v * up[co];
                            }
                    }
                }
            }
        }
    }
    return grad;
}

// Kernels that map upstream gradients back onto the input: spatially reversed with the
// channel axes swapped, laid out (kh, kw, cout, cin).
std::vector<float> adjoint_kernels(const ConvWeights& w) {
    std::vector<float> out(w.kernels.size());
    const int kh = w.kernel_h, kw = w.kernel_w, cin = w.in_channels, cout = w.out_channels;
    for (int ky = 0; ky < kh; ++ky)
        for (int kx = 0; kx < kw; ++kx)
            for (int ci = 0; ci < cin; ++ci)
                for (int co = 0; co < cout; ++co)
                    out[((static_cast<std::size_t>(kh - 1 - ky) * kw + (kw - 1 - kx)) * cout + co) *
                            cin + ci] = w.k(ky, kx, ci, co);
    return out;
}

void check_shape(const Shape& got, const Shape& want, const char* what) {
    const char* dim = nullptr;
    if (got.batch != want.batch) dim = "batch";
    else if (got.height != want.height) dim = "height";
    else if (got.width != want.width) dim = "width";
    else if (got.channels != want.channels) dim = "channels";
    if (dim)
        throw ShapeError(dim, std::string(what) + ": shape " + got.str() + " does not match " +
                                  want.str() + " (" + dim + ")");
}

float sigmoid(float v) { return 1.0f / (1.0f + std::exp(-v)); }

}  // namespace

Tensor conv2d(const Tensor& input, const ConvWeights& w, bool flip_kernels) {
    check_conv(input, w);
    if (flip_kernels) {
        const ConvWeights f = w.flipped();
        return correlate(input, f.kernels, f.kernel_h, f.kernel_w, f.out_channels, f.bias.data());
    }
    return correlate(input, w.kernels, w.kernel_h, w.kernel_w, w.out_channels, w.bias.data());
}

ConvGrads conv2d_grads(const Tensor& input, const ConvWeights& w, const Tensor& upstream,
                       bool flip_kernels, bool want_input_grad) {
    check_conv(input, w);
    Shape expected = input.shape();
    expected.channels = w.out_channels;
    check_shape(upstream.shape(), expected, "conv2d_grads upstream");

    const ConvWeights applied = flip_kernels ? w.flipped() : w;
    const int kh = w.kernel_h, kw = w.kernel_w;

    ConvGrads g;
    g.weights = ConvWeights(kh, kw, w.in_channels, w.out_channels);
    {
        const Tensor padded = pad_zero(input, kh / 2, kw / 2);
        g.weights.kernels = kernel_gradient(padded, upstream, kh, kw);
    }
    const Shape u = upstream.shape();
    const std::size_t pixels = static_cast<std::size_t>(u.batch) * u.height * u.width;
    for (std::size_t p = 0; p < pixels; ++p) {
        const float* up = upstream.raw() + p * u.channels;
        for (int co = 0; co < u.channels; ++co) g.weights.bias[co] += up[co];
    }
    if (flip_kernels) g.weights = g.weights.flipped();

    if (want_input_grad)
        g.input = correlate(upstream, adjoint_kernels(applied), kh, kw, w.in_channels, nullptr);
    return g;
}

PoolResult maxpool2(const Tensor& input) {
    const Shape s = input.shape();
    if (s.height % 2 != 0)
        throw ShapeError("height", "maxpool2 needs an even height, got " + std::to_string(s.height));
    if (s.width % 2 != 0)
        throw ShapeError("width", "maxpool2 needs an even width, got " + std::to_string(s.width));
    const Shape ps{s.batch, s.height / 2, s.width / 2, s.channels};
    PoolResult r{Tensor(ps), PoolMask{ps, std::vector<std::uint8_t>(ps.size())}};

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < ps.batch; ++b) {
        for (int y = 0; y < ps.height; ++y) {
            for (int x = 0; x < ps.width; ++x) {
                const float* r0 = input.raw() + input.index(b, 2 * y, 2 * x, 0);
                const float* r1 = input.raw() + input.index(b, 2 * y + 1, 2 * x, 0);
                const std::size_t o = r.output.index(b, y, x, 0);
                for (int c = 0; c < ps.channels; ++c) {
                    const float v[4] = {r0[c], r0[c + s.channels], r1[c], r1[c + s.channels]};
                    int best = 0;
                    for (int q = 1; q < 4; ++q)
                        if (v[q] > v[best]) best = q;
                    r.output[o + c] = v[best];
                    r.mask.argmax[o + c] = static_cast<std::uint8_t>(best);
                }
            }
        }
    }
    return r;
}

Tensor maxpool2_backward(const PoolMask& mask, const Tensor& upstream) {
    check_shape(upstream.shape(), mask.pooled, "maxpool2_backward upstream");
    if (mask.argmax.size() != mask.pooled.size())
        throw ShapeError("mask", "pooling mask is inconsistent with its shape");
    const Shape ps = mask.pooled;
    Tensor out({ps.batch, ps.height * 2, ps.width * 2, ps.channels});

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < ps.batch; ++b)
        for (int y = 0; y < ps.height; ++y)
            for (int x = 0; x < ps.width; ++x)
                for (int c = 0; c < ps.channels; ++c) {
                    const std::size_t o = upstream.index(b, y, x, c);
                    const int q = mask.argmax[o];
                    out.at(b, 2 * y + q / 2, 2 * x + q % 2, c) = upstream[o];
                }
    return out;
}

Tensor upsample2(const Tensor& input) {
    const Shape s = input.shape();
    Tensor out({s.batch, s.height * 2, s.width * 2, s.channels});

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height * 2; ++y)
            for (int x = 0; x < s.width * 2; ++x)
                for (int c = 0; c < s.channels; ++c) out.at(b, y, x, c) = input.at(b, y / 2, x / 2, c);
    return out;
}

Tensor upsample2_backward(const Tensor& upstream) {
    const Shape s = upstream.shape();
    if (s.height % 2 != 0 || s.width % 2 != 0)
        throw ShapeError(s.height % 2 ? "height" : "width",
                         "upsample2_backward needs even spatial extents, got " + s.str());
    Tensor out({s.batch, s.height / 2, s.width / 2, s.channels});

#pragma omp parallel for collapse(2) schedule(static)
    for (int b = 0; b < out.batch(); ++b)
        for (int y = 0; y < out.height(); ++y)
            for (int x = 0; x < out.width(); ++x)
                for (int c = 0; c < s.channels; ++c)
                    out.at(b, y, x, c) = upstream.at(b, 2 * y, 2 * x, c) +
                                         upstream.at(b, 2 * y, 2 * x + 1, c) +
                                         upstream.at(b, 2 * y + 1, 2 * x, c) +
                                         upstream.at(b, 2 * y + 1, 2 * x + 1, c);
    return out;
}

Tensor activate(const Tensor& x, Activation kind) {
    Tensor out(x.shape());
    const std::size_t n = x.size();
    const float* in = x.raw();
    float* o = out.raw();
    if (kind == Activation::relu) {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0f ? in[i] : 0.0f;
    } else {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) o[i] = sigmoid(in[i]);
    }
    return out;
}

Tensor activation_grad(const Tensor& x, const Tensor& upstream, Activation kind) {
    check_shape(upstream.shape(), x.shape(), "activation_grad upstream");
    Tensor out(x.shape());
    const std::size_t n = x.size();
    const float* in = x.raw();
    const float* up = upstream.raw();
    float* o = out.raw();
    if (kind == Activation::relu) {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) o[i] = in[i] > 0.0f ? up[i] : 0.0f;
    } else {
#pragma omp parallel for schedule(static)
        for (std::size_t i = 0; i < n; ++i) {
            const float s = sigmoid(in[i]);
            o[i] = up[i] * s * (1.0f - s);
        }
    }
    return out;
}

namespace {

double elementwise_loss(float p, float t, LossKind kind) {
    if (kind == LossKind::mse) {
        const double d = static_cast<double>(p) - t;
        return d * d;
    }
    const double pc = std::clamp(p, kBceEpsilon, 1.0f - kBceEpsilon);
    return -(t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc));
}

}  // namespace

double loss_value(const Tensor& pred, const Tensor& target, LossKind kind) {
    check_shape(target.shape(), pred.shape(), "loss target");
    if (pred.size() == 0) throw ShapeError("size", "loss of an empty tensor");
    double sum = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) sum += elementwise_loss(pred[i], target[i], kind);
    return sum / static_cast<double>(pred.size());
}

LossResult loss(const Tensor& pred, const Tensor& target, LossKind kind) {
    LossResult r{loss_value(pred, target, kind), Tensor(pred.shape())};
    const float inv_n = 1.0f / static_cast<float>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const float p = pred[i], t = target[i];
        if (kind == LossKind::mse) {
            r.grad[i] = 2.0f * (p - t) * inv_n;
        } else if (p < kBceEpsilon || p > 1.0f - kBceEpsilon) {
            r.grad[i] = 0.0f;  // clamped region is flat
        } else {
            r.grad[i] = (p - t) / (p * (1.0f - p)) * inv_n;
        }
    }
    return r;
}

const char* to_string(Activation a) { return a == Activation::relu ? "relu" : "sigmoid"; }
const char* to_string(LossKind k) { return k == LossKind::bce ? "bce" : "mse"; }

LossKind parse_loss_kind(const std::string& s) {
    if (s == "bce") return LossKind::bce;
    if (s == "mse") return LossKind::mse;
    throw ConfigError("unknown loss kind '" + s + "' (expected bce or mse)");
}

}  // namespace dae
