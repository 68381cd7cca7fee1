#include "dae/reference.hpp"

#include "dae/error.hpp"

namespace dae::reference {

Tensor conv2d(const Tensor& input, const ConvWeights& w, bool flip_kernels) {
    if (input.channels() != w.in_channels) throw ShapeError("channels", "channel mismatch");
    const Shape s = input.shape();
    const int ry = w.kernel_h / 2, rx = w.kernel_w / 2;
    Tensor out({s.batch, s.height, s.width, w.out_channels});
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                for (int co = 0; co < w.out_channels; ++co) {
                    float acc = 0.0f;
                    for (int ky = 0; ky < w.kernel_h; ++ky)
                        for (int kx = 0; kx < w.kernel_w; ++kx)
                            for (int ci = 0; ci < w.in_channels; ++ci) {
                                const int iy = y + ky - ry, ix = x + kx - rx;
                                if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
                                const int sy = flip_kernels ? w.kernel_h - 1 - ky : ky;
                                const int sx = flip_kernels ? w.kernel_w - 1 - kx : kx;
                                acc += input.at(b, iy, ix, ci) * w.k(sy, sx, ci, co);
                            }
                    out.at(b, y, x, co) = acc + w.bias[co];
                }
    return out;
}

ConvGrads conv2d_grads(const Tensor& input, const ConvWeights& w, const Tensor& upstream,
                       bool flip_kernels) {
    const Shape s = input.shape();
    if (upstream.shape() != Shape{s.batch, s.height, s.width, w.out_channels})
        throw ShapeError("upstream", "upstream shape mismatch");
    const int ry = w.kernel_h / 2, rx = w.kernel_w / 2;
    ConvGrads g{Tensor(s), ConvWeights(w.kernel_h, w.kernel_w, w.in_channels, w.out_channels)};
    // Scatter form of the chain rule: every (output, tap) pair contributes once.
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                for (int co = 0; co < w.out_channels; ++co) {
                    const float u = upstream.at(b, y, x, co);
                    g.weights.bias[co] += u;
                    for (int ky = 0; ky < w.kernel_h; ++ky)
                        for (int kx = 0; kx < w.kernel_w; ++kx)
                            for (int ci = 0; ci < w.in_channels; ++ci) {
                                const int iy = y + ky - ry, ix = x + kx - rx;
                                if (iy < 0 || iy >= s.height || ix < 0 || ix >= s.width) continue;
                                const int sy = flip_kernels ? w.kernel_h - 1 - ky : ky;
                                const int sx = flip_kernels ? w.kernel_w - 1 - kx : kx;
                                g.weights.k(sy, sx, ci, co) += input.at(b, iy, ix, ci) * u;
                                g.input.at(b, iy, ix, ci) += w.k(sy, sx, ci, co) * u;
                            }
                }
    return g;
}

PoolResult maxpool2(const Tensor& input) {
    const Shape s = input.shape();
    if (s.height % 2 || s.width % 2) throw ShapeError("height", "odd extent");
    const Shape ps{s.batch, s.height / 2, s.width / 2, s.channels};
    PoolResult r{Tensor(ps), PoolMask{ps, std::vector<std::uint8_t>(ps.size())}};
    for (int b = 0; b < ps.batch; ++b)
        for (int y = 0; y < ps.height; ++y)
            for (int x = 0; x < ps.width; ++x)
                for (int c = 0; c < ps.channels; ++c) {
                    const float v[4] = {input.at(b, 2 * y, 2 * x, c), input.at(b, 2 * y, 2 * x + 1, c),
                                        input.at(b, 2 * y + 1, 2 * x, c),
                                        input.at(b, 2 * y + 1, 2 * x + 1, c)};
                    int best = 0;
                    for (int q = 1; q < 4; ++q)
                        if (v[q] > v[best]) best = q;
                    r.output.at(b, y, x, c) = v[best];
                    r.mask.argmax[r.output.index(b, y, x, c)] = static_cast<std::uint8_t>(best);
                }
    return r;
}

Tensor maxpool2_backward(const PoolMask& mask, const Tensor& upstream) {
    const Shape ps = mask.pooled;
    if (upstream.shape() != ps) throw ShapeError("upstream", "upstream shape mismatch");
    Tensor out({ps.batch, ps.height * 2, ps.width * 2, ps.channels});
    for (int b = 0; b < ps.batch; ++b)
        for (int y = 0; y < ps.height; ++y)
            for (int x = 0; x < ps.width; ++x)
                for (int c = 0; c < ps.channels; ++c) {
                    const int q = mask.argmax[upstream.index(b, y, x, c)];
                    out.at(b, 2 * y + q / 2, 2 * x + q % 2, c) += upstream.at(b, y, x, c);
                }
    return out;
}

Tensor upsample2(const Tensor& input) {
    const Shape s = input.shape();
    Tensor out({s.batch, 2 * s.height, 2 * s.width, s.channels});
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                for (int c = 0; c < s.channels; ++c)
                    for (int q = 0; q < 4; ++q)
                        out.at(b, 2 * y + q / 2, 2 * x + q % 2, c) = input.at(b, y, x, c);
    return out;
}

Tensor upsample2_backward(const Tensor& upstream) {
    const Shape s = upstream.shape();
    Tensor out({s.batch, s.height / 2, s.width / 2, s.channels});
    for (int b = 0; b < s.batch; ++b)
        for (int y = 0; y < s.height; ++y)
            for (int x = 0; x < s.width; ++x)
                for (int c = 0; c < s.channels; ++c) out.at(b, y / 2, x / 2, c) += upstream.at(b, y, x, c);
    return out;
}

}  // namespace dae::reference
