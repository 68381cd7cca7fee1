#include "dae/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "dae/error.hpp"

namespace dae {

std::string Shape::str() const {
    std::ostringstream os;
    os << batch << 'x' << height << 'x' << width << 'x' << channels;
    return os.str();
}

namespace {

Shape checked(Shape shape) {
    if (shape.batch < 0 || shape.height < 0 || shape.width < 0 || shape.channels < 0)
        throw ShapeError("extent", "negative tensor extent " + shape.str());
    return shape;
}

}  // namespace

Tensor::Tensor(Shape shape, float fill) : shape_(checked(shape)), data_(shape_.size(), fill) {}

Tensor::Tensor(Shape shape, std::vector<float> data) : shape_(checked(shape)), data_(std::move(data)) {
    if (data_.size() != shape_.size())
        throw ShapeError("size", "data length " + std::to_string(data_.size()) +
                                     " does not match shape " + shape_.str());
}

Tensor Tensor::slice_batch(int first, int count) const {
    if (first < 0 || count < 0 || first + count > shape_.batch)
        throw ShapeError("batch", "batch slice out of range");
    Shape s = shape_;
    s.batch = count;
    const std::size_t per = static_cast<std::size_t>(shape_.height) * shape_.width * shape_.channels;
    std::vector<float> out(data_.begin() + static_cast<std::ptrdiff_t>(first * per),
                           data_.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
    return Tensor(s, std::move(out));
}

Tensor Tensor::gather_batch(std::span<const std::size_t> indices) const {
    Shape s = shape_;
    s.batch = static_cast<int>(indices.size());
    const std::size_t per = static_cast<std::size_t>(shape_.height) * shape_.width * shape_.channels;
    std::vector<float> out;
    out.reserve(indices.size() * per);
    for (std::size_t i : indices) {
        if (i >= static_cast<std::size_t>(shape_.batch))
            throw ShapeError("batch", "gather index out of range");
        auto first = data_.begin() + static_cast<std::ptrdiff_t>(i * per);
        out.insert(out.end(), first, first + static_cast<std::ptrdiff_t>(per));
    }
    return Tensor(s, std::move(out));
}

bool Tensor::all_finite() const noexcept {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
}

ConvWeights::ConvWeights(int kh, int kw, int cin, int cout)
    : kernel_h(kh), kernel_w(kw), in_channels(cin), out_channels(cout),
      kernels(static_cast<std::size_t>(kh) * kw * cin * cout, 0.0f),
      bias(static_cast<std::size_t>(cout), 0.0f) {
    if (kh <= 0 || kw <= 0 || cin <= 0 || cout <= 0)
        throw ShapeError("kernel", "convolution extents must be positive");
}

ConvWeights ConvWeights::flipped() const {
    ConvWeights out = *this;
    for (int ky = 0; ky < kernel_h; ++ky)
        for (int kx = 0; kx < kernel_w; ++kx)
            for (int ci = 0; ci < in_channels; ++ci)
                for (int co = 0; co < out_channels; ++co)
                    out.k(kernel_h - 1 - ky, kernel_w - 1 - kx, ci, co) = k(ky, kx, ci, co);
    return out;
}

}  // namespace dae
