#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dae {

/// Extents of a rank-4 tensor laid out batch, height, width, channels (channels innermost).
struct Shape {
    int batch = 0;
    int height = 0;
    int width = 0;
    int channels = 0;

    std::size_t size() const noexcept {
        return static_cast<std::size_t>(batch) * height * width * channels;
    }
    bool operator==(const Shape&) const = default;
    std::string str() const;
};

/// Dense float32 NHWC tensor with value semantics.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, float fill = 0.0f);
    Tensor(Shape shape, std::vector<float> data);

    const Shape& shape() const noexcept { return shape_; }
    int batch() const noexcept { return shape_.batch; }
    int height() const noexcept { return shape_.height; }
    int width() const noexcept { return shape_.width; }
    int channels() const noexcept { return shape_.channels; }
    std::size_t size() const noexcept { return data_.size(); }

    std::span<float> data() noexcept { return data_; }
    std::span<const float> data() const noexcept { return data_; }
    float* raw() noexcept { return data_.data(); }
    const float* raw() const noexcept { return data_.data(); }

    std::size_t index(int n, int y, int x, int c) const noexcept {
        return ((static_cast<std::size_t>(n) * shape_.height + y) * shape_.width + x) *
                   shape_.channels + c;
    }
    float& at(int n, int y, int x, int c) noexcept { return data_[index(n, y, x, c)]; }
    float at(int n, int y, int x, int c) const noexcept { return data_[index(n, y, x, c)]; }

    float& operator[](std::size_t i) noexcept { return data_[i]; }
    float operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Copy of samples [first, first + count) along the batch axis.
    Tensor slice_batch(int first, int count) const;
    /// Batch formed from the given sample indices, in order.
    Tensor gather_batch(std::span<const std::size_t> indices) const;

    bool all_finite() const noexcept;
    bool operator==(const Tensor&) const = default;

private:
    Shape shape_;
    std::vector<float> data_;
};

/// Convolution kernels (kernelH, kernelW, inChannels, outChannels) plus one bias per output map.
struct ConvWeights {
    int kernel_h = 0;
    int kernel_w = 0;
    int in_channels = 0;
    int out_channels = 0;
    std::vector<float> kernels;
    std::vector<float> bias;

    ConvWeights() = default;
    ConvWeights(int kh, int kw, int cin, int cout);

    std::size_t index(int ky, int kx, int ci, int co) const noexcept {
        return ((static_cast<std::size_t>(ky) * kernel_w + kx) * in_channels + ci) *
                   out_channels + co;
    }
    float& k(int ky, int kx, int ci, int co) noexcept { return kernels[index(ky, kx, ci, co)]; }
    float k(int ky, int kx, int ci, int co) const noexcept {
        return kernels[index(ky, kx, ci, co)];
    }
    std::size_t parameter_count() const noexcept { return kernels.size() + bias.size(); }

    /// Kernels reversed along both spatial axes.
    ConvWeights flipped() const;
    bool operator==(const ConvWeights&) const = default;
};

}  // namespace dae
