#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "dae/tensor.hpp"

namespace dae {

/// Single-channel float image, row-major, nominally in [0, 1].
struct Image {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    Image() = default;
    Image(int h, int w, float fill = 0.0f);
    Image(int h, int w, std::vector<float> data);

    float& at(int y, int x) noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
    float at(int y, int x) const noexcept { return pixels[static_cast<std::size_t>(y) * width + x]; }
    std::size_t size() const noexcept { return pixels.size(); }
    bool empty() const noexcept { return pixels.empty(); }
    bool operator==(const Image&) const = default;
};

/// Stacks equally sized images into an (n, h, w, 1) tensor.
Tensor stack(std::span<const Image> images);
/// Sample `n` of a single-channel tensor as an image.
Image image_at(const Tensor& t, int n);
std::vector<Image> unstack(const Tensor& t);

// --- file formats ---------------------------------------------------------------

/// Reads 8/16-bit PGM (P2, P5) or 8/16-bit grayscale/RGB PNG; values divided by the
/// format maximum. RGB is converted with luminance weights 0.299, 0.587, 0.114.
/// Throws ImageError with code unsupported_format, truncated, bad_magic or io.
Image load_grayscale(const std::filesystem::path& path);
Image decode_pgm(std::span<const unsigned char> bytes);

/// Binary PGM (P5). maxval 255 writes one byte per pixel, otherwise two (big-endian).
void save_pgm(const Image& img, const std::filesystem::path& path, int maxval = 255);
/// 8-bit grayscale PNG.
void save_png(const Image& img, const std::filesystem::path& path);
/// Chooses PNG or PGM from the extension.
void save_image(const Image& img, const std::filesystem::path& path);

/// Bilinear resampling with half-pixel centres: output pixel i samples the source at
/// (i + 0.5) * in / out - 0.5, clamped to the border.
Image resize_bilinear(const Image& img, int out_h = 64, int out_w = 64);

}  // namespace dae
