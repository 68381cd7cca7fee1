#include "dae/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>

#include "dae/error.hpp"

namespace dae {

Image::Image(int h, int w, float fill)
    : height(h), width(w), pixels(static_cast<std::size_t>(h) * w, fill) {
    if (h < 0 || w < 0) throw ShapeError("extent", "negative image extent");
}

Image::Image(int h, int w, std::vector<float> data) : height(h), width(w), pixels(std::move(data)) {
    if (pixels.size() != static_cast<std::size_t>(h) * w)
        throw ShapeError("size", "image data does not match " + std::to_string(h) + "x" + std::to_string(w));
}

Tensor stack(std::span<const Image> images) {
    if (images.empty()) return Tensor(Shape{0, 0, 0, 1});
    const int h = images[0].height, w = images[0].width;
    std::vector<float> data;
    data.reserve(images.size() * images[0].size());
    for (const Image& img : images) {
        if (img.height != h) throw ShapeError("height", "images in a batch must share one size");
        if (img.width != w) throw ShapeError("width", "images in a batch must share one size");
        data.insert(data.end(), img.pixels.begin(), img.pixels.end());
    }
    return Tensor(Shape{static_cast<int>(images.size()), h, w, 1}, std::move(data));
}

Image image_at(const Tensor& t, int n) {
    if (t.channels() != 1) throw ShapeError("channels", "image_at needs a single-channel tensor");
    const std::size_t per = static_cast<std::size_t>(t.height()) * t.width();
    auto first = t.data().begin() + static_cast<std::ptrdiff_t>(n * per);
    return Image(t.height(), t.width(), std::vector<float>(first, first + static_cast<std::ptrdiff_t>(per)));
}

std::vector<Image> unstack(const Tensor& t) {
    std::vector<Image> out;
    out.reserve(static_cast<std::size_t>(t.batch()));
    for (int n = 0; n < t.batch(); ++n) out.push_back(image_at(t, n));
    return out;
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError(ImageErrc::io, "cannot open " + path.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PgmReader {
public:
    explicit PgmReader(std::span<const unsigned char> b) : bytes_(b) {}

    void skip_space_and_comments() {
        while (pos_ < bytes_.size()) {
            if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
            } else if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else {
                break;
            }
        }
    }

    long read_int() {
        skip_space_and_comments();
        if (pos_ >= bytes_.size()) throw ImageError(ImageErrc::truncated, "PGM ends inside its header");
        if (!std::isdigit(bytes_[pos_])) throw ImageError(ImageErrc::truncated, "malformed PGM number");
        long v = 0;
        while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
            v = v * 10 + (bytes_[pos_++] - '0');
            if (v > 1'000'000'000L) throw ImageError(ImageErrc::unsupported_format, "PGM value too large");
        }
        return v;
    }

    std::size_t pos() const { return pos_; }
    void advance(std::size_t n) { pos_ += n; }

private:
    std::span<const unsigned char> bytes_;
    std::size_t pos_ = 0;
};

Image decode_png(const std::filesystem::path& path) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    const std::string name = path.string();
    if (!png_image_begin_read_from_file(&image, name.c_str()))
        throw ImageError(ImageErrc::truncated, "cannot decode PNG " + name + ": " + image.message);
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    // 8-bit channels in the file's own encoding; luminance is computed here.
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
        png_image_free(&image);
        throw ImageError(ImageErrc::truncated, "cannot decode PNG " + name + ": " + image.message);
    }
    const int h = static_cast<int>(image.height), w = static_cast<int>(image.width);
    const int ch = color ? 3 : 1;
    Image out(h, w);
    for (std::size_t i = 0; i < out.size(); ++i) {
        float c[3];
        for (int k = 0; k < ch; ++k) c[k] = buffer[i * ch + k] / 255.0f;
        out.pixels[i] = color ? 0.299f * c[0] + 0.587f * c[1] + 0.114f * c[2] : c[0];
    }
    return out;
}

int quantize(float v, int maxval) {
    return static_cast<int>(std::lround(std::clamp(v, 0.0f, 1.0f) * static_cast<float>(maxval)));
}

}  // namespace

Image decode_pgm(std::span<const unsigned char> bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P') throw ImageError(ImageErrc::bad_magic, "not a PGM file");
    const char kind = static_cast<char>(bytes[1]);
    if (kind != '2' && kind != '5')
        throw ImageError(ImageErrc::unsupported_format,
                         std::string("unsupported netpbm variant P") + kind + " (expected P2 or P5)");
    PgmReader r(bytes);
    r.advance(2);
    const long w = r.read_int(), h = r.read_int(), maxval = r.read_int();
    if (w <= 0 || h <= 0) throw ImageError(ImageErrc::unsupported_format, "PGM has an empty raster");
    if (maxval <= 0 || maxval > 65535) throw ImageError(ImageErrc::unsupported_format, "PGM maxval out of range");
    Image img(static_cast<int>(h), static_cast<int>(w));
    const float max = static_cast<float>(maxval);
    if (kind == '2') {
        for (float& p : img.pixels) {
            const long v = r.read_int();
            if (v > maxval) throw ImageError(ImageErrc::unsupported_format, "PGM sample exceeds maxval");
            p = static_cast<float>(v) / max;
        }
        return img;
    }
    r.advance(1);  // single whitespace after maxval
    const std::size_t bpp = maxval < 256 ? 1 : 2;
    if (r.pos() > bytes.size() || bytes.size() - r.pos() < img.size() * bpp)
        throw ImageError(ImageErrc::truncated, "PGM raster is truncated");
    const unsigned char* data = bytes.data() + r.pos();
    for (std::size_t i = 0; i < img.size(); ++i) {
        const unsigned v = bpp == 1 ? data[i] : (static_cast<unsigned>(data[2 * i]) << 8) | data[2 * i + 1];
        img.pixels[i] = static_cast<float>(v) / max;
    }
    return img;
}

Image load_grayscale(const std::filesystem::path& path) {
    const std::vector<unsigned char> bytes = read_file(path);
    static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(kPngSig), std::end(kPngSig), bytes.begin()))
        return decode_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'P' && std::isdigit(bytes[1])) return decode_pgm(bytes);
    if (bytes.size() < 2) throw ImageError(ImageErrc::truncated, path.string() + " is too short to identify");
    throw ImageError(ImageErrc::bad_magic, path.string() + " is neither PGM nor PNG");
}

void save_pgm(const Image& img, const std::filesystem::path& path, int maxval) {
    if (maxval <= 0 || maxval > 65535) throw ConfigError("PGM maxval must lie in [1, 65535]");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError(ImageErrc::io, "cannot write " + path.string());
    out << "P5\n" << img.width << ' ' << img.height << '\n' << maxval << '\n';
    std::vector<unsigned char> raster;
    raster.reserve(img.size() * (maxval < 256 ? 1 : 2));
    for (float v : img.pixels) {
        const int q = quantize(v, maxval);
        if (maxval >= 256) raster.push_back(static_cast<unsigned char>(q >> 8));
        raster.push_back(static_cast<unsigned char>(q & 0xFF));
    }
    out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
    if (!out) throw ImageError(ImageErrc::io, "failed writing " + path.string());
}

void save_png(const Image& img, const std::filesystem::path& path) {
    std::vector<unsigned char> raster(img.size());
    for (std::size_t i = 0; i < img.size(); ++i) raster[i] = static_cast<unsigned char>(quantize(img.pixels[i], 255));
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width);
    image.height = static_cast<png_uint_32>(img.height);
    image.format = PNG_FORMAT_GRAY;
    const std::string name = path.string();
    if (!png_image_write_to_file(&image, name.c_str(), 0, raster.data(), 0, nullptr))
        throw ImageError(ImageErrc::io, "cannot write PNG " + name + ": " + image.message);
}

void save_image(const Image& img, const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png") save_png(img, path);
    else if (ext == ".pgm") save_pgm(img, path);
    else throw ConfigError("unsupported output extension '" + ext + "' (use .png or .pgm)");
}

Image resize_bilinear(const Image& img, int out_h, int out_w) {
    if (img.height < 1 || img.width < 1) throw ShapeError("extent", "cannot resize an empty image");
    if (out_h < 1 || out_w < 1) throw ShapeError("extent", "resize target must be at least 1x1");
    Image out(out_h, out_w);
    const double sy = static_cast<double>(img.height) / out_h;
    const double sx = static_cast<double>(img.width) / out_w;
    auto sample = [](int i, double scale, int n, int& i0, int& i1, double& frac) {
        const double src = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(n - 1));
        i0 = static_cast<int>(std::floor(src));
        i1 = std::min(i0 + 1, n - 1);
        frac = src - i0;
    };
    for (int y = 0; y < out_h; ++y) {
        int y0, y1;
        double fy;
        sample(y, sy, img.height, y0, y1, fy);
        for (int x = 0; x < out_w; ++x) {
            int x0, x1;
            double fx;
            sample(x, sx, img.width, x0, x1, fx);
            const double top = (1.0 - fx) * img.at(y0, x0) + fx * img.at(y0, x1);
            const double bottom = (1.0 - fx) * img.at(y1, x0) + fx * img.at(y1, x1);
            out.at(y, x) = static_cast<float>((1.0 - fy) * top + fy * bottom);
        }
    }
    return out;
}

}  // namespace dae
