#include <gtest/gtest.h>

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "dae/error.hpp"
#include "dae/image.hpp"
#include "support/test_support.hpp"

using namespace dae;
using dae::testing::random_image;
namespace fs = std::filesystem;

namespace {

class ImageFiles : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dae_image_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path write(const std::string& name, const std::string& bytes) const {
        const fs::path p = dir_ / name;
        std::ofstream(p, std::ios::binary) << bytes;
        return p;
    }

    fs::path dir_;
};

std::vector<unsigned char> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ImageErrc decode_error(const std::string& s) {
    try {
        decode_pgm(bytes_of(s));
    } catch (const ImageError& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error for input " << s;
    return ImageErrc::io;
}

}  // namespace

TEST(Pgm, BinaryFullScaleIsOne) {
    const std::string file = "P5\n3 2\n255\n" + std::string(6, '\xFF');
    const Image img = decode_pgm(bytes_of(file));
    EXPECT_EQ(img.height, 2);
    EXPECT_EQ(img.width, 3);
    for (float v : img.pixels) EXPECT_EQ(v, 1.0f);
}

TEST(Pgm, AsciiScalesByMaxval) {
    const Image img = decode_pgm(bytes_of("P2 2 2 255\n0 128 255 64\n"));
    ASSERT_EQ(img.size(), 4u);
    EXPECT_EQ(img.pixels[0], 0.0f);
    EXPECT_FLOAT_EQ(img.pixels[1], 128.0f / 255.0f);
    EXPECT_EQ(img.pixels[2], 1.0f);
    EXPECT_FLOAT_EQ(img.pixels[3], 64.0f / 255.0f);
}

TEST(Pgm, CommentsInHeaderAreSkipped) {
    const Image img = decode_pgm(bytes_of("P2\n# made by hand\n2 1\n# max\n10\n5 10\n"));
    EXPECT_FLOAT_EQ(img.pixels[0], 0.5f);
    EXPECT_EQ(img.pixels[1], 1.0f);
}

TEST(Pgm, SixteenBitIsBigEndian) {
    const std::string file = std::string("P5 2 1 65535\n") + '\x80' + '\x00' + '\xFF' + '\xFF';
    const Image img = decode_pgm(bytes_of(file));
    EXPECT_FLOAT_EQ(img.pixels[0], 32768.0f / 65535.0f);
    EXPECT_EQ(img.pixels[1], 1.0f);
}

TEST(Pgm, ErrorsAreDistinguished) {
    EXPECT_EQ(decode_error("P7 1 1 255\n\x01"), ImageErrc::unsupported_format);
    EXPECT_EQ(decode_error("P3 1 1 255\n1 1 1"), ImageErrc::unsupported_format);
    EXPECT_EQ(decode_error("Q5 1 1 255\n\x01"), ImageErrc::bad_magic);
    EXPECT_EQ(decode_error("P5 4 4 255\n\x01\x02"), ImageErrc::truncated);
    EXPECT_EQ(decode_error("P5 4 4"), ImageErrc::truncated);
    EXPECT_EQ(decode_error("P2 2 1 255\n7"), ImageErrc::truncated);
    EXPECT_EQ(decode_error("P2 1 1 10\n11"), ImageErrc::unsupported_format);
    EXPECT_EQ(decode_error("P5 0 4 255\n"), ImageErrc::unsupported_format);
    EXPECT_EQ(decode_error("P5 1 1 70000\n\x01\x01"), ImageErrc::unsupported_format);
}

TEST_F(ImageFiles, LoadDispatchesOnContentAndReportsErrors) {
    const Image from_file = load_grayscale(write("a.pgm", "P2 2 1 255\n0 255\n"));
    EXPECT_EQ(from_file, Image(1, 2, std::vector<float>{0.0f, 1.0f}));
    try {
        load_grayscale(write("b.pgm", "GIF89a"));
        FAIL();
    } catch (const ImageError& e) {
        EXPECT_EQ(e.code(), ImageErrc::bad_magic);
    }
    try {
        load_grayscale(dir_ / "missing.pgm");
        FAIL();
    } catch (const ImageError& e) {
        EXPECT_EQ(e.code(), ImageErrc::io);
    }
    try {
        load_grayscale(write("c.png", "\x89PNG\r\n\x1A\n\x00\x00"));
        FAIL();
    } catch (const ImageError& e) {
        EXPECT_EQ(e.code(), ImageErrc::truncated);
    }
}

TEST_F(ImageFiles, PgmRoundTripIsLosslessAtMatchingDepth) {
    Image img = random_image(9, 13, 1);
    for (float& v : img.pixels) v = std::round(v * 255.0f) / 255.0f;
    save_pgm(img, dir_ / "a.pgm");
    const Image once = load_grayscale(dir_ / "a.pgm");
    EXPECT_EQ(once, img);
    save_pgm(once, dir_ / "b.pgm");
    EXPECT_EQ(load_grayscale(dir_ / "b.pgm"), once);

    Image deep = random_image(7, 5, 2);
    for (float& v : deep.pixels) v = std::round(v * 65535.0f) / 65535.0f;
    save_pgm(deep, dir_ / "c.pgm", 65535);
    EXPECT_EQ(load_grayscale(dir_ / "c.pgm"), deep);
    EXPECT_EQ(fs::file_size(dir_ / "c.pgm"), std::string("P5\n5 7\n65535\n").size() + 70u);
}

TEST_F(ImageFiles, PngRoundTrip) {
    Image img = random_image(10, 6, 3);
    for (float& v : img.pixels) v = std::round(v * 255.0f) / 255.0f;
    save_image(img, dir_ / "a.png");
    EXPECT_EQ(load_grayscale(dir_ / "a.png"), img);
    EXPECT_THROW(save_image(img, dir_ / "a.bmp"), ConfigError);
}

TEST_F(ImageFiles, RgbPngIsConvertedToLuminance) {
    const unsigned char rgb[] = {255, 0, 0, 0, 255, 0, 0, 0, 255, 10, 20, 30};
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = 4;
    image.height = 1;
    image.format = PNG_FORMAT_RGB;
    const std::string name = (dir_ / "rgb.png").string();
    ASSERT_TRUE(png_image_write_to_file(&image, name.c_str(), 0, rgb, 0, nullptr));
    const Image img = load_grayscale(name);
    ASSERT_EQ(img.size(), 4u);
    EXPECT_NEAR(img.pixels[0], 0.299, 1e-6);
    EXPECT_NEAR(img.pixels[1], 0.587, 1e-6);
    EXPECT_NEAR(img.pixels[2], 0.114, 1e-6);
    EXPECT_NEAR(img.pixels[3], (0.299 * 10 + 0.587 * 20 + 0.114 * 30) / 255.0, 1e-6);
}

TEST(Resize, ConstantStaysConstant) {
    const Image out = resize_bilinear(Image(37, 91, 0.25f), 64, 64);
    EXPECT_EQ(out, Image(64, 64, 0.25f));
}

TEST(Resize, SameSizeIsIdentity) {
    const Image img(2, 2, std::vector<float>{0.1f, 0.9f, 0.4f, 0.6f});
    EXPECT_EQ(resize_bilinear(img, 2, 2), img);
    const Image big = random_image(17, 11, 4);
    EXPECT_EQ(resize_bilinear(big, 17, 11), big);
}

TEST(Resize, CheckerboardHalvesToMidGrey) {
    Image board(4, 4);
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) board.at(y, x) = static_cast<float>((x + y) % 2);
    EXPECT_EQ(resize_bilinear(board, 2, 2), Image(2, 2, 0.5f));
}

TEST(Resize, KnownUpsamplingValues) {
    // 1x2 -> 1x4: sample positions -0.25 (clamped), 0.25, 0.75, 1.25 (clamped).
    const Image out = resize_bilinear(Image(1, 2, std::vector<float>{0.0f, 1.0f}), 1, 4);
    EXPECT_EQ(out, Image(1, 4, std::vector<float>{0.0f, 0.25f, 0.75f, 1.0f}));
}

TEST(Resize, PreservesValueBounds) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        Image img = random_image(23, 41, seed);
        for (float& v : img.pixels) v = 0.2f + 0.6f * v;
        const auto [lo, hi] = std::minmax_element(img.pixels.begin(), img.pixels.end());
        for (auto [h, w] : {std::pair{64, 64}, {7, 5}, {50, 3}})
            for (float v : resize_bilinear(img, h, w).pixels) {
                EXPECT_GE(v, *lo);
                EXPECT_LE(v, *hi);
            }
    }
}

TEST(Resize, RejectsEmptyImages) {
    EXPECT_THROW(resize_bilinear(Image(), 4, 4), ShapeError);
    EXPECT_THROW(resize_bilinear(Image(3, 3), 0, 4), ShapeError);
}

TEST(Stacking, RoundTripsThroughTensor) {
    const std::vector<Image> images = {random_image(5, 6, 1), random_image(5, 6, 2), random_image(5, 6, 3)};
    const Tensor t = stack(images);
    EXPECT_EQ(t.shape(), (Shape{3, 5, 6, 1}));
    EXPECT_EQ(unstack(t), images);
    EXPECT_EQ(image_at(t, 1), images[1]);
    const std::vector<Image> mixed = {Image(5, 6), Image(6, 5)};
    EXPECT_THROW(stack(mixed), ShapeError);
}
