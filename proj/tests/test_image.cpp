#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

#include "support.hpp"
#include "wmr/errors.hpp"
#include "wmr/image.hpp"

namespace wmr {
namespace {

using testing::TempDir;

// 1x1 16-bit grayscale PNG.
constexpr unsigned char k16BitGray[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x01, 0x00, 0x00, 0x00, 0x01, 0x10, 0x00, 0x00, 0x00, 0x00, 0x6a,
    0xee, 0x47, 0x16, 0x00, 0x00, 0x00, 0x0b, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x10,
    0x32, 0x01, 0x00, 0x00, 0x5b, 0x00, 0x47, 0x96, 0xfb, 0x1b, 0x65, 0x00, 0x00, 0x00, 0x00,
    0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

// 3x1 8-bit grayscale PNG with pixels 0, 128, 255.
constexpr unsigned char kGray8[] = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d, 0x49, 0x48, 0x44,
    0x52, 0x00, 0x00, 0x00, 0x03, 0x00, 0x00, 0x00, 0x01, 0x08, 0x00, 0x00, 0x00, 0x00, 0x3e,
    0x8b, 0x4b, 0x68, 0x00, 0x00, 0x00, 0x0c, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x60,
    0x68, 0xf8, 0x0f, 0x00, 0x02, 0x03, 0x01, 0x80, 0x24, 0x61, 0xf5, 0x97, 0x00, 0x00, 0x00,
    0x00, 0x49, 0x45, 0x4e, 0x44, 0xae, 0x42, 0x60, 0x82};

template <std::size_t N>
void write_bytes(const std::filesystem::path& p, const unsigned char (&bytes)[N]) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes), N);
}

TEST(Image, ConstructorValidates) {
  EXPECT_THROW(Image(0, 4, 3), ShapeError);
  EXPECT_THROW(Image(4, 0, 3), ShapeError);
  EXPECT_THROW(Image(4, 4, 2), ShapeError);
  const Image img(2, 3, 4, 0.25);
  EXPECT_EQ(img.size(), 24u);
  EXPECT_TRUE(img.valid());
}

TEST(Image, ValidRejectsOutOfRange) {
  Image img(2, 2, 3, 0.5);
  img.at(1, 1, 1) = 1.0000001;
  EXPECT_FALSE(img.valid());
  img.at(1, 1, 1) = -0.0000001;
  EXPECT_FALSE(img.valid());
  img.at(1, 1, 1) = std::nan("");
  EXPECT_FALSE(img.valid());
}

TEST(Image, LoadMapsEightBitValues) {
  TempDir dir;
  write_bytes(dir / "g.png", kGray8);
  const Image img = load_image(dir / "g.png");
  ASSERT_EQ(img.channels(), 3);  // gray widened to RGB
  ASSERT_EQ(img.width(), 3);
  for (int c = 0; c < 3; ++c) {
    EXPECT_EQ(img.at(c, 0, 0), 0.0);
    EXPECT_NEAR(img.at(c, 0, 1), 0.50196, 1e-5);
    EXPECT_EQ(img.at(c, 0, 1), 128.0 / 255.0);
    EXPECT_EQ(img.at(c, 0, 2), 1.0);
  }
}

TEST(Image, ErrorCategoriesAreDistinct) {
  TempDir dir;
  EXPECT_THROW((void)load_image(dir / "missing.png"), FileNotFoundError);

  std::ofstream(dir / "junk.png") << "definitely not an image";
  EXPECT_THROW((void)load_image(dir / "junk.png"), DecodeError);

  // Valid signature, truncated body.
  {
    std::ofstream out(dir / "trunc.png", std::ios::binary);
    out.write(reinterpret_cast<const char*>(kGray8), 20);
  }
  EXPECT_THROW((void)load_image(dir / "trunc.png"), DecodeError);

  {
    std::ofstream out(dir / "trunc.jpg", std::ios::binary);
    const unsigned char soi[] = {0xFF, 0xD8, 0xFF, 0xE0, 0x00};
    out.write(reinterpret_cast<const char*>(soi), sizeof soi);
  }
  EXPECT_THROW((void)load_image(dir / "trunc.jpg"), DecodeError);

  write_bytes(dir / "deep.png", k16BitGray);
  EXPECT_THROW((void)load_image(dir / "deep.png"), UnsupportedFormatError);

  // All three are DataErrors but not interchangeable.
  try {
    (void)load_image(dir / "deep.png");
  } catch (const DecodeError&) {
    FAIL() << "unsupported depth reported as a decode error";
  } catch (const DataError&) {
  }
}

TEST(Image, SaveLoadRoundTripWithinQuantization) {
  TempDir dir;
  RngStream rng(1);
  for (int ch : {1, 3, 4}) {
    const Image img = testing::random_image(7, 5, ch, rng);
    save_image(img, dir / "r.png");
    const Image back = load_image(dir / "r.png");
    const Image expect = ch == 1 ? to_rgb(img) : img;
    ASSERT_TRUE(back.same_shape(expect));
    for (std::size_t i = 0; i < back.size(); ++i) {
      EXPECT_LE(std::abs(back.data()[i] - expect.data()[i]), 0.5 / 255.0 + 1e-12);
    }
  }
}

TEST(Image, SaveEndpointsAndRounding) {
  TempDir dir;
  Image img(1, 3, 3);
  for (int c = 0; c < 3; ++c) {
    img.at(c, 0, 0) = 0.5;
    img.at(c, 0, 1) = 1.0;
    img.at(c, 0, 2) = 0.3;
  }
  save_image(img, dir / "e.png");
  const Image back = load_image(dir / "e.png");
  for (int c = 0; c < 3; ++c) {
    EXPECT_LE(std::abs(back.at(c, 0, 0) - 0.5), 1.0 / 255.0);
    EXPECT_EQ(back.at(c, 0, 1), 1.0);
    // 0.3 * 255 = 76.5, rounded half away from zero.
    EXPECT_EQ(back.at(c, 0, 2), std::round(0.3 * 255.0) / 255.0);
    EXPECT_EQ(back.at(c, 0, 2), 77.0 / 255.0);
  }
}

TEST(Image, QuantizeRule) {
  EXPECT_EQ(quantize(0.0), 0);
  EXPECT_EQ(quantize(1.0), 255);
  EXPECT_EQ(quantize(-3.0), 0);
  EXPECT_EQ(quantize(7.0), 255);
  EXPECT_EQ(quantize(0.5 / 255.0), 1);
  EXPECT_EQ(quantize(0.49 / 255.0), 0);
  EXPECT_EQ(quantize(std::nan("")), 0);
}

TEST(Image, JpegRoundTripIsClose) {
  TempDir dir;
  const Image img(16, 16, 3, 0.6);
  save_image(img, dir / "c.jpg");
  const Image back = load_image(dir / "c.jpg");
  ASSERT_TRUE(back.same_shape(img));
  for (double v : back.data()) EXPECT_NEAR(v, 0.6, 3.0 / 255.0);
}

TEST(Image, SaveToUnwritablePathFails) {
  TempDir dir;
  const Image img(2, 2, 3, 0.1);
  EXPECT_THROW(save_image(img, dir / "no" / "such" / "dir.png"), IoError);
  EXPECT_THROW(save_image(img, dir / "no" / "such" / "dir.jpg"), IoError);
}

TEST(Image, ResizeIdentityAndConstants) {
  RngStream rng(2);
  const Image img = testing::random_image(9, 6, 3, rng);
  EXPECT_EQ(resize(img, 9, 6), img);

  const Image flat(5, 7, 4, 0.42);
  for (auto [h, w] : {std::pair{1, 1}, {3, 11}, {20, 2}}) {
    const Image r = resize(flat, h, w);
    for (double v : r.data()) EXPECT_NEAR(v, 0.42, 1e-15);
  }
  EXPECT_THROW((void)resize(flat, 0, 3), ShapeError);
}

TEST(Image, ResizeMidpointOnPixelCenterGrid) {
  Image col(2, 1, 1);
  col.at(0, 0, 0) = 0.0;
  col.at(0, 1, 0) = 1.0;
  const Image r = resize(col, 3, 1);
  EXPECT_EQ(r.at(0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(r.at(0, 1, 0), 0.5);
  EXPECT_EQ(r.at(0, 2, 0), 1.0);

  Image row(1, 2, 1);
  row.at(0, 0, 0) = 0.0;
  row.at(0, 0, 1) = 1.0;
  EXPECT_DOUBLE_EQ(resize(row, 1, 3).at(0, 0, 1), 0.5);
}

TEST(Image, ResizeStaysInRangeAndLeavesInputAlone) {
  RngStream rng(3);
  const Image img = testing::random_image(13, 8, 3, rng);
  const Image copy = img;
  const Image r = resize(img, 31, 5);
  EXPECT_TRUE(r.valid());
  EXPECT_EQ(img, copy);
}

TEST(Image, ToRgb) {
  Image gray(2, 2, 1, 0.7);
  const Image rgb = to_rgb(gray);
  EXPECT_EQ(rgb.channels(), 3);
  for (double v : rgb.data()) EXPECT_EQ(v, 0.7);
  Image rgba(2, 2, 4, 0.2);
  EXPECT_EQ(to_rgb(rgba).channels(), 3);
}

}  // namespace
}  // namespace wmr
