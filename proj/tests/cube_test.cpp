#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace hsi;
using testing_support::TempDir;

TEST(Cube, RejectsBadShapes) {
  EXPECT_THROW(HSCube(0, 2, {1.0}, {}), DataError);
  EXPECT_THROW(HSCube(2, 2, {1.0}, std::vector<float>(3)), DataError);
  EXPECT_THROW(HSCube(1, 1, {2.0, 1.0}, std::vector<float>(2)), DataError);
  EXPECT_THROW(HSCube(1, 1, {1.0, 1.0}, std::vector<float>(2)), DataError);
}

TEST(Cube, IndexingIsBandSequential) {
  std::vector<float> d(2 * 3 * 4);
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = float(i);
  const HSCube c(2, 3, {1, 2, 3, 4}, d);
  for (std::size_t b = 0; b < 4; ++b)
    for (std::size_t r = 0; r < 2; ++r)
      for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(c.at(r, k, b), float((b * 2 + r) * 3 + k));
        EXPECT_EQ(c.at(r * 3 + k, b), c.at(r, k, b));
      }
  const auto s = c.spectrum(1, 2);
  ASSERT_EQ(s.size(), 4u);
  for (std::size_t b = 0; b < 4; ++b) EXPECT_EQ(s[b], double(c.at(1, 2, b)));
  const auto m = c.pixel_matrix();
  EXPECT_EQ(m.rows(), 6);
  EXPECT_EQ(m.cols(), 4);
  EXPECT_EQ(HSCube::from_pixel_matrix(2, 3, {1, 2, 3, 4}, m), c);
}

TEST(Cube, SaveLoadRoundTrip) {
  TempDir dir;
  const auto c = testing_support::random_cube(5, 7, 9, 3);
  save_cube(c, dir / "c.hdr");
  EXPECT_TRUE(std::filesystem::exists(dir / "c.raw"));
  EXPECT_EQ(load_cube(dir / "c.hdr"), c);
}

TEST(Cube, LoadRejectsTruncatedPayload) {
  TempDir dir;
  save_cube(testing_support::random_cube(3, 3, 4, 1), dir / "c.hdr");
  std::filesystem::resize_file(dir / "c.raw", 10);
  EXPECT_THROW(load_cube(dir / "c.hdr"), DataError);
}

TEST(Cube, LoadRejectsMissingHeader) {
  TempDir dir;
  EXPECT_THROW(load_cube(dir / "nope.hdr"), Error);
}

TEST(Cube, SynthRgbPicksNearestBandsAndNormalizes) {
  // Bands at 460, 550, 620 nm carry distinct ramps.
  const std::size_t n = 4;
  std::vector<float> d(3 * n);
  for (std::size_t p = 0; p < n; ++p) {
    d[0 * n + p] = float(p);          // 460 -> blue
    d[1 * n + p] = float(2 * p + 1);  // 550 -> green
    d[2 * n + p] = 5.0f;              // 620 -> red, constant
  }
  const HSCube c(1, n, {460, 550, 620}, d);
  const auto rgb = synth_rgb(c, 1.0);
  for (std::size_t p = 0; p < n; ++p) {
    EXPECT_EQ(rgb.pixel(p)[0], 1.0);
    EXPECT_DOUBLE_EQ(rgb.pixel(p)[1], double(p) / 3.0);
    EXPECT_DOUBLE_EQ(rgb.pixel(p)[2], double(p) / 3.0);
  }
  const auto g2 = synth_rgb(c, 2.0);
  EXPECT_DOUBLE_EQ(g2.pixel(1)[2], std::sqrt(1.0 / 3.0));
  EXPECT_THROW(synth_rgb(c, 0.0), ConfigError);
  EXPECT_THROW(synth_rgb(HSCube(1, 1, {900.0}, {1.0f}), 1.0), DataError);
}

TEST(LabelMap, ParseClass) {
  EXPECT_EQ(parse_class("tumor"), ClassCode::Tumor);
  EXPECT_EQ(parse_class("2"), ClassCode::Tumor);
  EXPECT_EQ(parse_class("background"), ClassCode::Background);
  EXPECT_THROW(parse_class("bone"), Error);
  EXPECT_THROW(checked_class(9), Error);
}

TEST(LabelMap, SaveLoadRoundTrip) {
  TempDir dir;
  LabelMap m(3, 4);
  m.codes[0] = ClassCode::Tumor;
  m.codes[5] = ClassCode::Background;
  save_label_map(m, dir / "l.hdr");
  EXPECT_EQ(load_label_map(dir / "l.hdr"), m);

  SegmentationMap s{2, 2, 3, {0, 2, 1, 2}};
  save_segmentation(s, dir / "s.hdr");
  EXPECT_EQ(load_segmentation(dir / "s.hdr"), s);
}

TEST(LabelMap, LoadRejectsInvalidCodes) {
  TempDir dir;
  LabelMap m(2, 2);
  save_label_map(m, dir / "l.hdr");
  const auto payload = detail::byte_payload_path(dir / "l.hdr");
  std::ofstream(payload, std::ios::binary) << std::string("\x01\x07\x00\x00", 4);
  EXPECT_THROW(load_label_map(dir / "l.hdr"), DataError);
}

TEST(Png, EncodeDecodeRoundTrip) {
  RenderedMap m(3, 2);
  for (std::size_t i = 0; i < m.rgb.size(); ++i) m.rgb[i] = double(i) / double(m.rgb.size() - 1);
  const auto bytes = png::encode(m);
  ASSERT_GT(bytes.size(), 8u);
  EXPECT_EQ(bytes[1], 'P');
  const auto d = png::decode(bytes);
  EXPECT_EQ(d.rows, 3u);
  EXPECT_EQ(d.cols, 2u);
  EXPECT_EQ(d.rgb, png::rgb8(m));
}

TEST(Png, QuantizeRoundsToNearest) {
  EXPECT_EQ(png::quantize(0.0), 0);
  EXPECT_EQ(png::quantize(1.0), 255);
  EXPECT_EQ(png::quantize(0.8), 204);
  EXPECT_EQ(png::quantize(0.5), 128);
  EXPECT_EQ(png::quantize(-1.0), 0);
  EXPECT_EQ(png::quantize(2.0), 255);
}
