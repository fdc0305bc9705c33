#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <png.h>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/io.hpp"

namespace hsi::png {

/// 8-bit channel value round(255 v), v clamped to [0, 1].
inline std::uint8_t quantize(double v) {
  if (!(v > 0.0)) return 0;
  if (v >= 1.0) return 255;
  return std::uint8_t(std::lround(255.0 * v));
}

inline std::vector<std::uint8_t> rgb8(const RenderedMap& map) {
  if (map.rgb.size() != 3 * map.rows * map.cols) throw DataError("rendered map shape is inconsistent");
  std::vector<std::uint8_t> px(map.rgb.size());
  for (std::size_t i = 0; i < px.size(); ++i) px[i] = quantize(map.rgb[i]);
  return px;
}

inline std::vector<std::uint8_t> encode(const RenderedMap& map) {
  if (map.rows == 0 || map.cols == 0) throw DataError("cannot encode an empty image");
  const auto px = rgb8(map);
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = png_uint_32(map.cols);
  img.height = png_uint_32(map.rows);
  img.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, px.data(), 0, nullptr))
    throw DataError(std::string("png encode: ") + img.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, px.data(), 0, nullptr))
    throw DataError(std::string("png encode: ") + img.message);
  out.resize(size);
  return out;
}

struct Decoded {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint8_t> rgb;
};

inline Decoded decode(const std::vector<std::uint8_t>& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size()))
    throw DataError(std::string("png decode: ") + img.message);
  img.format = PNG_FORMAT_RGB;
  Decoded d{img.height, img.width, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(img))};
  if (!png_image_finish_read(&img, nullptr, d.rgb.data(), 0, nullptr)) {
    png_image_free(&img);
    throw DataError(std::string("png decode: ") + img.message);
  }
  return d;
}

inline void write(const RenderedMap& map, const std::filesystem::path& path) {
  const auto bytes = encode(map);
  io::write_bytes(path, bytes.data(), bytes.size());
}

}  // namespace hsi::png
