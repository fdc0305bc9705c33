#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "hsi/error.hpp"
#include "hsi/io.hpp"

namespace hsi {

enum class ClassCode : std::uint8_t { Unlabeled = 0, Normal = 1, Tumor = 2, Vessel = 3, Background = 4 };

inline constexpr int kNumClasses = 4;
inline constexpr std::array<ClassCode, kNumClasses> kClasses{ClassCode::Normal, ClassCode::Tumor, ClassCode::Vessel,
                                                             ClassCode::Background};

/// 0-based slot of a labeled class (Normal=0 ... Background=3).
constexpr int class_index(ClassCode c) { return int(c) - 1; }
constexpr ClassCode class_from_index(int i) { return ClassCode(std::uint8_t(i + 1)); }

inline std::string_view class_name(ClassCode c) {
  switch (c) {
    case ClassCode::Unlabeled: return "unlabeled";
    case ClassCode::Normal: return "normal";
    case ClassCode::Tumor: return "tumor";
    case ClassCode::Vessel: return "vessel";
    case ClassCode::Background: return "background";
  }
  return "?";
}

inline ClassCode parse_class(std::string_view s) {
  for (int i = 0; i <= kNumClasses; ++i)
    if (class_name(ClassCode(i)) == s) return ClassCode(i);
  if (s.size() == 1 && s[0] >= '0' && s[0] <= '4') return ClassCode(s[0] - '0');
  throw DataError("unknown class '" + std::string(s) + "'");
}

inline ClassCode checked_class(long long code) {
  if (code < 0 || code > kNumClasses) throw DataError("class code out of range: " + std::to_string(code));
  return ClassCode(std::uint8_t(code));
}

/// Per-pixel class codes, row-major.
struct LabelMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<ClassCode> codes;

  LabelMap() = default;
  LabelMap(std::size_t r, std::size_t c, ClassCode fill = ClassCode::Unlabeled) : rows(r), cols(c), codes(r * c, fill) {}

  std::size_t pixels() const noexcept { return codes.size(); }
  ClassCode operator[](std::size_t p) const { return codes[p]; }
  ClassCode& operator[](std::size_t p) { return codes[p]; }
  ClassCode at(std::size_t r, std::size_t c) const { return codes[r * cols + c]; }

  friend bool operator==(const LabelMap&, const LabelMap&) = default;
};

/// Per-pixel cluster id in [0, n_clusters), row-major.
struct SegmentationMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  int n_clusters = 0;
  std::vector<int> ids;

  std::size_t pixels() const noexcept { return ids.size(); }
  friend bool operator==(const SegmentationMap&, const SegmentationMap&) = default;
};

// ---------------------------------------------------------------------------
// Byte-map format: text header + one byte per pixel, row-major.

namespace detail {

inline std::filesystem::path byte_payload_path(const std::filesystem::path& header) {
  auto p = header;
  p.replace_extension(".bin");
  return p;
}

inline void save_byte_map(const std::filesystem::path& header, std::size_t rows, std::size_t cols,
                          const std::string& extra, const std::vector<std::uint8_t>& bytes) {
  const auto payload = byte_payload_path(header);
  std::string text = "rows: " + std::to_string(rows) + "\ncols: " + std::to_string(cols) + "\n" + extra +
                     "data_file: " + payload.filename().string() + "\n";
  io::write_text(header, text);
  io::write_bytes(payload, bytes.data(), bytes.size());
}

inline std::vector<std::uint8_t> load_byte_map(const std::filesystem::path& header, const io::Header& h,
                                               std::size_t& rows, std::size_t& cols) {
  const auto r = io::parse_int(io::require(h, "rows", header), "rows");
  const auto c = io::parse_int(io::require(h, "cols", header), "cols");
  if (r < 1 || c < 1) throw DataError(header.string() + ": dimensions must be >= 1");
  rows = std::size_t(r);
  cols = std::size_t(c);
  const auto payload = h.count("data_file") ? io::sibling(header, h.at("data_file")) : byte_payload_path(header);
  auto bytes = io::read_bytes(payload);
  if (bytes.size() != rows * cols)
    throw DataError(payload.string() + ": " + std::to_string(bytes.size()) + " bytes, expected " +
                    std::to_string(rows * cols));
  return bytes;
}

}  // namespace detail

inline void save_label_map(const LabelMap& map, const std::filesystem::path& header) {
  std::vector<std::uint8_t> bytes(map.pixels());
  for (std::size_t p = 0; p < bytes.size(); ++p) bytes[p] = std::uint8_t(map.codes[p]);
  detail::save_byte_map(header, map.rows, map.cols,
                        "kind: labels\nlegend: 0=unlabeled,1=normal,2=tumor,3=vessel,4=background\n", bytes);
}

inline LabelMap load_label_map(const std::filesystem::path& header) {
  const auto h = io::read_header(header);
  LabelMap map;
  const auto bytes = detail::load_byte_map(header, h, map.rows, map.cols);
  map.codes.resize(bytes.size());
  for (std::size_t p = 0; p < bytes.size(); ++p) map.codes[p] = checked_class(bytes[p]);
  return map;
}

inline void save_segmentation(const SegmentationMap& seg, const std::filesystem::path& header) {
  if (seg.n_clusters > 256) throw DataError("byte-map format holds at most 256 clusters");
  std::vector<std::uint8_t> bytes(seg.pixels());
  for (std::size_t p = 0; p < bytes.size(); ++p) bytes[p] = std::uint8_t(seg.ids[p]);
  detail::save_byte_map(header, seg.rows, seg.cols,
                        "kind: segmentation\nclusters: " + std::to_string(seg.n_clusters) + "\n", bytes);
}

inline SegmentationMap load_segmentation(const std::filesystem::path& header) {
  const auto h = io::read_header(header);
  SegmentationMap seg;
  const auto bytes = detail::load_byte_map(header, h, seg.rows, seg.cols);
  seg.n_clusters = int(io::parse_int(io::require(h, "clusters", header), "clusters"));
  seg.ids.assign(bytes.begin(), bytes.end());
  for (int id : seg.ids)
    if (id >= seg.n_clusters) throw DataError(header.string() + ": cluster id " + std::to_string(id) + " out of range");
  return seg;
}

}  // namespace hsi
