#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/label_map.hpp"

namespace hsi {

/// Spectral angle in radians, in [0, pi].
///
/// Evaluated as 2 * atan2(|u - v|, |u + v|) on the unit vectors, which equals
/// acos(<u, v>) but stays accurate near 0 and pi where acos loses about half
/// the significant digits. Identical inputs give exactly 0.
inline double spectral_angle(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    throw ConfigError("spectral_angle: length mismatch (" + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()) + ")");
  double na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  na = std::sqrt(na);
  nb = std::sqrt(nb);
  if (!(na > 0.0) || !(nb > 0.0)) throw DataError("spectral_angle: zero-norm spectrum");
  double diff = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double u = a[i] / na, v = b[i] / nb;
    diff += (u - v) * (u - v);
    sum += (u + v) * (u + v);
  }
  return 2.0 * std::atan2(std::sqrt(diff), std::sqrt(sum));
}

struct PixelCoord {
  std::size_t row = 0;
  std::size_t col = 0;
};

struct SamMask {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<bool> set;
  PixelCoord ref;
  double threshold = 0.0;  // radians

  std::size_t count() const {
    std::size_t n = 0;
    for (bool b : set) n += b;
    return n;
  }
};

/// Marks pixels whose spectral angle to the reference pixel is below
/// `threshold`. A zero angle always matches, so the reference pixel and any
/// exact copies of its spectrum are in every mask. Zero-norm pixels never match.
inline SamMask sam_mask(const HSCube& cube, PixelCoord ref, double threshold) {
  if (ref.row >= cube.rows() || ref.col >= cube.cols())
    throw ConfigError("reference pixel (" + std::to_string(ref.row) + "," + std::to_string(ref.col) +
                      ") outside " + std::to_string(cube.rows()) + "x" + std::to_string(cube.cols()) + " image");
  if (!(threshold >= 0.0)) throw ConfigError("SAM threshold must be >= 0");
  const auto ref_spec = cube.spectrum(ref.row, ref.col);
  double ref_norm = 0.0;
  for (double v : ref_spec) ref_norm += v * v;
  if (!(ref_norm > 0.0) || !std::isfinite(ref_norm)) throw DataError("reference pixel spectrum is degenerate");

  SamMask mask{cube.rows(), cube.cols(), std::vector<bool>(cube.pixels(), false), ref, threshold};
  std::vector<double> s(cube.bands());
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    cube.spectrum(p, s);
    double n2 = 0.0;
    for (double v : s) n2 += v * v;
    if (!(n2 > 0.0) || !std::isfinite(n2)) continue;
    const double angle = spectral_angle(s, ref_spec);
    mask.set[p] = angle < threshold || angle == 0.0;
  }
  return mask;
}

/// Masked pixels take `cls`; later assignments overwrite earlier ones.
inline LabelMap assign_class(LabelMap map, const SamMask& mask, ClassCode cls) {
  if (cls == ClassCode::Unlabeled) throw ConfigError("cannot assign the Unlabeled class");
  if (mask.rows != map.rows || mask.cols != map.cols || mask.set.size() != map.pixels())
    throw ConfigError("mask shape does not match label map");
  for (std::size_t p = 0; p < map.pixels(); ++p)
    if (mask.set[p]) map.codes[p] = cls;
  return map;
}

struct DatasetSummary {
  std::array<std::size_t, kNumClasses> counts{};  // indexed by class_index()
  std::size_t total = 0;

  std::size_t operator[](ClassCode c) const { return counts[std::size_t(class_index(c))]; }
  friend bool operator==(const DatasetSummary&, const DatasetSummary&) = default;
};

inline DatasetSummary dataset_summary(const LabelMap& map) {
  DatasetSummary s;
  for (ClassCode c : map.codes) {
    if (c == ClassCode::Unlabeled) continue;
    ++s.counts[std::size_t(class_index(c))];
    ++s.total;
  }
  return s;
}

/// Table-style CSV: one row per labeled image plus a totals row.
inline std::string summary_csv(const std::vector<std::pair<std::string, DatasetSummary>>& rows) {
  std::string out = "id,normal_tissue,tumor_tissue,blood_vessel,background,total\n";
  DatasetSummary grand;
  auto line = [](const std::string& id, const DatasetSummary& s) {
    return id + "," + std::to_string(s[ClassCode::Normal]) + "," + std::to_string(s[ClassCode::Tumor]) + "," +
           std::to_string(s[ClassCode::Vessel]) + "," + std::to_string(s[ClassCode::Background]) + "," +
           std::to_string(s.total) + "\n";
  };
  for (const auto& [id, s] : rows) {
    out += line(id, s);
    for (int i = 0; i < kNumClasses; ++i) grand.counts[std::size_t(i)] += s.counts[std::size_t(i)];
    grand.total += s.total;
  }
  out += line("total", grand);
  return out;
}

// ---------------------------------------------------------------------------
// Mask wire format: run-length [start, len] pairs over row-major order.

using MaskRuns = std::vector<std::pair<std::size_t, std::size_t>>;

inline MaskRuns encode_rle(const std::vector<bool>& set) {
  MaskRuns runs;
  std::size_t p = 0;
  while (p < set.size()) {
    if (!set[p]) {
      ++p;
      continue;
    }
    const std::size_t start = p;
    while (p < set.size() && set[p]) ++p;
    runs.emplace_back(start, p - start);
  }
  return runs;
}

inline std::vector<bool> decode_rle(const MaskRuns& runs, std::size_t pixels) {
  std::vector<bool> set(pixels, false);
  for (const auto& [start, len] : runs) {
    if (start > pixels || len > pixels - start)
      throw DataError("mask run [" + std::to_string(start) + "," + std::to_string(len) + "] exceeds " +
                      std::to_string(pixels) + " pixels");
    for (std::size_t p = start; p < start + len; ++p) set[p] = true;
  }
  return set;
}

}  // namespace hsi
