#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsi/error.hpp"
#include "hsi/io.hpp"

namespace hsi {

/// Hyperspectral cube: rows x cols pixels, `bands` samples each, plus the
/// wavelength axis in nanometers.
///
/// Storage is band-sequential (BSQ), 32-bit float:
///   data[(b * rows + r) * cols + c]
/// so a single band image is contiguous. Pixels are addressed by their
/// row-major linear index p = r * cols + c.
///
/// Cubes are immutable once constructed; every transform returns a new cube.
class HSCube {
 public:
  HSCube() = default;

  HSCube(std::size_t rows, std::size_t cols, std::vector<double> wavelengths, std::vector<float> data)
      : rows_(rows), cols_(cols), wavelengths_(std::move(wavelengths)), data_(std::move(data)) {
    if (rows_ == 0 || cols_ == 0 || wavelengths_.empty())
      throw DataError("cube dimensions must be >= 1 (rows=" + std::to_string(rows_) +
                      ", cols=" + std::to_string(cols_) + ", bands=" + std::to_string(wavelengths_.size()) + ")");
    if (data_.size() != rows_ * cols_ * wavelengths_.size())
      throw DataError("cube payload has " + std::to_string(data_.size()) + " values, expected " +
                      std::to_string(rows_ * cols_ * wavelengths_.size()));
    for (std::size_t b = 0; b < wavelengths_.size(); ++b) {
      if (!std::isfinite(wavelengths_[b])) throw DataError("non-finite wavelength at band " + std::to_string(b));
      if (b > 0 && !(wavelengths_[b] > wavelengths_[b - 1]))
        throw DataError("wavelengths not strictly increasing at band " + std::to_string(b));
    }
  }

  /// Builds a cube from a pixels x bands matrix (row p = pixel p).
  static HSCube from_pixel_matrix(std::size_t rows, std::size_t cols, std::vector<double> wavelengths,
                                  const Eigen::MatrixXd& m) {
    const std::size_t n = rows * cols;
    const std::size_t nb = wavelengths.size();
    if (std::size_t(m.rows()) != n || std::size_t(m.cols()) != nb)
      throw DataError("pixel matrix shape does not match cube dimensions");
    std::vector<float> data(n * nb);
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t p = 0; p < n; ++p) data[b * n + p] = static_cast<float>(m(Eigen::Index(p), Eigen::Index(b)));
    return HSCube(rows, cols, std::move(wavelengths), std::move(data));
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t bands() const noexcept { return wavelengths_.size(); }
  std::size_t pixels() const noexcept { return rows_ * cols_; }
  bool empty() const noexcept { return data_.empty(); }

  const std::vector<double>& wavelengths() const noexcept { return wavelengths_; }
  const std::vector<float>& data() const noexcept { return data_; }

  float at(std::size_t r, std::size_t c, std::size_t b) const { return data_[(b * rows_ + r) * cols_ + c]; }
  float at(std::size_t pixel, std::size_t b) const { return data_[b * pixels() + pixel]; }

  std::span<const float> band(std::size_t b) const { return {data_.data() + b * pixels(), pixels()}; }

  void spectrum(std::size_t pixel, std::span<double> out) const {
    const std::size_t n = pixels();
    for (std::size_t b = 0; b < bands(); ++b) out[b] = data_[b * n + pixel];
  }

  std::vector<double> spectrum(std::size_t pixel) const {
    std::vector<double> s(bands());
    spectrum(pixel, s);
    return s;
  }

  std::vector<double> spectrum(std::size_t r, std::size_t c) const { return spectrum(r * cols_ + c); }

  /// pixels x bands matrix in double precision.
  Eigen::MatrixXd pixel_matrix() const {
    const std::size_t n = pixels();
    Eigen::MatrixXd m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(bands()));
    for (std::size_t b = 0; b < bands(); ++b)
      for (std::size_t p = 0; p < n; ++p) m(Eigen::Index(p), Eigen::Index(b)) = data_[b * n + p];
    return m;
  }

  bool all_finite() const {
    return std::all_of(data_.begin(), data_.end(), [](float v) { return std::isfinite(v); });
  }

  friend bool operator==(const HSCube&, const HSCube&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> wavelengths_;
  std::vector<float> data_;
};

/// White-tile and shutter-closed reference scans. Either may have fewer rows
/// than the scene cube (pushbroom line references); cols and bands must match.
struct CalibrationRefs {
  HSCube white;
  HSCube dark;
};

/// Per-pixel RGB triplets in [0,1], row-major.
struct RenderedMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> rgb;  // 3 * rows * cols

  RenderedMap() = default;
  RenderedMap(std::size_t r, std::size_t c) : rows(r), cols(c), rgb(3 * r * c, 0.0) {}

  std::array<double, 3> pixel(std::size_t p) const { return {rgb[3 * p], rgb[3 * p + 1], rgb[3 * p + 2]}; }
  void set(std::size_t p, const std::array<double, 3>& v) {
    rgb[3 * p] = v[0];
    rgb[3 * p + 1] = v[1];
    rgb[3 * p + 2] = v[2];
  }
};

// ---------------------------------------------------------------------------
// File format: text header (key: value) + raw little-endian float32 payload.

enum class StorageOrder { BSQ, BIL, BIP };

inline StorageOrder parse_storage_order(const std::string& s) {
  std::string t = s;
  std::transform(t.begin(), t.end(), t.begin(), [](unsigned char ch) { return char(std::tolower(ch)); });
  if (t == "bsq") return StorageOrder::BSQ;
  if (t == "bil") return StorageOrder::BIL;
  if (t == "bip") return StorageOrder::BIP;
  throw DataError("unknown storage_order '" + s + "' (expected bsq, bil or bip)");
}

inline std::filesystem::path default_payload_path(const std::filesystem::path& header) {
  auto p = header;
  p.replace_extension(".raw");
  return p;
}

inline HSCube load_cube(const std::filesystem::path& header_path) {
  const io::Header h = io::read_header(header_path);
  const auto rows = io::parse_int(io::require(h, "rows", header_path), "rows");
  const auto cols = io::parse_int(io::require(h, "cols", header_path), "cols");
  const auto bands = io::parse_int(io::require(h, "bands", header_path), "bands");
  if (rows < 1 || cols < 1 || bands < 1) throw DataError(header_path.string() + ": dimensions must be >= 1");

  std::vector<double> wl;
  if (auto it = h.find("wavelengths"); it != h.end()) {
    for (const auto& tok : io::split(it->second, ',')) wl.push_back(io::parse_double(tok, "wavelength"));
  } else {
    for (long long b = 0; b < bands; ++b) wl.push_back(double(b));
  }
  if (wl.size() != std::size_t(bands))
    throw DataError(header_path.string() + ": " + std::to_string(wl.size()) + " wavelengths for " +
                    std::to_string(bands) + " bands");

  StorageOrder order = StorageOrder::BSQ;
  if (auto it = h.find("storage_order"); it != h.end()) order = parse_storage_order(it->second);

  const auto payload_path = h.count("data_file") ? io::sibling(header_path, h.at("data_file"))
                                                  : default_payload_path(header_path);
  const auto bytes = io::read_bytes(payload_path);
  const std::size_t R = std::size_t(rows), C = std::size_t(cols), B = std::size_t(bands);
  const std::size_t expected = R * C * B;
  if (bytes.size() != expected * 4)
    throw DataError(payload_path.string() + ": payload is " + std::to_string(bytes.size()) + " bytes, header implies " +
                    std::to_string(expected * 4));
  auto raw = io::decode_f32_le(bytes);

  if (order != StorageOrder::BSQ) {
    std::vector<float> bsq(expected);
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c)
        for (std::size_t b = 0; b < B; ++b) {
          const std::size_t src = order == StorageOrder::BIL ? (r * B + b) * C + c : (r * C + c) * B + b;
          bsq[(b * R + r) * C + c] = raw[src];
        }
    raw = std::move(bsq);
  }
  return HSCube(R, C, std::move(wl), std::move(raw));
}

/// Writes `<header>` and its `.raw` payload (always BSQ).
inline void save_cube(const HSCube& cube, const std::filesystem::path& header_path) {
  const auto payload = default_payload_path(header_path);
  std::string text;
  text += "rows: " + std::to_string(cube.rows()) + "\n";
  text += "cols: " + std::to_string(cube.cols()) + "\n";
  text += "bands: " + std::to_string(cube.bands()) + "\n";
  text += "storage_order: bsq\n";
  text += "wavelengths: ";
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    if (b) text += ",";
    text += io::format_double(cube.wavelengths()[b]);
  }
  text += "\n";
  text += "data_file: " + payload.filename().string() + "\n";
  io::write_text(header_path, text);
  const auto bytes = io::encode_f32_le(cube.data());
  io::write_bytes(payload, bytes.data(), bytes.size());
}

// ---------------------------------------------------------------------------

inline std::size_t nearest_band(const HSCube& cube, double wavelength_nm) {
  const auto& wl = cube.wavelengths();
  std::size_t best = 0;
  for (std::size_t b = 1; b < wl.size(); ++b)
    if (std::abs(wl[b] - wavelength_nm) < std::abs(wl[best] - wavelength_nm)) best = b;
  return best;
}

/// Maximum distance between a display primary and the band picked for it.
inline constexpr double kRgbBandTolerance = 40.0;

/// Synthetic RGB from the bands nearest 620/550/460 nm. Each channel is
/// min-max normalized over the image, then raised to 1/gamma. A channel whose
/// band is constant maps to 1 (every pixel sits at the band maximum).
inline RenderedMap synth_rgb(const HSCube& cube, double gamma) {
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be positive");
  constexpr std::array<double, 3> targets{620.0, 550.0, 460.0};
  RenderedMap out(cube.rows(), cube.cols());
  const double inv_gamma = 1.0 / gamma;
  for (int ch = 0; ch < 3; ++ch) {
    const std::size_t b = nearest_band(cube, targets[ch]);
    if (std::abs(cube.wavelengths()[b] - targets[ch]) > kRgbBandTolerance)
      throw DataError("no band within " + io::format_double(kRgbBandTolerance) + " nm of " +
                      io::format_double(targets[ch]) + " nm");
    const auto img = cube.band(b);
    double lo = INFINITY, hi = -INFINITY;
    for (float v : img) {
      if (!std::isfinite(v)) continue;
      lo = std::min(lo, double(v));
      hi = std::max(hi, double(v));
    }
    const double range = hi - lo;
    for (std::size_t p = 0; p < img.size(); ++p) {
      double v = 0.0;
      if (!std::isfinite(img[p])) {
        v = 0.0;
      } else if (!(range > 0.0)) {
        v = 1.0;
      } else {
        v = std::clamp((double(img[p]) - lo) / range, 0.0, 1.0);
      }
      out.rgb[3 * p + std::size_t(ch)] = inv_gamma == 1.0 ? v : std::pow(v, inv_gamma);
    }
  }
  return out;
}

}  // namespace hsi
