#pragma once

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hsi/hsi.hpp"

namespace testing_support {

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "hsi") {
    static std::atomic<int> counter{0};
    const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
    path_ = std::filesystem::temp_directory_path() /
            (tag + "_" + std::to_string(stamp) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

inline std::vector<double> wavelengths(std::size_t bands, double lo = 400.0, double hi = 1000.0) {
  std::vector<double> wl(bands);
  for (std::size_t b = 0; b < bands; ++b) wl[b] = bands == 1 ? lo : lo + (hi - lo) * double(b) / double(bands - 1);
  return wl;
}

/// Cube with every value drawn uniformly from [lo, hi).
inline hsi::HSCube random_cube(std::size_t rows, std::size_t cols, std::size_t bands, std::uint64_t seed,
                               double lo = 0.1, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<float> data(rows * cols * bands);
  for (auto& v : data) v = float(u(rng));
  return hsi::HSCube(rows, cols, wavelengths(bands), std::move(data));
}

/// x_p = t_p * s + noise: a single spectral shape scaled per pixel, plus
/// i.i.d. Gaussian noise of the given sigma.
inline hsi::HSCube rank_one_cube(std::size_t rows, std::size_t cols, std::size_t bands, double sigma,
                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> shape(0.5, 1.5), scale(1.0, 3.0);
  std::normal_distribution<double> noise(0.0, sigma);
  std::vector<double> s(bands);
  for (auto& v : s) v = shape(rng);
  const std::size_t n = rows * cols;
  std::vector<double> t(n);
  for (auto& v : t) v = scale(rng);
  std::vector<float> data(n * bands);
  for (std::size_t b = 0; b < bands; ++b)
    for (std::size_t p = 0; p < n; ++p) data[b * n + p] = float(t[p] * s[b] + noise(rng));
  return hsi::HSCube(rows, cols, wavelengths(bands), std::move(data));
}

// Gold-standard bookkeeping: per image Normal, Tumor, Vessel, Background counts.
struct LabelRow {
  std::string id;
  std::array<std::size_t, 4> counts;  // Normal, Tumor, Vessel, Background
  std::size_t total;
};

inline const std::array<LabelRow, 5> kLabelTable{{
    {"1", {2295, 1221, 1331, 630}, 5477},
    {"2", {4516, 855, 8697, 1685}, 15753},
    {"3", {1251, 2046, 4089, 696}, 8082},
    {"4", {1842, 3655, 1513, 2625}, 9635},
    {"5", {977, 1221, 907, 2503}, 5608},
}};
inline constexpr std::array<std::size_t, 4> kLabelColumnTotals{10881, 8998, 16537, 8139};
inline constexpr std::size_t kLabelGrandTotal = 44555;

/// A 128x128 label map holding exactly `counts` pixels of each class,
/// scattered with a fixed shuffle; the remainder stays unlabeled.
inline hsi::LabelMap fixture_label_map(const std::array<std::size_t, 4>& counts, std::uint64_t seed) {
  hsi::LabelMap m(128, 128);
  std::vector<std::size_t> order(m.pixels());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t pos = 0;
  for (std::size_t k = 0; k < 4; ++k)
    for (std::size_t i = 0; i < counts[k]; ++i) m.codes[order[pos++]] = hsi::kClasses[k];
  return m;
}

// Stage timings per patient: preprocessing, supervised, clustering, hybrid
// for the sequential run; transmission and supervised for the accelerated one
// (clustering and hybrid are shared between both runs).
struct TimingRow {
  double pre, seq_ss, uns, hyb;
  double trans, acc_ss;
  double seq_total, acc_total, speedup;
};

inline const std::array<TimingRow, 5> kTimingTable{{
    {14.53, 482.64, 45.44, 0.010, 15.10, 16.91, 542.62, 75.08, 7.23},
    {11.34, 467.47, 38.97, 0.008, 12.02, 13.92, 517.79, 62.33, 8.31},
    {10.28, 321.26, 33.52, 0.008, 11.60, 11.98, 365.01, 55.35, 6.59},
    {7.22, 146.63, 22.26, 0.005, 8.53, 7.12, 176.11, 38.01, 4.63},
    {14.27, 268.98, 33.93, 0.006, 10.53, 10.92, 317.18, 58.73, 5.40},
}};

inline hsi::StageTimings sequential_stages(const TimingRow& r) {
  return {r.pre, 0.0, r.seq_ss, r.uns, r.hyb};
}
inline hsi::StageTimings accelerated_stages(const TimingRow& r) {
  return {r.pre, r.trans, r.acc_ss, r.uns, r.hyb};
}

/// Labels of `truth` restricted to pixels where `keep` holds.
template <class Pred>
hsi::LabelMap masked_labels(const hsi::LabelMap& truth, Pred keep) {
  hsi::LabelMap out(truth.rows, truth.cols);
  for (std::size_t p = 0; p < truth.pixels(); ++p)
    if (keep(p)) out.codes[p] = truth.codes[p];
  return out;
}

}  // namespace testing_support
