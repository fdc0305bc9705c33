#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"

namespace hsi {

struct PreprocessConfig {
  std::size_t crop_lo = 51;
  std::size_t crop_hi = 749;
  std::size_t target_bands = 129;
  std::string normalization = "minmax";
  bool skip_averaging = false;
  double clamp_max = 2.0;

  /// Keeps every band of a `bands`-band cube and does not average.
  static PreprocessConfig full_range(std::size_t bands) {
    PreprocessConfig c;
    c.crop_lo = 0;
    c.crop_hi = bands - 1;
    c.target_bands = bands;
    return c;
  }

  void validate(std::size_t bands) const {
    if (crop_lo > crop_hi || crop_hi >= bands)
      throw ConfigError("crop range [" + std::to_string(crop_lo) + ", " + std::to_string(crop_hi) +
                        "] invalid for a " + std::to_string(bands) + "-band cube");
    if (!skip_averaging && (target_bands < 1 || target_bands > crop_hi - crop_lo + 1))
      throw ConfigError("target_bands " + std::to_string(target_bands) + " outside [1, " +
                        std::to_string(crop_hi - crop_lo + 1) + "]");
    if (normalization != "minmax") throw ConfigError("unsupported normalization '" + normalization + "'");
    if (!(clamp_max > 0.0)) throw ConfigError("clamp_max must be positive");
  }
};

inline PreprocessConfig preprocess_config_from_json(const nlohmann::json& j) {
  PreprocessConfig c;
  try {
    c.crop_lo = j.value("crop_lo", c.crop_lo);
    c.crop_hi = j.value("crop_hi", c.crop_hi);
    c.target_bands = j.value("target_bands", c.target_bands);
    c.normalization = j.value("normalization", c.normalization);
    c.skip_averaging = j.value("skip_averaging", c.skip_averaging);
    c.clamp_max = j.value("clamp_max", c.clamp_max);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("preprocess config: ") + e.what());
  }
  return c;
}

inline nlohmann::json to_json(const PreprocessConfig& c) {
  return {{"crop_lo", c.crop_lo},         {"crop_hi", c.crop_hi},
          {"target_bands", c.target_bands}, {"normalization", c.normalization},
          {"skip_averaging", c.skip_averaging}, {"clamp_max", c.clamp_max}};
}

// ---------------------------------------------------------------------------
// Radiometric calibration

namespace detail {

/// Collapses a reference scan to per-(column, band) means over its rows.
inline std::vector<double> column_profile(const HSCube& ref) {
  std::vector<double> prof(ref.cols() * ref.bands(), 0.0);
  for (std::size_t b = 0; b < ref.bands(); ++b)
    for (std::size_t r = 0; r < ref.rows(); ++r)
      for (std::size_t c = 0; c < ref.cols(); ++c) prof[b * ref.cols() + c] += ref.at(r, c, b);
  for (double& v : prof) v /= double(ref.rows());
  return prof;
}

}  // namespace detail

/// Fraction of reference entries with white > dark.
inline double white_above_dark_fraction(const CalibrationRefs& refs) {
  const auto w = detail::column_profile(refs.white);
  const auto d = detail::column_profile(refs.dark);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < w.size(); ++i) ok += w[i] > d[i];
  return w.empty() ? 0.0 : double(ok) / double(w.size());
}

/// (raw - dark) / (white - dark), references broadcast across rows, result
/// clamped to [0, clamp_max].
inline HSCube calibrate(const HSCube& raw, const CalibrationRefs& refs, double clamp_max = 2.0) {
  for (const HSCube* ref : {&refs.white, &refs.dark}) {
    if (ref->empty()) throw DataError("calibration reference is empty");
    if (ref->cols() != raw.cols() || ref->bands() != raw.bands())
      throw DataError("calibration reference is " + std::to_string(ref->cols()) + " cols x " +
                      std::to_string(ref->bands()) + " bands, cube is " + std::to_string(raw.cols()) + " x " +
                      std::to_string(raw.bands()));
  }
  const auto white = detail::column_profile(refs.white);
  const auto dark = detail::column_profile(refs.dark);

  std::string offenders;
  std::size_t n_bad = 0;
  for (std::size_t b = 0; b < raw.bands(); ++b)
    for (std::size_t c = 0; c < raw.cols(); ++c)
      if (white[b * raw.cols() + c] == dark[b * raw.cols() + c]) {
        if (n_bad < 8) offenders += " (band " + std::to_string(b) + ", col " + std::to_string(c) + ")";
        ++n_bad;
      }
  if (n_bad > 0)
    throw NumericError("white equals dark at " + std::to_string(n_bad) + " entries:" + offenders +
                       (n_bad > 8 ? " ..." : ""));

  std::vector<float> out(raw.data().size());
  const std::size_t R = raw.rows(), C = raw.cols();
  for (std::size_t b = 0; b < raw.bands(); ++b)
    for (std::size_t r = 0; r < R; ++r)
      for (std::size_t c = 0; c < C; ++c) {
        const double d = dark[b * C + c];
        const double v = (double(raw.at(r, c, b)) - d) / (white[b * C + c] - d);
        out[(b * R + r) * C + c] = float(std::clamp(v, 0.0, clamp_max));
      }
  return HSCube(R, C, raw.wavelengths(), std::move(out));
}

// ---------------------------------------------------------------------------
// Noise estimation: each band regressed (with intercept) on all other bands.

struct NoiseEstimate {
  Eigen::MatrixXd residual;  // pixels x bands
  std::vector<double> variance;  // per band, mean squared residual
};

/// Relative ridge added to the Gram diagonal, scaled by its mean diagonal.
inline constexpr double kNoiseRidge = 1e-8;

/// Least-squares regression of every band on the remaining bands over all pixels.
///
/// With G = Xc'Xc (+ ridge) for the mean-centered pixel matrix Xc, the
/// residual of band i is (Xc G^-1)_i / (G^-1)_ii, so a single inverse serves
/// every band.
inline NoiseEstimate estimate_noise(const HSCube& cube) {
  const auto B = Eigen::Index(cube.bands());
  const auto N = Eigen::Index(cube.pixels());
  if (B < 2) throw ConfigError("noise estimation needs at least 2 bands");
  if (N < B)
    throw NumericError("noise regression is rank-deficient: " + std::to_string(N) + " pixels for " +
                       std::to_string(B) + " bands");
  if (!cube.all_finite()) throw NumericError("noise estimation: cube has non-finite values");

  Eigen::MatrixXd X = cube.pixel_matrix();
  const Eigen::RowVectorXd mean = X.colwise().mean();
  X.rowwise() -= mean;

  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(B, B);
  G.selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  G = G.selfadjointView<Eigen::Lower>();

  NoiseEstimate est;
  const double trace = G.trace();
  if (!(trace > 0.0)) {
    est.residual = Eigen::MatrixXd::Zero(N, B);
    est.variance.assign(std::size_t(B), 0.0);
    return est;
  }
  G.diagonal().array() += kNoiseRidge * trace / double(B);

  Eigen::LLT<Eigen::MatrixXd> llt(G);
  if (llt.info() != Eigen::Success) throw NumericError("noise regression: Gram matrix not positive definite");
  const Eigen::MatrixXd Ginv = llt.solve(Eigen::MatrixXd::Identity(B, B));
  for (Eigen::Index i = 0; i < B; ++i)
    if (!(Ginv(i, i) > 0.0) || !std::isfinite(Ginv(i, i)))
      throw NumericError("noise regression is rank-deficient at band " + std::to_string(i));

  est.residual.noalias() = X * Ginv;
  X.resize(0, 0);
  for (Eigen::Index i = 0; i < B; ++i) est.residual.col(i) /= Ginv(i, i);
  est.variance.resize(std::size_t(B));
  for (Eigen::Index i = 0; i < B; ++i) est.variance[std::size_t(i)] = est.residual.col(i).squaredNorm() / double(N);
  return est;
}

/// Replaces each pixel by its regression prediction (cube - residual).
inline HSCube denoise(const HSCube& cube, const NoiseEstimate& noise) {
  if (noise.residual.rows() != Eigen::Index(cube.pixels()) || noise.residual.cols() != Eigen::Index(cube.bands()))
    throw ConfigError("denoise: residual shape does not match cube");
  const std::size_t n = cube.pixels();
  std::vector<float> out(cube.data().size());
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t p = 0; p < n; ++p)
      out[b * n + p] = float(double(cube.at(p, b)) - noise.residual(Eigen::Index(p), Eigen::Index(b)));
  return HSCube(cube.rows(), cube.cols(), cube.wavelengths(), std::move(out));
}

// ---------------------------------------------------------------------------

/// Keeps bands [lo, hi] inclusive.
inline HSCube crop_bands(const HSCube& cube, std::size_t lo, std::size_t hi) {
  if (lo > hi || hi >= cube.bands())
    throw ConfigError("crop [" + std::to_string(lo) + ", " + std::to_string(hi) + "] outside a " +
                      std::to_string(cube.bands()) + "-band cube");
  const std::size_t n = cube.pixels();
  std::vector<float> out(cube.data().begin() + std::ptrdiff_t(lo * n), cube.data().begin() + std::ptrdiff_t((hi + 1) * n));
  std::vector<double> wl(cube.wavelengths().begin() + std::ptrdiff_t(lo), cube.wavelengths().begin() + std::ptrdiff_t(hi + 1));
  return HSCube(cube.rows(), cube.cols(), std::move(wl), std::move(out));
}

/// Group boundaries floor(bands * k / target), k = 0..target.
inline std::vector<std::size_t> band_group_bounds(std::size_t bands, std::size_t target) {
  std::vector<std::size_t> bounds(target + 1);
  for (std::size_t k = 0; k <= target; ++k) bounds[k] = bands * k / target;
  return bounds;
}

/// Each output band is the mean of a contiguous group of input bands.
inline HSCube average_bands(const HSCube& cube, std::size_t target) {
  if (target < 1 || target > cube.bands())
    throw ConfigError("average_bands: target " + std::to_string(target) + " outside [1, " +
                      std::to_string(cube.bands()) + "]");
  const auto bounds = band_group_bounds(cube.bands(), target);
  const std::size_t n = cube.pixels();
  std::vector<float> out(n * target);
  std::vector<double> wl(target);
  std::vector<double> acc(n);
  for (std::size_t k = 0; k < target; ++k) {
    std::fill(acc.begin(), acc.end(), 0.0);
    double wsum = 0.0;
    for (std::size_t b = bounds[k]; b < bounds[k + 1]; ++b) {
      const auto img = cube.band(b);
      for (std::size_t p = 0; p < n; ++p) acc[p] += img[p];
      wsum += cube.wavelengths()[b];
    }
    const double size = double(bounds[k + 1] - bounds[k]);
    for (std::size_t p = 0; p < n; ++p) out[k * n + p] = float(acc[p] / size);
    wl[k] = wsum / size;
  }
  return HSCube(cube.rows(), cube.cols(), std::move(wl), std::move(out));
}

struct NormalizedCube {
  HSCube cube;
  std::size_t degenerate_pixels = 0;  // constant spectra, mapped to all zeros
};

/// Per-pixel min-max scaling of the spectrum to [0, 1].
inline NormalizedCube normalize_pixels(const HSCube& cube) {
  const std::size_t n = cube.pixels(), B = cube.bands();
  std::vector<float> out(cube.data().size());
  std::size_t degenerate = 0;
  std::vector<double> s(B);
  for (std::size_t p = 0; p < n; ++p) {
    cube.spectrum(p, s);
    const auto [lo_it, hi_it] = std::minmax_element(s.begin(), s.end());
    const double lo = *lo_it, range = *hi_it - *lo_it;
    if (!(range > 0.0) || !std::isfinite(range)) {
      ++degenerate;
      for (std::size_t b = 0; b < B; ++b) out[b * n + p] = 0.0f;
      continue;
    }
    for (std::size_t b = 0; b < B; ++b) out[b * n + p] = float((s[b] - lo) / range);
  }
  return {HSCube(cube.rows(), cube.cols(), cube.wavelengths(), std::move(out)), degenerate};
}

// ---------------------------------------------------------------------------
// Chain

/// Calibration, regression denoising and band crop: the part shared by the
/// classification input and the guidance input.
inline HSCube preprocess_common(const HSCube& raw, const CalibrationRefs& refs, const PreprocessConfig& cfg) {
  try {
    cfg.validate(raw.bands());
  } catch (const Error& e) {
    rethrow_tagged("preprocess/config", e);
  }
  HSCube cal;
  try {
    cal = calibrate(raw, refs, cfg.clamp_max);
  } catch (const Error& e) {
    rethrow_tagged("preprocess/calibrate", e);
  }
  HSCube den;
  try {
    den = denoise(cal, estimate_noise(cal));
  } catch (const Error& e) {
    rethrow_tagged("preprocess/denoise", e);
  }
  try {
    return crop_bands(den, cfg.crop_lo, cfg.crop_hi);
  } catch (const Error& e) {
    rethrow_tagged("preprocess/crop", e);
  }
}

/// Band averaging (unless skipped) and per-pixel normalization of a cropped cube.
inline NormalizedCube preprocess_finish(const HSCube& cropped, const PreprocessConfig& cfg) {
  HSCube avg;
  try {
    avg = cfg.skip_averaging ? cropped : average_bands(cropped, cfg.target_bands);
  } catch (const Error& e) {
    rethrow_tagged("preprocess/average", e);
  }
  try {
    return normalize_pixels(avg);
  } catch (const Error& e) {
    rethrow_tagged("preprocess/normalize", e);
  }
}

inline HSCube preprocess_chain(const HSCube& raw, const CalibrationRefs& refs, const PreprocessConfig& cfg) {
  return preprocess_finish(preprocess_common(raw, refs, cfg), cfg).cube;
}

}  // namespace hsi
