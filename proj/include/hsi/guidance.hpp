#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <numeric>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/io.hpp"
#include "hsi/tsne.hpp"

namespace hsi {

/// One-band image that steers spatial filtering; values in [0, 1].
struct GuidanceImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  bool degenerate = false;  // input was constant; every value is 0

  std::size_t pixels() const noexcept { return values.size(); }
  friend bool operator==(const GuidanceImage&, const GuidanceImage&) = default;
};

inline GuidanceImage normalized_guidance(std::size_t rows, std::size_t cols, std::vector<double> v) {
  GuidanceImage g{rows, cols, std::move(v), false};
  for (double x : g.values)
    if (!std::isfinite(x)) throw NumericError("guidance: non-finite value");
  const auto [lo, hi] = std::minmax_element(g.values.begin(), g.values.end());
  const double a = *lo, range = *hi - *lo;
  if (!(range > 0.0)) {
    g.degenerate = true;
    std::fill(g.values.begin(), g.values.end(), 0.0);
    return g;
  }
  for (double& x : g.values) x = (x - a) / range;
  return g;
}

// ---------------------------------------------------------------------------
// PCA baseline

struct PowerIteration {
  Eigen::VectorXd vector;
  double value = 0.0;
  int iterations = 0;
};

/// Leading eigenpair of a symmetric PSD matrix. Stops once both the relative
/// eigenvalue change and the vector change drop below `tol`. The returned
/// vector has its largest-magnitude entry positive.
inline PowerIteration leading_eigenpair(const Eigen::MatrixXd& S, double tol = 1e-10, int max_iter = 100000) {
  Eigen::Index start = 0;
  S.diagonal().maxCoeff(&start);
  Eigen::VectorXd v = S.col(start);
  if (!(v.norm() > 0.0)) throw DataError("power iteration: zero matrix");
  v.normalize();
  PowerIteration out;
  double lambda = v.dot(S * v);
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = S * v;
    const double norm = w.norm();
    if (!(norm > 0.0)) throw NumericError("power iteration collapsed to zero");
    w /= norm;
    const double next = w.dot(S * w);
    const double dv = (w - v).norm();
    const double dl = std::abs(next - lambda) / std::max(std::abs(next), 1e-300);
    v = std::move(w);
    lambda = next;
    out.iterations = it;
    if (dl <= tol && dv <= tol) break;
  }
  Eigen::Index big = 0;
  v.cwiseAbs().maxCoeff(&big);
  if (v[big] < 0) v = -v;
  out.vector = std::move(v);
  out.value = lambda;
  return out;
}

inline GuidanceImage pca_first_component(const HSCube& cube) {
  if (cube.pixels() < 2) throw ConfigError("PCA needs at least 2 pixels");
  Eigen::MatrixXd X = cube.pixel_matrix();
  X.rowwise() -= X.colwise().mean();
  const Eigen::MatrixXd S = (X.transpose() * X) / double(X.rows() - 1);
  if (!(S.trace() > 0.0)) throw DataError("PCA: zero covariance (constant cube)");
  const auto pc = leading_eigenpair(S);
  const Eigen::VectorXd proj = X * pc.vector;
  return normalized_guidance(cube.rows(), cube.cols(), std::vector<double>(proj.data(), proj.data() + proj.size()));
}

// ---------------------------------------------------------------------------
// Fixed-reference embedding: reference spectra with learned 1-D coordinates,
// new pixels mapped by K-nearest-neighbor lookup.

struct ReferenceTable {
  Eigen::MatrixXd spectra;      // one reference per row
  Eigen::VectorXd coordinates;  // normalized to [0, 1]
  int k_ref = 5;

  std::size_t size() const noexcept { return std::size_t(coordinates.size()); }
  std::size_t dim() const noexcept { return std::size_t(spectra.cols()); }
  friend bool operator==(const ReferenceTable& a, const ReferenceTable& b) {
    return a.k_ref == b.k_ref && a.spectra.rows() == b.spectra.rows() && a.spectra.cols() == b.spectra.cols() &&
           a.spectra == b.spectra && a.coordinates == b.coordinates;
  }
};

struct ReferenceParams {
  tsne::Params embed;
  std::size_t subsample = 2000;
  int k_ref = 5;
  std::uint64_t seed = 1;
};

/// Rows of `training` chosen uniformly without replacement (all rows if
/// `subsample` >= population), embedded with t-SNE, coordinates min-max
/// normalized.
inline ReferenceTable build_reference_table(const Eigen::MatrixXd& training, const ReferenceParams& prm) {
  if (training.rows() == 0) throw ConfigError("reference table: empty training set");
  if (prm.k_ref < 1) throw ConfigError("reference table: k_ref must be >= 1");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(training.rows()));
  std::iota(idx.begin(), idx.end(), Eigen::Index(0));
  if (prm.subsample < idx.size()) {
    std::mt19937_64 rng(prm.seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(prm.subsample);
    std::sort(idx.begin(), idx.end());
  }
  ReferenceTable table;
  table.k_ref = prm.k_ref;
  table.spectra.resize(Eigen::Index(idx.size()), training.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) table.spectra.row(Eigen::Index(i)) = training.row(idx[i]);
  const auto res = tsne::embed_1d(table.spectra, prm.embed);
  const double lo = res.y.minCoeff(), range = res.y.maxCoeff() - lo;
  table.coordinates = range > 0.0 ? Eigen::VectorXd((res.y.array() - lo) / range) : Eigen::VectorXd::Zero(res.y.size());
  return table;
}

/// Indices of the k smallest entries of `dist`; ties go to the lower index.
inline std::vector<Eigen::Index> k_smallest(const Eigen::VectorXd& dist, int k) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(dist.size()));
  std::iota(idx.begin(), idx.end(), Eigen::Index(0));
  const auto kk = std::min<std::size_t>(std::size_t(k), idx.size());
  std::partial_sort(idx.begin(), idx.begin() + std::ptrdiff_t(kk), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return dist[a] < dist[b] || (dist[a] == dist[b] && a < b);
  });
  idx.resize(kk);
  return idx;
}

/// Each pixel takes the mean coordinate of its k_ref nearest references
/// (brute-force Euclidean search, O(pixels x references)); the result is
/// min-max normalized.
inline GuidanceImage fr_tsne_guidance(const HSCube& cube, const ReferenceTable& table) {
  if (table.size() == 0) throw ConfigError("reference table is empty");
  if (cube.bands() != table.dim())
    throw DataError("guidance: cube has " + std::to_string(cube.bands()) + " bands, reference table " +
                    std::to_string(table.dim()));
  const Eigen::VectorXd ref_sq = table.spectra.rowwise().squaredNorm();
  const std::size_t n = cube.pixels();
  std::vector<double> out(n);
  constexpr std::size_t kBlock = 512;
  Eigen::MatrixXd block, cross;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t m = std::min(kBlock, n - start);
    block.resize(Eigen::Index(m), Eigen::Index(cube.bands()));
    for (std::size_t b = 0; b < cube.bands(); ++b)
      for (std::size_t i = 0; i < m; ++i) block(Eigen::Index(i), Eigen::Index(b)) = cube.at(start + i, b);
    cross.noalias() = block * table.spectra.transpose();
    const Eigen::VectorXd px_sq = block.rowwise().squaredNorm();
    for (std::size_t i = 0; i < m; ++i) {
      Eigen::VectorXd d = (ref_sq.array() + px_sq[Eigen::Index(i)] - 2.0 * cross.row(Eigen::Index(i)).transpose().array())
                              .max(0.0);
      double acc = 0.0;
      const auto nn = k_smallest(d, table.k_ref);
      for (auto r : nn) acc += table.coordinates[r];
      out[start + i] = acc / double(nn.size());
    }
  }
  return normalized_guidance(cube.rows(), cube.cols(), std::move(out));
}

// ---------------------------------------------------------------------------
// Serialization: JSON header + binary payload (float64 coordinates, then
// float64 spectra row by row, little-endian).

inline void save_reference_table(const ReferenceTable& t, const std::filesystem::path& json_path) {
  auto payload = json_path;
  payload.replace_extension(".bin");
  nlohmann::json j = {{"count", t.size()}, {"bands", t.dim()}, {"k_ref", t.k_ref},
                      {"encoding", "float64-le"}, {"layout", "coordinates then spectra (row-major)"},
                      {"data_file", payload.filename().string()}};
  io::write_text(json_path, j.dump(2) + "\n");
  std::vector<double> flat;
  flat.reserve(t.size() * (1 + t.dim()));
  for (Eigen::Index i = 0; i < t.coordinates.size(); ++i) flat.push_back(t.coordinates[i]);
  for (Eigen::Index r = 0; r < t.spectra.rows(); ++r)
    for (Eigen::Index c = 0; c < t.spectra.cols(); ++c) flat.push_back(t.spectra(r, c));
  static_assert(std::endian::native == std::endian::little, "reference table payload assumes a little-endian host");
  io::write_bytes(payload, flat.data(), flat.size() * sizeof(double));
}

inline ReferenceTable load_reference_table(const std::filesystem::path& json_path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(json_path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError("reference table header: " + std::string(e.what()));
  }
  const auto count = j.at("count").get<std::size_t>();
  const auto bands = j.at("bands").get<std::size_t>();
  const auto bytes = io::read_bytes(io::sibling(json_path, j.at("data_file").get<std::string>()));
  if (bytes.size() != count * (1 + bands) * sizeof(double)) throw DataError("reference table payload size mismatch");
  std::vector<double> flat(count * (1 + bands));
  std::memcpy(flat.data(), bytes.data(), bytes.size());
  ReferenceTable t;
  t.k_ref = j.at("k_ref").get<int>();
  t.coordinates = Eigen::Map<const Eigen::VectorXd>(flat.data(), Eigen::Index(count));
  t.spectra.resize(Eigen::Index(count), Eigen::Index(bands));
  for (std::size_t r = 0; r < count; ++r)
    for (std::size_t c = 0; c < bands; ++c) t.spectra(Eigen::Index(r), Eigen::Index(c)) = flat[count + r * bands + c];
  return t;
}

}  // namespace hsi
