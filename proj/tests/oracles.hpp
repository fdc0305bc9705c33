#pragma once

// Independent reference computations the library is checked against.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hsi/hsi.hpp"

namespace oracle {

/// Self first, then the K - 1 closest other points by (squared distance, index).
inline std::vector<std::size_t> brute_neighbors(const std::vector<hsi::Point3>& f, std::size_t i, int K) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t j = 0; j < f.size(); ++j) {
    if (j == i) continue;
    const double a = f[i][0] - f[j][0], b = f[i][1] - f[j][1], c = f[i][2] - f[j][2];
    d.emplace_back(a * a + b * b + c * c, j);
  }
  std::sort(d.begin(), d.end());
  std::vector<std::size_t> out{i};
  for (int k = 0; k + 1 < K; ++k) out.push_back(d[std::size_t(k)].second);
  return out;
}

/// Filter output from a brute-force neighborhood, accumulated the same way
/// (offsets from the center, divided by K).
inline hsi::ClassProbabilityMap brute_filter(const hsi::ClassProbabilityMap& P, const hsi::GuidanceImage& g,
                                             const hsi::FilterParams& prm) {
  const auto f = hsi::build_features(g, prm.lambda);
  hsi::ClassProbabilityMap out(P.rows, P.cols);
  for (std::size_t i = 0; i < P.pixels(); ++i) {
    const auto nb = brute_neighbors(f, i, prm.K);
    for (std::size_t c = 0; c < hsi::kNumClasses; ++c) {
      double acc = 0.0;
      for (std::size_t k = 1; k < nb.size(); ++k) acc += P.row(nb[k])[c] - P.row(i)[c];
      out.row(i)[c] = P.row(i)[c] + acc / double(prm.K);
    }
  }
  return out;
}

inline double wcss_of(const Eigen::MatrixXd& X, const std::vector<int>& a, int k) {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(k, X.cols());
  std::vector<int> cnt(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    c.row(a[std::size_t(i)]) += X.row(i);
    ++cnt[std::size_t(a[std::size_t(i)])];
  }
  for (int j = 0; j < k; ++j)
    if (cnt[std::size_t(j)] > 0) c.row(j) /= cnt[std::size_t(j)];
  double w = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) w += (X.row(i) - c.row(a[std::size_t(i)])).squaredNorm();
  return w;
}

/// Best WCSS of plain Lloyd 2-means over many random point-pair starts.
inline double restart_two_means(const Eigen::MatrixXd& X, int restarts, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Eigen::Index> pick(0, X.rows() - 1);
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Eigen::RowVectorXd c0 = X.row(pick(rng)), c1 = X.row(pick(rng));
    std::vector<int> a(static_cast<std::size_t>(X.rows()), 0);
    for (int it = 0; it < 100; ++it) {
      for (Eigen::Index i = 0; i < X.rows(); ++i)
        a[std::size_t(i)] = (X.row(i) - c1).squaredNorm() < (X.row(i) - c0).squaredNorm();
      Eigen::RowVectorXd s0 = Eigen::RowVectorXd::Zero(X.cols()), s1 = s0;
      int n0 = 0, n1 = 0;
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        if (a[std::size_t(i)]) {
          s1 += X.row(i);
          ++n1;
        } else {
          s0 += X.row(i);
          ++n0;
        }
      }
      if (n0 == 0 || n1 == 0) break;
      c0 = s0 / n0;
      c1 = s1 / n1;
    }
    best = std::min(best, wcss_of(X, a, 2));
  }
  return best;
}

/// Central finite-difference gradient of the KL objective.
inline Eigen::VectorXd kl_gradient_fd(const Eigen::MatrixXd& P, const Eigen::VectorXd& y, double h = 1e-5) {
  Eigen::VectorXd g(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    Eigen::VectorXd yp = y, ym = y;
    yp[i] += h;
    ym[i] -= h;
    g[i] = (hsi::tsne::kl_divergence(P, yp) - hsi::tsne::kl_divergence(P, ym)) / (2 * h);
  }
  return g;
}

/// Largest componentwise relative error, denominators floored at 1e-3 of the
/// largest reference magnitude.
inline double max_relative_error(const Eigen::VectorXd& got, const Eigen::VectorXd& ref) {
  const double scale = ref.cwiseAbs().maxCoeff();
  double worst = 0.0;
  for (Eigen::Index i = 0; i < ref.size(); ++i)
    worst = std::max(worst, std::abs(got[i] - ref[i]) / std::max(std::abs(ref[i]), 1e-3 * scale));
  return worst;
}

/// Shannon entropy (nats) of row i.
inline double row_entropy(const Eigen::MatrixXd& P, Eigen::Index i) {
  double h = 0.0;
  for (Eigen::Index j = 0; j < P.cols(); ++j)
    if (P(i, j) > 0) h -= P(i, j) * std::log(P(i, j));
  return h;
}

/// Rows: actual Normal, Tumor, Vessel, Background; columns: predicted.
inline hsi::ConfusionMatrix confusion_fixture() {
  hsi::ConfusionMatrix cm;
  cm.counts = {{{50, 2, 3, 0}, {4, 40, 1, 5}, {0, 2, 30, 3}, {1, 0, 2, 20}}};
  return cm;
}

/// Expected sensitivity, specificity and accuracy per class for the fixture,
/// from TP/FN/FP/TN counted by hand.
inline std::array<std::array<double, 3>, 4> confusion_fixture_metrics() {
  return {{
      {50.0 / 55.0, 103.0 / 108.0, 153.0 / 163.0},
      {40.0 / 50.0, 109.0 / 113.0, 149.0 / 163.0},
      {30.0 / 35.0, 122.0 / 128.0, 152.0 / 163.0},
      {20.0 / 23.0, 132.0 / 140.0, 152.0 / 163.0},
  }};
}
inline constexpr double kConfusionFixtureAccuracy = 140.0 / 163.0;

}  // namespace oracle
