#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "hsi/error.hpp"
#include "hsi/guidance.hpp"
#include "hsi/kdtree.hpp"
#include "hsi/label_map.hpp"
#include "hsi/svm.hpp"

namespace hsi {

struct FilterParams {
  int K = 40;
  double lambda = 1.0;
};

/// F(i) = (I(i), lambda * l(i), lambda * h(i)) with l = col / (cols - 1) and
/// h = row / (rows - 1); a single row or column maps to 0.
inline std::vector<Point3> build_features(const GuidanceImage& guidance, double lambda) {
  if (guidance.values.size() != guidance.rows * guidance.cols) throw DataError("guidance image shape is inconsistent");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  std::vector<Point3> f(guidance.pixels());
  const double cden = guidance.cols > 1 ? double(guidance.cols - 1) : 1.0;
  const double rden = guidance.rows > 1 ? double(guidance.rows - 1) : 1.0;
  for (std::size_t r = 0; r < guidance.rows; ++r)
    for (std::size_t c = 0; c < guidance.cols; ++c) {
      const std::size_t p = r * guidance.cols + c;
      const double l = guidance.cols > 1 ? double(c) / cden : 0.0;
      const double h = guidance.rows > 1 ? double(r) / rden : 0.0;
      f[p] = {guidance.values[p], lambda * l, lambda * h};
    }
  return f;
}

/// O(i) = mean of P(j) over the K nearest feature vectors of pixel i.
///
/// The neighborhood always contains i itself; the other K - 1 members are the
/// nearest remaining pixels, ties going to the lower linear index.
inline ClassProbabilityMap knn_filter(const ClassProbabilityMap& P, const GuidanceImage& guidance,
                                      const FilterParams& params) {
  if (P.rows != guidance.rows || P.cols != guidance.cols)
    throw DataError("probability map and guidance image differ in shape");
  const std::size_t n = P.pixels();
  if (params.K < 1 || std::size_t(params.K) > n)
    throw ConfigError("K = " + std::to_string(params.K) + " outside [1, " + std::to_string(n) + "]");

  const KdTree3 tree(build_features(guidance, params.lambda));
  ClassProbabilityMap out(P.rows, P.cols);
  // Accumulated as offsets from P(i), so neighborhoods that agree with the
  // center reproduce it exactly.
  for (std::size_t i = 0; i < n; ++i) {
    const auto self = P.row(i);
    std::array<double, kNumClasses> acc{};
    for (const auto& nb : tree.knn(tree.point(i), std::size_t(params.K - 1), i))
      for (std::size_t c = 0; c < kNumClasses; ++c) acc[c] += P.row(nb.index)[c] - self[c];
    for (std::size_t c = 0; c < kNumClasses; ++c) out.row(i)[c] = self[c] + acc[c] / double(params.K);
  }
  return out;
}

/// Per-pixel argmax; ties go to the lowest class code.
inline LabelMap argmax_map(const ClassProbabilityMap& P) {
  LabelMap out(P.rows, P.cols);
  for (std::size_t p = 0; p < P.pixels(); ++p) {
    const auto row = P.row(p);
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c)
      if (row[std::size_t(c)] > row[std::size_t(best)]) best = c;
    out.codes[p] = class_from_index(best);
  }
  return out;
}

/// Mean over pixels of the fraction of in-bounds 8-neighbors sharing the pixel's label.
inline double label_smoothness(const LabelMap& m) {
  if (m.pixels() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t r = 0; r < m.rows; ++r)
    for (std::size_t c = 0; c < m.cols; ++c) {
      int same = 0, count = 0;
      for (int dr = -1; dr <= 1; ++dr)
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const auto rr = std::ptrdiff_t(r) + dr, cc = std::ptrdiff_t(c) + dc;
          if (rr < 0 || cc < 0 || rr >= std::ptrdiff_t(m.rows) || cc >= std::ptrdiff_t(m.cols)) continue;
          ++count;
          same += m.at(std::size_t(rr), std::size_t(cc)) == m.at(r, c);
        }
      total += count > 0 ? double(same) / count : 1.0;
    }
  return total / double(m.pixels());
}

struct SweepCell {
  FilterParams params;
  ClassProbabilityMap filtered;
  LabelMap labels;
  double smoothness = 0.0;
};

inline const std::vector<int> kSweepKs{5, 10, 20, 40, 60};
inline const std::vector<double> kSweepLambdas{0.0, 1.0, 5.0, 10.0, 100.0};

/// One filtered map per (K, lambda) pair, K-major.
inline std::vector<SweepCell> param_sweep(const ClassProbabilityMap& P, const GuidanceImage& guidance,
                                          const std::vector<int>& Ks = kSweepKs,
                                          const std::vector<double>& lambdas = kSweepLambdas) {
  std::vector<SweepCell> cells;
  for (int K : Ks)
    for (double lambda : lambdas) {
      SweepCell cell{{K, lambda}, knn_filter(P, guidance, {K, lambda}), {}, 0.0};
      cell.labels = argmax_map(cell.filtered);
      cell.smoothness = label_smoothness(cell.labels);
      cells.push_back(std::move(cell));
    }
  return cells;
}

}  // namespace hsi
