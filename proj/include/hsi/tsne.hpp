#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hsi/error.hpp"

namespace hsi::tsne {

struct Params {
  double perplexity = 30.0;
  int iterations = 1000;
  double learning_rate = 200.0;
  double exaggeration = 12.0;
  double exaggeration_fraction = 0.25;  // also where momentum switches
  double initial_momentum = 0.5;
  double final_momentum = 0.8;
  std::uint64_t seed = 1;
};

/// Pairwise squared Euclidean distances between the rows of X.
inline Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& X) {
  const Eigen::VectorXd sq = X.rowwise().squaredNorm();
  Eigen::MatrixXd D = -2.0 * X * X.transpose();
  D.colwise() += sq;
  D.rowwise() += sq.transpose();
  D = D.cwiseMax(0.0);
  D.diagonal().setZero();
  return D;
}

struct Conditional {
  Eigen::MatrixXd P;             // row i holds p_{j|i}
  std::vector<double> beta;      // 1 / (2 sigma_i^2)
  std::vector<double> entropy;   // achieved Shannon entropy (nats) per row
};

/// Bisection on each point's Gaussian precision until the conditional
/// distribution's entropy equals log(perplexity) to within `tol`.
inline Conditional calibrate_perplexity(const Eigen::MatrixXd& sqdist, double perplexity, double tol = 1e-6,
                                        int max_steps = 200) {
  const Eigen::Index n = sqdist.rows();
  const double target = std::log(perplexity);
  Conditional out;
  out.P = Eigen::MatrixXd::Zero(n, n);
  out.beta.assign(std::size_t(n), 1.0);
  out.entropy.assign(std::size_t(n), 0.0);
  std::vector<double> d(static_cast<std::size_t>(n)), p(static_cast<std::size_t>(n));

  for (Eigen::Index i = 0; i < n; ++i) {
    double dmin = INFINITY;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i) dmin = std::min(dmin, sqdist(i, j));
    for (Eigen::Index j = 0; j < n; ++j) d[std::size_t(j)] = j == i ? 0.0 : sqdist(i, j) - dmin;

    auto evaluate = [&](double beta) {
      double sum = 0.0, dot = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) {
          p[std::size_t(j)] = 0.0;
          continue;
        }
        p[std::size_t(j)] = std::exp(-beta * d[std::size_t(j)]);
        sum += p[std::size_t(j)];
        dot += d[std::size_t(j)] * p[std::size_t(j)];
      }
      for (auto& v : p) v /= sum;
      return std::log(sum) + beta * dot / sum;
    };

    double beta = 1.0, lo = 0.0, hi = INFINITY;
    double h = evaluate(beta);
    for (int step = 0; step < max_steps && std::abs(h - target) > tol; ++step) {
      if (h > target) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = (beta + lo) / 2.0;
      }
      h = evaluate(beta);
    }
    out.beta[std::size_t(i)] = beta;
    out.entropy[std::size_t(i)] = h;
    for (Eigen::Index j = 0; j < n; ++j) out.P(i, j) = p[std::size_t(j)];
  }
  return out;
}

/// Symmetrized joint distribution (p_{j|i} + p_{i|j}) / 2n.
inline Eigen::MatrixXd joint_probabilities(const Conditional& c) {
  const double n = double(c.P.rows());
  Eigen::MatrixXd P = (c.P + c.P.transpose()) / (2.0 * n);
  return P;
}

/// Student-t affinities in one dimension, normalized over i != j.
inline Eigen::MatrixXd low_dim_affinities(const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd Q(n, n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = y[i] - y[j];
      Q(i, j) = i == j ? 0.0 : 1.0 / (1.0 + diff * diff);
      sum += Q(i, j);
    }
  return Q / sum;
}

inline double kl_divergence(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd Q = low_dim_affinities(y);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i)
    for (Eigen::Index j = 0; j < P.cols(); ++j)
      if (i != j && P(i, j) > 0.0) kl += P(i, j) * std::log(P(i, j) / std::max(Q(i, j), 1e-300));
  return kl;
}

/// dKL/dy_i = 4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + (y_i - y_j)^2).
inline Eigen::VectorXd kl_gradient(const Eigen::MatrixXd& P, const Eigen::VectorXd& y) {
  const Eigen::Index n = y.size();
  Eigen::MatrixXd num(n, n);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const double diff = y[i] - y[j];
      num(i, j) = i == j ? 0.0 : 1.0 / (1.0 + diff * diff);
      sum += num(i, j);
    }
  Eigen::VectorXd g = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double gi = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      gi += (P(i, j) - num(i, j) / sum) * (y[i] - y[j]) * num(i, j);
    }
    g[i] = 4.0 * gi;
  }
  return g;
}

struct Result {
  Eigen::VectorXd y;
  double kl_initial = 0.0;
  double kl_final = 0.0;
  std::vector<double> entropy;  // per-point calibrated entropy
};

/// Exact (O(n^2) per iteration) t-SNE into one dimension.
inline Result embed_1d(const Eigen::MatrixXd& X, const Params& prm) {
  const Eigen::Index n = X.rows();
  if (!(prm.perplexity >= 2.0)) throw ConfigError("t-SNE: perplexity must be >= 2");
  if (double(n) < 3.0 * prm.perplexity)
    throw ConfigError("t-SNE: " + std::to_string(n) + " samples cannot support perplexity " +
                      std::to_string(prm.perplexity) + " (need >= 3 * perplexity)");
  if (prm.iterations < 1) throw ConfigError("t-SNE: iterations must be >= 1");

  const Conditional cond = calibrate_perplexity(squared_distances(X), prm.perplexity);
  const Eigen::MatrixXd P = joint_probabilities(cond);

  Result res;
  res.entropy = cond.entropy;
  std::mt19937_64 rng(prm.seed);
  std::normal_distribution<double> init(0.0, 1e-4);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = init(rng);
  res.kl_initial = kl_divergence(P, y);

  Eigen::VectorXd update = Eigen::VectorXd::Zero(n), gains = Eigen::VectorXd::Ones(n);
  const int switch_iter = int(std::lround(prm.exaggeration_fraction * prm.iterations));
  // Beyond n / exaggeration the exaggerated phase oscillates instead of
  // contracting, so small sample sets get a proportionally smaller step.
  const double rate = std::min(prm.learning_rate, double(n) / std::max(prm.exaggeration, 1.0));
  for (int it = 0; it < prm.iterations; ++it) {
    const bool early = it < switch_iter;
    const double exag = early ? prm.exaggeration : 1.0;
    const double momentum = early ? prm.initial_momentum : prm.final_momentum;

    double sum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double diff = y[i] - y[j];
        sum += 2.0 / (1.0 + diff * diff);
      }
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double diff = y[i] - y[j];
        const double num = 1.0 / (1.0 + diff * diff);
        const double f = (exag * P(i, j) - num / sum) * diff * num;
        grad[i] += f;
        grad[j] -= f;
      }
    grad *= 4.0;
    if (!grad.allFinite()) throw NumericError("t-SNE: non-finite gradient at iteration " + std::to_string(it));

    for (Eigen::Index i = 0; i < n; ++i) {
      const bool same_sign = (grad[i] > 0) == (update[i] > 0);
      gains[i] = same_sign ? std::max(gains[i] * 0.8, 0.01) : gains[i] + 0.2;
      update[i] = momentum * update[i] - rate * gains[i] * grad[i];
      y[i] += update[i];
    }
    y.array() -= y.mean();
  }
  res.kl_final = kl_divergence(P, y);
  res.y = std::move(y);
  return res;
}

}  // namespace hsi::tsne
