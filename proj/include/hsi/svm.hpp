#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/label_map.hpp"

namespace hsi {

// ---------------------------------------------------------------------------
// Data

/// Labeled spectra; row i of `samples` carries `labels[i]`.
struct LabeledDataset {
  Eigen::MatrixXd samples;
  std::vector<ClassCode> labels;
  std::vector<std::string> provenance;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const noexcept { return std::size_t(samples.cols()); }

  std::vector<ClassCode> classes() const {
    std::vector<ClassCode> out;
    for (ClassCode c : kClasses)
      if (std::find(labels.begin(), labels.end(), c) != labels.end()) out.push_back(c);
    return out;
  }

  void validate() const {
    if (std::size_t(samples.rows()) != labels.size())
      throw DataError("dataset: " + std::to_string(samples.rows()) + " samples vs " + std::to_string(labels.size()) +
                      " labels");
    if (!provenance.empty() && provenance.size() != labels.size())
      throw DataError("dataset: provenance length differs from sample count");
    for (ClassCode c : labels)
      if (c == ClassCode::Unlabeled) throw DataError("dataset contains Unlabeled samples");
  }

  LabeledDataset subset(const std::vector<std::size_t>& idx) const {
    LabeledDataset out;
    out.samples.resize(Eigen::Index(idx.size()), samples.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      out.samples.row(Eigen::Index(i)) = samples.row(Eigen::Index(idx[i]));
      out.labels.push_back(labels[idx[i]]);
      if (!provenance.empty()) out.provenance.push_back(provenance[idx[i]]);
    }
    return out;
  }
};

/// Collects labeled pixels of `cube`, at most `max_per_class` per class
/// (uniformly subsampled with `seed`; 0 keeps everything).
inline LabeledDataset dataset_from_labels(const HSCube& cube, const LabelMap& labels, std::size_t max_per_class,
                                          std::uint64_t seed, const std::string& provenance = "") {
  if (labels.rows != cube.rows() || labels.cols != cube.cols())
    throw DataError("label map " + std::to_string(labels.rows) + "x" + std::to_string(labels.cols) +
                    " does not match cube " + std::to_string(cube.rows()) + "x" + std::to_string(cube.cols()));
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> picked;
  for (ClassCode c : kClasses) {
    std::vector<std::size_t> idx;
    for (std::size_t p = 0; p < labels.pixels(); ++p)
      if (labels.codes[p] == c) idx.push_back(p);
    if (max_per_class > 0 && idx.size() > max_per_class) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(max_per_class);
      std::sort(idx.begin(), idx.end());
    }
    picked.insert(picked.end(), idx.begin(), idx.end());
  }
  LabeledDataset ds;
  ds.samples.resize(Eigen::Index(picked.size()), Eigen::Index(cube.bands()));
  std::vector<double> s(cube.bands());
  for (std::size_t i = 0; i < picked.size(); ++i) {
    cube.spectrum(picked[i], s);
    ds.samples.row(Eigen::Index(i)) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), Eigen::Index(s.size()));
    ds.labels.push_back(labels.codes[picked[i]]);
    if (!provenance.empty()) ds.provenance.push_back(provenance);
  }
  return ds;
}

// ---------------------------------------------------------------------------
// Kernels

enum class KernelType { Linear, Rbf, Polynomial, Sigmoid };

inline std::string kernel_name(KernelType k) {
  switch (k) {
    case KernelType::Linear: return "linear";
    case KernelType::Rbf: return "rbf";
    case KernelType::Polynomial: return "polynomial";
    case KernelType::Sigmoid: return "sigmoid";
  }
  return "?";
}

inline KernelType parse_kernel(const std::string& s) {
  for (auto k : {KernelType::Linear, KernelType::Rbf, KernelType::Polynomial, KernelType::Sigmoid})
    if (kernel_name(k) == s) return k;
  throw ConfigError("unknown kernel '" + s + "' (linear, rbf, polynomial, sigmoid)");
}

struct KernelParams {
  KernelType type = KernelType::Linear;
  double gamma = 0.0;  // <= 0 means 1 / input dimension
  double coef0 = 0.0;
  int degree = 3;

  KernelParams resolved(std::size_t dim) const {
    KernelParams k = *this;
    if (!(k.gamma > 0.0)) k.gamma = 1.0 / double(std::max<std::size_t>(dim, 1));
    return k;
  }
};

template <class A, class B>
double kernel_eval(const KernelParams& k, const A& x, const B& y) {
  switch (k.type) {
    case KernelType::Linear: return x.dot(y);
    case KernelType::Rbf: return std::exp(-k.gamma * (x - y).squaredNorm());
    case KernelType::Polynomial: return std::pow(k.gamma * x.dot(y) + k.coef0, k.degree);
    case KernelType::Sigmoid: return std::tanh(k.gamma * x.dot(y) + k.coef0);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Binary soft-margin SVM, SMO with maximal-violating-pair selection.

struct SmoOptions {
  double tolerance = 1e-3;
  std::uint64_t max_iterations = 10'000'000;
};

struct SmoResult {
  std::vector<double> alpha;
  double bias = 0.0;  // f(x) = sum alpha_i y_i K(x_i, x) + bias
  std::uint64_t iterations = 0;
  double gap = 0.0;  // final maximal KKT violation
};

/// Solves min 1/2 a'Qa - e'a s.t. 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
/// `kernel` is the full n x n Gram matrix; y entries are +1/-1.
inline SmoResult solve_smo(const Eigen::MatrixXd& kernel, std::span<const int> y, double C,
                           const SmoOptions& opt = {}) {
  const std::size_t n = y.size();
  if (std::size_t(kernel.rows()) != n || std::size_t(kernel.cols()) != n)
    throw ConfigError("smo: Gram matrix shape mismatch");
  if (!(C > 0.0)) throw ConfigError("smo: C must be positive");
  constexpr double kTau = 1e-12;

  SmoResult res;
  res.alpha.assign(n, 0.0);
  std::vector<double> grad(n, -1.0);
  auto& alpha = res.alpha;
  auto q = [&](std::size_t i, std::size_t j) { return double(y[i] * y[j]) * kernel(Eigen::Index(i), Eigen::Index(j)); };
  auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  for (;;) {
    std::size_t i = n, j = n;
    double gmax = -INFINITY, gmin = INFINITY;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -double(y[t]) * grad[t];
      if (in_up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (in_low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    res.gap = (i == n || j == n) ? 0.0 : gmax - gmin;
    if (i == n || j == n || res.gap < opt.tolerance) break;
    if (res.iterations >= opt.max_iterations)
      throw NumericError("smo: no convergence after " + std::to_string(opt.max_iterations) +
                         " pair updates (KKT gap " + std::to_string(res.gap) + ")");
    ++res.iterations;

    const double ai_old = alpha[i], aj_old = alpha[j];
    const double qii = q(i, i), qjj = q(j, j), qij = q(i, j);
    if (y[i] != y[j]) {
      double quad = qii + qjj + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      double quad = qii + qjj - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double dai = alpha[i] - ai_old, daj = alpha[j] - aj_old;
    for (std::size_t k = 0; k < n; ++k) grad[k] += q(i, k) * dai + q(j, k) * daj;
  }

  // Bias from free vectors, or the midpoint of the feasible interval.
  double ub = INFINITY, lb = -INFINITY, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = double(y[t]) * grad[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / double(n_free) : (ub + lb) / 2.0;
  res.bias = std::isfinite(rho) ? -rho : 0.0;
  return res;
}

// ---------------------------------------------------------------------------
// Platt scaling: P(positive | f) = 1 / (1 + exp(-(A f + B))).

struct PlattParams {
  double A = 1.0;
  double B = 0.0;

  double operator()(double f) const {
    const double z = A * f + B;
    return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  }
};

/// Maximum-likelihood sigmoid fit by damped Newton (100 iterations with
/// backtracking line search). Targets are 0/1 unless the decision values
/// separate the two labels perfectly, in which case the prior-smoothed
/// targets (N+ + 1)/(N+ + 2) and 1/(N- + 2) are used.
inline PlattParams fit_platt(std::span<const double> dec, std::span<const int> y) {
  const std::size_t n = dec.size();
  double prior1 = 0, prior0 = 0;
  double min_pos = INFINITY, max_neg = -INFINITY;
  for (std::size_t i = 0; i < n; ++i) {
    if (y[i] > 0) {
      ++prior1;
      min_pos = std::min(min_pos, dec[i]);
    } else {
      ++prior0;
      max_neg = std::max(max_neg, dec[i]);
    }
  }
  const bool separated = prior1 == 0 || prior0 == 0 || min_pos > max_neg;
  const double hi_target = separated ? (prior1 + 1.0) / (prior1 + 2.0) : 1.0;
  const double lo_target = separated ? 1.0 / (prior0 + 2.0) : 0.0;
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = y[i] > 0 ? hi_target : lo_target;

  // Internally uses the 1 / (1 + exp(a f + b)) parameterization; A = -a, B = -b.
  constexpr int kMaxIter = 100;
  constexpr double kMinStep = 1e-10, kSigma = 1e-12, kEps = 1e-5;
  double a = 0.0, b = std::log((prior0 + 1.0) / (prior1 + 1.0));
  auto objective = [&](double aa, double bb) {
    double f = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * aa + bb;
      f += z >= 0 ? t[i] * z + std::log1p(std::exp(-z)) : (t[i] - 1.0) * z + std::log1p(std::exp(z));
    }
    return f;
  };
  double fval = objective(a, b);
  for (int it = 0; it < kMaxIter; ++it) {
    double h11 = kSigma, h22 = kSigma, h21 = 0.0, g1 = 0.0, g2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double z = dec[i] * a + b;
      double p, q;
      if (z >= 0) {
        p = std::exp(-z) / (1.0 + std::exp(-z));
        q = 1.0 / (1.0 + std::exp(-z));
      } else {
        p = 1.0 / (1.0 + std::exp(z));
        q = std::exp(z) / (1.0 + std::exp(z));
      }
      const double d2 = p * q;
      h11 += dec[i] * dec[i] * d2;
      h22 += d2;
      h21 += dec[i] * d2;
      const double d1 = t[i] - p;
      g1 += dec[i] * d1;
      g2 += d1;
    }
    if (std::abs(g1) < kEps && std::abs(g2) < kEps) break;
    const double det = h11 * h22 - h21 * h21;
    const double da = -(h22 * g1 - h21 * g2) / det;
    const double db = -(-h21 * g1 + h11 * g2) / det;
    const double gd = g1 * da + g2 * db;
    double step = 1.0;
    while (step >= kMinStep) {
      const double na = a + step * da, nb = b + step * db;
      const double nf = objective(na, nb);
      if (nf < fval + 1e-4 * step * gd) {
        a = na;
        b = nb;
        fval = nf;
        break;
      }
      step /= 2.0;
    }
    if (step < kMinStep) break;
  }
  if (!std::isfinite(a) || !std::isfinite(b)) throw NumericError("Platt fit produced non-finite parameters");
  return {-a, -b};
}

// ---------------------------------------------------------------------------
// One-vs-rest model

struct BinaryModel {
  ClassCode positive = ClassCode::Normal;
  Eigen::MatrixXd support_vectors;  // one per row
  Eigen::VectorXd coef;             // alpha_i * y_i
  double bias = 0.0;
  Eigen::VectorXd weights;          // primal weights, linear kernel only
  PlattParams platt;
};

struct SvmModel {
  KernelParams kernel;
  double C = 1.0;
  std::size_t dim = 0;
  std::vector<BinaryModel> binaries;  // one per class, ascending class code
  std::string multiclass = "one-vs-rest";

  template <class V>
  double decision(const BinaryModel& m, const V& x) const {
    if (kernel.type == KernelType::Linear) return m.weights.dot(x) + m.bias;
    double f = m.bias;
    for (Eigen::Index s = 0; s < m.support_vectors.rows(); ++s)
      f += m.coef[s] * kernel_eval(kernel, m.support_vectors.row(s).transpose(), x);
    return f;
  }

  /// Renormalized Platt probabilities over the four classes (absent classes get 0).
  template <class V>
  std::array<double, kNumClasses> probabilities(const V& x) const {
    std::array<double, kNumClasses> p{};
    double sum = 0.0;
    for (const auto& m : binaries) {
      const double v = std::max(m.platt(decision(m, x)), 1e-300);
      p[std::size_t(class_index(m.positive))] = v;
      sum += v;
    }
    for (double& v : p) v /= sum;
    return p;
  }
};

struct TrainOptions {
  KernelParams kernel;
  double C = 1.0;
  std::uint64_t seed = 1;
  double calibration_fraction = 0.2;
  /// Every class needs at least this many samples before a calibration split is held out.
  std::size_t min_per_class_for_holdout = 5;
  SmoOptions smo;
};

inline Eigen::MatrixXd gram_matrix(const KernelParams& k, const Eigen::MatrixXd& X) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  if (k.type != KernelType::Rbf) {
    K.noalias() = X * X.transpose();
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = 0; j < n; ++j) {
        if (k.type == KernelType::Polynomial) K(i, j) = std::pow(k.gamma * K(i, j) + k.coef0, k.degree);
        else if (k.type == KernelType::Sigmoid) K(i, j) = std::tanh(k.gamma * K(i, j) + k.coef0);
      }
    return K;
  }
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i; j < n; ++j) K(i, j) = K(j, i) = kernel_eval(k, X.row(i), X.row(j));
  return K;
}

/// Trains one soft-margin binary problem per class present in `data`.
inline SvmModel train_svm(const LabeledDataset& data, const TrainOptions& opt) {
  data.validate();
  if (!(opt.C > 0.0)) throw ConfigError("train_svm: C must be positive");
  const auto classes = data.classes();
  if (classes.size() < 2) throw DataError("train_svm: need at least two classes, got " + std::to_string(classes.size()));

  SvmModel model;
  model.kernel = opt.kernel.resolved(data.dim());
  model.C = opt.C;
  model.dim = data.dim();

  // Stratified train / calibration split.
  std::vector<std::size_t> fit_idx, cal_idx;
  bool holdout = true;
  for (ClassCode c : classes)
    if (std::size_t(std::count(data.labels.begin(), data.labels.end(), c)) < opt.min_per_class_for_holdout)
      holdout = false;
  if (holdout && opt.calibration_fraction > 0.0) {
    std::mt19937_64 rng(opt.seed);
    for (ClassCode c : classes) {
      std::vector<std::size_t> idx;
      for (std::size_t i = 0; i < data.size(); ++i)
        if (data.labels[i] == c) idx.push_back(i);
      std::shuffle(idx.begin(), idx.end(), rng);
      const auto n_cal = std::max<std::size_t>(1, std::size_t(std::floor(opt.calibration_fraction * double(idx.size()))));
      cal_idx.insert(cal_idx.end(), idx.begin(), idx.begin() + std::ptrdiff_t(n_cal));
      fit_idx.insert(fit_idx.end(), idx.begin() + std::ptrdiff_t(n_cal), idx.end());
    }
    std::sort(fit_idx.begin(), fit_idx.end());
    std::sort(cal_idx.begin(), cal_idx.end());
  } else {
    fit_idx.resize(data.size());
    std::iota(fit_idx.begin(), fit_idx.end(), 0);
    cal_idx = fit_idx;
  }
  const LabeledDataset fit = data.subset(fit_idx);
  const LabeledDataset cal = data.subset(cal_idx);
  const Eigen::MatrixXd K = gram_matrix(model.kernel, fit.samples);

  for (ClassCode c : classes) {
    std::vector<int> y(fit.size());
    for (std::size_t i = 0; i < fit.size(); ++i) y[i] = fit.labels[i] == c ? 1 : -1;
    const SmoResult r = solve_smo(K, y, opt.C, opt.smo);

    BinaryModel bm;
    bm.positive = c;
    bm.bias = r.bias;
    std::vector<Eigen::Index> sv;
    for (std::size_t i = 0; i < fit.size(); ++i)
      if (r.alpha[i] > 0.0) sv.push_back(Eigen::Index(i));
    bm.support_vectors.resize(Eigen::Index(sv.size()), fit.samples.cols());
    bm.coef.resize(Eigen::Index(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
      bm.support_vectors.row(Eigen::Index(s)) = fit.samples.row(sv[s]);
      bm.coef[Eigen::Index(s)] = r.alpha[std::size_t(sv[s])] * y[std::size_t(sv[s])];
    }
    if (model.kernel.type == KernelType::Linear) bm.weights = bm.support_vectors.transpose() * bm.coef;

    std::vector<double> dec(cal.size());
    std::vector<int> ycal(cal.size());
    for (std::size_t i = 0; i < cal.size(); ++i) {
      dec[i] = model.decision(bm, cal.samples.row(Eigen::Index(i)).transpose());
      ycal[i] = cal.labels[i] == c ? 1 : -1;
    }
    bm.platt = fit_platt(dec, ycal);
    model.binaries.push_back(std::move(bm));
  }
  return model;
}

/// Per-pixel probability vectors over the four classes, row-major.
struct ClassProbabilityMap {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> prob;  // kNumClasses per pixel, slot = class_index()

  ClassProbabilityMap() = default;
  ClassProbabilityMap(std::size_t r, std::size_t c) : rows(r), cols(c), prob(r * c * kNumClasses, 0.0) {}

  std::size_t pixels() const noexcept { return rows * cols; }
  std::span<double> row(std::size_t p) { return {prob.data() + p * kNumClasses, std::size_t(kNumClasses)}; }
  std::span<const double> row(std::size_t p) const { return {prob.data() + p * kNumClasses, std::size_t(kNumClasses)}; }

  friend bool operator==(const ClassProbabilityMap&, const ClassProbabilityMap&) = default;
};

inline ClassProbabilityMap predict_proba(const SvmModel& model, const HSCube& cube) {
  if (cube.bands() != model.dim)
    throw DataError("predict: cube has " + std::to_string(cube.bands()) + " bands, model expects " +
                    std::to_string(model.dim));
  ClassProbabilityMap out(cube.rows(), cube.cols());
  std::vector<double> s(cube.bands());
  for (std::size_t p = 0; p < cube.pixels(); ++p) {
    cube.spectrum(p, s);
    const auto pr = model.probabilities(Eigen::Map<const Eigen::VectorXd>(s.data(), Eigen::Index(s.size())));
    std::copy(pr.begin(), pr.end(), out.row(p).begin());
  }
  return out;
}

/// Argmax of the decision-free probability vectors; ties go to the lowest class code.
inline ClassCode predict_class(const SvmModel& model, const Eigen::VectorXd& x) {
  const auto p = model.probabilities(x);
  int best = 0;
  for (int i = 1; i < kNumClasses; ++i)
    if (p[std::size_t(i)] > p[std::size_t(best)]) best = i;
  return class_from_index(best);
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const SvmModel& m) {
  nlohmann::json j;
  j["kernel"] = kernel_name(m.kernel.type);
  j["gamma"] = m.kernel.gamma;
  j["coef0"] = m.kernel.coef0;
  j["degree"] = m.kernel.degree;
  j["C"] = m.C;
  j["dim"] = m.dim;
  j["multiclass"] = m.multiclass;
  j["legend"] = {{"1", "normal"}, {"2", "tumor"}, {"3", "vessel"}, {"4", "background"}};
  j["binaries"] = nlohmann::json::array();
  for (const auto& b : m.binaries) {
    nlohmann::json jb;
    jb["class"] = int(b.positive);
    jb["bias"] = b.bias;
    jb["platt"] = {{"A", b.platt.A}, {"B", b.platt.B}};
    jb["coef"] = std::vector<double>(b.coef.data(), b.coef.data() + b.coef.size());
    std::vector<double> flat(static_cast<std::size_t>(b.support_vectors.size()));
    for (Eigen::Index r = 0; r < b.support_vectors.rows(); ++r)
      for (Eigen::Index c = 0; c < b.support_vectors.cols(); ++c)
        flat[std::size_t(r * b.support_vectors.cols() + c)] = b.support_vectors(r, c);
    jb["support_vectors"] = flat;
    if (b.weights.size() > 0) jb["weights"] = std::vector<double>(b.weights.data(), b.weights.data() + b.weights.size());
    j["binaries"].push_back(jb);
  }
  return j;
}

inline SvmModel svm_model_from_json(const nlohmann::json& j) {
  SvmModel m;
  try {
    m.kernel.type = parse_kernel(j.at("kernel").get<std::string>());
    m.kernel.gamma = j.at("gamma").get<double>();
    m.kernel.coef0 = j.value("coef0", 0.0);
    m.kernel.degree = j.value("degree", 3);
    m.C = j.at("C").get<double>();
    m.dim = j.at("dim").get<std::size_t>();
    m.multiclass = j.value("multiclass", m.multiclass);
    for (const auto& jb : j.at("binaries")) {
      BinaryModel b;
      b.positive = checked_class(jb.at("class").get<long long>());
      b.bias = jb.at("bias").get<double>();
      b.platt = {jb.at("platt").at("A").get<double>(), jb.at("platt").at("B").get<double>()};
      const auto coef = jb.at("coef").get<std::vector<double>>();
      const auto flat = jb.at("support_vectors").get<std::vector<double>>();
      if (flat.size() != coef.size() * m.dim) throw DataError("model: support vector payload size mismatch");
      b.coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), Eigen::Index(coef.size()));
      b.support_vectors.resize(Eigen::Index(coef.size()), Eigen::Index(m.dim));
      for (std::size_t r = 0; r < coef.size(); ++r)
        for (std::size_t c = 0; c < m.dim; ++c) b.support_vectors(Eigen::Index(r), Eigen::Index(c)) = flat[r * m.dim + c];
      if (jb.contains("weights")) {
        const auto w = jb["weights"].get<std::vector<double>>();
        b.weights = Eigen::Map<const Eigen::VectorXd>(w.data(), Eigen::Index(w.size()));
      } else if (m.kernel.type == KernelType::Linear) {
        b.weights = b.support_vectors.transpose() * b.coef;
      }
      m.binaries.push_back(std::move(b));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("model json: ") + e.what());
  }
  if (m.binaries.size() < 2) throw DataError("model json: needs at least two binary problems");
  return m;
}

}  // namespace hsi
