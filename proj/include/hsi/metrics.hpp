#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsi/label_map.hpp"
#include "hsi/svm.hpp"

namespace hsi {

/// counts[actual][predicted], both by class_index().
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  void add(ClassCode actual, ClassCode predicted) {
    ++counts[std::size_t(class_index(actual))][std::size_t(class_index(predicted))];
  }

  std::uint64_t total() const {
    std::uint64_t t = 0;
    for (const auto& r : counts)
      for (auto v : r) t += v;
    return t;
  }
  std::uint64_t trace() const {
    std::uint64_t t = 0;
    for (int i = 0; i < kNumClasses; ++i) t += counts[std::size_t(i)][std::size_t(i)];
    return t;
  }
  std::uint64_t row_sum(int i) const {
    std::uint64_t t = 0;
    for (auto v : counts[std::size_t(i)]) t += v;
    return t;
  }
  std::uint64_t col_sum(int j) const {
    std::uint64_t t = 0;
    for (const auto& r : counts) t += r[std::size_t(j)];
    return t;
  }

  // One-vs-all counts for class slot i.
  std::uint64_t tp(int i) const { return counts[std::size_t(i)][std::size_t(i)]; }
  std::uint64_t fn(int i) const { return row_sum(i) - tp(i); }
  std::uint64_t fp(int i) const { return col_sum(i) - tp(i); }
  std::uint64_t tn(int i) const { return total() - tp(i) - fn(i) - fp(i); }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    for (int i = 0; i < kNumClasses; ++i)
      for (int j = 0; j < kNumClasses; ++j) counts[std::size_t(i)][std::size_t(j)] += o.counts[std::size_t(i)][std::size_t(j)];
    return *this;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

inline ConfusionMatrix confusion(const std::vector<ClassCode>& actual, const std::vector<ClassCode>& predicted) {
  if (actual.size() != predicted.size()) throw ConfigError("confusion: length mismatch");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < actual.size(); ++i) {
    if (actual[i] == ClassCode::Unlabeled || predicted[i] == ClassCode::Unlabeled) continue;
    cm.add(actual[i], predicted[i]);
  }
  return cm;
}

/// Undefined ratios (zero denominators) are nullopt, never 0.
struct ClassMetrics {
  std::optional<double> sensitivity;  // TP / (TP + FN)
  std::optional<double> specificity;  // TN / (TN + FP)
  std::optional<double> accuracy;     // (TP + TN) / (TP + FP + TN + FN)
};

struct MetricsReport {
  std::array<ClassMetrics, kNumClasses> per_class{};
  std::optional<double> overall_accuracy;  // trace / total
  std::vector<MetricsReport> folds;
};

inline std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return double(num) / double(den);
}

inline MetricsReport compute_metrics(const ConfusionMatrix& cm) {
  MetricsReport r;
  for (int i = 0; i < kNumClasses; ++i) {
    auto& m = r.per_class[std::size_t(i)];
    m.sensitivity = ratio(cm.tp(i), cm.tp(i) + cm.fn(i));
    m.specificity = ratio(cm.tn(i), cm.tn(i) + cm.fp(i));
    m.accuracy = ratio(cm.tp(i) + cm.tn(i), cm.tp(i) + cm.fp(i) + cm.tn(i) + cm.fn(i));
  }
  r.overall_accuracy = ratio(cm.trace(), cm.total());
  return r;
}

/// Overall accuracy re-derived from the one-vs-all true positives.
inline std::optional<double> accuracy_from_one_vs_all(const ConfusionMatrix& cm) {
  std::uint64_t tp = 0;
  for (int i = 0; i < kNumClasses; ++i) tp += cm.tp(i);
  return ratio(tp, cm.total());
}

// ---------------------------------------------------------------------------

/// Fold index per sample. Samples are grouped by class, shuffled within the
/// class, and dealt round-robin over the k folds, so each fold gets a
/// near-equal share of every class. k equal to the sample count is
/// leave-one-out.
inline std::vector<int> stratified_folds(const std::vector<ClassCode>& labels, int k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("cross-validation needs k >= 2");
  const std::size_t n = labels.size();
  if (std::size_t(k) > n) throw ConfigError("cross-validation: k exceeds sample count");
  if (std::size_t(k) < n) {
    for (ClassCode c : kClasses) {
      const auto cnt = std::count(labels.begin(), labels.end(), c);
      if (cnt > 0 && cnt < k)
        throw DataError("class " + std::string(class_name(c)) + " has " + std::to_string(cnt) + " samples, fewer than k=" +
                        std::to_string(k));
    }
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order;
  for (ClassCode c : kClasses) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i)
      if (labels[i] == c) idx.push_back(i);
    std::shuffle(idx.begin(), idx.end(), rng);
    order.insert(order.end(), idx.begin(), idx.end());
  }
  std::vector<int> fold(n, -1);
  for (std::size_t pos = 0; pos < order.size(); ++pos) fold[order[pos]] = int(pos % std::size_t(k));
  return fold;
}

struct CrossValidation {
  ConfusionMatrix confusion;
  MetricsReport report;
  std::vector<int> fold_of;
};

inline CrossValidation cross_validate(const LabeledDataset& data, int k, const TrainOptions& opt) {
  data.validate();
  CrossValidation cv;
  cv.fold_of = stratified_folds(data.labels, k, opt.seed);
  std::vector<MetricsReport> fold_reports;
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train_idx, test_idx;
    for (std::size_t i = 0; i < data.size(); ++i) (cv.fold_of[i] == f ? test_idx : train_idx).push_back(i);
    const LabeledDataset train = data.subset(train_idx);
    TrainOptions fold_opt = opt;
    fold_opt.seed = opt.seed + std::uint64_t(f) + 1;
    const SvmModel model = train_svm(train, fold_opt);
    ConfusionMatrix fold_cm;
    for (std::size_t i : test_idx)
      fold_cm.add(data.labels[i], predict_class(model, data.samples.row(Eigen::Index(i)).transpose()));
    fold_reports.push_back(compute_metrics(fold_cm));
    cv.confusion += fold_cm;
  }
  cv.report = compute_metrics(cv.confusion);
  cv.report.folds = std::move(fold_reports);
  return cv;
}

// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : cm.counts) rows.push_back(std::vector<std::uint64_t>(r.begin(), r.end()));
  return {{"order", {"normal", "tumor", "vessel", "background"}}, {"rows_actual_cols_predicted", rows}};
}

inline nlohmann::json to_json(const MetricsReport& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json j;
  j["overall_accuracy"] = opt(r.overall_accuracy);
  for (int i = 0; i < kNumClasses; ++i) {
    const auto& m = r.per_class[std::size_t(i)];
    j["classes"][std::string(class_name(class_from_index(i)))] = {
        {"sensitivity", opt(m.sensitivity)}, {"specificity", opt(m.specificity)}, {"accuracy", opt(m.accuracy)}};
  }
  if (!r.folds.empty()) {
    j["folds"] = nlohmann::json::array();
    for (const auto& f : r.folds) j["folds"].push_back(to_json(f));
  }
  return j;
}

}  // namespace hsi
