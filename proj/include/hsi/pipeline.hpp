#pragma once

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsi/clustering.hpp"
#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/fusion.hpp"
#include "hsi/guidance.hpp"
#include "hsi/io.hpp"
#include "hsi/label_map.hpp"
#include "hsi/metrics.hpp"
#include "hsi/png.hpp"
#include "hsi/preprocess.hpp"
#include "hsi/spatial_filter.hpp"
#include "hsi/svm.hpp"

namespace hsi {

// ---------------------------------------------------------------------------
// Stage timing model

struct StageTimings {
  double preprocessing = 0.0;
  double transmission = 0.0;
  double spatial_spectral_supervised = 0.0;
  double unsupervised_clustering = 0.0;
  double hybrid_classification = 0.0;

  void validate() const {
    for (double v : {preprocessing, transmission, spatial_spectral_supervised, unsupervised_clustering,
                     hybrid_classification})
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("stage timings must be finite and >= 0");
  }
};

enum class TimingModel { Sequential, Accelerated };

/// Sequential: every stage back to back, no transmission. Accelerated: the
/// supervised and clustering branches overlap, so only the slower one counts.
inline double aggregate_timings(const StageTimings& t, TimingModel model) {
  t.validate();
  if (model == TimingModel::Sequential)
    return t.preprocessing + t.spatial_spectral_supervised + t.unsupervised_clustering + t.hybrid_classification;
  return t.preprocessing + t.transmission + std::max(t.spatial_spectral_supervised, t.unsupervised_clustering) +
         t.hybrid_classification;
}

inline double speedup(double sequential_total, double accelerated_total) {
  if (!(accelerated_total > 0.0)) throw NumericError("speedup: accelerated total must be positive");
  if (!(sequential_total >= 0.0)) throw ConfigError("speedup: sequential total must be >= 0");
  return sequential_total / accelerated_total;
}

inline nlohmann::json to_json(const StageTimings& t) {
  return {{"preprocessing", t.preprocessing},
          {"transmission", t.transmission},
          {"spatial_spectral_supervised", t.spatial_spectral_supervised},
          {"unsupervised_clustering", t.unsupervised_clustering},
          {"hybrid_classification", t.hybrid_classification}};
}

// ---------------------------------------------------------------------------
// Configuration

enum class ExecutionMode { Sequential, Concurrent };

inline std::string mode_name(ExecutionMode m) { return m == ExecutionMode::Sequential ? "sequential" : "concurrent"; }

inline ExecutionMode parse_mode(const std::string& s) {
  if (s == "sequential") return ExecutionMode::Sequential;
  if (s == "concurrent") return ExecutionMode::Concurrent;
  throw ConfigError("unknown execution mode '" + s + "' (sequential, concurrent)");
}

enum class GuidanceBackend { FrTsne, Pca };

inline std::string backend_name(GuidanceBackend b) { return b == GuidanceBackend::FrTsne ? "fr-tsne" : "pca"; }

inline GuidanceBackend parse_backend(const std::string& s) {
  if (s == "fr-tsne") return GuidanceBackend::FrTsne;
  if (s == "pca") return GuidanceBackend::Pca;
  throw ConfigError("unknown guidance backend '" + s + "' (fr-tsne, pca)");
}

struct PipelineConfig {
  std::filesystem::path cube;
  std::filesystem::path white;
  std::filesystem::path dark;
  std::filesystem::path labels;           // training / evaluation labels
  std::filesystem::path model;            // serialized SVM, replaces training
  std::filesystem::path reference_table;  // serialized reference table, replaces embedding
  std::filesystem::path output;

  PreprocessConfig preprocess;
  TrainOptions train;
  std::size_t max_train_per_class = 500;
  int cv_folds = 0;  // 0 skips cross-validation

  GuidanceBackend guidance = GuidanceBackend::FrTsne;
  ReferenceParams reference;
  FilterParams filter;

  int clusters = 24;
  std::uint64_t cluster_seed = 1;
  ClusterMetric cluster_metric = ClusterMetric::Euclidean;

  ExecutionMode mode = ExecutionMode::Concurrent;
  double transmission_seconds = 0.0;

  /// Checks that the configuration can produce a model and a guidance image.
  void validate() const {
    if (cube.empty()) throw ConfigError("config: 'cube' is required");
    if (white.empty() || dark.empty()) throw ConfigError("config: 'white' and 'dark' references are required");
    if (model.empty() && labels.empty()) throw ConfigError("config: neither a model nor training labels given");
    if (guidance == GuidanceBackend::FrTsne && reference_table.empty() && labels.empty())
      throw ConfigError("config: fr-tsne guidance needs training labels or a reference table");
    if (clusters < 1) throw ConfigError("config: clusters must be >= 1");
    if (filter.K < 1) throw ConfigError("config: filter K must be >= 1");
    if (!(transmission_seconds >= 0.0)) throw ConfigError("config: transmission_seconds must be >= 0");
    if (cv_folds == 1 || cv_folds < 0) throw ConfigError("config: cv_folds must be 0 or >= 2");
  }

  void check_paths() const {
    for (const auto* p : {&cube, &white, &dark, &labels, &model, &reference_table})
      if (!p->empty() && !std::filesystem::exists(*p)) throw ConfigError("config: file not found: " + p->string());
  }
};

/// Reads a JSON configuration; relative paths are resolved against `base`.
inline PipelineConfig pipeline_config_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  PipelineConfig c;
  auto path = [&](const char* key) -> std::filesystem::path {
    if (!j.contains(key)) return {};
    std::filesystem::path p = j.at(key).get<std::string>();
    return p.is_relative() && !base.empty() ? base / p : p;
  };
  try {
    c.cube = path("cube");
    c.white = path("white");
    c.dark = path("dark");
    c.labels = path("labels");
    c.model = path("model");
    c.reference_table = path("reference_table");
    c.output = path("output");
    if (j.contains("preprocess")) c.preprocess = preprocess_config_from_json(j.at("preprocess"));
    if (j.contains("svm")) {
      const auto& s = j.at("svm");
      c.train.kernel.type = parse_kernel(s.value("kernel", std::string("linear")));
      c.train.kernel.gamma = s.value("gamma", c.train.kernel.gamma);
      c.train.kernel.coef0 = s.value("coef0", c.train.kernel.coef0);
      c.train.kernel.degree = s.value("degree", c.train.kernel.degree);
      c.train.C = s.value("C", c.train.C);
      c.train.seed = s.value("seed", c.train.seed);
      c.max_train_per_class = s.value("max_train_per_class", c.max_train_per_class);
      c.cv_folds = s.value("cv_folds", c.cv_folds);
    }
    if (j.contains("guidance")) {
      const auto& g = j.at("guidance");
      c.guidance = parse_backend(g.value("backend", backend_name(c.guidance)));
      c.reference.embed.perplexity = g.value("perplexity", c.reference.embed.perplexity);
      c.reference.embed.iterations = g.value("iterations", c.reference.embed.iterations);
      c.reference.embed.learning_rate = g.value("learning_rate", c.reference.embed.learning_rate);
      c.reference.embed.seed = g.value("seed", c.reference.embed.seed);
      c.reference.subsample = g.value("subsample", c.reference.subsample);
      c.reference.k_ref = g.value("k_ref", c.reference.k_ref);
      c.reference.seed = g.value("seed", c.reference.seed);
    }
    if (j.contains("filter")) {
      c.filter.K = j.at("filter").value("K", c.filter.K);
      c.filter.lambda = j.at("filter").value("lambda", c.filter.lambda);
    }
    if (j.contains("clustering")) {
      const auto& k = j.at("clustering");
      c.clusters = k.value("clusters", c.clusters);
      c.cluster_seed = k.value("seed", c.cluster_seed);
      c.cluster_metric = parse_metric(k.value("metric", metric_name(c.cluster_metric)));
    }
    c.mode = parse_mode(j.value("mode", mode_name(c.mode)));
    c.transmission_seconds = j.value("transmission_seconds", c.transmission_seconds);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline PipelineConfig load_pipeline_config(const std::filesystem::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(io::read_text(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(file.string() + ": " + e.what());
  }
  return pipeline_config_from_json(j, file.parent_path());
}

inline nlohmann::json to_json(const PipelineConfig& c) {
  return {{"cube", c.cube.string()},
          {"white", c.white.string()},
          {"dark", c.dark.string()},
          {"labels", c.labels.string()},
          {"model", c.model.string()},
          {"reference_table", c.reference_table.string()},
          {"output", c.output.string()},
          {"preprocess", to_json(c.preprocess)},
          {"svm",
           {{"kernel", kernel_name(c.train.kernel.type)},
            {"gamma", c.train.kernel.gamma},
            {"coef0", c.train.kernel.coef0},
            {"degree", c.train.kernel.degree},
            {"C", c.train.C},
            {"seed", c.train.seed},
            {"max_train_per_class", c.max_train_per_class},
            {"cv_folds", c.cv_folds}}},
          {"guidance",
           {{"backend", backend_name(c.guidance)},
            {"perplexity", c.reference.embed.perplexity},
            {"iterations", c.reference.embed.iterations},
            {"learning_rate", c.reference.embed.learning_rate},
            {"seed", c.reference.seed},
            {"subsample", c.reference.subsample},
            {"k_ref", c.reference.k_ref}}},
          {"filter", {{"K", c.filter.K}, {"lambda", c.filter.lambda}}},
          {"clustering",
           {{"clusters", c.clusters}, {"seed", c.cluster_seed}, {"metric", metric_name(c.cluster_metric)}}},
          {"mode", mode_name(c.mode)},
          {"transmission_seconds", c.transmission_seconds}};
}

// ---------------------------------------------------------------------------
// Run

struct PipelineInputs {
  HSCube raw;
  CalibrationRefs refs;
  std::optional<LabelMap> labels;
  std::optional<SvmModel> model;
  std::optional<ReferenceTable> reference_table;
};

inline PipelineInputs load_inputs(const PipelineConfig& cfg) {
  cfg.validate();
  cfg.check_paths();
  PipelineInputs in;
  try {
    in.raw = load_cube(cfg.cube);
    in.refs.white = load_cube(cfg.white);
    in.refs.dark = load_cube(cfg.dark);
    if (!cfg.labels.empty()) in.labels = load_label_map(cfg.labels);
    if (!cfg.model.empty()) in.model = svm_model_from_json(nlohmann::json::parse(io::read_text(cfg.model)));
    if (!cfg.reference_table.empty()) in.reference_table = load_reference_table(cfg.reference_table);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("[load] ") + e.what());
  } catch (const Error& e) {
    rethrow_tagged("load", e);
  }
  return in;
}

struct PipelineResult {
  std::optional<NormalizedCube> preprocessed;  // classification / clustering input
  std::optional<HSCube> guidance_input;        // full-resolution normalized cube
  std::optional<SvmModel> model;
  std::optional<ReferenceTable> reference_table;
  std::optional<ClassProbabilityMap> probabilities;
  std::optional<LabelMap> svm_map;
  std::optional<GuidanceImage> guidance;
  std::optional<ClassProbabilityMap> filtered;
  std::optional<LabelMap> filtered_map;
  std::optional<HkmResult> segmentation;
  std::optional<ClusterClassDensity> density;
  std::optional<LabelMap> mv_map;
  std::optional<RenderedMap> mv_render, omd_render, tmd_render;
  nlohmann::json metrics;

  StageTimings timings;
  double training_seconds = 0.0;
  double branch_wall_seconds = 0.0;  // wall time of the two branches together
  ExecutionMode mode = ExecutionMode::Concurrent;
};

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

template <class F>
auto staged(const char* stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    rethrow_tagged(stage, e);
  }
}

struct SupervisedOut {
  ClassProbabilityMap probabilities;
  LabelMap svm_map;
  GuidanceImage guidance;
  ClassProbabilityMap filtered;
  LabelMap filtered_map;
  double seconds = 0.0;
};

inline SupervisedOut supervised_branch(const SvmModel& model, const HSCube& cube, const HSCube& guidance_cube,
                                       const ReferenceTable* table, const FilterParams& filter) {
  const auto t0 = std::chrono::steady_clock::now();
  SupervisedOut out;
  out.probabilities = staged("classify", [&] { return predict_proba(model, cube); });
  out.svm_map = argmax_map(out.probabilities);
  out.guidance = staged("guidance", [&] {
    return table ? fr_tsne_guidance(guidance_cube, *table) : pca_first_component(guidance_cube);
  });
  out.filtered = staged("filter", [&] { return knn_filter(out.probabilities, out.guidance, filter); });
  out.filtered_map = argmax_map(out.filtered);
  out.seconds = seconds_since(t0);
  return out;
}

struct ClusteringOut {
  HkmResult hkm;
  double seconds = 0.0;
};

inline ClusteringOut clustering_branch(const HSCube& cube, int clusters, std::uint64_t seed, ClusterMetric metric) {
  const auto t0 = std::chrono::steady_clock::now();
  ClusteringOut out;
  out.hkm = staged("cluster", [&] { return hkm_segment(cube, clusters, seed, metric); });
  out.seconds = seconds_since(t0);
  return out;
}

inline nlohmann::json map_agreement(const LabelMap& reference, const LabelMap& predicted) {
  ConfusionMatrix cm;
  for (std::size_t p = 0; p < reference.pixels(); ++p)
    if (reference.codes[p] != ClassCode::Unlabeled) cm.add(reference.codes[p], predicted.codes[p]);
  nlohmann::json j = to_json(compute_metrics(cm));
  j["confusion"] = to_json(cm);
  return j;
}

}  // namespace detail

/// Runs every stage, filling `out` as stages complete so a failed run still
/// leaves its finished artifacts behind.
inline void run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg, PipelineResult& out) {
  using clock = std::chrono::steady_clock;
  if (!in.model && !in.labels) throw ConfigError("neither a model nor training labels supplied");
  if (cfg.guidance == GuidanceBackend::FrTsne && !in.reference_table && !in.labels)
    throw ConfigError("fr-tsne guidance needs training labels or a reference table");
  if (in.labels && (in.labels->rows != in.raw.rows() || in.labels->cols != in.raw.cols()))
    throw DataError("label map shape does not match the cube");
  out.mode = cfg.mode;

  auto t0 = clock::now();
  const HSCube cropped = preprocess_common(in.raw, in.refs, cfg.preprocess);
  out.preprocessed = preprocess_finish(cropped, cfg.preprocess);
  out.guidance_input = detail::staged("preprocess/normalize", [&] { return normalize_pixels(cropped).cube; });
  out.timings.preprocessing = detail::seconds_since(t0);

  // Training is offline work and sits outside the stage timing model.
  t0 = clock::now();
  std::optional<LabeledDataset> training;
  if (in.labels)
    training = dataset_from_labels(out.preprocessed->cube, *in.labels, cfg.max_train_per_class, cfg.train.seed, "run");
  out.model = in.model ? *in.model : detail::staged("train", [&] { return train_svm(*training, cfg.train); });
  if (cfg.guidance == GuidanceBackend::FrTsne) {
    if (in.reference_table) {
      out.reference_table = *in.reference_table;
    } else {
      const auto ref_data = dataset_from_labels(*out.guidance_input, *in.labels, cfg.max_train_per_class,
                                                cfg.train.seed, "run");
      out.reference_table = detail::staged("reference", [&] { return build_reference_table(ref_data.samples, cfg.reference); });
    }
  }
  out.training_seconds = detail::seconds_since(t0);

  const HSCube& cube = out.preprocessed->cube;
  const HSCube& gcube = *out.guidance_input;
  const SvmModel& model = *out.model;
  const ReferenceTable* table = out.reference_table ? &*out.reference_table : nullptr;

  t0 = clock::now();
  detail::SupervisedOut sup;
  detail::ClusteringOut clu;
  if (cfg.mode == ExecutionMode::Concurrent) {
    auto sup_f = std::async(std::launch::async, detail::supervised_branch, std::cref(model), std::cref(cube),
                            std::cref(gcube), table, cfg.filter);
    auto clu_f = std::async(std::launch::async, detail::clustering_branch, std::cref(cube), cfg.clusters,
                            cfg.cluster_seed, cfg.cluster_metric);
    std::exception_ptr first;
    try {
      sup = sup_f.get();
    } catch (...) {
      first = std::current_exception();
    }
    try {
      clu = clu_f.get();
    } catch (...) {
      if (!first) first = std::current_exception();
    }
    if (first) std::rethrow_exception(first);
    out.timings.transmission = cfg.transmission_seconds;
  } else {
    sup = detail::supervised_branch(model, cube, gcube, table, cfg.filter);
    clu = detail::clustering_branch(cube, cfg.clusters, cfg.cluster_seed, cfg.cluster_metric);
    out.timings.transmission = 0.0;
  }
  out.branch_wall_seconds = detail::seconds_since(t0);
  out.timings.spatial_spectral_supervised = sup.seconds;
  out.timings.unsupervised_clustering = clu.seconds;
  out.probabilities = std::move(sup.probabilities);
  out.svm_map = std::move(sup.svm_map);
  out.guidance = std::move(sup.guidance);
  out.filtered = std::move(sup.filtered);
  out.filtered_map = std::move(sup.filtered_map);
  out.segmentation = std::move(clu.hkm);

  t0 = clock::now();
  detail::staged("fuse", [&] {
    const auto& seg = out.segmentation->segmentation;
    out.density = class_density(seg, *out.filtered_map);
    out.mv_map = majority_vote(seg, *out.filtered_map);
    out.mv_render = render_mv(*out.mv_map);
    out.omd_render = render_omd(seg, *out.density);
    out.tmd_render = render_tmd(seg, *out.density);
    return 0;
  });
  out.timings.hybrid_classification = detail::seconds_since(t0);

  if (in.labels) {
    out.metrics["svm"] = detail::map_agreement(*in.labels, *out.svm_map);
    out.metrics["filtered"] = detail::map_agreement(*in.labels, *out.filtered_map);
    out.metrics["majority_vote"] = detail::map_agreement(*in.labels, *out.mv_map);
    if (cfg.cv_folds >= 2 && training) {
      const auto cv = detail::staged("cross-validate", [&] { return cross_validate(*training, cfg.cv_folds, cfg.train); });
      out.metrics["cross_validation"] = to_json(cv.report);
      out.metrics["cross_validation"]["confusion"] = to_json(cv.confusion);
    }
  }
  out.metrics["degenerate_pixels"] = out.preprocessed->degenerate_pixels;
  out.metrics["guidance_degenerate"] = out.guidance->degenerate;
  out.metrics["clusters"] = out.segmentation->segmentation.n_clusters;
  out.metrics["clusters_exhausted"] = out.segmentation->tree.exhausted;
}

inline PipelineResult run_pipeline(const PipelineInputs& in, const PipelineConfig& cfg) {
  PipelineResult out;
  run_pipeline(in, cfg, out);
  return out;
}

// ---------------------------------------------------------------------------
// Artifact bundle

/// Run-specific record (mode and timings); the only file that differs between
/// otherwise identical runs.
inline constexpr const char* kRunRecord = "run.json";

inline HSCube probability_cube(const ClassProbabilityMap& P) {
  std::vector<float> data(P.pixels() * kNumClasses);
  for (std::size_t c = 0; c < std::size_t(kNumClasses); ++c)
    for (std::size_t p = 0; p < P.pixels(); ++p) data[c * P.pixels() + p] = float(P.row(p)[c]);
  return HSCube(P.rows, P.cols, {1, 2, 3, 4}, std::move(data));
}

inline HSCube guidance_cube(const GuidanceImage& g) {
  std::vector<float> data(g.values.begin(), g.values.end());
  return HSCube(g.rows, g.cols, {0}, std::move(data));
}

/// Writes whatever `r` holds plus a manifest listing each file and the stage
/// that produced it. Returns the manifest.
inline nlohmann::json write_artifacts(const PipelineResult& r, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  nlohmann::json files = nlohmann::json::array();
  auto add = [&](const std::string& name, const char* stage) { files.push_back({{"file", name}, {"stage", stage}}); };
  auto add_pair = [&](const std::string& stem, const char* ext, const char* stage) {
    add(stem + ".hdr", stage);
    add(stem + ext, stage);
  };

  if (r.preprocessed) {
    save_cube(r.preprocessed->cube, dir / "preprocessed.hdr");
    add_pair("preprocessed", ".raw", "preprocessing");
  }
  if (r.model) {
    io::write_text(dir / "model.json", to_json(*r.model).dump(1) + "\n");
    add("model.json", "training");
  }
  if (r.reference_table) {
    save_reference_table(*r.reference_table, dir / "reference_table.json");
    add("reference_table.json", "training");
    add("reference_table.bin", "training");
  }
  if (r.probabilities) {
    save_cube(probability_cube(*r.probabilities), dir / "probabilities.hdr");
    add_pair("probabilities", ".raw", "spatial_spectral_supervised");
  }
  if (r.svm_map) {
    save_label_map(*r.svm_map, dir / "svm_map.hdr");
    add_pair("svm_map", ".bin", "spatial_spectral_supervised");
  }
  if (r.guidance) {
    save_cube(guidance_cube(*r.guidance), dir / "guidance.hdr");
    add_pair("guidance", ".raw", "spatial_spectral_supervised");
  }
  if (r.filtered) {
    save_cube(probability_cube(*r.filtered), dir / "filtered.hdr");
    add_pair("filtered", ".raw", "spatial_spectral_supervised");
  }
  if (r.filtered_map) {
    save_label_map(*r.filtered_map, dir / "filtered_map.hdr");
    add_pair("filtered_map", ".bin", "spatial_spectral_supervised");
  }
  if (r.segmentation) {
    save_segmentation(r.segmentation->segmentation, dir / "segmentation.hdr");
    add_pair("segmentation", ".bin", "unsupervised_clustering");
    io::write_text(dir / "cluster_tree.json", to_json(r.segmentation->tree).dump(1) + "\n");
    add("cluster_tree.json", "unsupervised_clustering");
  }
  if (r.density) {
    io::write_text(dir / "density.csv", density_csv(*r.density));
    add("density.csv", "hybrid_classification");
  }
  if (r.mv_map) {
    save_label_map(*r.mv_map, dir / "mv_map.hdr");
    add_pair("mv_map", ".bin", "hybrid_classification");
  }
  const std::pair<const std::optional<RenderedMap>*, const char*> renders[] = {
      {&r.mv_render, "mv.png"}, {&r.omd_render, "omd.png"}, {&r.tmd_render, "tmd.png"}};
  for (const auto& [img, name] : renders)
    if (*img) {
      png::write(**img, dir / name);
      add(name, "hybrid_classification");
    }
  if (!r.metrics.is_null()) {
    io::write_text(dir / "metrics.json", r.metrics.dump(1) + "\n");
    add("metrics.json", "evaluation");
  }

  nlohmann::json run = {{"mode", mode_name(r.mode)},
                        {"timings", to_json(r.timings)},
                        {"training_seconds", r.training_seconds},
                        {"branch_wall_seconds", r.branch_wall_seconds}};
  if (r.mv_map) {
    run["sequential_total"] = aggregate_timings(r.timings, TimingModel::Sequential);
    run["accelerated_total"] = aggregate_timings(r.timings, TimingModel::Accelerated);
  }
  io::write_text(dir / kRunRecord, run.dump(1) + "\n");
  add(kRunRecord, "timing");

  nlohmann::json manifest = {{"files", files}};
  io::write_text(dir / "manifest.json", manifest.dump(1) + "\n");
  return manifest;
}

/// Loads inputs, runs, and writes the bundle to `cfg.output`. On failure the
/// artifacts finished so far are written before the error propagates.
inline PipelineResult run_pipeline(const PipelineConfig& cfg) {
  if (cfg.output.empty()) throw ConfigError("config: 'output' directory is required");
  const auto in = load_inputs(cfg);
  PipelineResult out;
  try {
    run_pipeline(in, cfg, out);
  } catch (...) {
    try {
      write_artifacts(out, cfg.output);
    } catch (...) {
    }
    throw;
  }
  write_artifacts(out, cfg.output);
  return out;
}

}  // namespace hsi
