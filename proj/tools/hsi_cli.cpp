// Command-line front end for the hyperspectral classification pipeline.
//
// Exit codes: 0 ok, 1 configuration error, 2 data error, 3 numeric failure.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "hsi/hsi.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

hsi::CalibrationRefs load_refs(const fs::path& white, const fs::path& dark) {
  return {hsi::load_cube(white), hsi::load_cube(dark)};
}

hsi::PreprocessConfig preprocess_config(const std::string& file) {
  if (file.empty()) return {};
  return hsi::preprocess_config_from_json(json::parse(hsi::io::read_text(file)));
}

void write_json(const fs::path& p, const json& j) { hsi::io::write_text(p, j.dump(2) + "\n"); }

std::string stem_path(const fs::path& header, const std::string& suffix) {
  auto p = header;
  p.replace_extension();
  return p.string() + suffix;
}

// --------------------------------------------------------------------------

struct PhantomArgs {
  std::string spec;
  std::size_t rows = 64, cols = 64, bands = 826;
  double sigma = 0.01;
  std::uint64_t seed = 1;
  std::string out;
};

int cmd_phantom(const PhantomArgs& a) {
  hsi::PhantomSpec spec = a.spec.empty()
                              ? hsi::PhantomSpec::standard(a.rows, a.cols, a.bands, a.sigma, a.seed)
                              : hsi::phantom_spec_from_json(json::parse(hsi::io::read_text(a.spec)));
  const auto ph = hsi::generate_phantom(spec);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  hsi::save_cube(ph.raw, dir / "cube.hdr");
  hsi::save_cube(ph.refs.white, dir / "white.hdr");
  hsi::save_cube(ph.refs.dark, dir / "dark.hdr");
  hsi::save_label_map(ph.truth, dir / "truth.hdr");
  std::cout << "phantom " << spec.rows << "x" << spec.cols << "x" << spec.bands << " written to " << dir.string()
            << "\n";
  return 0;
}

struct PreprocessArgs {
  std::string cube, white, dark, config, out, full_out;
};

int cmd_preprocess(const PreprocessArgs& a) {
  const auto cfg = preprocess_config(a.config);
  const auto raw = hsi::load_cube(a.cube);
  const auto common = hsi::preprocess_common(raw, load_refs(a.white, a.dark), cfg);
  const auto fin = hsi::preprocess_finish(common, cfg);
  hsi::save_cube(fin.cube, a.out);
  if (!a.full_out.empty()) hsi::save_cube(hsi::normalize_pixels(common).cube, a.full_out);
  std::cout << "bands " << raw.bands() << " -> " << common.bands() << " -> " << fin.cube.bands()
            << ", degenerate pixels " << fin.degenerate_pixels << "\n";
  return 0;
}

struct LabelExportArgs {
  std::vector<std::string> labels;
  std::vector<std::string> ids;
  std::string out;
};

int cmd_label_export(const LabelExportArgs& a) {
  if (!a.ids.empty() && a.ids.size() != a.labels.size()) throw hsi::ConfigError("--ids must match --labels in count");
  std::vector<std::pair<std::string, hsi::DatasetSummary>> rows;
  for (std::size_t i = 0; i < a.labels.size(); ++i) {
    const std::string id = a.ids.empty() ? fs::path(a.labels[i]).stem().string() : a.ids[i];
    rows.emplace_back(id, hsi::dataset_summary(hsi::load_label_map(a.labels[i])));
  }
  const auto csv = hsi::summary_csv(rows);
  if (a.out.empty())
    std::cout << csv;
  else
    hsi::io::write_text(a.out, csv);
  return 0;
}

struct TrainArgs {
  std::string cube, labels, out, kernel = "linear";
  double C = 1.0, gamma = 0.0;
  std::size_t max_per_class = 500;
  std::uint64_t seed = 1;
  int cv = 0;
};

int cmd_train(const TrainArgs& a) {
  const auto cube = hsi::load_cube(a.cube);
  const auto labels = hsi::load_label_map(a.labels);
  const auto data = hsi::dataset_from_labels(cube, labels, a.max_per_class, a.seed, fs::path(a.labels).stem().string());
  hsi::TrainOptions opt;
  opt.kernel.type = hsi::parse_kernel(a.kernel);
  opt.kernel.gamma = a.gamma;
  opt.C = a.C;
  opt.seed = a.seed;
  const auto model = hsi::train_svm(data, opt);
  write_json(a.out, hsi::to_json(model));
  std::cout << "trained on " << data.size() << " samples, " << model.binaries.size() << " binary models\n";
  if (a.cv >= 2) {
    const auto cv = hsi::cross_validate(data, a.cv, opt);
    json j = hsi::to_json(cv.report);
    j["confusion"] = hsi::to_json(cv.confusion);
    write_json(stem_path(a.out, "_cv.json"), j);
    std::cout << a.cv << "-fold overall accuracy " << cv.report.overall_accuracy.value_or(0.0) << "\n";
  }
  return 0;
}

struct ClassifyArgs {
  std::string cube, model, out;
};

int cmd_classify(const ClassifyArgs& a) {
  const auto cube = hsi::load_cube(a.cube);
  const auto model = hsi::svm_model_from_json(json::parse(hsi::io::read_text(a.model)));
  const auto P = hsi::predict_proba(model, cube);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  hsi::save_cube(hsi::probability_cube(P), dir / "probabilities.hdr");
  hsi::save_label_map(hsi::argmax_map(P), dir / "svm_map.hdr");
  std::cout << "classified " << P.pixels() << " pixels\n";
  return 0;
}

struct SegmentArgs {
  std::string cube, out, metric = "euclidean";
  int clusters = 24;
  std::uint64_t seed = 1;
};

int cmd_segment(const SegmentArgs& a) {
  const auto cube = hsi::load_cube(a.cube);
  const auto res = hsi::hkm_segment(cube, a.clusters, a.seed, hsi::parse_metric(a.metric));
  hsi::save_segmentation(res.segmentation, a.out);
  write_json(stem_path(a.out, "_tree.json"), hsi::to_json(res.tree));
  std::cout << res.segmentation.n_clusters << " clusters" << (res.tree.exhausted ? " (too few distinct pixels)" : "")
            << "\n";
  return 0;
}

struct FuseArgs {
  std::string segmentation, classes, out;
};

int cmd_fuse(const FuseArgs& a) {
  const auto seg = hsi::load_segmentation(a.segmentation);
  const auto classes = hsi::load_label_map(a.classes);
  const auto d = hsi::class_density(seg, classes);
  const auto mv = hsi::majority_vote(seg, classes);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  hsi::io::write_text(dir / "density.csv", hsi::density_csv(d));
  hsi::save_label_map(mv, dir / "mv_map.hdr");
  hsi::png::write(hsi::render_mv(mv), dir / "mv.png");
  hsi::png::write(hsi::render_omd(seg, d), dir / "omd.png");
  hsi::png::write(hsi::render_tmd(seg, d), dir / "tmd.png");
  return 0;
}

struct RunArgs {
  std::string config, output, mode;
  int clusters = 0, K = 0;
  double lambda = -1.0;
};

hsi::PipelineConfig run_config(const RunArgs& a) {
  auto cfg = hsi::load_pipeline_config(a.config);
  if (!a.output.empty()) cfg.output = a.output;
  if (!a.mode.empty()) cfg.mode = hsi::parse_mode(a.mode);
  if (a.clusters > 0) cfg.clusters = a.clusters;
  if (a.K > 0) cfg.filter.K = a.K;
  if (a.lambda >= 0.0) cfg.filter.lambda = a.lambda;
  return cfg;
}

void print_timings(const hsi::StageTimings& t) {
  std::printf("  preprocessing                 %10.3f s\n", t.preprocessing);
  std::printf("  transmission                  %10.3f s\n", t.transmission);
  std::printf("  spatial-spectral supervised   %10.3f s\n", t.spatial_spectral_supervised);
  std::printf("  unsupervised clustering       %10.3f s\n", t.unsupervised_clustering);
  std::printf("  hybrid classification         %10.3f s\n", t.hybrid_classification);
}

int cmd_run(const RunArgs& a) {
  const auto cfg = run_config(a);
  const auto res = hsi::run_pipeline(cfg);
  std::cout << "run (" << hsi::mode_name(cfg.mode) << ") -> " << cfg.output.string() << "\n";
  print_timings(res.timings);
  if (res.metrics.contains("majority_vote"))
    std::cout << "majority-vote overall accuracy " << res.metrics["majority_vote"]["overall_accuracy"] << "\n";
  return 0;
}

struct SweepArgs {
  std::string config, out;
};

int cmd_sweep(const SweepArgs& a) {
  auto cfg = hsi::load_pipeline_config(a.config);
  cfg.clusters = 1;  // the grid only needs the supervised branch
  const auto in = hsi::load_inputs(cfg);
  const auto res = hsi::run_pipeline(in, cfg);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  std::ostringstream csv;
  csv << "K,lambda,smoothness,agreement\n";
  for (const auto& cell : hsi::param_sweep(*res.probabilities, *res.guidance)) {
    std::string agreement;
    if (in.labels) {
      std::size_t same = 0, n = 0;
      for (std::size_t p = 0; p < in.labels->pixels(); ++p)
        if (in.labels->codes[p] != hsi::ClassCode::Unlabeled) {
          ++n;
          same += in.labels->codes[p] == cell.labels.codes[p];
        }
      if (n > 0) agreement = hsi::io::format_double(double(same) / double(n));
    }
    csv << cell.params.K << ',' << hsi::io::format_double(cell.params.lambda) << ','
        << hsi::io::format_double(cell.smoothness) << ',' << agreement << '\n';
    hsi::png::write(hsi::render_mv(cell.labels),
                    dir / ("k" + std::to_string(cell.params.K) + "_l" + hsi::io::format_double(cell.params.lambda) +
                           ".png"));
  }
  hsi::io::write_text(dir / "sweep.csv", csv.str());
  std::cout << csv.str();
  return 0;
}

struct BenchArgs {
  std::string config, table, out;
};

/// Table input columns: id,preprocessing,transmission,supervised,clustering,hybrid
int cmd_bench_table(const BenchArgs& a) {
  std::istringstream in(hsi::io::read_text(a.table));
  std::string line;
  std::getline(in, line);
  std::printf("%-10s %12s %12s %8s\n", "id", "sequential", "accelerated", "speedup");
  json rows = json::array();
  while (std::getline(in, line)) {
    if (hsi::io::trim(line).empty()) continue;
    const auto f = hsi::io::split(line, ',');
    if (f.size() != 6) throw hsi::DataError("bench table row needs 6 fields: " + line);
    hsi::StageTimings t;
    t.preprocessing = hsi::io::parse_double(f[1], "preprocessing");
    t.transmission = hsi::io::parse_double(f[2], "transmission");
    t.spatial_spectral_supervised = hsi::io::parse_double(f[3], "supervised");
    t.unsupervised_clustering = hsi::io::parse_double(f[4], "clustering");
    t.hybrid_classification = hsi::io::parse_double(f[5], "hybrid");
    const double seq = hsi::aggregate_timings(t, hsi::TimingModel::Sequential);
    const double acc = hsi::aggregate_timings(t, hsi::TimingModel::Accelerated);
    const auto id = hsi::io::trim(f[0]);
    std::printf("%-10s %12.2f %12.2f %8.2f\n", id.c_str(), seq, acc, hsi::speedup(seq, acc));
    rows.push_back({{"id", id},
                    {"timings", hsi::to_json(t)},
                    {"sequential_total", seq},
                    {"accelerated_total", acc},
                    {"speedup", hsi::speedup(seq, acc)}});
  }
  if (!a.out.empty()) hsi::io::write_text(a.out, rows.dump(2) + "\n");
  return 0;
}

int cmd_bench(const BenchArgs& a) {
  if (!a.table.empty()) return cmd_bench_table(a);
  if (a.config.empty()) throw hsi::ConfigError("bench needs --config or --table");
  auto cfg = hsi::load_pipeline_config(a.config);
  const auto in = hsi::load_inputs(cfg);
  json report;
  hsi::StageTimings measured[2];
  for (int m = 0; m < 2; ++m) {
    cfg.mode = m == 0 ? hsi::ExecutionMode::Sequential : hsi::ExecutionMode::Concurrent;
    const auto res = hsi::run_pipeline(in, cfg);
    measured[m] = res.timings;
    report[hsi::mode_name(cfg.mode)] = {{"timings", hsi::to_json(res.timings)},
                                        {"branch_wall_seconds", res.branch_wall_seconds}};
    std::cout << hsi::mode_name(cfg.mode) << " (branch wall " << res.branch_wall_seconds << " s)\n";
    print_timings(res.timings);
  }
  const double seq = hsi::aggregate_timings(measured[0], hsi::TimingModel::Sequential);
  const double acc = hsi::aggregate_timings(measured[1], hsi::TimingModel::Accelerated);
  report["sequential_total"] = seq;
  report["accelerated_total"] = acc;
  report["speedup"] = hsi::speedup(seq, acc);
  std::printf("sequential %.3f s, accelerated %.3f s, speedup %.2f\n", seq, acc, hsi::speedup(seq, acc));
  if (!a.out.empty()) write_json(a.out, report);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral tissue classification pipeline"};
  app.require_subcommand(1);

  PhantomArgs ph;
  auto* s_ph = app.add_subcommand("phantom", "Write a synthetic labeled cube with calibration references");
  s_ph->add_option("--spec", ph.spec, "Phantom spec JSON (default: standard four-class layout)");
  s_ph->add_option("--rows", ph.rows);
  s_ph->add_option("--cols", ph.cols);
  s_ph->add_option("--bands", ph.bands);
  s_ph->add_option("--sigma", ph.sigma, "Noise standard deviation");
  s_ph->add_option("--seed", ph.seed);
  s_ph->add_option("--out", ph.out, "Output directory")->required();

  PreprocessArgs pp;
  auto* s_pp = app.add_subcommand("preprocess", "Calibrate, denoise, crop, average and normalize a cube");
  s_pp->add_option("--cube", pp.cube)->required()->check(CLI::ExistingFile);
  s_pp->add_option("--white", pp.white)->required()->check(CLI::ExistingFile);
  s_pp->add_option("--dark", pp.dark)->required()->check(CLI::ExistingFile);
  s_pp->add_option("--config", pp.config, "Preprocess JSON")->check(CLI::ExistingFile);
  s_pp->add_option("--out", pp.out, "Output cube header")->required();
  s_pp->add_option("--full-out", pp.full_out, "Also write the normalized cube before band averaging");

  LabelExportArgs le;
  auto* s_le = app.add_subcommand("label-export", "Per-class pixel counts of label maps as CSV");
  s_le->add_option("--labels", le.labels)->required()->check(CLI::ExistingFile);
  s_le->add_option("--ids", le.ids, "Row ids (default: file stems)");
  s_le->add_option("--out", le.out, "CSV file (default: stdout)");

  TrainArgs tr;
  auto* s_tr = app.add_subcommand("train", "Train the one-vs-rest SVM on labeled pixels");
  s_tr->add_option("--cube", tr.cube, "Preprocessed cube")->required()->check(CLI::ExistingFile);
  s_tr->add_option("--labels", tr.labels)->required()->check(CLI::ExistingFile);
  s_tr->add_option("--out", tr.out, "Model JSON")->required();
  s_tr->add_option("--kernel", tr.kernel)->check(CLI::IsMember({"linear", "rbf", "polynomial", "sigmoid"}));
  s_tr->add_option("--C", tr.C);
  s_tr->add_option("--gamma", tr.gamma, "Kernel gamma (<= 0: 1/bands)");
  s_tr->add_option("--max-per-class", tr.max_per_class);
  s_tr->add_option("--seed", tr.seed);
  s_tr->add_option("--cv", tr.cv, "Stratified k-fold cross-validation");

  ClassifyArgs cl;
  auto* s_cl = app.add_subcommand("classify", "Per-pixel class probabilities from a trained model");
  s_cl->add_option("--cube", cl.cube)->required()->check(CLI::ExistingFile);
  s_cl->add_option("--model", cl.model)->required()->check(CLI::ExistingFile);
  s_cl->add_option("--out", cl.out, "Output directory")->required();

  SegmentArgs sg;
  auto* s_sg = app.add_subcommand("segment", "Hierarchical k-means segmentation");
  s_sg->add_option("--cube", sg.cube)->required()->check(CLI::ExistingFile);
  s_sg->add_option("--out", sg.out, "Segmentation header")->required();
  s_sg->add_option("--clusters", sg.clusters);
  s_sg->add_option("--seed", sg.seed);
  s_sg->add_option("--cluster-metric", sg.metric)->check(CLI::IsMember({"euclidean", "spherical"}));

  FuseArgs fu;
  auto* s_fu = app.add_subcommand("fuse", "Majority vote of a segmentation and a class map, with renders");
  s_fu->add_option("--segmentation", fu.segmentation)->required()->check(CLI::ExistingFile);
  s_fu->add_option("--classes", fu.classes)->required()->check(CLI::ExistingFile);
  s_fu->add_option("--out", fu.out, "Output directory")->required();

  RunArgs rn;
  auto* s_rn = app.add_subcommand("run", "End-to-end pipeline from a JSON config");
  s_rn->add_option("--config", rn.config)->required()->check(CLI::ExistingFile);
  s_rn->add_option("--output", rn.output, "Override the output directory");
  s_rn->add_option("--mode", rn.mode)->check(CLI::IsMember({"sequential", "concurrent"}));
  s_rn->add_option("--clusters", rn.clusters);
  s_rn->add_option("--K", rn.K);
  s_rn->add_option("--lambda", rn.lambda);

  SweepArgs sw;
  auto* s_sw = app.add_subcommand("sweep", "KNN filter over the K x lambda grid");
  s_sw->add_option("--config", sw.config)->required()->check(CLI::ExistingFile);
  s_sw->add_option("--out", sw.out)->required();

  BenchArgs bn;
  auto* s_bn = app.add_subcommand("bench", "Stage timings and sequential/accelerated totals");
  s_bn->add_option("--config", bn.config, "Run the pipeline in both modes")->check(CLI::ExistingFile);
  s_bn->add_option("--table", bn.table, "CSV of stage timings to aggregate")->check(CLI::ExistingFile);
  s_bn->add_option("--out", bn.out, "JSON report");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*s_ph) return cmd_phantom(ph);
    if (*s_pp) return cmd_preprocess(pp);
    if (*s_le) return cmd_label_export(le);
    if (*s_tr) return cmd_train(tr);
    if (*s_cl) return cmd_classify(cl);
    if (*s_sg) return cmd_segment(sg);
    if (*s_fu) return cmd_fuse(fu);
    if (*s_rn) return cmd_run(rn);
    if (*s_sw) return cmd_sweep(sw);
    if (*s_bn) return cmd_bench(bn);
  } catch (const hsi::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return int(e.kind());
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
