#pragma once

#include <algorithm>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/label_map.hpp"
#include "hsi/labeling.hpp"
#include "hsi/pipeline.hpp"
#include "hsi/png.hpp"

namespace hsi::service {

/// Request failure carrying the HTTP status to report.
class ServiceError : public std::runtime_error {
 public:
  ServiceError(int status, const std::string& what) : std::runtime_error(what), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

inline int http_status(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::Config: return 400;
    case ErrorKind::Data: return 422;
    case ErrorKind::Numeric: return 500;
  }
  return 500;
}

/// Runs `f`, converting library errors into service errors.
template <class F>
auto guarded(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw ServiceError(http_status(e), e.what());
  }
}

inline nlohmann::json summary_json(const DatasetSummary& s) {
  nlohmann::json j;
  for (ClassCode c : kClasses) j[std::string(class_name(c))] = s[c];
  j["total"] = s.total;
  return j;
}

inline nlohmann::json rle_json(const MaskRuns& runs) {
  nlohmann::json a = nlohmann::json::array();
  for (const auto& [s, n] : runs) a.push_back({s, n});
  return a;
}

inline MaskRuns rle_from_json(const nlohmann::json& j) {
  if (!j.is_array()) throw ServiceError(400, "mask_rle must be an array of [start, len] pairs");
  MaskRuns runs;
  for (const auto& r : j) {
    if (!r.is_array() || r.size() != 2 || !r[0].is_number_unsigned() || !r[1].is_number_unsigned())
      throw ServiceError(400, "mask_rle entries must be [start, len] with non-negative integers");
    runs.emplace_back(r[0].get<std::size_t>(), r[1].get<std::size_t>());
  }
  return runs;
}

/// Directory layout:
///   <data>/<id>.hdr              cube (plus its payload)
///   <data>/refs/<id>/white.hdr   calibration references for classify
///   <data>/refs/<id>/dark.hdr
///   <data>/labels/<id>.hdr       persisted label map
///   <data>/runs/<id>/            pipeline output bundle
class LabelService {
 public:
  explicit LabelService(std::filesystem::path data_dir, std::size_t undo_depth = 64)
      : dir_(std::move(data_dir)), undo_depth_(undo_depth) {
    if (!std::filesystem::is_directory(dir_)) throw ConfigError("data directory not found: " + dir_.string());
  }

  ~LabelService() {
    std::lock_guard lock(sessions_mu_);
    for (auto& [id, s] : sessions_)
      if (s->worker.joinable()) s->worker.join();
  }

  LabelService(const LabelService&) = delete;
  LabelService& operator=(const LabelService&) = delete;

  const std::filesystem::path& data_dir() const noexcept { return dir_; }

  nlohmann::json list_cubes() const {
    std::vector<std::filesystem::path> headers;
    std::error_code ec;
    for (const auto& e : std::filesystem::directory_iterator(dir_, ec))
      if (e.is_regular_file() && e.path().extension() == ".hdr") headers.push_back(e.path());
    if (ec) throw ServiceError(500, "cannot read data directory: " + ec.message());
    std::sort(headers.begin(), headers.end());
    nlohmann::json out = nlohmann::json::array();
    for (const auto& h : headers) {
      nlohmann::json e = {{"id", h.stem().string()}};
      try {
        const auto cube = load_cube(h);
        e["status"] = "ok";
        e["rows"] = cube.rows();
        e["cols"] = cube.cols();
        e["bands"] = cube.bands();
        e["wavelength_min"] = cube.wavelengths().front();
        e["wavelength_max"] = cube.wavelengths().back();
      } catch (const std::exception& ex) {
        e["status"] = "error";
        e["error"] = ex.what();
      }
      out.push_back(std::move(e));
    }
    return out;
  }

  std::vector<std::uint8_t> rgb_png(const std::string& id, double gamma) {
    auto& s = session(id);
    if (!(gamma > 0.0) || !std::isfinite(gamma)) throw ServiceError(400, "gamma must be positive");
    return guarded([&] { return png::encode(synth_rgb(s.cube, gamma)); });
  }

  nlohmann::json sam(const std::string& id, std::size_t row, std::size_t col, double threshold) {
    auto& s = session(id);
    const auto mask = guarded([&] { return sam_mask(s.cube, {row, col}, threshold); });
    return {{"mask_rle", rle_json(encode_rle(mask.set))}, {"count", mask.count()}};
  }

  nlohmann::json commit(const std::string& id, const MaskRuns& runs, ClassCode cls) {
    auto& s = session(id);
    if (cls == ClassCode::Unlabeled) throw ServiceError(400, "cannot assign the unlabeled class");
    std::unique_lock lock(s.mu);
    SamMask mask;
    mask.rows = s.labels.rows;
    mask.cols = s.labels.cols;
    mask.set = guarded([&] { return decode_rle(runs, s.labels.pixels()); });
    s.undo.push_back(s.labels);
    if (s.undo.size() > undo_depth_) s.undo.pop_front();
    s.labels = assign_class(std::move(s.labels), mask, cls);
    persist(id, s);
    return summary_json(dataset_summary(s.labels));
  }

  nlohmann::json undo(const std::string& id) {
    auto& s = session(id);
    std::unique_lock lock(s.mu);
    if (s.undo.empty()) throw ServiceError(409, "nothing to undo");
    s.labels = std::move(s.undo.back());
    s.undo.pop_back();
    persist(id, s);
    return summary_json(dataset_summary(s.labels));
  }

  nlohmann::json summary(const std::string& id) {
    auto& s = session(id);
    std::shared_lock lock(s.mu);
    auto j = summary_json(dataset_summary(s.labels));
    j["undo_depth"] = s.undo.size();
    return j;
  }

  LabelMap labels(const std::string& id) {
    auto& s = session(id);
    std::shared_lock lock(s.mu);
    return s.labels;
  }

  /// Starts a pipeline run on the current labels in the background.
  nlohmann::json classify(const std::string& id, const nlohmann::json& overrides) {
    auto& s = session(id);
    const auto refs = dir_ / "refs" / id;
    if (!std::filesystem::exists(refs / "white.hdr") || !std::filesystem::exists(refs / "dark.hdr"))
      throw ServiceError(409, "no calibration references under refs/" + id + "/");
    if (!overrides.is_null() && !overrides.is_object()) throw ServiceError(400, "config must be a JSON object");

    std::lock_guard run_lock(s.run_mu);
    if (s.state == "running") throw ServiceError(409, "a classification is already running for " + id);
    if (s.worker.joinable()) s.worker.join();

    nlohmann::json j = overrides.is_null() ? nlohmann::json::object() : overrides;
    j["cube"] = (dir_ / (id + ".hdr")).string();
    j["white"] = (refs / "white.hdr").string();
    j["dark"] = (refs / "dark.hdr").string();
    j["output"] = (dir_ / "runs" / id).string();
    j.erase("model");
    {
      std::unique_lock lock(s.mu);
      persist(id, s);
    }
    j["labels"] = label_path(id).string();
    PipelineConfig cfg = guarded([&] {
      auto c = pipeline_config_from_json(j);
      c.validate();
      return c;
    });

    s.state = "running";
    s.error.clear();
    s.worker = std::thread([this, &s, cfg] {
      std::string state = "done", error;
      try {
        run_pipeline(cfg);
      } catch (const std::exception& e) {
        state = "failed";
        error = e.what();
      }
      std::lock_guard lk(s.run_mu);
      s.state = state;
      s.error = error;
    });
    return {{"status", "running"}};
  }

  nlohmann::json classify_status(const std::string& id) {
    auto& s = session(id);
    std::lock_guard lock(s.run_mu);
    nlohmann::json j = {{"status", s.state}};
    if (!s.error.empty()) j["error"] = s.error;
    return j;
  }

  /// Blocks until the background run for `id` (if any) finishes.
  void wait_classify(const std::string& id) {
    auto& s = session(id);
    std::thread t;
    {
      std::lock_guard lock(s.run_mu);
      t = std::move(s.worker);
    }
    if (t.joinable()) t.join();
  }

  std::vector<std::uint8_t> map_png(const std::string& id, const std::string& kind) {
    session(id);
    if (kind != "mv" && kind != "omd" && kind != "tmd") throw ServiceError(400, "map kind must be mv, omd or tmd");
    const auto file = dir_ / "runs" / id / (kind + ".png");
    if (!std::filesystem::exists(file))
      throw ServiceError(404, "no " + kind + " map for " + id + "; POST /cubes/" + id + "/classify first");
    return io::read_bytes(file);
  }

 private:
  struct Session {
    HSCube cube;
    LabelMap labels;
    std::deque<LabelMap> undo;
    mutable std::shared_mutex mu;  // guards labels and undo
    std::mutex run_mu;             // guards state, error and worker
    std::string state = "idle";
    std::string error;
    std::thread worker;
  };

  std::filesystem::path label_path(const std::string& id) const { return dir_ / "labels" / (id + ".hdr"); }

  void persist(const std::string& id, const Session& s) const {
    std::filesystem::create_directories(dir_ / "labels");
    save_label_map(s.labels, label_path(id));
  }

  Session& session(const std::string& id) {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id == "." || id == "..")
      throw ServiceError(404, "unknown cube '" + id + "'");
    std::lock_guard lock(sessions_mu_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return *it->second;
    const auto header = dir_ / (id + ".hdr");
    if (!std::filesystem::is_regular_file(header)) throw ServiceError(404, "unknown cube '" + id + "'");
    auto s = std::make_unique<Session>();
    try {
      s->cube = load_cube(header);
    } catch (const Error& e) {
      throw ServiceError(422, "cube '" + id + "' cannot be loaded: " + e.what());
    }
    s->labels = LabelMap(s->cube.rows(), s->cube.cols());
    if (std::filesystem::exists(label_path(id))) {
      auto stored = guarded([&] { return load_label_map(label_path(id)); });
      if (stored.rows == s->labels.rows && stored.cols == s->labels.cols) s->labels = std::move(stored);
    }
    return *sessions_.emplace(id, std::move(s)).first->second;
  }

  std::filesystem::path dir_;
  std::size_t undo_depth_;
  std::mutex sessions_mu_;
  std::map<std::string, std::unique_ptr<Session>> sessions_;
};

}  // namespace hsi::service
