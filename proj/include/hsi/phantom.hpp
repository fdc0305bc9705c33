#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/label_map.hpp"
#include "hsi/labeling.hpp"

namespace hsi {

/// One painted region of a phantom. Regions are painted in order over the
/// fill class, so together they always tile the image.
struct PhantomRegion {
  enum class Shape { Rect, Disc };
  ClassCode cls = ClassCode::Tumor;
  Shape shape = Shape::Rect;
  // Rect: [r0, r1) x [c0, c1). Disc: center (r0, c0), radius r1.
  double r0 = 0, c0 = 0, r1 = 0, c1 = 0;
};

struct PhantomSpec {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t bands = 826;
  double wavelength_min = 400.0;
  double wavelength_max = 1000.0;
  ClassCode fill_class = ClassCode::Normal;
  std::vector<PhantomRegion> regions;
  /// Explicit endmembers (raw sensor units); classes missing here are generated.
  std::map<ClassCode, std::vector<double>> endmembers;
  double sam_floor = 0.3;
  double noise_sigma = 0.01;
  std::uint64_t seed = 1;

  /// Four-class layout: Normal fill, a Tumor disc, a Vessel stripe and a
  /// Background corner block.
  static PhantomSpec standard(std::size_t rows, std::size_t cols, std::size_t bands, double sigma,
                              std::uint64_t seed) {
    PhantomSpec s;
    s.rows = rows;
    s.cols = cols;
    s.bands = bands;
    s.noise_sigma = sigma;
    s.seed = seed;
    const double R = double(rows), C = double(cols);
    s.regions.push_back({ClassCode::Background, PhantomRegion::Shape::Rect, 0, 0, std::ceil(R / 4), std::ceil(C / 4)});
    s.regions.push_back({ClassCode::Vessel, PhantomRegion::Shape::Rect, 0, std::floor(0.70 * C), R,
                         std::floor(0.70 * C) + std::max(2.0, std::round(C / 8))});
    s.regions.push_back({ClassCode::Tumor, PhantomRegion::Shape::Disc, 0.6 * R, 0.4 * C, std::max(2.0, 0.22 * std::min(R, C)), 0});
    return s;
  }
};

struct Phantom {
  HSCube raw;     // sensor counts = endmember + noise
  HSCube clean;   // noiseless counts
  LabelMap truth;
  CalibrationRefs refs;
  std::map<ClassCode, std::vector<double>> endmembers;
};

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = n == 1 ? lo : lo + (hi - lo) * double(i) / double(n - 1);
  return out;
}

namespace detail {

/// Smooth positive spectrum peaked at a class-specific wavelength.
inline std::vector<double> auto_endmember(int slot, const std::vector<double>& wl, std::mt19937_64& rng) {
  const double lo = wl.front(), hi = wl.back();
  const double span = std::max(hi - lo, 1e-9);
  std::uniform_real_distribution<double> jitter(-0.03, 0.03);
  std::uniform_real_distribution<double> amp(0.7, 0.9);
  const double center = lo + span * ((slot + 0.5) / kNumClasses + jitter(rng));
  const double width = span * 0.1;
  const double a = amp(rng);
  std::vector<double> s(wl.size());
  for (std::size_t b = 0; b < wl.size(); ++b) {
    const double z = (wl[b] - center) / width;
    s[b] = 0.1 + a * std::exp(-z * z);
  }
  return s;
}

}  // namespace detail

inline LabelMap phantom_layout(const PhantomSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw ConfigError("phantom: empty image");
  if (spec.fill_class == ClassCode::Unlabeled) throw ConfigError("phantom: fill class cannot be Unlabeled");
  LabelMap map(spec.rows, spec.cols, spec.fill_class);
  for (const auto& reg : spec.regions) {
    if (reg.cls == ClassCode::Unlabeled) throw ConfigError("phantom: region class cannot be Unlabeled");
    if (reg.shape == PhantomRegion::Shape::Rect) {
      if (!(reg.r1 > reg.r0) || !(reg.c1 > reg.c0) || reg.r0 < 0 || reg.c0 < 0 || reg.r1 > double(spec.rows) ||
          reg.c1 > double(spec.cols))
        throw ConfigError("phantom: degenerate or out-of-bounds rectangle");
    } else if (!(reg.r1 > 0)) {
      throw ConfigError("phantom: disc radius must be positive");
    }
    bool any = false;
    for (std::size_t r = 0; r < spec.rows; ++r)
      for (std::size_t c = 0; c < spec.cols; ++c) {
        bool inside = false;
        if (reg.shape == PhantomRegion::Shape::Rect) {
          inside = double(r) >= reg.r0 && double(r) < reg.r1 && double(c) >= reg.c0 && double(c) < reg.c1;
        } else {
          const double dr = double(r) - reg.r0, dc = double(c) - reg.c0;
          inside = dr * dr + dc * dc <= reg.r1 * reg.r1;
        }
        if (inside) {
          map.codes[r * spec.cols + c] = reg.cls;
          any = true;
        }
      }
    if (!any) throw ConfigError("phantom: region covers no pixel");
  }
  return map;
}

inline Phantom generate_phantom(const PhantomSpec& spec) {
  if (spec.bands == 0) throw ConfigError("phantom: bands must be >= 1");
  if (!(spec.wavelength_max > spec.wavelength_min) && spec.bands > 1)
    throw ConfigError("phantom: wavelength range must be increasing");
  if (!(spec.noise_sigma >= 0.0)) throw ConfigError("phantom: noise sigma must be >= 0");

  Phantom ph;
  ph.truth = phantom_layout(spec);
  const auto wl = linspace(spec.wavelength_min, spec.wavelength_max, spec.bands);

  std::mt19937_64 rng(spec.seed);
  for (int i = 0; i < kNumClasses; ++i) {
    const ClassCode c = class_from_index(i);
    auto it = spec.endmembers.find(c);
    auto em = it != spec.endmembers.end() ? it->second : detail::auto_endmember(i, wl, rng);
    if (em.size() != spec.bands) throw ConfigError("phantom: endmember length differs from band count");
    ph.endmembers[c] = std::move(em);
  }
  // Only classes present in the layout need to be distinguishable.
  std::vector<bool> present(kNumClasses, false);
  for (ClassCode c : ph.truth.codes) present[std::size_t(class_index(c))] = true;
  for (int i = 0; i < kNumClasses; ++i)
    for (int j = i + 1; j < kNumClasses; ++j) {
      if (!present[std::size_t(i)] || !present[std::size_t(j)]) continue;
      const double angle = spectral_angle(ph.endmembers[class_from_index(i)], ph.endmembers[class_from_index(j)]);
      if (angle < spec.sam_floor)
        throw ConfigError("phantom: endmembers " + std::string(class_name(class_from_index(i))) + "/" +
                          std::string(class_name(class_from_index(j))) + " are " + io::format_double(angle) +
                          " rad apart, below the SAM floor");
    }

  const std::size_t n = spec.rows * spec.cols;
  std::vector<float> clean(n * spec.bands), noisy(n * spec.bands);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (std::size_t b = 0; b < spec.bands; ++b)
    for (std::size_t p = 0; p < n; ++p) {
      const double v = ph.endmembers[ph.truth.codes[p]][b];
      clean[b * n + p] = float(v);
      noisy[b * n + p] = float(spec.noise_sigma > 0.0 ? v + spec.noise_sigma * noise(rng) : v);
    }
  float max_signal = 0.0f;
  for (float v : noisy) max_signal = std::max(max_signal, v);
  if (!(max_signal > 0.0f)) throw ConfigError("phantom: signal must have a positive maximum");

  ph.clean = HSCube(spec.rows, spec.cols, wl, std::move(clean));
  ph.raw = HSCube(spec.rows, spec.cols, wl, std::move(noisy));
  ph.refs.white = HSCube(1, spec.cols, wl, std::vector<float>(spec.cols * spec.bands, 2.0f * max_signal));
  ph.refs.dark = HSCube(1, spec.cols, wl, std::vector<float>(spec.cols * spec.bands, 0.0f));
  return ph;
}

// ---------------------------------------------------------------------------
// JSON

inline ClassCode class_from_json(const nlohmann::json& j) {
  if (j.is_number_integer()) return checked_class(j.get<long long>());
  return parse_class(j.get<std::string>());
}

inline PhantomSpec phantom_spec_from_json(const nlohmann::json& j) {
  PhantomSpec s;
  try {
    s.rows = j.value("rows", s.rows);
    s.cols = j.value("cols", s.cols);
    s.bands = j.value("bands", s.bands);
    s.wavelength_min = j.value("wavelength_min", s.wavelength_min);
    s.wavelength_max = j.value("wavelength_max", s.wavelength_max);
    if (j.contains("fill_class")) s.fill_class = class_from_json(j["fill_class"]);
    s.sam_floor = j.value("sam_floor", s.sam_floor);
    s.noise_sigma = j.value("noise_sigma", s.noise_sigma);
    s.seed = j.value("seed", s.seed);
    if (j.value("layout", std::string()) == "standard") {
      auto std_spec = PhantomSpec::standard(s.rows, s.cols, s.bands, s.noise_sigma, s.seed);
      s.regions = std_spec.regions;
      s.fill_class = std_spec.fill_class;
    }
    if (j.contains("regions")) {
      for (const auto& r : j["regions"]) {
        PhantomRegion reg;
        reg.cls = class_from_json(r.at("class"));
        if (r.contains("rect")) {
          const auto v = r["rect"].get<std::vector<double>>();
          if (v.size() != 4) throw ConfigError("phantom: rect needs [r0, c0, r1, c1]");
          reg = {reg.cls, PhantomRegion::Shape::Rect, v[0], v[1], v[2], v[3]};
        } else if (r.contains("disc")) {
          const auto v = r["disc"].get<std::vector<double>>();
          if (v.size() != 3) throw ConfigError("phantom: disc needs [row, col, radius]");
          reg = {reg.cls, PhantomRegion::Shape::Disc, v[0], v[1], v[2], 0};
        } else {
          throw ConfigError("phantom: region needs 'rect' or 'disc'");
        }
        s.regions.push_back(reg);
      }
    }
    if (j.contains("endmembers"))
      for (const auto& [name, spectrum] : j["endmembers"].items())
        s.endmembers[parse_class(name)] = spectrum.get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("phantom spec: ") + e.what());
  }
  return s;
}

}  // namespace hsi
