#pragma once

#include <algorithm>
#include <array>
#include <sstream>
#include <string>
#include <vector>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/io.hpp"
#include "hsi/label_map.hpp"

namespace hsi {

/// Column order of density vectors and of the density CSV.
inline constexpr std::array<ClassCode, kNumClasses> kDensityOrder{ClassCode::Tumor, ClassCode::Normal, ClassCode::Vessel,
                                                                  ClassCode::Background};

inline constexpr int density_slot(ClassCode c) {
  switch (c) {
    case ClassCode::Tumor: return 0;
    case ClassCode::Normal: return 1;
    case ClassCode::Vessel: return 2;
    case ClassCode::Background: return 3;
    default: return -1;
  }
}

/// Per-cluster class proportions, slots ordered Tumor, Normal, Vessel, Background.
struct ClusterClassDensity {
  std::vector<std::array<double, kNumClasses>> proportions;
  std::vector<std::size_t> members;

  std::size_t clusters() const noexcept { return proportions.size(); }
  double of(std::size_t cluster, ClassCode c) const { return proportions[cluster][std::size_t(density_slot(c))]; }

  /// Most frequent class; ties go to the lowest class code.
  ClassCode winner(std::size_t cluster) const {
    ClassCode best = kClasses[0];
    for (ClassCode c : kClasses)
      if (of(cluster, c) > of(cluster, best)) best = c;
    return best;
  }
};

namespace detail {

inline void check_fusion_inputs(const SegmentationMap& seg, const LabelMap& classes) {
  if (seg.rows != classes.rows || seg.cols != classes.cols)
    throw DataError("segmentation " + std::to_string(seg.rows) + "x" + std::to_string(seg.cols) +
                    " vs classification " + std::to_string(classes.rows) + "x" + std::to_string(classes.cols));
  if (seg.ids.size() != seg.rows * seg.cols || classes.codes.size() != classes.rows * classes.cols)
    throw DataError("fusion input shape is inconsistent");
}

}  // namespace detail

inline ClusterClassDensity class_density(const SegmentationMap& seg, const LabelMap& classes) {
  detail::check_fusion_inputs(seg, classes);
  if (seg.n_clusters < 1) throw DataError("segmentation has no clusters");
  const auto k = std::size_t(seg.n_clusters);
  std::vector<std::array<std::size_t, kNumClasses>> counts(k, std::array<std::size_t, kNumClasses>{});
  ClusterClassDensity d;
  d.members.assign(k, 0);
  for (std::size_t p = 0; p < seg.pixels(); ++p) {
    const int id = seg.ids[p];
    if (id < 0 || id >= seg.n_clusters) throw DataError("cluster id " + std::to_string(id) + " out of range");
    const ClassCode c = classes.codes[p];
    if (c == ClassCode::Unlabeled)
      throw DataError("unlabeled pixel at (" + std::to_string(p / seg.cols) + ", " + std::to_string(p % seg.cols) +
                      ") in classification map");
    ++counts[std::size_t(id)][std::size_t(density_slot(c))];
    ++d.members[std::size_t(id)];
  }
  d.proportions.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (d.members[i] == 0) throw DataError("cluster " + std::to_string(i) + " is empty");
    for (int s = 0; s < kNumClasses; ++s)
      d.proportions[i][std::size_t(s)] = double(counts[i][std::size_t(s)]) / double(d.members[i]);
  }
  return d;
}

/// Every pixel takes the most frequent class of its cluster.
inline LabelMap majority_vote(const SegmentationMap& seg, const LabelMap& classes) {
  const auto d = class_density(seg, classes);
  LabelMap out(seg.rows, seg.cols);
  for (std::size_t p = 0; p < seg.pixels(); ++p) out.codes[p] = d.winner(std::size_t(seg.ids[p]));
  return out;
}

inline std::array<double, 3> class_color(ClassCode c) {
  switch (c) {
    case ClassCode::Tumor: return {1, 0, 0};
    case ClassCode::Normal: return {0, 1, 0};
    case ClassCode::Vessel: return {0, 0, 1};
    case ClassCode::Background: return {0, 0, 0};
    default: throw DataError("unlabeled pixel has no map color");
  }
}

inline RenderedMap render_mv(const LabelMap& map) {
  RenderedMap out(map.rows, map.cols);
  for (std::size_t p = 0; p < map.pixels(); ++p) out.set(p, class_color(map.codes[p]));
  return out;
}

namespace detail {

inline void check_density(const SegmentationMap& seg, const ClusterClassDensity& d) {
  if (d.clusters() != std::size_t(seg.n_clusters))
    throw DataError("density has " + std::to_string(d.clusters()) + " clusters, segmentation " +
                    std::to_string(seg.n_clusters));
}

template <class F>
RenderedMap render_clusters(const SegmentationMap& seg, const ClusterClassDensity& d, F&& color) {
  check_density(seg, d);
  std::vector<std::array<double, 3>> palette(d.clusters());
  for (std::size_t i = 0; i < d.clusters(); ++i) palette[i] = color(i);
  RenderedMap out(seg.rows, seg.cols);
  for (std::size_t p = 0; p < seg.pixels(); ++p) out.set(p, palette[std::size_t(seg.ids[p])]);
  return out;
}

}  // namespace detail

/// Winning class color scaled by its proportion; background stays black.
inline RenderedMap render_omd(const SegmentationMap& seg, const ClusterClassDensity& d) {
  return detail::render_clusters(seg, d, [&](std::size_t i) {
    const ClassCode w = d.winner(i);
    auto rgb = class_color(w);
    for (double& v : rgb) v *= d.of(i, w);
    return rgb;
  });
}

/// R, G, B = tumor, normal, vessel proportions among the cluster's three
/// largest classes; the smallest is zeroed. Background-won clusters are black.
inline RenderedMap render_tmd(const SegmentationMap& seg, const ClusterClassDensity& d) {
  return detail::render_clusters(seg, d, [&](std::size_t i) -> std::array<double, 3> {
    if (d.winner(i) == ClassCode::Background) return {0, 0, 0};
    std::array<ClassCode, kNumClasses> rank = kClasses;
    std::stable_sort(rank.begin(), rank.end(), [&](ClassCode a, ClassCode b) { return d.of(i, a) > d.of(i, b); });
    auto kept = [&](ClassCode c) {
      return std::find(rank.begin(), rank.end() - 1, c) != rank.end() - 1 ? d.of(i, c) : 0.0;
    };
    return {kept(ClassCode::Tumor), kept(ClassCode::Normal), kept(ClassCode::Vessel)};
  });
}

inline std::string density_csv(const ClusterClassDensity& d) {
  std::ostringstream out;
  out << "cluster,tumor,normal,vessel,background\n";
  for (std::size_t i = 0; i < d.clusters(); ++i) {
    out << i;
    for (double v : d.proportions[i]) out << ',' << io::format_double(v);
    out << '\n';
  }
  return out.str();
}

}  // namespace hsi
