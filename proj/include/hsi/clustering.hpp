#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "hsi/cube.hpp"
#include "hsi/error.hpp"
#include "hsi/label_map.hpp"

namespace hsi {

enum class ClusterMetric { Euclidean, Spherical };

inline std::string metric_name(ClusterMetric m) { return m == ClusterMetric::Euclidean ? "euclidean" : "spherical"; }

inline ClusterMetric parse_metric(const std::string& s) {
  if (s == "euclidean") return ClusterMetric::Euclidean;
  if (s == "spherical") return ClusterMetric::Spherical;
  throw ConfigError("unknown cluster metric '" + s + "' (euclidean, spherical)");
}

namespace detail {

/// Squared Euclidean distance, or cosine distance 1 - <x, c> on unit vectors.
inline double point_dist(ClusterMetric m, const Eigen::Ref<const Eigen::RowVectorXd>& x,
                         const Eigen::Ref<const Eigen::RowVectorXd>& c) {
  if (m == ClusterMetric::Euclidean) return (x - c).squaredNorm();
  return std::max(0.0, 1.0 - x.dot(c));
}

inline Eigen::MatrixXd unit_rows(const Eigen::MatrixXd& X) {
  Eigen::MatrixXd U = X;
  for (Eigen::Index i = 0; i < U.rows(); ++i) {
    const double n = U.row(i).norm();
    if (n > 0.0) U.row(i) /= n;
  }
  return U;
}

}  // namespace detail

struct KMeansResult {
  std::vector<int> assignments;
  Eigen::MatrixXd centroids;  // k x d
  double wcss = 0.0;
  std::vector<double> wcss_history;  // after every Lloyd update
  int iterations = 0;
};

struct KMeansOptions {
  int max_iter = 300;
  ClusterMetric metric = ClusterMetric::Euclidean;
  /// Independent seedings; the run with the lowest WCSS is kept.
  int restarts = 10;
};

namespace detail {

/// One k-means++ seeding then Lloyd iterations until the assignment is a
/// fixpoint. An empty cluster is re-seeded at the point farthest from its
/// centroid. With the spherical metric, points and centroids live on the unit sphere.
inline KMeansResult kmeans_run(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& opt) {
  const Eigen::Index n = points.rows();
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (n < k) throw ConfigError("kmeans: " + std::to_string(n) + " points for k=" + std::to_string(k));
  const auto metric = opt.metric;
  const Eigen::MatrixXd X = metric == ClusterMetric::Spherical ? detail::unit_rows(points) : points;

  std::mt19937_64 rng(seed);
  KMeansResult res;
  res.centroids.resize(k, X.cols());
  {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    res.centroids.row(0) = X.row(pick(rng));
    std::vector<double> d(std::size_t(n), INFINITY);
    for (int c = 1; c < k; ++c) {
      double total = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        d[std::size_t(i)] = std::min(d[std::size_t(i)], detail::point_dist(metric, X.row(i), res.centroids.row(c - 1)));
        total += d[std::size_t(i)];
      }
      Eigen::Index chosen = 0;
      if (total > 0.0) {
        double u = std::uniform_real_distribution<double>(0.0, total)(rng);
        chosen = n - 1;
        for (Eigen::Index i = 0; i < n; ++i) {
          u -= d[std::size_t(i)];
          if (u < 0.0 && d[std::size_t(i)] > 0.0) {
            chosen = i;
            break;
          }
        }
      } else {
        chosen = pick(rng);
      }
      res.centroids.row(c) = X.row(chosen);
    }
  }

  auto normalize_centroid = [&](int c) {
    if (metric != ClusterMetric::Spherical) return;
    const double nn = res.centroids.row(c).norm();
    if (nn > 0.0) res.centroids.row(c) /= nn;
  };

  res.assignments.assign(std::size_t(n), -1);
  std::vector<int> counts(static_cast<std::size_t>(k));
  for (int it = 0; it < opt.max_iter; ++it) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      int best = 0;
      double bd = detail::point_dist(metric, X.row(i), res.centroids.row(0));
      for (int c = 1; c < k; ++c) {
        const double dd = detail::point_dist(metric, X.row(i), res.centroids.row(c));
        if (dd < bd) {
          bd = dd;
          best = c;
        }
      }
      if (res.assignments[std::size_t(i)] != best) {
        res.assignments[std::size_t(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    res.iterations = it + 1;

    // Update step with empty-cluster repair.
    for (int pass = 0; pass < k + 1; ++pass) {
      res.centroids.setZero();
      std::fill(counts.begin(), counts.end(), 0);
      for (Eigen::Index i = 0; i < n; ++i) {
        res.centroids.row(res.assignments[std::size_t(i)]) += X.row(i);
        ++counts[std::size_t(res.assignments[std::size_t(i)])];
      }
      int empty = -1;
      for (int c = 0; c < k; ++c) {
        if (counts[std::size_t(c)] == 0) {
          if (empty < 0) empty = c;
          continue;
        }
        res.centroids.row(c) /= double(counts[std::size_t(c)]);
        normalize_centroid(c);
      }
      if (empty < 0) break;
      Eigen::Index far = -1;
      double fd = -1.0;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int a = res.assignments[std::size_t(i)];
        if (counts[std::size_t(a)] < 2) continue;
        const double dd = detail::point_dist(metric, X.row(i), res.centroids.row(a));
        if (dd > fd) {
          fd = dd;
          far = i;
        }
      }
      if (far < 0) break;
      res.assignments[std::size_t(far)] = empty;
    }

    double w = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      w += detail::point_dist(metric, X.row(i), res.centroids.row(res.assignments[std::size_t(i)]));
    res.wcss_history.push_back(w);
  }
  res.wcss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    res.wcss += detail::point_dist(metric, X.row(i), res.centroids.row(res.assignments[std::size_t(i)]));
  return res;
}

}  // namespace detail

/// Best of `opt.restarts` k-means++ runs. Run 0 uses `seed` itself; ties keep
/// the earlier run.
inline KMeansResult kmeans(const Eigen::MatrixXd& points, int k, std::uint64_t seed, const KMeansOptions& opt = {}) {
  if (opt.restarts < 1) throw ConfigError("kmeans: restarts must be >= 1");
  KMeansResult best = detail::kmeans_run(points, k, seed, opt);
  for (int r = 1; r < opt.restarts; ++r) {
    auto run = detail::kmeans_run(points, k, seed + std::uint64_t(r) * 0x9E3779B97F4A7C15ull, opt);
    if (run.wcss < best.wcss) best = std::move(run);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Divisive hierarchical k-means

struct ClusterNode {
  Eigen::RowVectorXd centroid;
  std::size_t count = 0;
  double wcss = 0.0;
  int parent = -1;
  int left = -1;
  int right = -1;
  int leaf_id = -1;  // >= 0 for leaves
  std::vector<std::size_t> members;  // pixel indices (not serialized)

  bool is_leaf() const noexcept { return left < 0; }
};

struct ClusterTree {
  std::vector<ClusterNode> nodes;  // nodes[0] is the root
  ClusterMetric metric = ClusterMetric::Euclidean;
  int n_leaves = 0;
  /// Fewer leaves than requested: no leaf could be split further.
  bool exhausted = false;

  double leaf_wcss() const {
    double w = 0.0;
    for (const auto& nd : nodes)
      if (nd.is_leaf()) w += nd.wcss;
    return w;
  }
};

struct HkmResult {
  SegmentationMap segmentation;
  ClusterTree tree;
  std::vector<double> leaf_wcss_history;  // total leaf WCSS after each split, starting with the root
};

namespace detail {

inline void summarize(ClusterNode& node, const Eigen::MatrixXd& X, ClusterMetric metric) {
  node.count = node.members.size();
  node.centroid = Eigen::RowVectorXd::Zero(X.cols());
  for (auto i : node.members) node.centroid += X.row(Eigen::Index(i));
  node.centroid /= double(node.count);
  if (metric == ClusterMetric::Spherical) {
    const double nn = node.centroid.norm();
    if (nn > 0.0) node.centroid /= nn;
  }
  node.wcss = 0.0;
  for (auto i : node.members) node.wcss += point_dist(metric, X.row(Eigen::Index(i)), node.centroid);
}

}  // namespace detail

/// Starts from one cluster holding every pixel and repeatedly splits the leaf
/// with the largest WCSS by 2-means until `n_clusters` leaves exist. Leaf ids
/// follow a left-first depth-first walk of the tree.
inline HkmResult hkm_segment(const HSCube& cube, int n_clusters, std::uint64_t seed,
                             ClusterMetric metric = ClusterMetric::Euclidean) {
  if (n_clusters < 1) throw ConfigError("hkm: n_clusters must be >= 1");
  if (cube.pixels() < std::size_t(n_clusters))
    throw ConfigError("hkm: " + std::to_string(cube.pixels()) + " pixels for " + std::to_string(n_clusters) + " clusters");
  if (n_clusters > 256) throw ConfigError("hkm: at most 256 clusters supported");

  const Eigen::MatrixXd raw = cube.pixel_matrix();
  const Eigen::MatrixXd X = metric == ClusterMetric::Spherical ? detail::unit_rows(raw) : raw;

  HkmResult res;
  auto& tree = res.tree;
  tree.metric = metric;
  ClusterNode root;
  root.members.resize(cube.pixels());
  std::iota(root.members.begin(), root.members.end(), std::size_t(0));
  detail::summarize(root, X, metric);
  tree.nodes.push_back(std::move(root));
  res.leaf_wcss_history.push_back(tree.leaf_wcss());

  std::vector<bool> unsplittable(1, false);
  int leaves = 1;
  std::uint64_t split_no = 0;
  while (leaves < n_clusters) {
    int target = -1;
    for (int i = 0; i < int(tree.nodes.size()); ++i) {
      const auto& nd = tree.nodes[std::size_t(i)];
      if (!nd.is_leaf() || unsplittable[std::size_t(i)] || nd.count < 2 || !(nd.wcss > 0.0)) continue;
      if (target < 0 || nd.wcss > tree.nodes[std::size_t(target)].wcss) target = i;
    }
    if (target < 0) {
      tree.exhausted = true;
      break;
    }
    const auto members = tree.nodes[std::size_t(target)].members;
    Eigen::MatrixXd sub(Eigen::Index(members.size()), raw.cols());
    for (std::size_t i = 0; i < members.size(); ++i) sub.row(Eigen::Index(i)) = raw.row(Eigen::Index(members[i]));
    const auto km = kmeans(sub, 2, seed + split_no++, {300, metric, 10});

    ClusterNode a, b;
    for (std::size_t i = 0; i < members.size(); ++i) (km.assignments[i] == 0 ? a : b).members.push_back(members[i]);
    if (a.members.empty() || b.members.empty()) {
      unsplittable[std::size_t(target)] = true;
      continue;
    }
    detail::summarize(a, X, metric);
    detail::summarize(b, X, metric);
    a.parent = b.parent = target;
    tree.nodes.push_back(std::move(a));
    tree.nodes.push_back(std::move(b));
    unsplittable.push_back(false);
    unsplittable.push_back(false);
    tree.nodes[std::size_t(target)].left = int(tree.nodes.size()) - 2;
    tree.nodes[std::size_t(target)].right = int(tree.nodes.size()) - 1;
    ++leaves;
    res.leaf_wcss_history.push_back(tree.leaf_wcss());
  }

  // Number leaves depth-first, left child first.
  auto& seg = res.segmentation;
  seg.rows = cube.rows();
  seg.cols = cube.cols();
  seg.ids.assign(cube.pixels(), -1);
  int next_id = 0;
  std::vector<int> stack{0};
  while (!stack.empty()) {
    const int id = stack.back();
    stack.pop_back();
    auto& nd = tree.nodes[std::size_t(id)];
    if (nd.is_leaf()) {
      nd.leaf_id = next_id++;
      for (auto p : nd.members) seg.ids[p] = nd.leaf_id;
    } else {
      stack.push_back(nd.right);
      stack.push_back(nd.left);
    }
  }
  seg.n_clusters = next_id;
  tree.n_leaves = next_id;
  return res;
}

inline nlohmann::json to_json(const ClusterTree& t) {
  nlohmann::json j;
  j["metric"] = metric_name(t.metric);
  j["leaves"] = t.n_leaves;
  j["exhausted"] = t.exhausted;
  j["nodes"] = nlohmann::json::array();
  for (std::size_t i = 0; i < t.nodes.size(); ++i) {
    const auto& nd = t.nodes[i];
    j["nodes"].push_back({{"id", i},
                          {"parent", nd.parent},
                          {"left", nd.left},
                          {"right", nd.right},
                          {"leaf_id", nd.leaf_id},
                          {"count", nd.count},
                          {"wcss", nd.wcss},
                          {"centroid", std::vector<double>(nd.centroid.data(), nd.centroid.data() + nd.centroid.size())}});
  }
  return j;
}

}  // namespace hsi
