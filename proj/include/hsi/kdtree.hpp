#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <numeric>
#include <queue>
#include <vector>

namespace hsi {

using Point3 = std::array<double, 3>;

inline double sq_dist(const Point3& a, const Point3& b) {
  const double d0 = a[0] - b[0], d1 = a[1] - b[1], d2 = a[2] - b[2];
  return d0 * d0 + d1 * d1 + d2 * d2;
}

/// Neighbor ordering: smaller distance first, then lower index.
struct Neighbor {
  double dist2;
  std::size_t index;
  friend bool operator<(const Neighbor& a, const Neighbor& b) {
    return a.dist2 < b.dist2 || (a.dist2 == b.dist2 && a.index < b.index);
  }
};

/// Static 3-D k-d tree with exact k-nearest-neighbor queries. Results match a
/// brute-force scan under the (distance, index) order, including ties.
class KdTree3 {
 public:
  explicit KdTree3(std::vector<Point3> points, std::size_t leaf_size = 16)
      : points_(std::move(points)), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
    order_.resize(points_.size());
    std::iota(order_.begin(), order_.end(), std::size_t(0));
    if (!points_.empty()) build(0, points_.size());
  }

  std::size_t size() const noexcept { return points_.size(); }
  const Point3& point(std::size_t i) const { return points_[i]; }

  /// The k nearest points to `q`, sorted ascending; `skip` (if < size) is excluded.
  std::vector<Neighbor> knn(const Point3& q, std::size_t k, std::size_t skip = std::size_t(-1)) const {
    std::priority_queue<Neighbor> heap;  // max-heap: worst candidate on top
    if (k > 0 && !nodes_.empty()) search(0, q, k, skip, heap);
    std::vector<Neighbor> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
      out.push_back(heap.top());
      heap.pop();
    }
    std::reverse(out.begin(), out.end());
    return out;
  }

 private:
  struct Node {
    std::size_t begin, end;  // range in order_
    Point3 lo, hi;           // bounding box
    int axis = -1;           // -1 for leaves
    std::size_t left = 0, right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end) {
    Node node{begin, end, points_[order_[begin]], points_[order_[begin]]};
    for (std::size_t i = begin; i < end; ++i)
      for (int a = 0; a < 3; ++a) {
        node.lo[a] = std::min(node.lo[a], points_[order_[i]][a]);
        node.hi[a] = std::max(node.hi[a], points_[order_[i]][a]);
      }
    const std::size_t id = nodes_.size();
    nodes_.push_back(node);
    if (end - begin <= leaf_size_) return id;

    int axis = 0;
    for (int a = 1; a < 3; ++a)
      if (node.hi[a] - node.lo[a] > node.hi[axis] - node.lo[axis]) axis = a;
    if (!(node.hi[axis] > node.lo[axis])) return id;  // all points identical
    const std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + std::ptrdiff_t(begin), order_.begin() + std::ptrdiff_t(mid),
                     order_.begin() + std::ptrdiff_t(end), [&](std::size_t x, std::size_t y) {
                       return points_[x][axis] < points_[y][axis] || (points_[x][axis] == points_[y][axis] && x < y);
                     });
    const std::size_t left = build(begin, mid);
    const std::size_t right = build(mid, end);
    nodes_[id].axis = axis;
    nodes_[id].left = left;
    nodes_[id].right = right;
    return id;
  }

  static double box_dist2(const Node& n, const Point3& q) {
    double d = 0.0;
    for (int a = 0; a < 3; ++a) {
      const double v = q[a] < n.lo[a] ? n.lo[a] - q[a] : (q[a] > n.hi[a] ? q[a] - n.hi[a] : 0.0);
      d += v * v;
    }
    return d;
  }

  void search(std::size_t id, const Point3& q, std::size_t k, std::size_t skip,
              std::priority_queue<Neighbor>& heap) const {
    const Node& n = nodes_[id];
    // Strict comparison keeps equal-distance boxes in play for index tie-breaks.
    if (heap.size() == k && box_dist2(n, q) > heap.top().dist2) return;
    if (n.axis < 0) {
      for (std::size_t i = n.begin; i < n.end; ++i) {
        const std::size_t idx = order_[i];
        if (idx == skip) continue;
        const Neighbor cand{sq_dist(points_[idx], q), idx};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      return;
    }
    const Node& l = nodes_[n.left];
    const Node& r = nodes_[n.right];
    if (box_dist2(l, q) <= box_dist2(r, q)) {
      search(n.left, q, k, skip, heap);
      search(n.right, q, k, skip, heap);
    } else {
      search(n.right, q, k, skip, heap);
      search(n.left, q, k, skip, heap);
    }
  }

  std::vector<Point3> points_;
  std::size_t leaf_size_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace hsi
