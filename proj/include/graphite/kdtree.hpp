#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "vec3.hpp"

namespace graphite {

struct NearestHit {
  VertexId id;
  double distance;

  friend bool operator==(const NearestHit&, const NearestHit&) = default;
};

/// Static 3D kd-tree over (position, VertexId) pairs.
///
/// Each node stores one point; the split axis is the one with the widest
/// spread in the node's range, and the split point is the median.
class KdTree {
 public:
  using Entry = std::pair<Vec3, VertexId>;

  KdTree() = default;

  explicit KdTree(std::span<const Entry> points) : entries_(points.begin(), points.end()) {
    for (const auto& [p, id] : entries_) {
      if (!is_finite(p)) throw ValidationError("kd-tree point with non-finite coordinate");
    }
    nodes_.reserve(entries_.size());
    root_ = build(0, entries_.size(), 1);
  }

  /// Tree over a laid-out graph: every vertex must carry a position.
  static KdTree from_graph(const Graph& g) {
    std::vector<Entry> pts;
    pts.reserve(g.vertex_count());
    for (VertexId v = 0; v < g.vertex_count(); ++v) {
      if (!g.meta(v).position) throw ValidationError("vertex '" + g.meta(v).id + "' has no position");
      pts.emplace_back(*g.meta(v).position, v);
    }
    return KdTree(pts);
  }

  static KdTree from_positions(std::span<const Vec3> positions) {
    std::vector<Entry> pts;
    pts.reserve(positions.size());
    for (std::size_t i = 0; i < positions.size(); ++i) pts.emplace_back(positions[i], static_cast<VertexId>(i));
    return KdTree(pts);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  std::size_t height() const noexcept { return height_; }

  /// Exact Euclidean nearest neighbour; equal distances go to the smaller id.
  /// `visited`, when given, receives the number of nodes examined.
  std::optional<NearestHit> nearest(const Vec3& q, std::size_t* visited = nullptr) const {
    if (root_ < 0) return std::nullopt;
    Best best;
    std::size_t count = 0;
    search(root_, q, best, count);
    if (visited != nullptr) *visited = count;
    return NearestHit{best.id, std::sqrt(best.d2)};
  }

  /// Nearest point if it lies in the closed ball of radius r around q.
  std::optional<NearestHit> nearest_within(const Vec3& q, double r) const {
    if (!(r > 0.0)) throw ValidationError("radius must be > 0");
    auto hit = nearest(q);
    if (hit && hit->distance <= r) return hit;
    return std::nullopt;
  }

 private:
  struct Node {
    std::size_t entry;
    int axis;
    std::int32_t left{-1};
    std::int32_t right{-1};
  };

  struct Best {
    double d2{std::numeric_limits<double>::infinity()};
    VertexId id{std::numeric_limits<VertexId>::max()};
  };

  std::int32_t build(std::size_t lo, std::size_t hi, std::size_t depth) {
    if (lo >= hi) return -1;
    height_ = std::max(height_, depth);

    int axis = 0;
    double widest = -1.0;
    for (int a = 0; a < 3; ++a) {
      double mn = std::numeric_limits<double>::infinity();
      double mx = -mn;
      for (std::size_t i = lo; i < hi; ++i) {
        mn = std::min(mn, entries_[i].first[a]);
        mx = std::max(mx, entries_[i].first[a]);
      }
      if (mx - mn > widest) {
        widest = mx - mn;
        axis = a;
      }
    }

    const std::size_t mid = lo + (hi - lo) / 2;
    auto first = entries_.begin();
    std::nth_element(first + static_cast<std::ptrdiff_t>(lo), first + static_cast<std::ptrdiff_t>(mid),
                     first + static_cast<std::ptrdiff_t>(hi), [axis](const Entry& a, const Entry& b) {
                       const double ca = a.first[axis];
                       const double cb = b.first[axis];
                       return ca < cb || (ca == cb && a.second < b.second);
                     });

    const auto index = static_cast<std::int32_t>(nodes_.size());
    nodes_.push_back(Node{mid, axis});
    const auto left = build(lo, mid, depth + 1);
    const auto right = build(mid + 1, hi, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = left;
    nodes_[static_cast<std::size_t>(index)].right = right;
    return index;
  }

  void search(std::int32_t index, const Vec3& q, Best& best, std::size_t& count) const {
    const Node& node = nodes_[static_cast<std::size_t>(index)];
    ++count;
    const auto& [p, id] = entries_[node.entry];
    const double d2 = norm2(q - p);
    if (d2 < best.d2 || (d2 == best.d2 && id < best.id)) {
      best.d2 = d2;
      best.id = id;
    }
    const double diff = q[node.axis] - p[node.axis];
    const auto near = diff < 0 ? node.left : node.right;
    const auto far = diff < 0 ? node.right : node.left;
    if (near >= 0) search(near, q, best, count);
    // `<=` keeps equal-distance candidates reachable for the id tie-break.
    if (far >= 0 && diff * diff <= best.d2) search(far, q, best, count);
  }

  std::vector<Entry> entries_;
  std::vector<Node> nodes_;
  std::int32_t root_{-1};
  std::size_t height_{0};
};

}  // namespace graphite
