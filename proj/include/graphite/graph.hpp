#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "error.hpp"
#include "vec3.hpp"

namespace graphite {

using VertexId = std::uint32_t;
using Edge = std::pair<VertexId, VertexId>;

struct VertexMeta {
  std::string id;                               // document id, unique per graph
  std::optional<std::string> label;
  std::map<std::string, nlohmann::json> attributes;  // scalar or string values
  std::optional<std::size_t> cluster;
  std::optional<Vec3> position;

  friend bool operator==(const VertexMeta&, const VertexMeta&) = default;
};

/// Community assignment: vertex -> dense community index in [0, count).
struct Partition {
  std::vector<std::size_t> assignment;
  std::size_t count{0};

  static Partition singletons(std::size_t n) {
    Partition p;
    p.assignment.resize(n);
    for (std::size_t i = 0; i < n; ++i) p.assignment[i] = i;
    p.count = n;
    return p;
  }

  static Partition single(std::size_t n) {
    return Partition{std::vector<std::size_t>(n, 0), n == 0 ? 0u : 1u};
  }

  /// Relabels communities densely in order of first appearance.
  static Partition normalized(std::span<const std::size_t> labels) {
    Partition p;
    p.assignment.resize(labels.size());
    std::unordered_map<std::size_t, std::size_t> remap;
    for (std::size_t v = 0; v < labels.size(); ++v) {
      auto [it, inserted] = remap.try_emplace(labels[v], remap.size());
      p.assignment[v] = it->second;
    }
    p.count = remap.size();
    return p;
  }

  friend bool operator==(const Partition&, const Partition&) = default;
};

/// Simple undirected graph over dense vertex ids. Immutable once built.
///
/// Edges are stored normalized (smaller id first) and sorted; the
/// `directed` flag only records what the source document declared.
class Graph {
 public:
  Graph() = default;

  Graph(std::vector<VertexMeta> meta, std::vector<Edge> edges, bool directed = false)
      : meta_(std::move(meta)), edges_(std::move(edges)), directed_(directed) {
    for (auto& e : edges_) {
      if (e.first >= meta_.size() || e.second >= meta_.size()) {
        throw ValidationError("edge endpoint out of range");
      }
      if (e.first == e.second) throw ValidationError("self-loop in simple graph");
      if (e.first > e.second) std::swap(e.first, e.second);
    }
    std::sort(edges_.begin(), edges_.end());
    if (std::adjacent_find(edges_.begin(), edges_.end()) != edges_.end()) {
      throw ValidationError("duplicate edge in simple graph");
    }
    offsets_.assign(meta_.size() + 1, 0);
    for (const auto& [u, v] : edges_) {
      ++offsets_[u + 1];
      ++offsets_[v + 1];
    }
    for (std::size_t i = 0; i < meta_.size(); ++i) offsets_[i + 1] += offsets_[i];
    neighbors_.resize(2 * edges_.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [u, v] : edges_) {
      neighbors_[cursor[u]++] = v;
      neighbors_[cursor[v]++] = u;
    }
    for (std::size_t i = 0; i < meta_.size(); ++i) {
      std::sort(neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
                neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]));
    }
  }

  /// n vertices with ids "0".."n-1".
  static Graph with_vertices(std::size_t n, std::vector<Edge> edges) {
    std::vector<VertexMeta> meta(n);
    for (std::size_t i = 0; i < n; ++i) meta[i].id = std::to_string(i);
    return Graph(std::move(meta), std::move(edges));
  }

  std::size_t vertex_count() const noexcept { return meta_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  bool directed() const noexcept { return directed_; }
  bool empty() const noexcept { return meta_.empty(); }

  std::span<const Edge> edges() const noexcept { return edges_; }

  std::span<const VertexId> neighbors(VertexId v) const {
    return std::span<const VertexId>(neighbors_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
  }

  std::size_t degree(VertexId v) const { return offsets_[v + 1] - offsets_[v]; }

  bool has_edge(VertexId u, VertexId v) const {
    auto nb = neighbors(u);
    return std::binary_search(nb.begin(), nb.end(), v);
  }

  const VertexMeta& meta(VertexId v) const { return meta_[v]; }
  std::span<const VertexMeta> meta() const noexcept { return meta_; }

  /// Subgraph induced by `keep` (in the given order). Metadata is copied.
  Graph induced(std::span<const VertexId> keep) const {
    std::vector<std::int64_t> remap(meta_.size(), -1);
    std::vector<VertexMeta> meta;
    meta.reserve(keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) {
      remap[keep[i]] = static_cast<std::int64_t>(i);
      meta.push_back(meta_[keep[i]]);
    }
    std::vector<Edge> edges;
    for (const auto& [u, v] : edges_) {
      if (remap[u] >= 0 && remap[v] >= 0) {
        edges.emplace_back(static_cast<VertexId>(remap[u]), static_cast<VertexId>(remap[v]));
      }
    }
    return Graph(std::move(meta), std::move(edges), directed_);
  }

  friend bool operator==(const Graph& a, const Graph& b) {
    return a.directed_ == b.directed_ && a.meta_ == b.meta_ && a.edges_ == b.edges_;
  }

 private:
  std::vector<VertexMeta> meta_;
  std::vector<Edge> edges_;
  bool directed_{false};
  std::vector<std::size_t> offsets_{0};
  std::vector<VertexId> neighbors_;
};

struct IngestReport {
  std::size_t self_loops_dropped{0};
  std::size_t duplicates_merged{0};
};

struct LoadResult {
  Graph graph;
  IngestReport report;
};

struct DegreeHistogram {
  std::map<std::size_t, std::size_t> counts;
  std::size_t n{0};

  friend bool operator==(const DegreeHistogram&, const DegreeHistogram&) = default;
};

namespace detail {

inline std::string edge_text(std::size_t index, const nlohmann::json& edge) {
  return "edge #" + std::to_string(index) + " " + edge.dump();
}

inline Vec3 parse_position(const nlohmann::json& pos, const std::string& node_id) {
  if (!pos.is_array() || pos.size() != 3) {
    throw ValidationError("node '" + node_id + "': pos must be [x, y, z]");
  }
  Vec3 p;
  double* out[3] = {&p.x, &p.y, &p.z};
  for (std::size_t i = 0; i < 3; ++i) {
    if (!pos[i].is_number()) throw ValidationError("node '" + node_id + "': pos must be numeric");
    *out[i] = pos[i].get<double>();
  }
  if (!is_finite(p)) throw ValidationError("node '" + node_id + "': pos must be finite");
  return p;
}

}  // namespace detail

/// Parses an interchange document.
///
/// Self-loops are dropped and repeated unordered pairs merged; both are
/// counted in the report. Node ids map to VertexIds in document order.
inline LoadResult load_graph(std::string_view bytes) {
  using nlohmann::json;
  json doc;
  try {
    doc = json::parse(bytes.begin(), bytes.end());
  } catch (const json::parse_error& e) {
    throw ParseError(e.what(), e.byte);
  }
  if (!doc.is_object()) throw ParseError("document root must be an object", 0);

  bool directed = false;
  if (auto it = doc.find("directed"); it != doc.end()) {
    if (!it->is_boolean()) throw ValidationError("'directed' must be a boolean");
    directed = it->get<bool>();
  }

  auto nodes_it = doc.find("nodes");
  if (nodes_it == doc.end() || !nodes_it->is_array()) {
    throw ValidationError("'nodes' must be an array");
  }

  std::vector<VertexMeta> meta;
  meta.reserve(nodes_it->size());
  std::unordered_map<std::string, VertexId> index;
  for (const auto& node : *nodes_it) {
    if (!node.is_object()) throw ValidationError("node entries must be objects");
    auto id_it = node.find("id");
    if (id_it == node.end() || !id_it->is_string()) {
      throw ValidationError("node without string 'id'");
    }
    VertexMeta m;
    m.id = id_it->get<std::string>();
    if (auto it = node.find("label"); it != node.end() && !it->is_null()) {
      if (!it->is_string() || it->get_ref<const std::string&>().empty()) {
        throw ValidationError("node '" + m.id + "': label must be a non-empty string");
      }
      m.label = it->get<std::string>();
    }
    if (auto it = node.find("cluster"); it != node.end() && !it->is_null()) {
      if (!it->is_number_integer() || it->get<std::int64_t>() < 0) {
        throw ValidationError("node '" + m.id + "': cluster must be a non-negative integer");
      }
      m.cluster = it->get<std::size_t>();
    }
    if (auto it = node.find("pos"); it != node.end() && !it->is_null()) {
      m.position = detail::parse_position(*it, m.id);
    }
    if (auto it = node.find("attrs"); it != node.end() && !it->is_null()) {
      if (!it->is_object()) throw ValidationError("node '" + m.id + "': attrs must be an object");
      for (const auto& [key, value] : it->items()) {
        if (value.is_structured()) {
          throw ValidationError("node '" + m.id + "': attribute '" + key + "' must be scalar");
        }
        m.attributes.emplace(key, value);
      }
    }
    auto [pos, inserted] = index.emplace(m.id, static_cast<VertexId>(meta.size()));
    if (!inserted) throw ValidationError("duplicate node id '" + m.id + "'");
    meta.push_back(std::move(m));
  }

  IngestReport report;
  std::vector<Edge> edges;
  if (auto edges_it = doc.find("edges"); edges_it != doc.end()) {
    if (!edges_it->is_array()) throw ValidationError("'edges' must be an array");
    std::unordered_set<std::uint64_t> seen;
    std::size_t i = 0;
    for (const auto& e : *edges_it) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_string() || !e[1].is_string()) {
        throw ValidationError(detail::edge_text(i, e) + " must be a pair of node ids");
      }
      auto a = index.find(e[0].get<std::string>());
      auto b = index.find(e[1].get<std::string>());
      if (a == index.end() || b == index.end()) {
        throw ValidationError(detail::edge_text(i, e) + " references an unknown vertex");
      }
      ++i;
      VertexId u = a->second;
      VertexId v = b->second;
      if (u == v) {
        ++report.self_loops_dropped;
        continue;
      }
      if (u > v) std::swap(u, v);
      if (!seen.insert((static_cast<std::uint64_t>(u) << 32) | v).second) {
        ++report.duplicates_merged;
        continue;
      }
      edges.emplace_back(u, v);
    }
  }
  return {Graph(std::move(meta), std::move(edges), directed), report};
}

inline DegreeHistogram degree_distribution(const Graph& g) {
  DegreeHistogram h;
  h.n = g.vertex_count();
  for (VertexId v = 0; v < g.vertex_count(); ++v) ++h.counts[g.degree(v)];
  return h;
}

/// Writes `g` as an interchange document, emitting whatever position and
/// cluster each vertex already carries.
inline std::string serialize(const Graph& g) {
  using nlohmann::json;
  json nodes = json::array();
  for (const auto& m : g.meta()) {
    json node = {{"id", m.id}};
    if (m.label) node["label"] = *m.label;
    if (m.cluster) node["cluster"] = *m.cluster;
    if (m.position) node["pos"] = {m.position->x, m.position->y, m.position->z};
    if (!m.attributes.empty()) node["attrs"] = json(m.attributes);
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& [u, v] : g.edges()) edges.push_back({g.meta(u).id, g.meta(v).id});
  json doc = {{"directed", g.directed()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
  return doc.dump();
}

/// Copy of `g` with every vertex carrying its layout position and cluster.
inline Graph annotate(const Graph& g, std::span<const Vec3> positions, const Partition& clusters) {
  const std::size_t n = g.vertex_count();
  if (positions.size() != n) {
    throw ValidationError("layout has " + std::to_string(positions.size()) + " positions for " +
                          std::to_string(n) + " vertices");
  }
  if (clusters.assignment.size() != n) {
    throw ValidationError("partition covers " + std::to_string(clusters.assignment.size()) +
                          " of " + std::to_string(n) + " vertices");
  }
  std::vector<VertexMeta> meta(g.meta().begin(), g.meta().end());
  for (std::size_t v = 0; v < n; ++v) {
    if (!is_finite(positions[v])) throw ValidationError("non-finite position for vertex " + meta[v].id);
    if (clusters.assignment[v] >= clusters.count) {
      throw ValidationError("cluster index out of range for vertex " + meta[v].id);
    }
    meta[v].position = positions[v];
    meta[v].cluster = clusters.assignment[v];
  }
  return Graph(std::move(meta), std::vector<Edge>(g.edges().begin(), g.edges().end()), g.directed());
}

inline std::string serialize_annotated(const Graph& g, std::span<const Vec3> positions,
                                       const Partition& clusters) {
  return serialize(annotate(g, positions, clusters));
}

}  // namespace graphite
