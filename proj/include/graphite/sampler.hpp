#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string_view>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace graphite {

enum class SampleScheme { RandomNode, RandomEdge, RandomWalk };

inline SampleScheme parse_scheme(std::string_view s) {
  if (s == "rn" || s == "RN") return SampleScheme::RandomNode;
  if (s == "re" || s == "RE") return SampleScheme::RandomEdge;
  if (s == "rw" || s == "RW") return SampleScheme::RandomWalk;
  throw ValidationError("unknown sampling scheme '" + std::string(s) + "'");
}

inline const char* scheme_name(SampleScheme s) {
  switch (s) {
    case SampleScheme::RandomNode: return "rn";
    case SampleScheme::RandomEdge: return "re";
    case SampleScheme::RandomWalk: return "rw";
  }
  return "?";
}

struct SampleSpec {
  SampleScheme scheme{SampleScheme::RandomNode};
  double p{0.5};                // inclusion probability (RN/RE) or restart probability (RW)
  double target_fraction{1.0};  // RW only
  std::uint64_t rng_seed{0};

  void validate() const {
    if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must be in [0, 1]");
    if (!(target_fraction > 0.0 && target_fraction <= 1.0)) {
      throw ValidationError("target_fraction must be in (0, 1]");
    }
  }
};

struct Sample {
  Graph graph;
  /// origin[i] is the source-graph vertex behind sampled vertex i.
  std::vector<VertexId> origin;
  /// False when a random walk hit its step cap before reaching its target.
  bool complete{true};
  std::size_t steps{0};
};

inline Sample sample_rn(const Graph& g, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must be in [0, 1]");
  Rng rng(seed);
  std::vector<VertexId> keep;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (rng.bernoulli(p)) keep.push_back(v);
  }
  return {g.induced(keep), keep, true, 0};
}

/// Keeps each edge w.p. p; the vertex set is the endpoints of kept edges.
inline Sample sample_re(const Graph& g, double p, std::uint64_t seed) {
  if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("p must be in [0, 1]");
  Rng rng(seed);
  std::vector<Edge> kept;
  std::vector<bool> touched(g.vertex_count(), false);
  for (const auto& e : g.edges()) {
    if (rng.bernoulli(p)) {
      kept.push_back(e);
      touched[e.first] = touched[e.second] = true;
    }
  }
  std::vector<VertexId> keep;
  std::vector<VertexId> remap(g.vertex_count(), 0);
  std::vector<VertexMeta> meta;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (!touched[v]) continue;
    remap[v] = static_cast<VertexId>(keep.size());
    keep.push_back(v);
    meta.push_back(g.meta(v));
  }
  for (auto& [u, v] : kept) {
    u = remap[u];
    v = remap[v];
  }
  return {Graph(std::move(meta), std::move(kept), g.directed()), keep, true, 0};
}

/// Random walk with restarts. Stops once ceil(target_fraction * N) distinct
/// vertices are visited or after 100 * N steps (then `complete` is false).
/// Dead ends jump uniformly regardless of p.
inline Sample sample_rw(const Graph& g, double p, double target_fraction, std::uint64_t seed) {
  SampleSpec{SampleScheme::RandomWalk, p, target_fraction, seed}.validate();
  const std::size_t n = g.vertex_count();
  if (n == 0) return {};

  Rng rng(seed);
  const auto target = static_cast<std::size_t>(std::ceil(target_fraction * static_cast<double>(n) - 1e-9));
  const std::size_t cap = 100 * n;

  std::vector<bool> visited(n, false);
  std::vector<VertexId> order;
  auto visit = [&](VertexId v) {
    if (!visited[v]) {
      visited[v] = true;
      order.push_back(v);
    }
  };

  VertexId current = static_cast<VertexId>(rng.below(n));
  visit(current);
  std::size_t steps = 0;
  while (order.size() < target && steps < cap) {
    const auto nb = g.neighbors(current);
    if (nb.empty() || rng.bernoulli(p)) {
      current = static_cast<VertexId>(rng.below(n));
    } else {
      current = nb[rng.below(nb.size())];
    }
    ++steps;
    visit(current);
  }
  std::sort(order.begin(), order.end());
  return {g.induced(order), order, order.size() >= target, steps};
}

inline Sample sample(const Graph& g, const SampleSpec& spec) {
  spec.validate();
  switch (spec.scheme) {
    case SampleScheme::RandomNode: return sample_rn(g, spec.p, spec.rng_seed);
    case SampleScheme::RandomEdge: return sample_re(g, spec.p, spec.rng_seed);
    case SampleScheme::RandomWalk: return sample_rw(g, spec.p, spec.target_fraction, spec.rng_seed);
  }
  throw ValidationError("unknown sampling scheme");
}

/// Kolmogorov-Smirnov statistic between two normalized degree CDFs.
inline double ks_distance(const DegreeHistogram& a, const DegreeHistogram& b) {
  if (a.n == 0 || b.n == 0) throw ValidationError("ks_distance needs non-empty histograms");
  auto ia = a.counts.begin();
  auto ib = b.counts.begin();
  double ca = 0;
  double cb = 0;
  double worst = 0;
  while (ia != a.counts.end() || ib != b.counts.end()) {
    std::size_t deg;
    if (ib == b.counts.end() || (ia != a.counts.end() && ia->first <= ib->first)) {
      deg = ia->first;
    } else {
      deg = ib->first;
    }
    if (ia != a.counts.end() && ia->first == deg) ca += static_cast<double>((ia++)->second);
    if (ib != b.counts.end() && ib->first == deg) cb += static_cast<double>((ib++)->second);
    worst = std::max(worst, std::abs(ca / static_cast<double>(a.n) - cb / static_cast<double>(b.n)));
  }
  return worst;
}

/// Expected RE output size: sum over v of 1 - (1-p)^deg(v).
inline double expected_re_vertices(const Graph& g, double p) {
  double total = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    total += 1.0 - std::pow(1.0 - p, static_cast<double>(g.degree(v)));
  }
  return total;
}

/// Edge probability whose expected RE vertex count equals `target_vertices`.
inline double matched_edge_probability(const Graph& g, double target_vertices) {
  double lo = 0.0;
  double hi = 1.0;
  if (expected_re_vertices(g, hi) < target_vertices) return 1.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    (expected_re_vertices(g, mid) < target_vertices ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace graphite
