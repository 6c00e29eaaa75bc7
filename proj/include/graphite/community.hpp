#pragma once

#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <tuple>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"

namespace graphite {

namespace detail {

inline void check_partition(const Graph& g, const Partition& part) {
  if (part.assignment.size() != g.vertex_count()) {
    throw ValidationError("partition size does not match vertex count");
  }
  for (auto c : part.assignment) {
    if (c >= part.count) throw ValidationError("community index out of range");
  }
}

}  // namespace detail

/// 4m^2 * Q as an exact integer: 4m * sum(e_c) - sum(D_c^2).
///
/// Every comparison between partitions goes through this value so ties
/// are decided exactly.
inline std::int64_t modularity_scaled(const Graph& g, const Partition& part) {
  detail::check_partition(g, part);
  const auto m = static_cast<std::int64_t>(g.edge_count());
  std::vector<std::int64_t> degree_sum(part.count, 0);
  std::int64_t internal = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    degree_sum[part.assignment[v]] += static_cast<std::int64_t>(g.degree(v));
  }
  for (const auto& [u, v] : g.edges()) {
    if (part.assignment[u] == part.assignment[v]) ++internal;
  }
  std::int64_t squares = 0;
  for (auto d : degree_sum) squares += d * d;
  return 4 * m * internal - squares;
}

/// Newman-Girvan modularity Q = sum_c (e_c/m - (D_c/2m)^2).
inline double modularity(const Graph& g, const Partition& part) {
  if (g.edge_count() == 0) throw ValidationError("modularity is undefined for an edgeless graph");
  const double m = static_cast<double>(g.edge_count());
  return static_cast<double>(modularity_scaled(g, part)) / (4.0 * m * m);
}

/// Change in Q from merging communities i and j:
/// e_ij/m - 2 (D_i/2m)(D_j/2m).
inline double merge_gain(const Graph& g, const Partition& part, std::size_t i, std::size_t j) {
  detail::check_partition(g, part);
  if (g.edge_count() == 0) throw ValidationError("modularity is undefined for an edgeless graph");
  if (i == j || i >= part.count || j >= part.count) throw ValidationError("invalid community pair");
  double di = 0;
  double dj = 0;
  double eij = 0;
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    if (part.assignment[v] == i) di += static_cast<double>(g.degree(v));
    if (part.assignment[v] == j) dj += static_cast<double>(g.degree(v));
  }
  for (const auto& [u, v] : g.edges()) {
    const auto cu = part.assignment[u];
    const auto cv = part.assignment[v];
    if ((cu == i && cv == j) || (cu == j && cv == i)) eij += 1;
  }
  const double m = static_cast<double>(g.edge_count());
  return eij / m - 2.0 * (di / (2 * m)) * (dj / (2 * m));
}

/// Greedy agglomeration: repeatedly merge the adjacent community pair with
/// the largest positive gain, ties to the smallest (i, j). Starts from
/// `start` (singletons for the classic algorithm).
inline Partition greedy_merge(const Graph& g, const Partition& start) {
  detail::check_partition(g, start);
  const auto m = static_cast<std::int64_t>(g.edge_count());
  const std::size_t c = start.count;
  if (m == 0 || c < 2) return Partition::normalized(start.assignment);

  std::vector<std::int64_t> deg(c, 0);
  std::vector<std::map<std::size_t, std::int64_t>> adj(c);
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    deg[start.assignment[v]] += static_cast<std::int64_t>(g.degree(v));
  }
  for (const auto& [u, v] : g.edges()) {
    const auto a = start.assignment[u];
    const auto b = start.assignment[v];
    if (a == b) continue;
    ++adj[a][b];
    ++adj[b][a];
  }

  // Gain scaled by 4m^2: 4m*e_ij - 2*D_i*D_j.
  auto score = [&](std::size_t i, std::size_t j, std::int64_t eij) { return 4 * m * eij - 2 * deg[i] * deg[j]; };

  using Key = std::tuple<std::int64_t, std::size_t, std::size_t>;  // (-score, lo, hi)
  std::multiset<Key> heap;
  std::vector<std::optional<Key>> best(c);

  auto refresh = [&](std::size_t i) {
    if (best[i]) {
      heap.erase(heap.find(*best[i]));
      best[i].reset();
    }
    for (const auto& [j, eij] : adj[i]) {
      Key k{-score(i, j, eij), std::min(i, j), std::max(i, j)};
      if (!best[i] || k < *best[i]) best[i] = k;
    }
    if (best[i]) heap.insert(*best[i]);
  };

  for (std::size_t i = 0; i < c; ++i) refresh(i);

  std::vector<std::size_t> merged_into(c);
  std::iota(merged_into.begin(), merged_into.end(), 0);

  while (!heap.empty()) {
    const auto [neg, a, b] = *heap.begin();
    if (-neg <= 0) break;

    for (auto x : {a, b}) {
      if (best[x]) {
        heap.erase(heap.find(*best[x]));
        best[x].reset();
      }
    }
    for (const auto& [x, cnt] : adj[b]) {
      if (x == a) continue;
      adj[a][x] += cnt;
      adj[x][a] += cnt;
      adj[x].erase(b);
    }
    adj[a].erase(b);
    adj[b].clear();
    deg[a] += deg[b];
    deg[b] = 0;
    merged_into[b] = a;

    refresh(a);
    for (const auto& [x, cnt] : adj[a]) refresh(x);
  }

  std::vector<std::size_t> labels(g.vertex_count());
  for (VertexId v = 0; v < g.vertex_count(); ++v) {
    auto r = start.assignment[v];
    while (merged_into[r] != r) r = merged_into[r];
    labels[v] = r;
  }
  return Partition::normalized(labels);
}

namespace detail {

/// Single-vertex moves to the neighboring (or a fresh) community with the
/// best positive gain, sweeping until none remains. A null rng sweeps in id
/// order; otherwise each sweep is shuffled.
inline Partition local_moves(const Graph& g, const Partition& start, Rng* rng) {
  const auto m = static_cast<std::int64_t>(g.edge_count());
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> comm = start.assignment;
  std::vector<std::int64_t> deg(start.count, 0);
  for (VertexId v = 0; v < n; ++v) deg[comm[v]] += static_cast<std::int64_t>(g.degree(v));

  std::vector<VertexId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::map<std::size_t, std::int64_t> links;

  bool moved = true;
  while (moved) {
    moved = false;
    if (rng != nullptr) rng->shuffle(order);
    for (VertexId v : order) {
      const auto d = static_cast<std::int64_t>(g.degree(v));
      if (d == 0) continue;
      const std::size_t from = comm[v];
      links.clear();
      for (VertexId u : g.neighbors(v)) ++links[comm[u]];
      const std::int64_t k_from = links.count(from) ? links[from] : 0;
      const std::int64_t d_from = deg[from];

      // 4m(k_to - k_from) - 2d(D_to - D_from + d)
      auto gain = [&](std::int64_t k_to, std::int64_t d_to) {
        return 4 * m * (k_to - k_from) - 2 * d * (d_to - d_from + d);
      };

      std::int64_t best_gain = 0;
      std::optional<std::size_t> target;
      for (const auto& [c, k] : links) {
        if (c == from) continue;
        const auto gval = gain(k, deg[c]);
        if (gval > best_gain) {
          best_gain = gval;
          target = c;
        }
      }
      if (gain(0, 0) > best_gain) {
        best_gain = gain(0, 0);
        target = deg.size();
        deg.push_back(0);
      }
      if (target) {
        deg[from] -= d;
        deg[*target] += d;
        comm[v] = *target;
        moved = true;
      }
    }
  }
  return Partition::normalized(comm);
}

inline Partition polish(const Graph& g, Partition part, Rng* rng) {
  std::int64_t q = modularity_scaled(g, part);
  for (;;) {
    Partition next = greedy_merge(g, local_moves(g, part, rng));
    const std::int64_t qn = modularity_scaled(g, next);
    if (qn <= q) return part;
    part = std::move(next);
    q = qn;
  }
}

}  // namespace detail

struct CommunityOptions {
  /// Additional seeded local-moving runs from singletons; the best Q wins.
  std::size_t restarts{8};
};

struct CommunityResult {
  Partition partition;
  std::optional<double> modularity;  // unset for edgeless graphs
};

/// Modularity maximization: greedy agglomeration, polished by vertex moves
/// and further merges, then compared against seeded restarts.
inline CommunityResult detect_communities(const Graph& g, std::uint64_t seed,
                                          const CommunityOptions& opts = {}) {
  const std::size_t n = g.vertex_count();
  if (g.edge_count() == 0) return {Partition::singletons(n), std::nullopt};

  Partition best = detail::polish(g, greedy_merge(g, Partition::singletons(n)), nullptr);
  std::int64_t best_q = modularity_scaled(g, best);

  Rng rng(seed);
  for (std::size_t r = 0; r < opts.restarts; ++r) {
    Partition cand = detail::polish(g, Partition::singletons(n), &rng);
    const std::int64_t q = modularity_scaled(g, cand);
    if (q > best_q) {
      best = std::move(cand);
      best_q = q;
    }
  }
  return {best, modularity(g, best)};
}

}  // namespace graphite
