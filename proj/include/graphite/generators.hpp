#pragma once

#include <cstdint>
#include <set>
#include <vector>

#include "error.hpp"
#include "graph.hpp"
#include "random.hpp"

// Synthetic graphs for tests, benchmarks and the CLI demo mode.
namespace graphite::generators {

inline Graph complete(std::size_t n) {
  std::vector<Edge> edges;
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = i + 1; j < n; ++j) edges.emplace_back(i, j);
  }
  return Graph::with_vertices(n, std::move(edges));
}

/// Hub 0 joined to `leaves` leaves.
inline Graph star(std::size_t leaves) {
  std::vector<Edge> edges;
  for (VertexId i = 1; i <= leaves; ++i) edges.emplace_back(0, i);
  return Graph::with_vertices(leaves + 1, std::move(edges));
}

/// Preferential attachment: each new vertex links to m distinct existing
/// vertices chosen proportionally to degree. Seeded with a clique on m+1.
inline Graph barabasi_albert(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m == 0 || n <= m) throw ValidationError("barabasi_albert needs n > m >= 1");
  Rng rng(seed);
  std::vector<Edge> edges;
  std::vector<VertexId> targets;  // each vertex repeated once per degree
  for (VertexId i = 0; i <= m; ++i) {
    for (VertexId j = i + 1; j <= m; ++j) {
      edges.emplace_back(i, j);
      targets.push_back(i);
      targets.push_back(j);
    }
  }
  for (auto v = static_cast<VertexId>(m + 1); v < n; ++v) {
    std::set<VertexId> chosen;
    while (chosen.size() < m) chosen.insert(targets[rng.below(targets.size())]);
    for (VertexId u : chosen) {
      edges.emplace_back(u, v);
      targets.push_back(u);
      targets.push_back(v);
    }
  }
  return Graph::with_vertices(n, std::move(edges));
}

/// Uniform random simple graph with exactly `m` edges.
inline Graph random_gnm(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (n < 2 || m > n * (n - 1) / 2) throw ValidationError("random_gnm: too many edges");
  Rng rng(seed);
  std::set<Edge> edges;
  while (edges.size() < m) {
    auto u = static_cast<VertexId>(rng.below(n));
    auto v = static_cast<VertexId>(rng.below(n));
    if (u == v) continue;
    if (u > v) std::swap(u, v);
    edges.emplace(u, v);
  }
  return Graph::with_vertices(n, std::vector<Edge>(edges.begin(), edges.end()));
}

/// Erdos-Renyi G(n, p).
inline Graph random_gnp(std::size_t n, double p, Rng& rng) {
  std::vector<Edge> edges;
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = i + 1; j < n; ++j) {
      if (rng.bernoulli(p)) edges.emplace_back(i, j);
    }
  }
  return Graph::with_vertices(n, std::move(edges));
}

/// Zachary's karate club (34 members, 78 ties).
inline Graph karate_club() {
  static constexpr VertexId kEdges[][2] = {
      {0, 1},   {0, 2},   {0, 3},   {0, 4},   {0, 5},   {0, 6},   {0, 7},   {0, 8},   {0, 10},
      {0, 11},  {0, 12},  {0, 13},  {0, 17},  {0, 19},  {0, 21},  {0, 31},  {1, 2},   {1, 3},
      {1, 7},   {1, 13},  {1, 17},  {1, 19},  {1, 21},  {1, 30},  {2, 3},   {2, 7},   {2, 8},
      {2, 9},   {2, 13},  {2, 27},  {2, 28},  {2, 32},  {3, 7},   {3, 12},  {3, 13},  {4, 6},
      {4, 10},  {5, 6},   {5, 10},  {5, 16},  {6, 16},  {8, 30},  {8, 32},  {8, 33},  {9, 33},
      {13, 33}, {19, 33}, {23, 25}, {23, 29}, {24, 25}, {23, 27}, {24, 27}, {27, 33}, {28, 33},
      {26, 29}, {30, 32}, {30, 33}, {24, 31}, {25, 31}, {28, 31}, {31, 32}, {31, 33}, {14, 32},
      {15, 32}, {18, 32}, {20, 32}, {22, 32}, {23, 32}, {29, 32}, {32, 33}, {14, 33}, {15, 33},
      {18, 33}, {20, 33}, {22, 33}, {23, 33}, {26, 33}, {29, 33}};
  std::vector<Edge> edges;
  for (const auto& e : kEdges) edges.emplace_back(e[0], e[1]);
  return Graph::with_vertices(34, std::move(edges));
}

}  // namespace graphite::generators
