#include <gtest/gtest.h>

#include <functional>

#include "graphite/community.hpp"
#include "graphite/generators.hpp"

using namespace graphite;

namespace {

// Q = 1/2m * sum_ij (A_ij - k_i k_j / 2m) [c_i == c_j], straight from the
// adjacency-matrix definition.
double oracle_q(const Graph& g, const std::vector<std::size_t>& c) {
  const std::size_t n = g.vertex_count();
  const double two_m = 2.0 * static_cast<double>(g.edge_count());
  double q = 0;
  for (VertexId i = 0; i < n; ++i) {
    for (VertexId j = 0; j < n; ++j) {
      if (c[i] != c[j]) continue;
      const double a = g.has_edge(i, j) ? 1.0 : 0.0;
      q += a - static_cast<double>(g.degree(i)) * static_cast<double>(g.degree(j)) / two_m;
    }
  }
  return q / two_m;
}

// Best Q over every set partition (restricted growth strings).
double exhaustive_optimum(const Graph& g) {
  const std::size_t n = g.vertex_count();
  std::vector<std::size_t> c(n, 0);
  double best = -1.0;
  std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t v, std::size_t used) {
    if (v == n) {
      best = std::max(best, oracle_q(g, c));
      return;
    }
    for (std::size_t k = 0; k <= used && k < n; ++k) {
      c[v] = k;
      rec(v + 1, std::max(used, k + 1));
    }
  };
  rec(0, 0);
  return best;
}

bool connected(const Graph& g) {
  if (g.vertex_count() == 0) return true;
  std::vector<bool> seen(g.vertex_count(), false);
  std::vector<VertexId> stack = {0};
  seen[0] = true;
  std::size_t count = 1;
  while (!stack.empty()) {
    const VertexId v = stack.back();
    stack.pop_back();
    for (VertexId u : g.neighbors(v)) {
      if (!seen[u]) {
        seen[u] = true;
        ++count;
        stack.push_back(u);
      }
    }
  }
  return count == g.vertex_count();
}

Graph two_k5_bridge() {
  std::vector<Edge> e;
  for (VertexId i = 0; i < 5; ++i) {
    for (VertexId j = i + 1; j < 5; ++j) {
      e.emplace_back(i, j);
      e.emplace_back(i + 5, j + 5);
    }
  }
  e.emplace_back(4, 5);
  return Graph::with_vertices(10, e);
}

}  // namespace

TEST(Modularity, OneCommunityIsZero) {
  for (std::size_t n : {2, 3, 6}) {
    EXPECT_NEAR(modularity(generators::complete(n), Partition::single(n)), 0.0, 1e-15);
  }
}

TEST(Modularity, TwoTrianglesIsHalf) {
  const Graph g = Graph::with_vertices(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  EXPECT_DOUBLE_EQ(modularity(g, Partition{{0, 0, 0, 1, 1, 1}, 2}), 0.5);
}

TEST(Modularity, TriangleSplitMatchesOracle) {
  const Graph g = generators::complete(3);
  const Partition p{{0, 1, 1}, 2};
  EXPECT_NEAR(modularity(g, p), oracle_q(g, p.assignment), 1e-15);
  EXPECT_NEAR(modularity(g, p), 1.0 / 3.0 - 1.0 / 9.0 - 4.0 / 9.0, 1e-15);
}

TEST(Modularity, EdgelessIsUndefined) {
  EXPECT_THROW(modularity(Graph::with_vertices(3, {}), Partition::single(3)), ValidationError);
}

TEST(Modularity, MatchesOracleAndBounds) {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.below(15);
    const Graph g = generators::random_gnp(n, 0.3, rng);
    if (g.edge_count() == 0) continue;
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.below(5);
    const Partition p = Partition::normalized(labels);
    const double q = modularity(g, p);
    EXPECT_NEAR(q, oracle_q(g, p.assignment), 1e-12);
    EXPECT_GE(q, -0.5);
    EXPECT_LE(q, 1.0);
  }
}

TEST(Modularity, InvariantUnderRelabeling) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 4 + rng.below(20);
    const Graph g = generators::random_gnp(n, 0.3, rng);
    if (g.edge_count() == 0) continue;
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.below(4);
    const Partition p = Partition::normalized(labels);
    std::vector<std::size_t> perm(p.count);
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    Partition q = p;
    for (auto& a : q.assignment) a = perm[a];
    EXPECT_EQ(modularity_scaled(g, p), modularity_scaled(g, q));
  }
}

TEST(Modularity, MergeGainEqualsRecompute) {
  Rng rng(7);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 3 + rng.below(25);
    const Graph g = generators::random_gnp(n, 0.25, rng);
    if (g.edge_count() == 0) continue;
    std::vector<std::size_t> labels(n);
    for (auto& l : labels) l = rng.below(6);
    const Partition p = Partition::normalized(labels);
    if (p.count < 2) continue;
    const std::size_t i = rng.below(p.count);
    std::size_t j = rng.below(p.count - 1);
    if (j >= i) ++j;
    std::vector<std::size_t> merged = p.assignment;
    for (auto& a : merged) {
      if (a == j) a = i;
    }
    const double recompute = modularity(g, Partition::normalized(merged)) - modularity(g, p);
    EXPECT_NEAR(merge_gain(g, p, i, j), recompute, 1e-12);
  }
}

TEST(Detect, TwoCliquesWithBridge) {
  const Graph g = two_k5_bridge();
  const auto r = detect_communities(g, 0);
  EXPECT_EQ(r.partition.count, 2u);
  for (VertexId v = 1; v < 5; ++v) EXPECT_EQ(r.partition.assignment[v], r.partition.assignment[0]);
  for (VertexId v = 6; v < 10; ++v) EXPECT_EQ(r.partition.assignment[v], r.partition.assignment[5]);
  EXPECT_NE(r.partition.assignment[0], r.partition.assignment[5]);

  // The clique split beats every other 2-partition.
  double best_other = -1;
  for (std::uint32_t mask = 1; mask < (1u << 10) - 1; ++mask) {
    if (mask == 0x1F || mask == 0x3E0) continue;
    std::vector<std::size_t> c(10);
    for (int v = 0; v < 10; ++v) c[v] = (mask >> v) & 1u;
    best_other = std::max(best_other, oracle_q(g, c));
  }
  EXPECT_GT(*r.modularity, best_other);
}

TEST(Detect, CliqueIsOneCommunity) {
  const auto r = detect_communities(generators::complete(4), 0);
  EXPECT_EQ(r.partition.count, 1u);
  EXPECT_NEAR(*r.modularity, 0.0, 1e-15);
}

TEST(Detect, Karate) {
  const Graph g = generators::karate_club();
  ASSERT_EQ(g.vertex_count(), 34u);
  ASSERT_EQ(g.edge_count(), 78u);
  const auto r = detect_communities(g, 0);
  EXPECT_GE(*r.modularity, 0.35);
}

TEST(Detect, EdgelessGivesSingletonsWithoutQ) {
  const auto r = detect_communities(Graph::with_vertices(4, {}), 0);
  EXPECT_EQ(r.partition, Partition::singletons(4));
  EXPECT_FALSE(r.modularity);
}

TEST(Detect, DeterministicPerSeed) {
  const Graph g = generators::barabasi_albert(300, 2, 9);
  EXPECT_EQ(detect_communities(g, 4).partition, detect_communities(g, 4).partition);
}

TEST(Detect, NonNegativeOnConnectedGraphs) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 2 + rng.below(30);
    const Graph g = generators::random_gnp(n, 0.2 + 0.5 * rng.uniform(), rng);
    if (g.edge_count() == 0) continue;
    const auto r = detect_communities(g, trial);
    EXPECT_GE(*r.modularity, -1e-12);
    EXPECT_NEAR(*r.modularity, oracle_q(g, r.partition.assignment), 1e-12);
  }
}

TEST(Detect, NearOptimalOnSmallGraphs) {
  Rng rng(2024);
  int checked = 0;
  while (checked < 60) {
    const std::size_t n = 3 + rng.below(8);  // up to 10 vertices
    const Graph g = generators::random_gnp(n, 0.2 + 0.5 * rng.uniform(), rng);
    if (g.edge_count() == 0 || !connected(g)) continue;
    ++checked;
    const double opt = exhaustive_optimum(g);
    const auto r = detect_communities(g, static_cast<std::uint64_t>(checked));
    EXPECT_GE(*r.modularity, opt - 0.05) << "n=" << n << " m=" << g.edge_count();
  }
}

TEST(Greedy, ClassicMergeOnlyImproves) {
  const Graph g = generators::karate_club();
  const Partition p = greedy_merge(g, Partition::singletons(g.vertex_count()));
  EXPECT_GT(modularity(g, p), 0.3);
}
