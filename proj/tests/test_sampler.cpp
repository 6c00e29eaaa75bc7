#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "graphite/generators.hpp"
#include "graphite/sampler.hpp"

using namespace graphite;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

DegreeHistogram hist(std::map<std::size_t, std::size_t> counts) {
  DegreeHistogram h;
  h.counts = std::move(counts);
  for (const auto& [d, c] : h.counts) h.n += c;
  return h;
}

// Every sampled vertex maps back to a distinct source vertex carrying the
// same metadata, and every sampled edge exists in the source.
void expect_faithful(const Graph& src, const Sample& s) {
  ASSERT_EQ(s.origin.size(), s.graph.vertex_count());
  std::vector<VertexId> sorted = s.origin;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(std::adjacent_find(sorted.begin(), sorted.end()), sorted.end());
  for (VertexId v = 0; v < s.graph.vertex_count(); ++v) {
    ASSERT_LT(s.origin[v], src.vertex_count());
    EXPECT_EQ(s.graph.meta(v), src.meta(s.origin[v]));
  }
  for (const auto& [u, v] : s.graph.edges()) EXPECT_TRUE(src.has_edge(s.origin[u], s.origin[v]));
}

}  // namespace

TEST(Ks, Examples) {
  const auto h = hist({{1, 3}, {2, 5}, {7, 1}});
  EXPECT_EQ(ks_distance(h, h), 0.0);
  EXPECT_EQ(ks_distance(hist({{1, 4}}), hist({{2, 9}})), 1.0);
  EXPECT_DOUBLE_EQ(ks_distance(hist({{1, 5}, {2, 5}}), hist({{1, 10}})), 0.5);
  EXPECT_THROW(ks_distance(DegreeHistogram{}, h), ValidationError);
}

TEST(Ks, SymmetricAndBounded) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    std::map<std::size_t, std::size_t> a;
    std::map<std::size_t, std::size_t> b;
    for (int i = 0; i < 5; ++i) {
      a[rng.below(10)] += 1 + rng.below(5);
      b[rng.below(10)] += 1 + rng.below(5);
    }
    const double d = ks_distance(hist(a), hist(b));
    EXPECT_DOUBLE_EQ(d, ks_distance(hist(b), hist(a)));
    EXPECT_GE(d, 0.0);
    EXPECT_LE(d, 1.0);
  }
}

TEST(RandomNode, Extremes) {
  const Graph g = generators::barabasi_albert(100, 2, 1);
  EXPECT_EQ(sample_rn(g, 1.0, 3).graph, g);
  EXPECT_EQ(sample_rn(g, 0.0, 3).graph.vertex_count(), 0u);
}

TEST(RandomNode, BinomialKeptCount) {
  const Graph g = generators::barabasi_albert(1000, 3, 1);
  double total = 0;
  const int seeds = 1000;
  for (int s = 0; s < seeds; ++s) total += static_cast<double>(sample_rn(g, 0.5, s).graph.vertex_count());
  const double mean = total / seeds;
  const double sigma = std::sqrt(1000 * 0.25);
  EXPECT_NEAR(mean, 500.0, 3 * sigma);
}

TEST(RandomEdge, Extremes) {
  // vertex 5 is isolated
  const Graph g = Graph::with_vertices(6, {{0, 1}, {1, 2}, {3, 4}});
  const auto all = sample_re(g, 1.0, 0);
  EXPECT_EQ(all.graph.vertex_count(), 5u);
  EXPECT_EQ(all.graph.edge_count(), 3u);
  EXPECT_EQ(all.origin, (std::vector<VertexId>{0, 1, 2, 3, 4}));
  EXPECT_EQ(sample_re(g, 0.0, 0).graph.vertex_count(), 0u);
}

TEST(RandomEdge, NoSingletons) {
  const Graph star = generators::star(5);
  for (int s = 0; s < 100; ++s) {
    const auto r = sample_re(star, 0.5, s);
    for (VertexId v = 0; v < r.graph.vertex_count(); ++v) EXPECT_GE(r.graph.degree(v), 1u);
  }
  const Graph ba = generators::barabasi_albert(500, 2, 4);
  for (int s = 0; s < 20; ++s) {
    const auto r = sample_re(ba, 0.1, s);
    for (VertexId v = 0; v < r.graph.vertex_count(); ++v) EXPECT_GE(r.graph.degree(v), 1u);
  }
}

TEST(RandomWalk, TinyTargetGivesStartVertexOnly) {
  const Graph g = generators::barabasi_albert(200, 2, 2);
  const auto r = sample_rw(g, 0.1, 0.001, 5);
  EXPECT_EQ(r.graph.vertex_count(), 1u);
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.steps, 0u);
}

TEST(RandomWalk, ReachesTargetFraction) {
  const Graph g = generators::barabasi_albert(500, 3, 2);
  for (double f : {0.1, 0.5, 1.0}) {
    const auto r = sample_rw(g, 0.15, f, 8);
    EXPECT_TRUE(r.complete);
    EXPECT_EQ(r.graph.vertex_count(), static_cast<std::size_t>(std::ceil(f * 500 - 1e-9)));
  }
}

TEST(RandomWalk, DeadEndsJump) {
  // No edges at all: every move is a forced jump, so the walk still covers the graph.
  const Graph g = Graph::with_vertices(50, {});
  const auto r = sample_rw(g, 0.0, 1.0, 3);
  EXPECT_TRUE(r.complete);
  EXPECT_EQ(r.graph.vertex_count(), 50u);
}

TEST(RandomWalk, StepCapFlagsPartialSample) {
  // p = 0 on two components: a walk can never leave its component.
  const Graph g = Graph::with_vertices(6, {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}});
  const auto r = sample_rw(g, 0.0, 1.0, 1);
  EXPECT_FALSE(r.complete);
  EXPECT_EQ(r.steps, 600u);
  EXPECT_EQ(r.graph.vertex_count(), 3u);
}

TEST(RandomWalk, FullRestartResemblesRandomNode) {
  const Graph g = generators::barabasi_albert(1000, 3, 7);
  std::vector<double> between;
  for (int s = 0; s < 50; ++s) {
    const auto rw = degree_distribution(sample_rw(g, 1.0, 0.5, s).graph);
    const auto rn = degree_distribution(sample_rn(g, 0.5, s + 1000).graph);
    between.push_back(ks_distance(rw, rn));
  }
  EXPECT_LE(median(between), 0.1);
}

TEST(Sampling, FaithfulAndDeterministic) {
  Graph g = generators::barabasi_albert(300, 3, 3);
  for (const auto scheme : {SampleScheme::RandomNode, SampleScheme::RandomEdge, SampleScheme::RandomWalk}) {
    const SampleSpec spec{scheme, 0.3, 0.4, 77};
    const auto a = sample(g, spec);
    const auto b = sample(g, spec);
    expect_faithful(g, a);
    EXPECT_EQ(a.graph, b.graph) << scheme_name(scheme);
    EXPECT_EQ(a.origin, b.origin);
  }
}

TEST(Sampling, SpecValidation) {
  EXPECT_THROW((SampleSpec{SampleScheme::RandomNode, 1.5, 1.0, 0}.validate()), ValidationError);
  EXPECT_THROW((SampleSpec{SampleScheme::RandomWalk, 0.5, 0.0, 0}.validate()), ValidationError);
  EXPECT_EQ(parse_scheme("re"), SampleScheme::RandomEdge);
  EXPECT_EQ(parse_scheme("RW"), SampleScheme::RandomWalk);
  EXPECT_THROW(parse_scheme("ff"), ValidationError);
}

TEST(Sampling, MatchedEdgeProbability) {
  const Graph g = generators::barabasi_albert(1000, 3, 1);
  const double p = matched_edge_probability(g, 500.0);
  EXPECT_NEAR(expected_re_vertices(g, p), 500.0, 1e-6);
  double total = 0;
  for (int s = 0; s < 200; ++s) total += static_cast<double>(sample_re(g, p, s).graph.vertex_count());
  EXPECT_NEAR(total / 200, 500.0, 10.0);
}

TEST(Sampling, RandomNodeKeepsDegreeShapeBetterThanRandomEdge) {
  const Graph g = generators::barabasi_albert(1000, 3, 5);
  const auto base = degree_distribution(g);
  const double p_re = matched_edge_probability(g, 500.0);
  std::vector<double> rn;
  std::vector<double> re;
  for (int s = 0; s < 20; ++s) {
    rn.push_back(ks_distance(base, degree_distribution(sample_rn(g, 0.5, s).graph)));
    re.push_back(ks_distance(base, degree_distribution(sample_re(g, p_re, s).graph)));
  }
  EXPECT_LT(median(rn), median(re));
}
