#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace nlcs;

namespace {

Graph k3() { return build_graph(std::vector<EdgeRecord>{{0, 1, {}}, {1, 2, {}}, {0, 2, {}}}); }

}  // namespace

TEST(Triangles, SingleTriangle) {
  const auto tri = enumerate_triangles(k3());
  ASSERT_EQ(tri.size(), 1u);
  EXPECT_EQ(tri.triangles()[0], (Triangle{0, 1, 2, 1.0}));
  for (NodeId i = 0; i < 3; ++i) {
    EXPECT_EQ(tri.hyperdegree()[i], 2.0);
    EXPECT_EQ(tri.triangle_count(i), 1u);
  }
  EXPECT_EQ(tri.codegree().at(0, 1), 1.0);
  EXPECT_EQ(tri.codegree().at(1, 2), 1.0);
  EXPECT_EQ(tri.codegree().at(0, 0), 0.0);
}

TEST(Triangles, TreeHasNone) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 1, {}}, {1, 2, {}}, {1, 3, {}}});
  const auto tri = enumerate_triangles(g);
  EXPECT_TRUE(tri.empty());
  for (double d : tri.hyperdegree()) EXPECT_EQ(d, 0.0);
}

TEST(Triangles, K4HasFour) {
  std::vector<EdgeRecord> e;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) e.push_back({i, j, {}});
  const auto tri = enumerate_triangles(build_graph(e));
  EXPECT_EQ(tri.size(), 4u);
  for (NodeId i = 0; i < 4; ++i) EXPECT_EQ(tri.hyperdegree()[i], 6.0);
  EXPECT_EQ(tri.codegree().at(0, 3), 2.0);
}

TEST(Triangles, MatchBruteForceOnRandomGraphs) {
  std::mt19937_64 gen(21);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 5 + trial;
    const double p = 0.05 + 0.02 * (trial % 20);
    const auto rg = oracle::random_graph(gen, n, p, trial % 2 == 0);
    const auto A = oracle::adjacency(rg);
    for (auto rule : {TriangleWeightRule::geometric_mean, TriangleWeightRule::unit,
                      TriangleWeightRule::minimum}) {
      const auto tri = enumerate_triangles(build_graph(rg.edges, n), rule);
      const auto ref = oracle::brute_triangles(A, rule);
      ASSERT_EQ(tri.size(), ref.size());
      for (std::size_t t = 0; t < ref.size(); ++t) {
        const auto& got = tri.triangles()[t];
        EXPECT_EQ(got.i, ref[t].i);
        EXPECT_EQ(got.j, ref[t].j);
        EXPECT_EQ(got.k, ref[t].k);
        EXPECT_EQ(got.weight, ref[t].w);
      }
    }
  }
}

TEST(Triangles, HyperdegreeAndCodegreeMatchTensor) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 10; ++trial) {
    const auto rg = oracle::random_graph(gen, 12, 0.4, true);
    const auto A = oracle::adjacency(rg);
    const auto tri = enumerate_triangles(build_graph(rg.edges, rg.n));
    const auto T = oracle::tensor(rg.n, oracle::brute_triangles(A, TriangleWeightRule::geometric_mean));
    const auto d = oracle::hyperdegree(T);
    const auto B = oracle::codegree(T);
    for (std::size_t i = 0; i < rg.n; ++i) {
      EXPECT_NEAR(tri.hyperdegree()[i], d[i], 1e-12);
      double row = 0.0;
      for (std::size_t j = 0; j < rg.n; ++j) {
        EXPECT_NEAR(tri.codegree().at(static_cast<NodeId>(i), static_cast<NodeId>(j)), B(i, j),
                    1e-12);
        row += B(i, j);
      }
      // Each incident triangle contributes its weight to two codegree cells.
      EXPECT_NEAR(row, d[i], 1e-12);
    }
  }
}

TEST(Triangles, WeightRules) {
  EXPECT_EQ(triangle_weight(TriangleWeightRule::geometric_mean, 1, 1, 1), 1.0);
  EXPECT_NEAR(triangle_weight(TriangleWeightRule::geometric_mean, 1, 2, 4), 2.0, 1e-15);
  EXPECT_EQ(triangle_weight(TriangleWeightRule::arithmetic_mean, 1, 2, 3), 2.0);
  EXPECT_EQ(triangle_weight(TriangleWeightRule::minimum, 3, 2, 5), 2.0);
  EXPECT_EQ(triangle_weight(TriangleWeightRule::unit, 3, 2, 5), 1.0);
}

TEST(Triangles, FromTrianglesRejectsDuplicatesAndBadVertices) {
  EXPECT_THROW(TriangleSet::from_triangles(3, {{0, 1, 2, 1.0}, {2, 1, 0, 1.0}}), Error);
  EXPECT_THROW(TriangleSet::from_triangles(3, {{0, 0, 2, 1.0}}), Error);
  EXPECT_THROW(TriangleSet::from_triangles(3, {{0, 1, 3, 1.0}}), Error);
  const auto t = TriangleSet::from_triangles(3, {{2, 0, 1, 1.0}});
  EXPECT_EQ(t.triangles()[0], (Triangle{0, 1, 2, 1.0}));
}

TEST(Triangles, ThreadCountDoesNotChangeResult) {
  std::mt19937_64 gen(8);
  const auto rg = oracle::random_graph(gen, 400, 0.05);
  const Graph g = build_graph(rg.edges, rg.n);
  set_num_threads(1);
  const auto a = enumerate_triangles(g);
  set_num_threads(3);
  const auto b = enumerate_triangles(g);
  set_num_threads(1);
  EXPECT_EQ(a.triangles(), b.triangles());
  EXPECT_EQ(a.hyperdegree(), b.hyperdegree());
}

TEST(Clustering, MatchesRecount) {
  std::mt19937_64 gen(13);
  const auto rg = oracle::random_graph(gen, 25, 0.3);
  const Graph g = build_graph(rg.edges, rg.n);
  const auto A = oracle::adjacency(rg);
  const auto c = clustering_coefficient(g, enumerate_triangles(g));
  for (std::size_t i = 0; i < rg.n; ++i) {
    std::vector<std::size_t> nb;
    for (std::size_t j = 0; j < rg.n; ++j)
      if (A(i, j) != 0.0) nb.push_back(j);
    double closed = 0.0;
    for (std::size_t a = 0; a < nb.size(); ++a)
      for (std::size_t b = a + 1; b < nb.size(); ++b) closed += A(nb[a], nb[b]) != 0.0;
    const double d = static_cast<double>(nb.size());
    const double expect = nb.size() < 2 ? 0.0 : closed / (d * (d - 1) / 2);
    EXPECT_NEAR(c[i], expect, 1e-15);
  }
  const auto ck3 = clustering_coefficient(k3(), enumerate_triangles(k3()));
  for (double v : ck3) EXPECT_EQ(v, 1.0);
}
