#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace nlcs;

TEST(BuildGraph, PathOfThree) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 1, {}}, {1, 2, {}}});
  EXPECT_EQ(g.num_nodes(), 3u);
  EXPECT_EQ(g.num_edges(), 2u);
  EXPECT_EQ(g.num_directed_entries(), 4u);
  EXPECT_EQ(g.degree(0), 1.0);
  EXPECT_EQ(g.degree(1), 2.0);
  EXPECT_EQ(g.degree(2), 1.0);
  EXPECT_TRUE(g.validate());
  EXPECT_TRUE(g.unit_weights());
}

TEST(BuildGraph, ReverseDuplicateIsSummed) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 1, 1.0}, {1, 0, 1.0}});
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.edge_weight(0, 1), 2.0);
  EXPECT_EQ(g.edge_weight(1, 0), 2.0);
  EXPECT_EQ(g.duplicates_merged(), 1u);
}

TEST(BuildGraph, SelfLoopDroppedAndCounted) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 0, {}}, {0, 1, {}}});
  EXPECT_EQ(g.num_edges(), 1u);
  EXPECT_EQ(g.self_loops_dropped(), 1u);
  EXPECT_FALSE(g.has_edge(0, 0));
}

TEST(BuildGraph, Errors) {
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{}), Error);
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{{-1, 2, {}}}), Error);
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{{0, 5, {}}}, 3), Error);
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{{0, 1, 0.0}}), Error);
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{{0, 1, -2.0}}), Error);
  EXPECT_THROW(build_graph(std::vector<EdgeRecord>{{0, 1, std::nan("")}}), Error);
}

TEST(BuildGraph, IsolatedTrailingNodesWhenSizeGiven) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 1, {}}}, 4);
  EXPECT_EQ(g.num_nodes(), 4u);
  EXPECT_EQ(g.neighbor_count(3), 0u);
}

TEST(BuildGraph, MatchesDenseAdjacencyOnRandomInput) {
  std::mt19937_64 gen(7);
  for (int trial = 0; trial < 20; ++trial) {
    auto rg = oracle::random_graph(gen, 5 + trial, 0.3, trial % 2 == 1);
    // Sprinkle reversed duplicates and loops.
    const auto base = rg.edges;
    for (std::size_t e = 0; e < base.size(); e += 3)
      rg.edges.push_back({base[e].v, base[e].u, base[e].weight});
    rg.edges.push_back({2, 2, {}});
    const Graph g = build_graph(rg.edges, rg.n);
    const auto A = oracle::adjacency(rg);
    ASSERT_TRUE(g.validate());
    for (std::size_t i = 0; i < rg.n; ++i) {
      EXPECT_NEAR(g.degree(static_cast<NodeId>(i)), A.row(i).sum(), 1e-12);
      for (std::size_t j = 0; j < rg.n; ++j)
        EXPECT_NEAR(g.edge_weight(static_cast<NodeId>(i), static_cast<NodeId>(j)), A(i, j),
                    1e-12);
    }
  }
}

TEST(NormalizedAdjacency, MatchesDenseFormulaAndIsSymmetric) {
  std::mt19937_64 gen(11);
  for (int trial = 0; trial < 20; ++trial) {
    const auto rg = oracle::random_graph(gen, 8 + trial, 0.25, trial % 3 == 0);
    const Graph g = build_graph(rg.edges, rg.n);
    const auto S = normalized_adjacency(g).matrix.to_dense();
    const auto ref = oracle::normalized(oracle::adjacency(rg));
    EXPECT_LT(oracle::max_abs(S, ref), 1e-14);
    EXPECT_EQ(S, S.transpose());
  }
}

TEST(NormalizedAdjacency, IsolatedNodeRowIsEmptyAndSpectrumBounded) {
  const Graph g = build_graph(std::vector<EdgeRecord>{{0, 1, {}}, {1, 2, {}}, {0, 2, {}}}, 4);
  const auto S = normalized_adjacency(g);
  EXPECT_EQ(S.matrix.offsets[4] - S.matrix.offsets[3], 0u);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S.matrix.to_dense());
  EXPECT_LE(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0 + 1e-12);
}

TEST(NormalizedAdjacency, MultiplyMatchesDense) {
  std::mt19937_64 gen(3);
  const auto rg = oracle::random_graph(gen, 30, 0.2, true);
  const auto S = normalized_adjacency(build_graph(rg.edges, rg.n));
  const ScoreMatrix x = oracle::random_scores(gen, 30, 4);
  const Eigen::MatrixXd ref = S.matrix.to_dense() * oracle::to_dense(x);
  EXPECT_LT(oracle::max_abs(S.apply(x), ref), 1e-14);
}

TEST(Parallel, ResultsIndependentOfThreadCount) {
  std::mt19937_64 gen(5);
  const auto rg = oracle::random_graph(gen, 3000, 0.003);
  const auto S = normalized_adjacency(build_graph(rg.edges, rg.n));
  const ScoreMatrix x = oracle::random_scores(gen, 3000, 3);
  set_num_threads(1);
  const ScoreMatrix one = S.apply(x);
  set_num_threads(4);
  const ScoreMatrix four = S.apply(x);
  set_num_threads(1);
  EXPECT_EQ(one, four);
}
