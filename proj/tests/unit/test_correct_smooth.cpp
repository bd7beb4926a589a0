#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace nlcs;

namespace {

struct Fixture {
  oracle::RandomGraph rg;
  NormalizedAdjacency S;
  TriangleSet tri;
  oracle::Dense Sd;
  oracle::Tensor T;
  LabelMatrix Y;
  ScoreMatrix X;
};

Fixture make(std::mt19937_64& gen, std::size_t n, int c, double p = 0.35) {
  Fixture f;
  f.rg = oracle::random_graph(gen, n, p);
  const Graph g = build_graph(f.rg.edges, n);
  f.S = normalized_adjacency(g);
  f.tri = enumerate_triangles(g);
  const auto A = oracle::adjacency(f.rg);
  f.Sd = oracle::normalized(A);
  f.T = oracle::tensor(n, oracle::brute_triangles(A, TriangleWeightRule::geometric_mean));
  const auto labels = oracle::random_labels(gen, n, c, 2);
  f.Y = make_label_matrix(labels.truth, c, labels.train);
  f.X = detail::softmax_rows(oracle::random_scores(gen, n, c, -2, 2));
  return f;
}

}  // namespace

TEST(ErrorInit, ExampleRow) {
  ScoreMatrix X(2, 2);
  X << 0.7, 0.3, 0.4, 0.6;
  const auto Y = make_label_matrix({0, 1}, 2, {0});
  const auto E = error_init(X, Y);
  EXPECT_NEAR(E.E(0, 0), -0.3, 1e-15);
  EXPECT_NEAR(E.E(0, 1), 0.3, 1e-15);
  EXPECT_TRUE(E.E.row(1).isZero(0.0));
  const auto flipped = error_init(X, Y, ResidualOrientation::truth_minus_prediction);
  EXPECT_EQ(flipped.E, -E.E);
}

TEST(ErrorInit, PerfectPredictionAndShapeMismatch) {
  const auto Y = make_label_matrix({0, 1, 1}, 2, {0, 2});
  ScoreMatrix X(3, 2);
  X << 1, 0, 0.5, 0.5, 0, 1;
  EXPECT_TRUE(error_init(X, Y).E.isZero(0.0));
  EXPECT_THROW(error_init(ScoreMatrix::Zero(3, 3), Y), Error);
}

TEST(Autoscale, MeanLabeledL1) {
  ResidualState E;
  E.E = ScoreMatrix::Zero(3, 2);
  E.E.row(0) << -0.3, 0.3;
  E.E.row(2) << 0.5, -0.5;
  EXPECT_NEAR(autoscale_lambda(E, {0, 2}), 0.8, 1e-15);
  E.E.setZero();
  EXPECT_EQ(autoscale_lambda(E, {0, 2}), 0.0);
  EXPECT_THROW(autoscale_lambda(E, {}), Error);
}

TEST(Autoscale, MatchesRecount) {
  std::mt19937_64 gen(12);
  auto f = make(gen, 30, 3);
  const auto E0 = error_init(f.X, f.Y);
  double total = 0.0;
  for (NodeId j : f.Y.labeled)
    for (int c = 0; c < 3; ++c) total += std::fabs(f.X(j, c) - f.Y.Y(j, c));
  EXPECT_EQ(autoscale_lambda(E0, f.Y.labeled), total / f.Y.labeled.size());
}

TEST(Correct, UnitL1Shift) {
  std::mt19937_64 gen(4);
  auto f = make(gen, 25, 3);
  ScoreMatrix Ehat = oracle::random_scores(gen, 25, 3);
  Ehat.row(f.Y.unlabeled[0]).setZero();
  const double lambda = 0.37;
  const auto Xp = correct(f.X, Ehat, lambda, f.Y.unlabeled);
  for (NodeId i : f.Y.labeled) EXPECT_EQ(Xp.row(i), f.X.row(i));
  EXPECT_EQ(Xp.row(f.Y.unlabeled[0]), f.X.row(f.Y.unlabeled[0]));
  for (std::size_t u = 1; u < f.Y.unlabeled.size(); ++u) {
    const NodeId i = f.Y.unlabeled[u];
    EXPECT_NEAR((Xp.row(i) - f.X.row(i)).cwiseAbs().sum(), lambda, 1e-12);
  }
  EXPECT_THROW(correct(f.X, Ehat, -1.0, f.Y.unlabeled), Error);
}

TEST(Residual, DegenerateInputs) {
  std::mt19937_64 gen(8);
  auto f = make(gen, 15, 2);
  const auto E0 = error_init(f.X, f.Y);
  EXPECT_EQ(residual_propagate(f.S, f.tri, E0, f.Y, {0.0, 0.0, 30, std::nullopt}), E0.E);
  ResidualState zero{ScoreMatrix::Zero(15, 2)};
  EXPECT_TRUE(residual_propagate(f.S, f.tri, zero, f.Y, {0.4, 0.4, 30, std::nullopt})
                  .isZero(0.0));
  const Graph path = build_graph(std::vector<EdgeRecord>{{0, 1, {}}, {1, 2, {}}});
  const auto Yp = make_label_matrix({0, 1, 0}, 2, {0, 1});
  ResidualState e3{ScoreMatrix::Ones(3, 2)};
  EXPECT_THROW(residual_propagate(normalized_adjacency(path), enumerate_triangles(path), e3, Yp,
                                  {0.3, 0.3, 5, std::nullopt}),
               Error);
}

TEST(Residual, MatchesDenseOracle) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 3; ++trial) {
    auto f = make(gen, 20, 3);
    const auto signed_E0 = error_init(f.X, f.Y);
    for (Mixing m : kAllMixings)
      for (auto tp : {ResidualTeleport::initial_error, ResidualTeleport::labels}) {
        // Harmonic mixing of opposite-sign entries has near-zero denominators, so
        // the comparison there uses a same-sign residual.
        ResidualState E0 = signed_E0;
        if (m == Mixing::harmonic) E0.E = E0.E.cwiseAbs();
        const auto E = residual_propagate(f.S, f.tri, E0, f.Y, {0.5, 0.3, 25, std::nullopt},
                                          {m, tp});
        const oracle::Dense tele =
            tp == ResidualTeleport::initial_error ? oracle::to_dense(E0.E) : oracle::to_dense(f.Y.Y);
        const auto ref = oracle::residual(f.Sd, f.T, E0.E, tele, 0.5, 0.3, 25, m);
        EXPECT_LT(oracle::max_abs(E, ref), 1e-10) << to_string(m);
      }
  }
}

TEST(Residual, AlphaZeroEqualsLinearStageBitForBit) {
  std::mt19937_64 gen(9);
  auto f = make(gen, 40, 4, 0.15);
  const auto E0 = error_init(f.X, f.Y);
  const auto a = residual_propagate(f.S, f.tri, E0, f.Y, {0.0, 0.8, 50, std::nullopt});
  const auto b = linear_residual_propagate(f.S, E0.E, 0.8, 50);
  EXPECT_EQ(a, b);
}

TEST(LinearCs, ResidualStageMatchesLinearSolve) {
  std::mt19937_64 gen(10);
  auto f = make(gen, 30, 3, 0.2);
  const auto E0 = error_init(f.X, f.Y);
  const double a = 0.8;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(30, 30);
  const Eigen::MatrixXd ref = (I - a * f.Sd).partialPivLu().solve((1 - a) * oracle::to_dense(E0.E));
  EXPECT_LT(oracle::max_abs(linear_residual_propagate(f.S, E0.E, a, 500), ref), 1e-6);
}

TEST(LinearCs, ZeroResidualKeepsArgmax) {
  std::mt19937_64 gen(14);
  auto f = make(gen, 20, 2);
  // Base prediction agrees exactly with the one-hot labels.
  for (NodeId i : f.Y.labeled) f.X.row(i) = f.Y.Y.row(i);
  const auto r = linear_correct_and_smooth(f.X, f.Y, f.S, {0.8, 0.8, 50});
  EXPECT_EQ(r.lambda, 0.0);
  EXPECT_EQ(r.corrected, f.X);
  EXPECT_THROW(linear_correct_and_smooth(f.X, f.Y, f.S, {0.0, 0.8, 50}), Error);
}

TEST(Smooth, MatchesDenseOracle) {
  std::mt19937_64 gen(77);
  for (int trial = 0; trial < 3; ++trial) {
    auto f = make(gen, 18, 3);
    const ScoreMatrix Xp = f.X + 0.1 * oracle::random_scores(gen, 18, 3);
    const auto G0 = smoothing_start(Xp, f.Y);
    for (NodeId i : f.Y.labeled) EXPECT_EQ(G0.row(i), f.Y.Y.row(i));
    for (Mixing m : kAllMixings)
      for (auto tp : {SmoothTeleport::labels, SmoothTeleport::initial_state})
        for (PhiMode mode : {PhiMode::per_column, PhiMode::global}) {
          const auto G = smooth(Xp, f.Y, f.S, f.tri, {0.4, 0.4, 20, std::nullopt}, {m, mode, tp});
          const oracle::Dense tele = tp == SmoothTeleport::labels ? oracle::to_dense(f.Y.Y)
                                                                  : oracle::to_dense(G0);
          const auto ref = oracle::smooth(f.Sd, f.T, G0, tele, 0.4, 0.4, 20, m, mode);
          EXPECT_LT(oracle::max_abs(G, ref), 1e-10);
          EXPECT_TRUE(G.allFinite());
        }
  }
}

TEST(Smooth, ZeroIterationsReturnsStart) {
  std::mt19937_64 gen(1);
  auto f = make(gen, 12, 2);
  EXPECT_EQ(smooth(f.X, f.Y, f.S, f.tri, {0.3, 0.3, 0, std::nullopt}), smoothing_start(f.X, f.Y));
  ScoreMatrix bad = f.X;
  bad(0, 0) = std::nan("");
  EXPECT_THROW(smooth(bad, f.Y, f.S, f.tri, {0.3, 0.3, 5, std::nullopt}), Error);
}

TEST(Nlcs, PipelineStagesAreConsistent) {
  std::mt19937_64 gen(22);
  auto f = make(gen, 30, 3);
  NlcsConfig cfg;
  cfg.correction = {0.3, 0.4, 30, std::nullopt};
  cfg.smoothing = {0.4, 0.4, 30, std::nullopt};
  const auto r = nlcs_post_process(f.X, f.Y, f.S, f.tri, cfg);
  const auto E0 = error_init(f.X, f.Y, cfg.orientation);
  EXPECT_EQ(r.lambda, autoscale_lambda(E0, f.Y.labeled));
  const auto Ehat = residual_propagate(f.S, f.tri, E0, f.Y, cfg.correction);
  EXPECT_EQ(r.corrected, correct(f.X, Ehat, r.lambda, f.Y.unlabeled));
  EXPECT_EQ(r.smoothed, smooth(r.corrected, f.Y, f.S, f.tri, cfg.smoothing));
  for (NodeId i : f.Y.labeled) EXPECT_EQ(r.corrected.row(i), f.X.row(i));
}
