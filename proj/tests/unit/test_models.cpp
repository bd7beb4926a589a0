#include <gtest/gtest.h>

#include <random>

#include "support/oracles.hpp"

using namespace nlcs;

namespace {

FeatureMatrix random_features(std::mt19937_64& gen, Eigen::Index n, Eigen::Index d) {
  return oracle::random_scores(gen, n, d, -1.5, 1.5);
}

ScoreMatrix one_hot(const std::vector<int>& y, int c) {
  ScoreMatrix t = ScoreMatrix::Zero(static_cast<Eigen::Index>(y.size()), c);
  for (std::size_t i = 0; i < y.size(); ++i) t(static_cast<Eigen::Index>(i), y[i]) = 1.0;
  return t;
}

// Central differences against the analytic gradient.
template <typename Loss>
double max_relative_error(Eigen::VectorXd& params, const Eigen::VectorXd& analytic, Loss&& loss) {
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (Eigen::Index p = 0; p < params.size(); ++p) {
    const double keep = params(p);
    params(p) = keep + h;
    const double up = loss();
    params(p) = keep - h;
    const double down = loss();
    params(p) = keep;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::fabs(numeric), std::fabs(analytic(p)), 1e-6});
    worst = std::max(worst, std::fabs(numeric - analytic(p)) / denom);
  }
  return worst;
}

}  // namespace

TEST(Rng, ReproducibleAndInRange) {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next();
    EXPECT_EQ(x, b.next());
    EXPECT_NE(x, c.next());
  }
  for (int i = 0; i < 1000; ++i) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
    EXPECT_LT(a.below(7), 7u);
  }
  EXPECT_NE(derive_seed(1, SeedStream::split), derive_seed(1, SeedStream::init));
  EXPECT_NE(derive_seed(1, SeedStream::init), derive_seed(2, SeedStream::init));
}

TEST(Rng, NormalMoments) {
  Rng r(5);
  double s = 0, s2 = 0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double x = r.normal();
    s += x;
    s2 += x * x;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.02);
}

TEST(Softmax, RowsAreDistributions) {
  std::mt19937_64 gen(1);
  const auto p = detail::softmax_rows(oracle::random_scores(gen, 50, 6, -30, 30));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    EXPECT_NEAR(p.row(i).sum(), 1.0, 1e-9);
    EXPECT_GT(p.row(i).minCoeff(), 0.0);
    EXPECT_LT(p.row(i).maxCoeff(), 1.0 + 1e-15);
  }
}

TEST(LinearSoftmax, GradientMatchesFiniteDifferences) {
  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 5; ++trial) {
    const auto x = random_features(gen, 12, 5);
    std::vector<int> y(12);
    for (int i = 0; i < 12; ++i) y[i] = i % 3;
    const auto t = one_hot(y, 3);
    LinearSoftmax model(5, 3);
    Rng rng(trial);
    model.initialize(rng);
    model.params += 0.1 * Eigen::VectorXd::Ones(model.params.size());
    Eigen::VectorXd g;
    model.loss_and_grad(x, t, 5e-4, &g);
    const double err = max_relative_error(model.params, g, [&] {
      return model.loss_and_grad(x, t, 5e-4, nullptr);
    });
    EXPECT_LT(err, 1e-4);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferencesInferenceMode) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 4; ++trial) {
    const auto x = random_features(gen, 10, 4);
    std::vector<int> y(10);
    for (int i = 0; i < 10; ++i) y[i] = i % 3;
    const auto t = one_hot(y, 3);
    Mlp model(4, 6 + trial, 3);
    Rng rng(trial + 10);
    model.initialize(rng);
    // Non-trivial running statistics.
    model.loss_and_grad(x, t, 0.0, nullptr, BatchNormMode::training, nullptr, true);
    Eigen::VectorXd g;
    model.loss_and_grad(x, t, 1e-3, &g, BatchNormMode::inference, nullptr);
    const double err = max_relative_error(model.params, g, [&] {
      return model.loss_and_grad(x, t, 1e-3, nullptr, BatchNormMode::inference, nullptr);
    });
    EXPECT_LT(err, 1e-4);
  }
}

TEST(Mlp, GradientMatchesFiniteDifferencesTrainingMode) {
  std::mt19937_64 gen(5);
  const auto x = random_features(gen, 9, 3);
  std::vector<int> y(9);
  for (int i = 0; i < 9; ++i) y[i] = i % 2;
  const auto t = one_hot(y, 2);
  Mlp model(3, 5, 2);
  Rng rng(2);
  model.initialize(rng);
  Rng mrng(3);
  const auto masks = model.sample_masks(9, 0.3, mrng);
  Eigen::VectorXd g;
  model.loss_and_grad(x, t, 0.0, &g, BatchNormMode::training, &masks);
  const double err = max_relative_error(model.params, g, [&] {
    return model.loss_and_grad(x, t, 0.0, nullptr, BatchNormMode::training, &masks);
  });
  EXPECT_LT(err, 1e-4);
}

TEST(LinearSoftmax, SeparableToyReachesFullTrainingAccuracy) {
  std::mt19937_64 gen(6);
  std::normal_distribution<double> noise(0.0, 0.3);
  FeatureMatrix x(20, 2);
  std::vector<int> labels(20);
  for (int i = 0; i < 20; ++i) {
    labels[i] = i < 10 ? 0 : 1;
    x(i, 0) = (labels[i] ? 2.0 : -2.0) + noise(gen);
    x(i, 1) = noise(gen);
  }
  IndexSet all(20);
  for (int i = 0; i < 20; ++i) all[i] = i;
  const auto Y = make_label_matrix(labels, 2, all);
  TrainConfig cfg;
  cfg.seed = 1;
  const auto r = train_linear_softmax(x, Y, cfg);
  EXPECT_EQ(accuracy_on(r.prediction.X, all, labels), 1.0);
  EXPECT_EQ(r.prediction.source, BaseSource::plain_linear);
}

TEST(LinearSoftmax, LossNonIncreasingWithSmallStep) {
  std::mt19937_64 gen(7);
  const auto x = random_features(gen, 30, 4);
  std::vector<int> labels(30);
  for (int i = 0; i < 30; ++i) labels[i] = i % 3;
  IndexSet all(30);
  for (int i = 0; i < 30; ++i) all[i] = i;
  TrainConfig cfg;
  cfg.optimizer = Optimizer::gradient_descent;
  cfg.learning_rate = 1e-3;
  cfg.epochs = 300;
  cfg.selection = ModelSelection::last_epoch;
  const auto r = train_linear_softmax(x, make_label_matrix(labels, 3, all), cfg);
  for (std::size_t e = 1; e < r.loss_history.size(); ++e)
    EXPECT_LE(r.loss_history[e], r.loss_history[e - 1]);
}

TEST(Mlp, FitsXor) {
  FeatureMatrix x(4, 2);
  x << 0, 0, 0, 1, 1, 0, 1, 1;
  const std::vector<int> labels{0, 1, 1, 0};
  const IndexSet all{0, 1, 2, 3};
  TrainConfig cfg;
  cfg.hidden = 8;
  cfg.dropout = 0.0;
  cfg.weight_decay = 0.0;
  cfg.epochs = 500;
  cfg.seed = 3;
  cfg.selection = ModelSelection::last_epoch;
  const auto r = train_mlp(x, make_label_matrix(labels, 2, all), cfg);
  EXPECT_EQ(accuracy_on(r.prediction.X, all, labels), 1.0);
  EXPECT_EQ(r.prediction.source, BaseSource::mlp);
}

TEST(Training, SeedFixesTrajectory) {
  std::mt19937_64 gen(8);
  const auto x = random_features(gen, 40, 6);
  std::vector<int> labels(40);
  for (int i = 0; i < 40; ++i) labels[i] = i % 4;
  IndexSet train;
  for (int i = 0; i < 20; ++i) train.push_back(i);
  const auto Y = make_label_matrix(labels, 4, train);
  IndexSet val;
  for (int i = 20; i < 40; ++i) val.push_back(i);
  const Validation v{val, labels};
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.hidden = 16;
  cfg.seed = 11;
  const auto a = train_mlp(x, Y, cfg, &v);
  const auto b = train_mlp(x, Y, cfg, &v);
  EXPECT_EQ(a.prediction.X, b.prediction.X);
  EXPECT_EQ(a.loss_history, b.loss_history);
  cfg.seed = 12;
  EXPECT_NE(train_mlp(x, Y, cfg, &v).loss_history, a.loss_history);
}

TEST(Training, BestValidationCheckpointIsRestored) {
  std::mt19937_64 gen(9);
  const auto x = random_features(gen, 60, 5);
  std::vector<int> labels(60);
  for (int i = 0; i < 60; ++i) labels[i] = (x(i, 0) + 0.5 * x(i, 1) > 0) ? 1 : 0;
  IndexSet train, val;
  for (int i = 0; i < 60; ++i) (i < 20 ? train : val).push_back(i);
  const Validation v{val, labels};
  TrainConfig cfg;
  cfg.epochs = 80;
  cfg.hidden = 12;
  cfg.seed = 1;
  const auto r = train_mlp(x, make_label_matrix(labels, 2, train), cfg, &v);
  ASSERT_GE(r.best_epoch, 1);
  const FeatureMatrix xv = detail::gather_rows(x, val);
  ScoreMatrix pv(static_cast<Eigen::Index>(val.size()), 2);
  for (std::size_t i = 0; i < val.size(); ++i) pv.row(i) = r.prediction.X.row(val[i]);
  EXPECT_EQ(accuracy_on(pv, val, labels), r.best_validation_accuracy);
}

TEST(Training, CheckpointsAndValidation) {
  std::mt19937_64 gen(10);
  const auto x = random_features(gen, 12, 3);
  std::vector<int> labels(12);
  for (int i = 0; i < 12; ++i) labels[i] = i % 2;
  const auto Y = make_label_matrix(labels, 2, {0, 1, 2, 3});
  TrainConfig cfg;
  cfg.epochs = 1000;
  cfg.checkpoint_every = 100;
  std::vector<int> epochs;
  train_linear_softmax(x, Y, cfg, nullptr,
                       [&](int e, const ScoreMatrix& s) {
                         epochs.push_back(e);
                         EXPECT_EQ(s.rows(), 12);
                       });
  EXPECT_EQ(epochs.size(), 10u);
  EXPECT_EQ(epochs.back(), 1000);
  cfg.learning_rate = 0.0;
  EXPECT_THROW(train_linear_softmax(x, Y, cfg), Error);
  cfg.learning_rate = 0.01;
  EXPECT_THROW(train_linear_softmax(x, make_label_matrix(labels, 2, {0}), cfg), Error);
}

TEST(Training, DivergenceIsReportedWithEpoch) {
  FeatureMatrix x(4, 1);
  x << 1e200, -1e200, 1e200, -1e200;
  const auto Y = make_label_matrix({0, 1, 0, 1}, 2, {0, 1, 2, 3});
  TrainConfig cfg;
  cfg.optimizer = Optimizer::gradient_descent;
  cfg.learning_rate = 1e10;
  try {
    train_linear_softmax(x, Y, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Spectral, MatchesDenseEigensolver) {
  std::mt19937_64 gen(12);
  const auto rg = oracle::random_graph(gen, 30, 0.25, true);
  const auto S = normalized_adjacency(build_graph(rg.edges, rg.n));
  const auto emb = spectral_embedding(S, 5, 1);
  EXPECT_TRUE(emb.converged);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S.matrix.to_dense());
  const Eigen::VectorXd top = eig.eigenvalues().reverse().head(5);
  EXPECT_LT((emb.eigenvalues - top).cwiseAbs().maxCoeff(), 1e-5);
  const Eigen::MatrixXd Q = emb.coords;
  EXPECT_LT((Q.transpose() * Q - Eigen::MatrixXd::Identity(5, 5)).cwiseAbs().maxCoeff(), 1e-6);
  const auto again = spectral_embedding(S, 5, 1);
  EXPECT_EQ(again.coords, emb.coords);
  EXPECT_THROW(spectral_embedding(S, 30, 1), Error);
}

TEST(Spectral, TwoTrianglesSpanComponentIndicators) {
  const Graph g = build_graph(std::vector<EdgeRecord>{
      {0, 1, {}}, {1, 2, {}}, {0, 2, {}}, {3, 4, {}}, {4, 5, {}}, {3, 5, {}}});
  const auto emb = spectral_embedding(normalized_adjacency(g), 2, 4);
  EXPECT_NEAR(emb.eigenvalues(0), 1.0, 1e-8);
  EXPECT_NEAR(emb.eigenvalues(1), 1.0, 1e-8);
  Eigen::MatrixXd ind = Eigen::MatrixXd::Zero(6, 2);
  ind.block(0, 0, 3, 1).setConstant(1 / std::sqrt(3.0));
  ind.block(3, 1, 3, 1).setConstant(1 / std::sqrt(3.0));
  const Eigen::MatrixXd Q = emb.coords;
  // Largest principal angle: smallest singular value of Q^T ind is its cosine.
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(Q.transpose() * ind);
  const double cos_min = svd.singularValues().minCoeff();
  EXPECT_LT(std::acos(std::min(1.0, cos_min)), 1e-4);
}

TEST(Spectral, DefaultDimension) {
  EXPECT_EQ(default_embedding_dim(7, 2708), 32);
  EXPECT_EQ(default_embedding_dim(20, 2708), 40);
  EXPECT_EQ(default_embedding_dim(7, 10), 9);
}
