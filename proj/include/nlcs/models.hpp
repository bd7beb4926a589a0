#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "nlcs/common.hpp"
#include "nlcs/correct_smooth.hpp"
#include "nlcs/propagation.hpp"
#include "nlcs/rng.hpp"

namespace nlcs {

using FeatureMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Optimizer { adam, gradient_descent };
enum class ModelSelection { best_validation, last_epoch };

struct TrainConfig {
  int epochs = 1000;
  double learning_rate = 0.01;
  std::uint64_t seed = 0;
  Optimizer optimizer = Optimizer::adam;
  double weight_decay = 5e-4;
  int hidden = 256;
  double dropout = 0.5;
  ModelSelection selection = ModelSelection::best_validation;
  int eval_every = 1;        // validation cadence for model selection
  int checkpoint_every = 0;  // 0 disables checkpoint callbacks

  void validate() const {
    require(epochs >= 1, "epochs must be >= 1");
    require(learning_rate > 0.0, "learning rate must be > 0");
    require(weight_decay >= 0.0, "weight decay must be >= 0");
    require(hidden >= 1, "hidden width must be >= 1");
    require(dropout >= 0.0 && dropout < 1.0, "dropout must be in [0, 1)");
    require(eval_every >= 1, "eval_every must be >= 1");
    require(checkpoint_every >= 0, "checkpoint_every must be >= 0");
  }
};

/// Held-out nodes used for checkpoint selection.
struct Validation {
  IndexSet nodes;
  std::vector<int> labels;  // full label vector, indexed by node id
};

// Receives the current scores for all nodes every checkpoint_every epochs.
using CheckpointFn = std::function<void(int epoch, const ScoreMatrix& scores)>;

struct TrainResult {
  BasePrediction prediction;
  int best_epoch = 0;
  double best_validation_accuracy = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> loss_history;
};

/// Flat parameter vector with named matrix blocks laid out column-major.
class ParamLayout {
 public:
  struct Block {
    Eigen::Index offset, rows, cols;
  };

  int add(Eigen::Index rows, Eigen::Index cols) {
    blocks_.push_back({size_, rows, cols});
    size_ += rows * cols;
    return static_cast<int>(blocks_.size()) - 1;
  }
  Eigen::Index size() const { return size_; }

  Eigen::Map<Eigen::MatrixXd> view(Eigen::VectorXd& v, int id) const {
    const auto& b = blocks_[static_cast<std::size_t>(id)];
    return {v.data() + b.offset, b.rows, b.cols};
  }
  Eigen::Map<const Eigen::MatrixXd> view(const Eigen::VectorXd& v, int id) const {
    const auto& b = blocks_[static_cast<std::size_t>(id)];
    return {v.data() + b.offset, b.rows, b.cols};
  }

 private:
  std::vector<Block> blocks_;
  Eigen::Index size_ = 0;
};

namespace detail {

inline void glorot_uniform(Eigen::Map<Eigen::MatrixXd> w, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j)
    for (Eigen::Index i = 0; i < w.rows(); ++i) w(i, j) = (2.0 * rng.uniform() - 1.0) * a;
}

// Row-wise numerically stable softmax.
inline ScoreMatrix softmax_rows(const Eigen::MatrixXd& logits) {
  ScoreMatrix p(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    double s = 0.0;
    for (Eigen::Index c = 0; c < logits.cols(); ++c) {
      p(i, c) = std::exp(logits(i, c) - m);
      s += p(i, c);
    }
    p.row(i) /= s;
  }
  return p;
}

// Mean cross-entropy of softmax(logits) against one-hot targets.
inline double cross_entropy(const Eigen::MatrixXd& logits, const ScoreMatrix& targets) {
  double loss = 0.0;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    loss -= (targets.row(i).array() * (logits.row(i).array() - lse)).sum();
  }
  return loss / static_cast<double>(logits.rows());
}

inline FeatureMatrix gather_rows(const FeatureMatrix& x, const IndexSet& rows) {
  FeatureMatrix out(static_cast<Eigen::Index>(rows.size()), x.cols());
  for (std::size_t r = 0; r < rows.size(); ++r)
    out.row(static_cast<Eigen::Index>(r)) = x.row(rows[r]);
  return out;
}

class AdamState {
 public:
  explicit AdamState(Eigen::Index size)
      : m_(Eigen::VectorXd::Zero(size)), v_(Eigen::VectorXd::Zero(size)) {}

  void step(Eigen::VectorXd& params, const Eigen::VectorXd& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    m_ = b1 * m_ + (1.0 - b1) * grad;
    v_ = b2 * v_ + (1.0 - b2) * grad.cwiseAbs2();
    const double c1 = 1.0 - std::pow(b1, t_);
    const double c2 = 1.0 - std::pow(b2, t_);
    params.array() -= lr * (m_.array() / c1) / ((v_.array() / c2).sqrt() + eps);
  }

 private:
  Eigen::VectorXd m_, v_;
  int t_ = 0;
};

}  // namespace detail

/// One linear layer followed by softmax.
class LinearSoftmax {
 public:
  LinearSoftmax(Eigen::Index inputs, Eigen::Index classes) {
    w_ = layout_.add(inputs, classes);
    b_ = layout_.add(1, classes);
    params = Eigen::VectorXd::Zero(layout_.size());
  }

  void initialize(Rng& rng) {
    params.setZero();
    detail::glorot_uniform(layout_.view(params, w_), rng);
  }

  Eigen::MatrixXd logits(const FeatureMatrix& x) const {
    const auto W = layout_.view(params, w_);
    const auto b = layout_.view(params, b_);
    Eigen::MatrixXd z = x * W;
    z.rowwise() += b.row(0);
    return z;
  }

  ScoreMatrix predict(const FeatureMatrix& x) const {
    return detail::softmax_rows(logits(x));
  }

  /// Mean cross-entropy over the given rows plus (weight_decay / 2) |W|^2.
  double loss_and_grad(const FeatureMatrix& x, const ScoreMatrix& targets,
                       double weight_decay, Eigen::VectorXd* grad) const {
    const Eigen::MatrixXd z = logits(x);
    const auto W = layout_.view(params, w_);
    double loss = detail::cross_entropy(z, targets) + 0.5 * weight_decay * W.squaredNorm();
    if (grad) {
      grad->setZero(layout_.size());
      const double m = static_cast<double>(x.rows());
      const Eigen::MatrixXd dz = (detail::softmax_rows(z) - targets) / m;
      layout_.view(*grad, w_) = x.transpose() * dz + weight_decay * W;
      layout_.view(*grad, b_) = dz.colwise().sum();
    }
    return loss;
  }

  using Snapshot = Eigen::VectorXd;
  Snapshot snapshot() const { return params; }
  void restore(const Snapshot& s) { params = s; }

  Eigen::VectorXd params;

 private:
  ParamLayout layout_;
  int w_ = 0, b_ = 0;
};

/// Batch-normalization behaviour during a forward pass.
enum class BatchNormMode { training, inference };

/// Three linear layers, the first two followed by batch normalization, ReLU
/// and inverted dropout; softmax output.
class Mlp {
 public:
  Mlp(Eigen::Index inputs, Eigen::Index hidden, Eigen::Index classes)
      : hidden_(hidden) {
    w1_ = layout_.add(inputs, hidden);
    b1_ = layout_.add(1, hidden);
    g1_ = layout_.add(1, hidden);
    h1_ = layout_.add(1, hidden);
    w2_ = layout_.add(hidden, hidden);
    b2_ = layout_.add(1, hidden);
    g2_ = layout_.add(1, hidden);
    h2_ = layout_.add(1, hidden);
    w3_ = layout_.add(hidden, classes);
    b3_ = layout_.add(1, classes);
    params = Eigen::VectorXd::Zero(layout_.size());
    for (auto& s : running_mean_) s = Eigen::RowVectorXd::Zero(hidden);
    for (auto& s : running_var_) s = Eigen::RowVectorXd::Ones(hidden);
  }

  void initialize(Rng& rng) {
    params.setZero();
    detail::glorot_uniform(layout_.view(params, w1_), rng);
    detail::glorot_uniform(layout_.view(params, w2_), rng);
    detail::glorot_uniform(layout_.view(params, w3_), rng);
    layout_.view(params, g1_).setOnes();
    layout_.view(params, g2_).setOnes();
  }

  Eigen::Index hidden() const { return hidden_; }

  // Dropout keep-masks (already scaled by 1 / (1 - p)) for the two hidden
  // layers; empty means no dropout.
  struct DropoutMasks {
    Eigen::MatrixXd first, second;
  };

  DropoutMasks sample_masks(Eigen::Index rows, double p, Rng& rng) const {
    DropoutMasks m;
    auto draw = [&](Eigen::MatrixXd& mask) {
      mask.resize(rows, hidden_);
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < hidden_; ++j)
          mask(i, j) = rng.uniform() < p ? 0.0 : 1.0 / (1.0 - p);
    };
    draw(m.first);
    draw(m.second);
    return m;
  }

  ScoreMatrix predict(const FeatureMatrix& x) const {
    Cache c;
    return detail::softmax_rows(forward(x, BatchNormMode::inference, nullptr, c));
  }

  /// Mean cross-entropy plus (weight_decay / 2) * sum of squared weight
  /// matrices. In training mode the batch statistics of x are used (and,
  /// when update_running is set, stored as the running statistics).
  double loss_and_grad(const FeatureMatrix& x, const ScoreMatrix& targets,
                       double weight_decay, Eigen::VectorXd* grad,
                       BatchNormMode mode, const DropoutMasks* masks,
                       bool update_running = false) {
    Cache c;
    const Eigen::MatrixXd z = forward(x, mode, masks, c);
    const auto W1 = layout_.view(params, w1_);
    const auto W2 = layout_.view(params, w2_);
    const auto W3 = layout_.view(params, w3_);
    const double loss = detail::cross_entropy(z, targets) +
                        0.5 * weight_decay *
                            (W1.squaredNorm() + W2.squaredNorm() + W3.squaredNorm());
    if (update_running && mode == BatchNormMode::training) {
      running_mean_[0] = c.layer[0].mean;
      running_var_[0] = c.layer[0].var;
      running_mean_[1] = c.layer[1].mean;
      running_var_[1] = c.layer[1].var;
    }
    if (!grad) return loss;

    grad->setZero(layout_.size());
    const double m = static_cast<double>(x.rows());
    Eigen::MatrixXd dz = (detail::softmax_rows(z) - targets) / m;
    layout_.view(*grad, w3_) = c.layer[1].out.transpose() * dz + weight_decay * W3;
    layout_.view(*grad, b3_) = dz.colwise().sum();
    Eigen::MatrixXd dh = dz * W3.transpose();
    dh = backward_hidden(1, dh, mode, masks ? &masks->second : nullptr, c, *grad);
    layout_.view(*grad, w2_) = c.layer[0].out.transpose() * dh + weight_decay * W2;
    layout_.view(*grad, b2_) = dh.colwise().sum();
    Eigen::MatrixXd dh1 = dh * W2.transpose();
    dh1 = backward_hidden(0, dh1, mode, masks ? &masks->first : nullptr, c, *grad);
    layout_.view(*grad, w1_) = x.transpose() * dh1 + weight_decay * W1;
    layout_.view(*grad, b1_) = dh1.colwise().sum();
    return loss;
  }

  // Parameters plus batch-norm running statistics, which are not trained by
  // the optimizer but do feed inference.
  struct Snapshot {
    Eigen::VectorXd params;
    Eigen::RowVectorXd mean[2], var[2];
  };
  Snapshot snapshot() const {
    return {params, {running_mean_[0], running_mean_[1]}, {running_var_[0], running_var_[1]}};
  }
  void restore(const Snapshot& s) {
    params = s.params;
    for (int l = 0; l < 2; ++l) {
      running_mean_[l] = s.mean[l];
      running_var_[l] = s.var[l];
    }
  }

  Eigen::VectorXd params;

 private:
  static constexpr double kBnEps = 1e-5;

  struct LayerCache {
    Eigen::MatrixXd normalized;  // x_hat
    Eigen::MatrixXd pre_relu;    // gamma * x_hat + beta
    Eigen::MatrixXd out;         // after ReLU and dropout
    Eigen::RowVectorXd mean, var, inv_std;
  };
  struct Cache {
    LayerCache layer[2];
  };

  Eigen::MatrixXd hidden_forward(int l, const Eigen::MatrixXd& z, BatchNormMode mode,
                                 const Eigen::MatrixXd* mask, LayerCache& c) const {
    const auto gamma = layout_.view(params, l == 0 ? g1_ : g2_);
    const auto beta = layout_.view(params, l == 0 ? h1_ : h2_);
    if (mode == BatchNormMode::training) {
      c.mean = z.colwise().mean();
      c.var = (z.rowwise() - c.mean).array().square().colwise().mean();
    } else {
      c.mean = running_mean_[l];
      c.var = running_var_[l];
    }
    c.inv_std = (c.var.array() + kBnEps).rsqrt();
    c.normalized = (z.rowwise() - c.mean).array().rowwise() * c.inv_std.array();
    c.pre_relu = (c.normalized.array().rowwise() * gamma.row(0).array()).rowwise() +
                 beta.row(0).array();
    c.out = c.pre_relu.cwiseMax(0.0);
    if (mask) c.out = c.out.cwiseProduct(*mask);
    return c.out;
  }

  // Back through dropout, ReLU and batch norm of hidden layer l; fills the
  // gamma / beta gradients and returns d(loss)/d(pre-normalization).
  Eigen::MatrixXd backward_hidden(int l, Eigen::MatrixXd d, BatchNormMode mode,
                                  const Eigen::MatrixXd* mask, const Cache& cache,
                                  Eigen::VectorXd& grad) const {
    const LayerCache& c = cache.layer[l];
    const auto gamma = layout_.view(params, l == 0 ? g1_ : g2_);
    if (mask) d = d.cwiseProduct(*mask);
    d = (c.pre_relu.array() > 0.0).select(d, 0.0);
    layout_.view(grad, l == 0 ? g1_ : g2_) =
        (d.cwiseProduct(c.normalized)).colwise().sum();
    layout_.view(grad, l == 0 ? h1_ : h2_) = d.colwise().sum();
    Eigen::MatrixXd dxhat = d.array().rowwise() * gamma.row(0).array();
    if (mode == BatchNormMode::inference)
      return dxhat.array().rowwise() * c.inv_std.array();
    const double m = static_cast<double>(d.rows());
    const Eigen::RowVectorXd sum_d = dxhat.colwise().sum();
    const Eigen::RowVectorXd sum_dx = dxhat.cwiseProduct(c.normalized).colwise().sum();
    Eigen::MatrixXd dx = m * dxhat;
    dx.rowwise() -= sum_d;
    dx -= (c.normalized.array().rowwise() * sum_dx.array()).matrix();
    return (dx.array().rowwise() * (c.inv_std.array() / m)).matrix();
  }

  Eigen::MatrixXd forward(const FeatureMatrix& x, BatchNormMode mode,
                          const DropoutMasks* masks, Cache& c) const {
    const auto W1 = layout_.view(params, w1_);
    const auto W2 = layout_.view(params, w2_);
    const auto W3 = layout_.view(params, w3_);
    Eigen::MatrixXd z1 = x * W1;
    z1.rowwise() += layout_.view(params, b1_).row(0);
    const Eigen::MatrixXd a1 =
        hidden_forward(0, z1, mode, masks ? &masks->first : nullptr, c.layer[0]);
    Eigen::MatrixXd z2 = a1 * W2;
    z2.rowwise() += layout_.view(params, b2_).row(0);
    const Eigen::MatrixXd a2 =
        hidden_forward(1, z2, mode, masks ? &masks->second : nullptr, c.layer[1]);
    Eigen::MatrixXd z3 = a2 * W3;
    z3.rowwise() += layout_.view(params, b3_).row(0);
    return z3;
  }

  ParamLayout layout_;
  Eigen::Index hidden_;
  int w1_, b1_, g1_, h1_, w2_, b2_, g2_, h2_, w3_, b3_;
  Eigen::RowVectorXd running_mean_[2], running_var_[2];
};

inline double accuracy_on(const ScoreMatrix& scores, const IndexSet& nodes,
                          const std::vector<int>& labels) {
  if (nodes.empty()) return 0.0;
  std::size_t hit = 0;
  for (std::size_t r = 0; r < nodes.size(); ++r)
    hit += argmax_row(scores, static_cast<Eigen::Index>(r)) == labels[nodes[r]];
  return static_cast<double>(hit) / static_cast<double>(nodes.size());
}

namespace detail {

// Shared full-batch loop. Model must expose params, predict(x) and a
// step_loss(x, targets, grad*, epoch) callable supplied by the caller.
template <typename Model, typename StepLoss>
TrainResult train_loop(Model& model, const FeatureMatrix& features,
                       const LabelMatrix& Y, const TrainConfig& cfg,
                       const Validation* validation, const CheckpointFn& checkpoint,
                       StepLoss&& step_loss, BaseSource source) {
  const FeatureMatrix x_train = gather_rows(features, Y.labeled);
  const ScoreMatrix y_train = gather_rows(Y.Y, Y.labeled);
  FeatureMatrix x_val;
  if (validation) x_val = gather_rows(features, validation->nodes);

  TrainResult result;
  result.loss_history.reserve(static_cast<std::size_t>(cfg.epochs));
  Eigen::VectorXd grad(model.params.size());
  AdamState adam(model.params.size());
  auto best = model.snapshot();
  double best_acc = -1.0;
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double loss = step_loss(x_train, y_train, &grad, epoch);
    if (!std::isfinite(loss) || !grad.allFinite())
      throw Error("training diverged at epoch " + std::to_string(epoch));
    result.loss_history.push_back(loss);
    if (cfg.optimizer == Optimizer::adam)
      adam.step(model.params, grad, cfg.learning_rate);
    else
      model.params -= cfg.learning_rate * grad;
    if (!model.params.allFinite())
      throw Error("training diverged at epoch " + std::to_string(epoch));

    if (validation && cfg.selection == ModelSelection::best_validation &&
        (epoch % cfg.eval_every == 0 || epoch == cfg.epochs)) {
      const double acc = accuracy_on(model.predict(x_val), validation->nodes,
                                     validation->labels);
      if (acc > best_acc) {
        best_acc = acc;
        best_epoch = epoch;
        best = model.snapshot();
      }
    }
    if (checkpoint && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0)
      checkpoint(epoch, model.predict(features));
  }

  if (validation && cfg.selection == ModelSelection::best_validation) {
    model.restore(best);
    result.best_epoch = best_epoch;
    result.best_validation_accuracy = best_acc;
  } else {
    result.best_epoch = cfg.epochs;
    if (validation)
      result.best_validation_accuracy =
          accuracy_on(model.predict(x_val), validation->nodes, validation->labels);
  }
  result.prediction.X = model.predict(features);
  result.prediction.source = source;
  return result;
}

}  // namespace detail

/// Plain-linear softmax classifier trained by full-batch descent on the
/// labeled rows; returns scores for every node.
inline TrainResult train_linear_softmax(const FeatureMatrix& features,
                                        const LabelMatrix& Y, const TrainConfig& cfg,
                                        const Validation* validation = nullptr,
                                        const CheckpointFn& checkpoint = {}) {
  cfg.validate();
  require(features.rows() == Y.Y.rows(), "train_linear_softmax: feature row count mismatch");
  require(Y.labeled.size() >= static_cast<std::size_t>(Y.num_classes()),
          "train_linear_softmax: need at least one labeled row per class");
  LinearSoftmax model(features.cols(), Y.num_classes());
  Rng rng(cfg.seed);
  model.initialize(rng);
  return detail::train_loop(
      model, features, Y, cfg, validation, checkpoint,
      [&](const FeatureMatrix& x, const ScoreMatrix& y, Eigen::VectorXd* g, int) {
        return model.loss_and_grad(x, y, cfg.weight_decay, g);
      },
      BaseSource::plain_linear);
}

/// Three-layer perceptron with batch norm, ReLU and dropout, selected by best
/// validation accuracy when a validation set is given.
inline TrainResult train_mlp(const FeatureMatrix& features, const LabelMatrix& Y,
                             const TrainConfig& cfg,
                             const Validation* validation = nullptr,
                             const CheckpointFn& checkpoint = {}) {
  cfg.validate();
  require(features.rows() == Y.Y.rows(), "train_mlp: feature row count mismatch");
  require(Y.labeled.size() >= static_cast<std::size_t>(Y.num_classes()),
          "train_mlp: need at least one labeled row per class");
  Mlp model(features.cols(), cfg.hidden, Y.num_classes());
  Rng rng(cfg.seed);
  model.initialize(rng);
  Rng dropout_rng(derive_seed(cfg.seed, SeedStream::dropout));
  return detail::train_loop(
      model, features, Y, cfg, validation, checkpoint,
      [&](const FeatureMatrix& x, const ScoreMatrix& y, Eigen::VectorXd* g, int) {
        std::optional<Mlp::DropoutMasks> masks;
        if (cfg.dropout > 0.0) masks = model.sample_masks(x.rows(), cfg.dropout, dropout_rng);
        return model.loss_and_grad(x, y, cfg.weight_decay, g, BatchNormMode::training,
                                   masks ? &*masks : nullptr, true);
      },
      BaseSource::mlp);
}

}  // namespace nlcs
