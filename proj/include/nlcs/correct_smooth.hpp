#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "nlcs/common.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/mixing.hpp"
#include "nlcs/propagation.hpp"
#include "nlcs/triangles.hpp"

namespace nlcs {

enum class BaseSource { plain_linear, mlp, external_file };

/// Class scores from a graph-agnostic model.
struct BasePrediction {
  ScoreMatrix X;
  BaseSource source = BaseSource::external_file;
};

// prediction_minus_truth is the printed E_L = X_L - Y_L. truth_minus_prediction
// is the residual direction that, added back to X, moves scores toward the
// known labels.
enum class ResidualOrientation { prediction_minus_truth, truth_minus_prediction };

// Teleport term of the residual recurrence: the initial residual E(0), or the
// label matrix Y as printed.
enum class ResidualTeleport { initial_error, labels };

// Teleport term of the smoothing recurrence: Y as printed, or G(0).
enum class SmoothTeleport { labels, initial_state };

struct ResidualState {
  ScoreMatrix E;
  ResidualOrientation orientation = ResidualOrientation::prediction_minus_truth;
};

inline std::string_view to_string(ResidualTeleport t) {
  return t == ResidualTeleport::initial_error ? "error" : "labels";
}
inline std::string_view to_string(SmoothTeleport t) {
  return t == SmoothTeleport::labels ? "labels" : "initial";
}
inline std::string_view to_string(ResidualOrientation o) {
  return o == ResidualOrientation::prediction_minus_truth ? "prediction-minus-truth"
                                                          : "truth-minus-prediction";
}

/// E_L = X_L - Y_L (or its negation), E_U = 0.
inline ResidualState error_init(
    const ScoreMatrix& X, const LabelMatrix& Y,
    ResidualOrientation orientation = ResidualOrientation::prediction_minus_truth) {
  require(X.rows() == Y.Y.rows() && X.cols() == Y.Y.cols(),
          "error_init: base prediction shape " + std::to_string(X.rows()) + "x" +
              std::to_string(X.cols()) + " does not match labels " +
              std::to_string(Y.Y.rows()) + "x" + std::to_string(Y.Y.cols()));
  ResidualState r;
  r.orientation = orientation;
  r.E = ScoreMatrix::Zero(X.rows(), X.cols());
  for (NodeId i : Y.labeled) {
    if (orientation == ResidualOrientation::prediction_minus_truth)
      r.E.row(i) = X.row(i) - Y.Y.row(i);
    else
      r.E.row(i) = Y.Y.row(i) - X.row(i);
  }
  return r;
}

struct ResidualOptions {
  Mixing sigma = Mixing::arithmetic_mean;
  ResidualTeleport teleport = ResidualTeleport::initial_error;
};

/// E <- alpha S_tensor(E) + beta S E + (1 - alpha - beta) T, E(0) = E0.
/// No phi normalization in this loop.
inline ScoreMatrix residual_propagate(const NormalizedAdjacency& S,
                                      const TriangleSet& tri,
                                      const ResidualState& E0,
                                      const LabelMatrix& Y,
                                      const PropagationParams& params,
                                      const ResidualOptions& opts = {},
                                      MixStats* stats = nullptr) {
  params.validate();
  require(S.num_nodes() == static_cast<std::size_t>(E0.E.rows()),
          "residual_propagate: shape mismatch");
  if (params.alpha > 0.0) {
    require(tri.num_nodes() == S.num_nodes(), "residual_propagate: shape mismatch");
    if (tri.empty())
      throw Error("residual_propagate: alpha > 0 requires at least one triangle");
  }
  const ScoreMatrix& teleport =
      opts.teleport == ResidualTeleport::initial_error ? E0.E : Y.Y;
  require(teleport.rows() == E0.E.rows() && teleport.cols() == E0.E.cols(),
          "residual_propagate: label matrix shape mismatch");
  ScoreMatrix E = E0.E;
  for (int t = 0; t < params.iterations; ++t) {
    ScoreMatrix tensor_term;
    if (params.alpha > 0.0) tensor_term = nonlinear_map(tri, E, opts.sigma, stats);
    ScoreMatrix next = detail::combine(params.alpha, &tensor_term, params.beta,
                                       S.apply(E), params.teleport(), teleport);
    check_finite(next, "residual_propagate");
    const bool done =
        params.tolerance && detail::max_abs_change(next, E) < *params.tolerance;
    E = std::move(next);
    if (done) break;
  }
  return E;
}

/// Autoscale: mean L1 norm of the initial labeled residual rows.
inline double autoscale_lambda(const ResidualState& E0, const IndexSet& labeled) {
  require(!labeled.empty(), "autoscale_lambda: empty labeled set");
  double total = 0.0;
  // Plain index order so the value is reproducible by a literal recount.
  for (NodeId j : labeled)
    for (Eigen::Index c = 0; c < E0.E.cols(); ++c) total += std::abs(E0.E(j, c));
  return total / static_cast<double>(labeled.size());
}

/// X'_i = X_i + lambda * E_i / |E_i|_1 for unlabeled rows with nonzero
/// propagated residual. Other rows are copied unchanged and no clamping to
/// the simplex is applied.
inline ScoreMatrix correct(const ScoreMatrix& X, const ScoreMatrix& Ehat,
                           double lambda, const IndexSet& unlabeled) {
  require(lambda >= 0.0, "correct: lambda must be >= 0");
  require(X.rows() == Ehat.rows() && X.cols() == Ehat.cols(),
          "correct: shape mismatch");
  ScoreMatrix out = X;
  for (NodeId i : unlabeled) {
    const double norm = Ehat.row(i).cwiseAbs().sum();
    if (norm > 0.0) out.row(i) += (lambda / norm) * Ehat.row(i);
  }
  return out;
}

struct SmoothOptions {
  Mixing sigma = Mixing::arithmetic_mean;
  PhiMode phi_mode = PhiMode::per_column;
  SmoothTeleport teleport = SmoothTeleport::labels;
};

/// G(0): labeled rows Y_L, unlabeled rows X'_U.
inline ScoreMatrix smoothing_start(const ScoreMatrix& corrected, const LabelMatrix& Y) {
  require(corrected.rows() == Y.Y.rows() && corrected.cols() == Y.Y.cols(),
          "smooth: shape mismatch");
  ScoreMatrix G = corrected;
  for (NodeId i : Y.labeled) G.row(i) = Y.Y.row(i);
  return G;
}

/// G(t+1) = (alpha S_tensor(G) + beta S G + (1 - alpha - beta) T) / phi(G(t)).
inline ScoreMatrix smooth(const ScoreMatrix& corrected, const LabelMatrix& Y,
                          const NormalizedAdjacency& S, const TriangleSet& tri,
                          const PropagationParams& params,
                          const SmoothOptions& opts = {},
                          MixStats* stats = nullptr) {
  params.validate();
  check_finite(corrected, "smooth");
  require(S.num_nodes() == Y.num_nodes() && tri.num_nodes() == Y.num_nodes(),
          "smooth: shape mismatch");
  if (params.alpha > 0.0 && tri.empty())
    throw Error("smooth: alpha > 0 requires at least one triangle");
  const ScoreMatrix G0 = smoothing_start(corrected, Y);
  const ScoreMatrix& teleport = opts.teleport == SmoothTeleport::labels ? Y.Y : G0;
  ScoreMatrix G = G0;
  for (int t = 0; t < params.iterations; ++t) {
    const auto phi = phi_columns(tri, G, opts.sigma, stats);
    ScoreMatrix tensor_term;
    if (params.alpha > 0.0) tensor_term = nonlinear_map(tri, G, opts.sigma, stats);
    ScoreMatrix next = detail::combine(params.alpha, &tensor_term, params.beta,
                                       S.apply(G), params.teleport(), teleport);
    normalize_by_phi(next, phi, opts.phi_mode);
    check_finite(next, "smooth");
    const bool done =
        params.tolerance && detail::max_abs_change(next, G) < *params.tolerance;
    G = std::move(next);
    if (done) break;
  }
  return G;
}

/// Stage outputs of a correct-and-smooth style post-processing run.
struct PostProcessResult {
  double lambda = 0.0;
  ScoreMatrix corrected;  // X'
  ScoreMatrix smoothed;   // final scores
};

struct NlcsConfig {
  PropagationParams correction{0.5, 0.4, 50, std::nullopt};
  PropagationParams smoothing{0.5, 0.4, 50, std::nullopt};
  Mixing sigma = Mixing::arithmetic_mean;
  PhiMode phi_mode = PhiMode::per_column;
  ResidualTeleport residual_teleport = ResidualTeleport::initial_error;
  ResidualOrientation orientation = ResidualOrientation::truth_minus_prediction;
  SmoothTeleport smooth_teleport = SmoothTeleport::labels;
};

/// Full nonlinear correct-and-smooth post-processing of a base prediction.
inline PostProcessResult nlcs_post_process(const ScoreMatrix& X, const LabelMatrix& Y,
                                           const NormalizedAdjacency& S,
                                           const TriangleSet& tri,
                                           const NlcsConfig& cfg,
                                           MixStats* stats = nullptr) {
  const ResidualState E0 = error_init(X, Y, cfg.orientation);
  const ScoreMatrix Ehat = residual_propagate(
      S, tri, E0, Y, cfg.correction, {cfg.sigma, cfg.residual_teleport}, stats);
  PostProcessResult r;
  r.lambda = autoscale_lambda(E0, Y.labeled);
  r.corrected = correct(X, Ehat, r.lambda, Y.unlabeled);
  r.smoothed = smooth(r.corrected, Y, S, tri, cfg.smoothing,
                      {cfg.sigma, cfg.phi_mode, cfg.smooth_teleport}, stats);
  return r;
}

struct LinearCsConfig {
  double correct_alpha = 0.8;
  double smooth_alpha = 0.8;
  int iterations = 50;
  ResidualOrientation orientation = ResidualOrientation::truth_minus_prediction;
};

/// E <- alpha S E + (1 - alpha) E(0).
inline ScoreMatrix linear_residual_propagate(const NormalizedAdjacency& S,
                                             const ScoreMatrix& E0, double alpha,
                                             int iterations) {
  require(alpha >= 0.0 && alpha < 1.0, "linear C&S: alpha must be in [0, 1)");
  ScoreMatrix E = E0;
  for (int t = 0; t < iterations; ++t) {
    E = alpha * S.apply(E) + (1.0 - alpha) * E0;
    check_finite(E, "linear_residual_propagate");
  }
  return E;
}

/// Linear Correct-and-Smooth baseline: the residual and smoothing
/// recurrences without the triangle term and without phi.
inline PostProcessResult linear_correct_and_smooth(const ScoreMatrix& X,
                                                   const LabelMatrix& Y,
                                                   const NormalizedAdjacency& S,
                                                   const LinearCsConfig& cfg) {
  require(cfg.correct_alpha > 0.0 && cfg.correct_alpha < 1.0,
          "linear C&S: correct_alpha must be in (0, 1)");
  require(cfg.smooth_alpha > 0.0 && cfg.smooth_alpha < 1.0,
          "linear C&S: smooth_alpha must be in (0, 1)");
  const ResidualState E0 = error_init(X, Y, cfg.orientation);
  const ScoreMatrix Ehat =
      linear_residual_propagate(S, E0.E, cfg.correct_alpha, cfg.iterations);
  PostProcessResult r;
  r.lambda = autoscale_lambda(E0, Y.labeled);
  r.corrected = correct(X, Ehat, r.lambda, Y.unlabeled);
  const ScoreMatrix G0 = smoothing_start(r.corrected, Y);
  ScoreMatrix G = G0;
  const double a = cfg.smooth_alpha;
  for (int t = 0; t < cfg.iterations; ++t) {
    G = a * S.apply(G) + (1.0 - a) * G0;
    check_finite(G, "linear_correct_and_smooth");
  }
  r.smoothed = std::move(G);
  return r;
}

}  // namespace nlcs
