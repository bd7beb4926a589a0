#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "nlcs/common.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/mixing.hpp"
#include "nlcs/parallel.hpp"
#include "nlcs/triangles.hpp"

namespace nlcs {

/// One-hot training labels plus the labeled / unlabeled partition.
struct LabelMatrix {
  ScoreMatrix Y;
  IndexSet labeled;
  IndexSet unlabeled;

  std::size_t num_nodes() const { return static_cast<std::size_t>(Y.rows()); }
  int num_classes() const { return static_cast<int>(Y.cols()); }
};

/// Builds Y from a full label vector, revealing only the rows in `labeled`.
inline LabelMatrix make_label_matrix(const std::vector<int>& labels,
                                     int num_classes, const IndexSet& labeled) {
  require(num_classes > 0, "make_label_matrix: num_classes must be positive");
  const std::size_t n = labels.size();
  LabelMatrix lm;
  lm.Y = ScoreMatrix::Zero(static_cast<Eigen::Index>(n), num_classes);
  std::vector<char> is_labeled(n, 0);
  for (NodeId i : labeled) {
    require(i < n, "make_label_matrix: labeled index out of range");
    require(!is_labeled[i], "make_label_matrix: repeated labeled index");
    const int c = labels[i];
    require(c >= 0 && c < num_classes,
            "make_label_matrix: label out of range at node " + std::to_string(i));
    lm.Y(i, c) = 1.0;
    is_labeled[i] = 1;
  }
  for (NodeId i = 0; i < n; ++i)
    (is_labeled[i] ? lm.labeled : lm.unlabeled).push_back(i);
  return lm;
}

// Labeled rows one-hot, unlabeled rows zero, every class seen at least once.
inline bool valid_label_matrix(const LabelMatrix& lm) {
  std::vector<char> seen(static_cast<std::size_t>(lm.num_classes()), 0);
  for (NodeId i : lm.labeled) {
    int ones = 0;
    for (int c = 0; c < lm.num_classes(); ++c) {
      const double v = lm.Y(i, c);
      if (v == 1.0) {
        ++ones;
        seen[static_cast<std::size_t>(c)] = 1;
      } else if (v != 0.0) {
        return false;
      }
    }
    if (ones != 1) return false;
  }
  for (NodeId i : lm.unlabeled)
    if (!lm.Y.row(i).isZero(0.0)) return false;
  for (char s : seen)
    if (!s) return false;
  return lm.labeled.size() + lm.unlabeled.size() == lm.num_nodes();
}

struct PropagationParams {
  double alpha = 0.5;  // tensor (or, for plain LP, adjacency) coefficient
  double beta = 0.0;   // adjacency coefficient
  int iterations = 50;
  std::optional<double> tolerance;  // early stop on max-abs change

  double teleport() const { return 1.0 - alpha - beta; }

  void validate() const {
    require(std::isfinite(alpha) && alpha >= 0.0, "alpha must be >= 0");
    require(std::isfinite(beta) && beta >= 0.0, "beta must be >= 0");
    require(alpha + beta < 1.0, "alpha+beta must be < 1");
    require(iterations >= 0, "iterations must be >= 0");
    require(!tolerance || *tolerance >= 0.0, "tolerance must be >= 0");
  }
};

/// How phi is applied to a score matrix.
enum class PhiMode {
  per_column,  // each class channel divided by its own phi
  global,      // one phi for the whole matrix: sqrt(sum of squared column phis)
};

struct MixStats {
  std::size_t undefined = 0;  // sigma evaluations that fell back to 0
};

inline void check_finite(const ScoreMatrix& m, const char* where) {
  if (!m.allFinite())
    throw Error(std::string(where) + ": non-finite value in score matrix");
}

/// Tensor mapping: out_i = sum_jk A_ijk sigma(f_j, f_k), per column. Each
/// triangle {i, j, k} adds 2 * tau * sigma(f_j, f_k) to node i; summation runs
/// over the node's incident triangles in canonical order.
inline ScoreMatrix tensor_map(const TriangleSet& tri, const ScoreMatrix& f,
                              Mixing sigma, MixStats* stats = nullptr) {
  require(static_cast<std::size_t>(f.rows()) == tri.num_nodes(),
          "tensor_map: row count does not match triangle set");
  const Eigen::Index cols = f.cols();
  ScoreMatrix out = ScoreMatrix::Zero(f.rows(), cols);
  std::vector<std::size_t> undefined(tri.num_nodes(), 0);
  const auto& tris = tri.triangles();
  parallel_for(
      0, tri.num_nodes(),
      [&](std::size_t node) {
        const auto i = static_cast<NodeId>(node);
        std::size_t bad = 0;
        for (std::uint32_t t : tri.incident(i)) {
          const Triangle& tr = tris[t];
          NodeId a, b;
          if (tr.i == i) {
            a = tr.j;
            b = tr.k;
          } else if (tr.j == i) {
            a = tr.i;
            b = tr.k;
          } else {
            a = tr.i;
            b = tr.j;
          }
          const double w = 2.0 * tr.weight;
          for (Eigen::Index c = 0; c < cols; ++c) {
            bool undef = false;
            out(i, c) += w * mix(sigma, f(a, c), f(b, c), &undef);
            bad += undef;
          }
        }
        undefined[i] = bad;
      },
      256);
  if (stats)
    for (auto u : undefined) stats->undefined += u;
  return out;
}

// D_H^{-1/2} with the zero-hyperdegree convention.
inline std::vector<double> inverse_sqrt_hyperdegree(const TriangleSet& tri) {
  std::vector<double> s(tri.num_nodes(), 0.0);
  const auto& d = tri.hyperdegree();
  for (std::size_t i = 0; i < s.size(); ++i)
    if (d[i] > 0.0) s[i] = 1.0 / std::sqrt(d[i]);
  return s;
}

/// S(f) = D_H^{-1/2} * tensor_map(D_H^{-1/2} f).
inline ScoreMatrix nonlinear_map(const TriangleSet& tri, const ScoreMatrix& f,
                                 Mixing sigma, MixStats* stats = nullptr) {
  require(static_cast<std::size_t>(f.rows()) == tri.num_nodes(),
          "nonlinear_map: row count does not match triangle set");
  const auto scale = inverse_sqrt_hyperdegree(tri);
  ScoreMatrix scaled = f;
  for (Eigen::Index i = 0; i < f.rows(); ++i) scaled.row(i) *= scale[i];
  ScoreMatrix out = tensor_map(tri, scaled, sigma, stats);
  for (Eigen::Index i = 0; i < f.rows(); ++i) out.row(i) *= scale[i];
  return out;
}

/// phi for every column of f: 0.5 * sqrt(sum_ij B_ij sigma(f_i/sqrt(d_i),
/// f_j/sqrt(d_j))^2). Zero for triangle-free graphs.
inline std::vector<double> phi_columns(const TriangleSet& tri,
                                       const ScoreMatrix& f, Mixing sigma,
                                       MixStats* stats = nullptr) {
  require(static_cast<std::size_t>(f.rows()) == tri.num_nodes(),
          "phi_norm: row count does not match triangle set");
  const auto scale = inverse_sqrt_hyperdegree(tri);
  const SparseMatrix& B = tri.codegree();
  const Eigen::Index cols = f.cols();
  ScoreMatrix partial = ScoreMatrix::Zero(f.rows(), cols);
  std::vector<std::size_t> undefined(tri.num_nodes(), 0);
  parallel_for(
      0, tri.num_nodes(),
      [&](std::size_t i) {
        std::size_t bad = 0;
        for (std::size_t e = B.offsets[i]; e < B.offsets[i + 1]; ++e) {
          const NodeId j = B.cols[e];
          for (Eigen::Index c = 0; c < cols; ++c) {
            bool undef = false;
            const double s = mix(sigma, f(static_cast<Eigen::Index>(i), c) * scale[i],
                                 f(j, c) * scale[j], &undef);
            partial(static_cast<Eigen::Index>(i), c) += B.values[e] * s * s;
            bad += undef;
          }
        }
        undefined[i] = bad;
      },
      256);
  if (stats)
    for (auto u : undefined) stats->undefined += u;
  std::vector<double> phi(static_cast<std::size_t>(cols), 0.0);
  for (Eigen::Index c = 0; c < cols; ++c) {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < f.rows(); ++i) sum += partial(i, c);
    phi[static_cast<std::size_t>(c)] = 0.5 * std::sqrt(sum);
  }
  return phi;
}

inline double phi_norm(const TriangleSet& tri, const Vector& f, Mixing sigma) {
  ScoreMatrix m = f;
  return phi_columns(tri, m, sigma)[0];
}

// Divides columns by phi; zero-phi columns are left as they are.
inline void normalize_by_phi(ScoreMatrix& g, const std::vector<double>& phi,
                             PhiMode mode) {
  if (mode == PhiMode::global) {
    double sq = 0.0;
    for (double p : phi) sq += p * p;
    const double total = std::sqrt(sq);
    if (total > 0.0) g /= total;
    return;
  }
  for (Eigen::Index c = 0; c < g.cols(); ++c)
    if (phi[static_cast<std::size_t>(c)] > 0.0)
      g.col(c) /= phi[static_cast<std::size_t>(c)];
}

namespace detail {

// alpha * tensor_term + beta * adjacency_term + gamma * teleport, always
// accumulated in the order (beta, gamma, alpha) so that alpha = 0 reduces to
// the purely linear recurrence bit-for-bit.
inline ScoreMatrix combine(double alpha, const ScoreMatrix* tensor_term,
                           double beta, const ScoreMatrix& adjacency_term,
                           double gamma, const ScoreMatrix& teleport) {
  ScoreMatrix out = beta * adjacency_term + gamma * teleport;
  if (alpha > 0.0) out += alpha * (*tensor_term);
  return out;
}

inline double max_abs_change(const ScoreMatrix& a, const ScoreMatrix& b) {
  return (a - b).cwiseAbs().maxCoeff();
}

}  // namespace detail

/// Label spreading F <- alpha S F + (1 - alpha) Y starting from F = Y.
inline ScoreMatrix lp_iterate(const NormalizedAdjacency& S, const LabelMatrix& Y,
                              const PropagationParams& params) {
  require(params.alpha >= 0.0 && params.alpha < 1.0, "lp_iterate: alpha must be in [0, 1)");
  require(params.iterations >= 0, "lp_iterate: iterations must be >= 0");
  require(S.num_nodes() == Y.num_nodes(), "lp_iterate: shape mismatch");
  const double a = params.alpha;
  ScoreMatrix F = Y.Y;
  for (int t = 0; t < params.iterations; ++t) {
    ScoreMatrix next = a * S.apply(F) + (1.0 - a) * Y.Y;
    check_finite(next, "lp_iterate");
    const bool done =
        params.tolerance && detail::max_abs_change(next, F) < *params.tolerance;
    F = std::move(next);
    if (done) break;
  }
  return F;
}

struct NholsOptions {
  Mixing sigma = Mixing::arithmetic_mean;
  PhiMode phi_mode = PhiMode::per_column;
};

/// Nonlinear higher-order label spreading:
///   G = alpha S_tensor(F) + beta S F + (1 - alpha - beta) Y
///   F <- G / phi(G)
inline ScoreMatrix nhols_iterate(const NormalizedAdjacency& S,
                                 const TriangleSet& tri, const LabelMatrix& Y,
                                 const PropagationParams& params,
                                 const NholsOptions& opts = {},
                                 MixStats* stats = nullptr) {
  params.validate();
  require(S.num_nodes() == Y.num_nodes() && tri.num_nodes() == Y.num_nodes(),
          "nhols_iterate: shape mismatch");
  if (params.alpha > 0.0 && tri.empty())
    throw Error("nhols_iterate: alpha > 0 requires at least one triangle");
  ScoreMatrix F = Y.Y;
  for (int t = 0; t < params.iterations; ++t) {
    ScoreMatrix tensor_term;
    if (params.alpha > 0.0) tensor_term = nonlinear_map(tri, F, opts.sigma, stats);
    ScoreMatrix G = detail::combine(params.alpha, &tensor_term, params.beta,
                                    S.apply(F), params.teleport(), Y.Y);
    normalize_by_phi(G, phi_columns(tri, G, opts.sigma, stats), opts.phi_mode);
    check_finite(G, "nhols_iterate");
    const bool done =
        params.tolerance && detail::max_abs_change(G, F) < *params.tolerance;
    F = std::move(G);
    if (done) break;
  }
  return F;
}

/// Row-wise argmax; ties resolve to the lowest class index.
inline int argmax_row(const ScoreMatrix& F, Eigen::Index row) {
  int best = 0;
  for (Eigen::Index c = 1; c < F.cols(); ++c)
    if (F(row, c) > F(row, best)) best = static_cast<int>(c);
  return best;
}

inline std::vector<int> predict_argmax(const ScoreMatrix& F, const IndexSet& rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (NodeId i : rows) out.push_back(argmax_row(F, i));
  return out;
}

inline std::vector<int> predict_argmax(const ScoreMatrix& F) {
  std::vector<int> out(static_cast<std::size_t>(F.rows()));
  for (Eigen::Index i = 0; i < F.rows(); ++i)
    out[static_cast<std::size_t>(i)] = argmax_row(F, i);
  return out;
}

}  // namespace nlcs
