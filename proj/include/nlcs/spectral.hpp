#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

#include <Eigen/Dense>

#include "nlcs/common.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/rng.hpp"

namespace nlcs {

struct SpectralEmbedding {
  ScoreMatrix coords;  // n x d, orthonormal columns
  Vector eigenvalues;  // non-increasing
  int sweeps = 0;
  double residual = 0.0;  // max_k |S q_k - lambda_k q_k|
  bool converged = false;

  int dimension() const { return static_cast<int>(coords.cols()); }
};

struct SpectralOptions {
  double tolerance = 1e-6;
  int max_sweeps = 1000;
};

/// Default embedding width: max(2c, 32), capped at n - 1.
inline int default_embedding_dim(int num_classes, std::size_t num_nodes) {
  const int d = std::max(2 * num_classes, 32);
  return static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(d), num_nodes - 1));
}

namespace detail {
inline ScoreMatrix orthonormalize(const ScoreMatrix& z) {
  Eigen::MatrixXd dense = z;
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(dense);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(z.rows(), z.cols());
  return q;
}
}  // namespace detail

/// Top-d eigenvectors of S by algebraic eigenvalue. Block power iteration on
/// (S + I) / 2, whose spectrum lies in [0, 1] with the same ordering, with a
/// Rayleigh-Ritz rotation every sweep. The block carries extra columns so the
/// leading d converge at rate lambda_p / lambda_d rather than
/// lambda_{d+1} / lambda_d. If the residual of the leading d has not dropped
/// below the tolerance after max_sweeps, the last iterate is returned with
/// converged = false.
inline SpectralEmbedding spectral_embedding(const NormalizedAdjacency& S, int d,
                                            std::uint64_t seed,
                                            const SpectralOptions& opts = {}) {
  const auto n = static_cast<Eigen::Index>(S.num_nodes());
  require(d >= 1 && d < n, "spectral_embedding: need 1 <= d < n");
  const Eigen::Index p = std::min<Eigen::Index>(n, d + std::max(d, 8));
  Rng rng(seed);
  ScoreMatrix Q(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < p; ++k) Q(i, k) = rng.normal();
  Q = detail::orthonormalize(Q);

  SpectralEmbedding out;
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    ScoreMatrix SQ = S.apply(Q);
    Eigen::MatrixXd H = Q.transpose() * SQ;
    H = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(H);
    // Ascending -> descending.
    Eigen::MatrixXd V = eig.eigenvectors().rowwise().reverse();
    Vector lambda = eig.eigenvalues().reverse();
    Q = Q * V;
    SQ = SQ * V;
    double res = 0.0;
    for (Eigen::Index k = 0; k < d; ++k)
      res = std::max(res, (SQ.col(k) - lambda(k) * Q.col(k)).norm());
    out.sweeps = sweep;
    out.residual = res;
    out.eigenvalues = lambda.head(d);
    if (res < opts.tolerance) {
      out.converged = true;
      break;
    }
    if (sweep == opts.max_sweeps) break;
    Q = detail::orthonormalize(0.5 * (SQ + Q));
  }

  // Sign convention: first clearly nonzero coordinate positive.
  for (Eigen::Index k = 0; k < d; ++k) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::abs(Q(i, k)) > 1e-8) {
        if (Q(i, k) < 0.0) Q.col(k) *= -1.0;
        break;
      }
    }
  }
  out.coords = Q.leftCols(d);
  return out;
}

}  // namespace nlcs
