#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace nlcs {

using NodeId = std::uint32_t;
using IndexSet = std::vector<NodeId>;

/// Dense row-major n x c score storage shared by every stage of the
/// pipeline (spreading state, base prediction, residuals, smoothing state).
using ScoreMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw Error(message);
}

inline bool all_finite(const ScoreMatrix& m) { return m.allFinite(); }

}  // namespace nlcs
