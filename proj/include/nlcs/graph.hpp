#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlcs/common.hpp"
#include "nlcs/parallel.hpp"

namespace nlcs {

struct EdgeRecord {
  std::int64_t u = 0;
  std::int64_t v = 0;
  std::optional<double> weight;
};

/// Undirected weighted graph in CSR form. Both directions of every edge are
/// stored; neighbor lists are sorted by id.
class Graph {
 public:
  Graph() = default;

  std::size_t num_nodes() const { return degrees_.size(); }
  std::size_t num_edges() const { return neighbors_.size() / 2; }
  // Number of (i, j) adjacency entries, i.e. 2 * undirected edges.
  std::size_t num_directed_entries() const { return neighbors_.size(); }
  std::size_t self_loops_dropped() const { return self_loops_dropped_; }
  std::size_t duplicates_merged() const { return duplicates_merged_; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  std::span<const double> weights(NodeId i) const {
    return {weights_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }
  // Weighted degree d_i.
  double degree(NodeId i) const { return degrees_[i]; }
  std::size_t neighbor_count(NodeId i) const {
    return offsets_[i + 1] - offsets_[i];
  }
  const std::vector<double>& degrees() const { return degrees_; }
  const std::vector<std::size_t>& offsets() const { return offsets_; }

  // 0 when (i, j) is not an edge.
  double edge_weight(NodeId i, NodeId j) const {
    auto nb = neighbors(i);
    auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j) return 0.0;
    return weights_[offsets_[i] + static_cast<std::size_t>(it - nb.begin())];
  }
  bool has_edge(NodeId i, NodeId j) const { return edge_weight(i, j) > 0.0; }

  bool unit_weights() const {
    return std::all_of(weights_.begin(), weights_.end(),
                       [](double w) { return w == 1.0; });
  }

  // Checks symmetry, positivity, no self loops and stored degrees.
  bool validate() const {
    const std::size_t n = num_nodes();
    for (NodeId i = 0; i < n; ++i) {
      auto nb = neighbors(i);
      auto wt = weights(i);
      double d = 0.0;
      for (std::size_t e = 0; e < nb.size(); ++e) {
        if (nb[e] == i || !(wt[e] > 0.0) || nb[e] >= n) return false;
        if (e > 0 && nb[e - 1] >= nb[e]) return false;
        if (edge_weight(nb[e], i) != wt[e]) return false;
        d += wt[e];
      }
      if (d != degrees_[i]) return false;
    }
    return true;
  }

 private:
  friend Graph build_graph(std::span<const EdgeRecord>,
                           std::optional<std::size_t>);

  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
  std::vector<double> weights_;
  std::vector<double> degrees_;
  std::size_t self_loops_dropped_ = 0;
  std::size_t duplicates_merged_ = 0;
};

/// Builds a symmetric graph from edge records. (i, j) and (j, i) name the
/// same undirected edge; repeated records are summed. Self loops are dropped
/// and counted. Without num_nodes, n is one past the largest id seen.
inline Graph build_graph(std::span<const EdgeRecord> edges,
                         std::optional<std::size_t> num_nodes = std::nullopt) {
  require(!edges.empty(), "build_graph: empty edge list");

  struct Canon {
    NodeId a, b;
    double w;
  };
  std::vector<Canon> canon;
  canon.reserve(edges.size());
  std::int64_t max_id = -1;
  std::size_t loops = 0;
  for (std::size_t r = 0; r < edges.size(); ++r) {
    const auto& e = edges[r];
    if (e.u < 0 || e.v < 0)
      throw Error("build_graph: negative node id in record " +
                  std::to_string(r));
    if (num_nodes && (static_cast<std::size_t>(e.u) >= *num_nodes ||
                      static_cast<std::size_t>(e.v) >= *num_nodes))
      throw Error("build_graph: node id out of range [0, " +
                  std::to_string(*num_nodes) + ") in record " +
                  std::to_string(r));
    const double w = e.weight.value_or(1.0);
    if (!(w > 0.0) || !std::isfinite(w))
      throw Error("build_graph: non-positive weight in record " +
                  std::to_string(r));
    max_id = std::max({max_id, e.u, e.v});
    if (e.u == e.v) {
      ++loops;
      continue;
    }
    const auto a = static_cast<NodeId>(std::min(e.u, e.v));
    const auto b = static_cast<NodeId>(std::max(e.u, e.v));
    canon.push_back({a, b, w});
  }
  std::stable_sort(canon.begin(), canon.end(), [](const Canon& x, const Canon& y) {
    return x.a != y.a ? x.a < y.a : x.b < y.b;
  });

  std::vector<Canon> merged;
  merged.reserve(canon.size());
  std::size_t dups = 0;
  for (const auto& c : canon) {
    if (!merged.empty() && merged.back().a == c.a && merged.back().b == c.b) {
      merged.back().w += c.w;
      ++dups;
    } else {
      merged.push_back(c);
    }
  }

  const std::size_t n =
      num_nodes ? *num_nodes : static_cast<std::size_t>(max_id + 1);
  Graph g;
  g.self_loops_dropped_ = loops;
  g.duplicates_merged_ = dups;
  std::vector<std::size_t> count(n, 0);
  for (const auto& m : merged) {
    ++count[m.a];
    ++count[m.b];
  }
  g.offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] = g.offsets_[i] + count[i];
  g.neighbors_.resize(g.offsets_[n]);
  g.weights_.resize(g.offsets_[n]);
  std::vector<std::size_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // merged is sorted by (a, b): row a receives b in increasing order, and row
  // b receives a in increasing order because a ranges over sorted values.
  for (const auto& m : merged) {
    g.neighbors_[cursor[m.a]] = m.b;
    g.weights_[cursor[m.a]++] = m.w;
  }
  for (const auto& m : merged) {
    g.neighbors_[cursor[m.b]] = m.a;
    g.weights_[cursor[m.b]++] = m.w;
  }
  // Rows now hold larger ids first, then smaller ids; restore sorted order.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = g.offsets_[i], hi = g.offsets_[i + 1];
    std::vector<std::pair<NodeId, double>> row;
    row.reserve(hi - lo);
    for (std::size_t e = lo; e < hi; ++e)
      row.emplace_back(g.neighbors_[e], g.weights_[e]);
    std::sort(row.begin(), row.end());
    for (std::size_t e = lo; e < hi; ++e) {
      g.neighbors_[e] = row[e - lo].first;
      g.weights_[e] = row[e - lo].second;
    }
  }
  g.degrees_.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t e = g.offsets_[i]; e < g.offsets_[i + 1]; ++e)
      g.degrees_[i] += g.weights_[e];
  return g;
}

inline Graph build_graph(const std::vector<EdgeRecord>& edges,
                         std::optional<std::size_t> num_nodes = std::nullopt) {
  return build_graph(std::span<const EdgeRecord>(edges), num_nodes);
}

/// Square sparse matrix sharing the graph's sparsity pattern.
struct SparseMatrix {
  std::size_t n = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<NodeId> cols;
  std::vector<double> values;

  std::size_t nnz() const { return cols.size(); }

  double at(NodeId i, NodeId j) const {
    auto first = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i]);
    auto last = cols.begin() + static_cast<std::ptrdiff_t>(offsets[i + 1]);
    auto it = std::lower_bound(first, last, j);
    if (it == last || *it != j) return 0.0;
    return values[static_cast<std::size_t>(it - cols.begin())];
  }

  // out = M * x, row-parallel with per-row sequential accumulation.
  ScoreMatrix multiply(const ScoreMatrix& x) const {
    require(static_cast<std::size_t>(x.rows()) == n,
            "SparseMatrix::multiply: row count mismatch");
    ScoreMatrix out = ScoreMatrix::Zero(x.rows(), x.cols());
    parallel_for(0, n, [&](std::size_t i) {
      auto row = out.row(static_cast<Eigen::Index>(i));
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
        row += values[e] * x.row(cols[e]);
    });
    return out;
  }

  Eigen::MatrixXd to_dense() const {
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                              static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e)
        d(static_cast<Eigen::Index>(i), cols[e]) = values[e];
    return d;
  }
};

/// S = D^{-1/2} A D^{-1/2}. Isolated nodes have empty rows, which is the
/// zero-degree convention D^{-1/2}_ii = 0.
struct NormalizedAdjacency {
  SparseMatrix matrix;
  ScoreMatrix apply(const ScoreMatrix& x) const { return matrix.multiply(x); }
  std::size_t num_nodes() const { return matrix.n; }
};

inline NormalizedAdjacency normalized_adjacency(const Graph& g) {
  const std::size_t n = g.num_nodes();
  NormalizedAdjacency s;
  s.matrix.n = n;
  s.matrix.offsets = g.offsets();
  s.matrix.cols.resize(g.num_directed_entries());
  s.matrix.values.resize(g.num_directed_entries());
  std::vector<double> inv_sqrt(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    if (g.degree(static_cast<NodeId>(i)) > 0.0)
      inv_sqrt[i] = 1.0 / std::sqrt(g.degree(static_cast<NodeId>(i)));
  for (NodeId i = 0; i < n; ++i) {
    auto nb = g.neighbors(i);
    auto wt = g.weights(i);
    const std::size_t base = g.offsets()[i];
    for (std::size_t e = 0; e < nb.size(); ++e) {
      s.matrix.cols[base + e] = nb[e];
      s.matrix.values[base + e] = wt[e] * (inv_sqrt[i] * inv_sqrt[nb[e]]);
    }
  }
  return s;
}

}  // namespace nlcs
