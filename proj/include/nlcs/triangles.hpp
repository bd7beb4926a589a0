#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nlcs/common.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/parallel.hpp"

namespace nlcs {

struct Triangle {
  NodeId i = 0, j = 0, k = 0;  // i < j < k
  double weight = 1.0;

  friend bool operator==(const Triangle&, const Triangle&) = default;
};

// How a triangle's weight is derived from its three edge weights. Every rule
// yields 1 on a unit-weight graph.
enum class TriangleWeightRule { unit, geometric_mean, arithmetic_mean, minimum };

inline double triangle_weight(TriangleWeightRule rule, double a, double b,
                              double c) {
  switch (rule) {
    case TriangleWeightRule::unit:
      return 1.0;
    case TriangleWeightRule::geometric_mean:
      return (a == b && b == c) ? a : std::cbrt(a * b * c);
    case TriangleWeightRule::arithmetic_mean:
      return (a + b + c) / 3.0;
    case TriangleWeightRule::minimum:
      return std::min({a, b, c});
  }
  return 1.0;
}

/// The hypergraph of 3-cliques and the operators derived from its symmetric
/// adjacency tensor. The tensor carries each triangle weight on all six
/// ordered permutations, so
///   hyperdegree_i = 2 * sum of weights of triangles containing i
///   codegree_ij   = sum of weights of triangles containing edge (i, j).
class TriangleSet {
 public:
  TriangleSet() = default;

  /// Canonicalizes (vertex order inside each triple, then list order) and
  /// derives the hyperdegrees, co-degree matrix and node incidence.
  static TriangleSet from_triangles(std::size_t num_nodes,
                                    std::vector<Triangle> triangles) {
    for (auto& t : triangles) {
      NodeId v[3] = {t.i, t.j, t.k};
      std::sort(v, v + 3);
      require(v[0] != v[1] && v[1] != v[2],
              "TriangleSet: repeated vertex in triangle");
      require(v[2] < num_nodes, "TriangleSet: vertex out of range");
      require(t.weight > 0.0, "TriangleSet: triangle weight must be positive");
      t.i = v[0];
      t.j = v[1];
      t.k = v[2];
    }
    std::sort(triangles.begin(), triangles.end(),
              [](const Triangle& a, const Triangle& b) {
                if (a.i != b.i) return a.i < b.i;
                if (a.j != b.j) return a.j < b.j;
                return a.k < b.k;
              });
    for (std::size_t t = 1; t < triangles.size(); ++t) {
      const auto& a = triangles[t - 1];
      const auto& b = triangles[t];
      require(!(a.i == b.i && a.j == b.j && a.k == b.k),
              "TriangleSet: duplicate triangle");
    }

    TriangleSet s;
    s.n_ = num_nodes;
    s.triangles_ = std::move(triangles);
    s.hyperdegree_.assign(num_nodes, 0.0);

    // Incidence lists, triangle ids ascending within each node.
    std::vector<std::size_t> count(num_nodes, 0);
    for (const auto& t : s.triangles_) {
      ++count[t.i];
      ++count[t.j];
      ++count[t.k];
    }
    s.incidence_offsets_.assign(num_nodes + 1, 0);
    for (std::size_t i = 0; i < num_nodes; ++i)
      s.incidence_offsets_[i + 1] = s.incidence_offsets_[i] + count[i];
    s.incidence_.resize(s.incidence_offsets_[num_nodes]);
    std::vector<std::size_t> cursor(s.incidence_offsets_.begin(),
                                    s.incidence_offsets_.end() - 1);
    for (std::size_t t = 0; t < s.triangles_.size(); ++t) {
      const auto& tr = s.triangles_[t];
      for (NodeId v : {tr.i, tr.j, tr.k})
        s.incidence_[cursor[v]++] = static_cast<std::uint32_t>(t);
    }
    for (std::size_t i = 0; i < num_nodes; ++i)
      for (std::size_t e = s.incidence_offsets_[i];
           e < s.incidence_offsets_[i + 1]; ++e)
        s.hyperdegree_[i] += 2.0 * s.triangles_[s.incidence_[e]].weight;

    s.build_codegree();
    return s;
  }

  std::size_t num_nodes() const { return n_; }
  std::size_t size() const { return triangles_.size(); }
  bool empty() const { return triangles_.empty(); }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const std::vector<double>& hyperdegree() const { return hyperdegree_; }
  const SparseMatrix& codegree() const { return codegree_; }

  // Triangle ids containing node i, ascending.
  std::span<const std::uint32_t> incident(NodeId i) const {
    return {incidence_.data() + incidence_offsets_[i],
            incidence_offsets_[i + 1] - incidence_offsets_[i]};
  }
  std::size_t triangle_count(NodeId i) const {
    return incidence_offsets_[i + 1] - incidence_offsets_[i];
  }

  double total_weight() const {
    double s = 0.0;
    for (const auto& t : triangles_) s += t.weight;
    return s;
  }

 private:
  void build_codegree() {
    struct Entry {
      std::uint64_t key;
      double w;
    };
    std::vector<Entry> entries;
    entries.reserve(3 * triangles_.size());
    auto key = [](NodeId a, NodeId b) {
      return (static_cast<std::uint64_t>(a) << 32) | b;
    };
    for (const auto& t : triangles_) {
      entries.push_back({key(t.i, t.j), t.weight});
      entries.push_back({key(t.i, t.k), t.weight});
      entries.push_back({key(t.j, t.k), t.weight});
    }
    std::stable_sort(entries.begin(), entries.end(),
                     [](const Entry& a, const Entry& b) { return a.key < b.key; });
    struct Cell {
      NodeId a, b;
      double w;
    };
    std::vector<Cell> cells;
    for (const auto& e : entries) {
      const auto a = static_cast<NodeId>(e.key >> 32);
      const auto b = static_cast<NodeId>(e.key & 0xffffffffu);
      if (!cells.empty() && cells.back().a == a && cells.back().b == b)
        cells.back().w += e.w;
      else
        cells.push_back({a, b, e.w});
    }
    codegree_.n = n_;
    std::vector<std::size_t> count(n_, 0);
    for (const auto& c : cells) {
      ++count[c.a];
      ++count[c.b];
    }
    codegree_.offsets.assign(n_ + 1, 0);
    for (std::size_t i = 0; i < n_; ++i)
      codegree_.offsets[i + 1] = codegree_.offsets[i] + count[i];
    codegree_.cols.resize(codegree_.offsets[n_]);
    codegree_.values.resize(codegree_.offsets[n_]);
    std::vector<std::size_t> cursor(codegree_.offsets.begin(),
                                    codegree_.offsets.end() - 1);
    // Smaller partners first (cells sorted by (a, b) give ascending a for each
    // b), then larger partners, so every row ends up sorted.
    for (const auto& c : cells) {
      codegree_.cols[cursor[c.b]] = c.a;
      codegree_.values[cursor[c.b]++] = c.w;
    }
    for (const auto& c : cells) {
      codegree_.cols[cursor[c.a]] = c.b;
      codegree_.values[cursor[c.a]++] = c.w;
    }
  }

  std::size_t n_ = 0;
  std::vector<Triangle> triangles_;
  std::vector<double> hyperdegree_;
  SparseMatrix codegree_;
  std::vector<std::size_t> incidence_offsets_{0};
  std::vector<std::uint32_t> incidence_;
};

/// Lists every 3-clique once with the degree-ordered forward algorithm:
/// edges are oriented from lower to higher (degree, id) rank and each
/// triangle is found by intersecting the two out-lists of its lowest-ranked
/// edge. O(m^{3/2}).
inline TriangleSet enumerate_triangles(
    const Graph& g, TriangleWeightRule rule = TriangleWeightRule::geometric_mean) {
  const std::size_t n = g.num_nodes();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto da = g.neighbor_count(static_cast<NodeId>(a));
    const auto db = g.neighbor_count(static_cast<NodeId>(b));
    return da != db ? da < db : a < b;
  });
  std::vector<std::size_t> rank(n);
  for (std::size_t r = 0; r < n; ++r) rank[order[r]] = r;

  // Forward adjacency, sorted by id (inherited from the CSR order).
  std::vector<std::size_t> fwd_offsets(n + 1, 0);
  for (NodeId u = 0; u < n; ++u) {
    std::size_t c = 0;
    for (NodeId v : g.neighbors(u))
      if (rank[v] > rank[u]) ++c;
    fwd_offsets[u + 1] = fwd_offsets[u] + c;
  }
  std::vector<NodeId> fwd(fwd_offsets[n]);
  for (NodeId u = 0; u < n; ++u) {
    std::size_t p = fwd_offsets[u];
    for (NodeId v : g.neighbors(u))
      if (rank[v] > rank[u]) fwd[p++] = v;
  }

  std::vector<std::vector<Triangle>> found(n);
  parallel_for(
      0, n,
      [&](std::size_t u_idx) {
        const auto u = static_cast<NodeId>(u_idx);
        const NodeId* ub = fwd.data() + fwd_offsets[u];
        const NodeId* ue = fwd.data() + fwd_offsets[u + 1];
        for (const NodeId* pv = ub; pv != ue; ++pv) {
          const NodeId v = *pv;
          const NodeId* a = ub;
          const NodeId* b = fwd.data() + fwd_offsets[v];
          const NodeId* be = fwd.data() + fwd_offsets[v + 1];
          while (a != ue && b != be) {
            if (*a < *b) {
              ++a;
            } else if (*b < *a) {
              ++b;
            } else {
              // Weights from the id-sorted corners, so the value does not
              // depend on the degree ordering.
              NodeId c[3] = {u, v, *a};
              std::sort(c, c + 3);
              const double tw = triangle_weight(rule, g.edge_weight(c[0], c[1]),
                                                g.edge_weight(c[0], c[2]),
                                                g.edge_weight(c[1], c[2]));
              found[u].push_back({c[0], c[1], c[2], tw});
              ++a;
              ++b;
            }
          }
        }
      },
      64);

  std::vector<Triangle> all;
  std::size_t total = 0;
  for (const auto& f : found) total += f.size();
  all.reserve(total);
  for (auto& f : found) {
    all.insert(all.end(), f.begin(), f.end());
    std::vector<Triangle>().swap(f);
  }
  return TriangleSet::from_triangles(n, std::move(all));
}

/// Local clustering coefficient from unweighted triangle counts and
/// unweighted degrees; 0 for nodes with fewer than two neighbors.
inline std::vector<double> clustering_coefficient(const Graph& g,
                                                  const TriangleSet& tri) {
  require(tri.num_nodes() == g.num_nodes(),
          "clustering_coefficient: triangle set built from another graph");
  std::vector<double> c(g.num_nodes(), 0.0);
  for (NodeId i = 0; i < g.num_nodes(); ++i) {
    const double d = static_cast<double>(g.neighbor_count(i));
    if (d < 2.0) continue;
    c[i] = 2.0 * static_cast<double>(tri.triangle_count(i)) / (d * (d - 1.0));
  }
  return c;
}

}  // namespace nlcs
