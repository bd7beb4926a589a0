#pragma once

// Planted-partition graphs with noisy class-mean features.

#include <random>

#include "nlcs.hpp"

namespace oracle {

struct SbmSpec {
  std::size_t n = 300;
  int classes = 3;
  double p_in = 0.06;
  double p_out = 0.005;
  int feature_dim = 6;
  double feature_noise = 1.5;
  std::uint64_t seed = 1;
};

inline nlcs::Dataset sbm(const SbmSpec& s) {
  std::mt19937_64 gen(s.seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> z(0.0, 1.0);
  nlcs::Dataset d;
  d.name = "sbm";
  d.num_classes = s.classes;
  d.labels.resize(s.n);
  for (std::size_t i = 0; i < s.n; ++i) d.labels[i] = static_cast<int>(i % s.classes);
  std::vector<nlcs::EdgeRecord> edges;
  for (std::size_t i = 0; i < s.n; ++i)
    for (std::size_t j = i + 1; j < s.n; ++j)
      if (u(gen) < (d.labels[i] == d.labels[j] ? s.p_in : s.p_out))
        edges.push_back({static_cast<nlcs::NodeId>(i), static_cast<nlcs::NodeId>(j), {}});
  d.graph = nlcs::build_graph(edges, s.n);
  nlcs::FeatureMatrix X(s.n, s.feature_dim);
  for (std::size_t i = 0; i < s.n; ++i)
    for (int f = 0; f < s.feature_dim; ++f)
      X(i, f) = (f % s.classes == d.labels[i] ? 1.0 : 0.0) + s.feature_noise * z(gen);
  d.features = X;
  return d;
}

}  // namespace oracle
