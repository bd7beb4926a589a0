#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "nlcs/common.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/models.hpp"
#include "nlcs/rng.hpp"

namespace nlcs {

struct Dataset {
  std::string name;
  Graph graph;
  std::optional<FeatureMatrix> features;
  std::vector<int> labels;
  int num_classes = 0;

  std::size_t num_nodes() const { return labels.size(); }
};

struct DatasetPaths {
  std::filesystem::path edges;
  std::filesystem::path labels;
  std::optional<std::filesystem::path> features;

  /// Canonical directory layout: edges.txt, labels.txt and an optional
  /// features.txt.
  static DatasetPaths from_directory(const std::filesystem::path& dir) {
    DatasetPaths p;
    p.edges = dir / "edges.txt";
    p.labels = dir / "labels.txt";
    if (std::filesystem::exists(dir / "features.txt")) p.features = dir / "features.txt";
    return p;
  }
};

namespace io {

inline std::string where(const std::filesystem::path& path, std::size_t line) {
  return path.string() + ":" + std::to_string(line);
}

// Strips a trailing '#' comment and splits on spaces / tabs.
inline std::vector<std::string_view> tokens(std::string_view line) {
  if (auto hash = line.find('#'); hash != std::string_view::npos)
    line = line.substr(0, hash);
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r' ||
                               line[i] == ','))
      ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r' &&
           line[j] != ',')
      ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
std::optional<T> parse_number(std::string_view s) {
  T value{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

inline std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

}  // namespace io

/// Reads `i j [w]` lines (whitespace or tab separated, '#' comments).
inline std::vector<EdgeRecord> read_edge_list(const std::filesystem::path& path) {
  auto in = io::open(path);
  std::vector<EdgeRecord> edges;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = io::tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != 2 && tok.size() != 3)
      throw Error(io::where(path, lineno) + ": expected 'i j [w]'");
    auto u = io::parse_number<std::int64_t>(tok[0]);
    auto v = io::parse_number<std::int64_t>(tok[1]);
    if (!u || !v) throw Error(io::where(path, lineno) + ": malformed node id");
    EdgeRecord e{*u, *v, std::nullopt};
    if (tok.size() == 3) {
      auto w = io::parse_number<double>(tok[2]);
      if (!w) throw Error(io::where(path, lineno) + ": malformed weight");
      if (!(*w > 0.0)) throw Error(io::where(path, lineno) + ": non-positive weight");
      e.weight = *w;
    }
    edges.push_back(e);
  }
  return edges;
}

/// Reads `node_id label_id` lines. Every node 0..n-1 must appear exactly once
/// and label ids must cover 0..c-1.
inline std::vector<int> read_labels(const std::filesystem::path& path, int* num_classes) {
  auto in = io::open(path);
  std::vector<std::pair<std::int64_t, int>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = io::tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw Error(io::where(path, lineno) + ": expected 'node_id label_id'");
    auto node = io::parse_number<std::int64_t>(tok[0]);
    auto label = io::parse_number<int>(tok[1]);
    if (!node || !label || *node < 0 || *label < 0)
      throw Error(io::where(path, lineno) + ": malformed label line");
    rows.emplace_back(*node, *label);
  }
  require(!rows.empty(), path.string() + ": no labels");
  const std::size_t n = rows.size();
  std::vector<int> labels(n, -1);
  int c = 0;
  for (const auto& [node, label] : rows) {
    if (static_cast<std::size_t>(node) >= n)
      throw Error(path.string() + ": node id " + std::to_string(node) +
                  " outside [0, " + std::to_string(n) + ")");
    if (labels[static_cast<std::size_t>(node)] != -1)
      throw Error(path.string() + ": node " + std::to_string(node) + " labeled twice");
    labels[static_cast<std::size_t>(node)] = label;
    c = std::max(c, label + 1);
  }
  std::vector<char> used(static_cast<std::size_t>(c), 0);
  for (int l : labels) used[static_cast<std::size_t>(l)] = 1;
  for (int l = 0; l < c; ++l)
    if (!used[static_cast<std::size_t>(l)])
      throw Error(path.string() + ": unknown label id gap, class " + std::to_string(l) +
                  " has no nodes");
  if (num_classes) *num_classes = c;
  return labels;
}

/// Reads node features, either dense `node_id v1 v2 ...` or sparse
/// `node_id dim:value ...` lines. The row count must equal expected_rows.
inline FeatureMatrix read_features(const std::filesystem::path& path,
                                   std::size_t expected_rows) {
  auto in = io::open(path);
  struct Row {
    std::int64_t node;
    std::vector<std::pair<std::size_t, double>> entries;
  };
  std::vector<Row> rows;
  std::size_t dims = 0;
  std::optional<bool> sparse;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = io::tokens(line);
    if (tok.empty()) continue;
    auto node = io::parse_number<std::int64_t>(tok[0]);
    if (!node || *node < 0) throw Error(io::where(path, lineno) + ": malformed node id");
    Row row{*node, {}};
    for (std::size_t t = 1; t < tok.size(); ++t) {
      const auto colon = tok[t].find(':');
      const bool is_sparse = colon != std::string_view::npos;
      if (!sparse) sparse = is_sparse;
      if (*sparse != is_sparse)
        throw Error(io::where(path, lineno) + ": mixed dense and sparse entries");
      if (is_sparse) {
        auto dim = io::parse_number<std::size_t>(tok[t].substr(0, colon));
        auto val = io::parse_number<double>(tok[t].substr(colon + 1));
        if (!dim || !val) throw Error(io::where(path, lineno) + ": malformed dim:value");
        row.entries.emplace_back(*dim, *val);
        dims = std::max(dims, *dim + 1);
      } else {
        auto val = io::parse_number<double>(tok[t]);
        if (!val) throw Error(io::where(path, lineno) + ": malformed feature value");
        row.entries.emplace_back(t - 1, *val);
      }
    }
    if (sparse && !*sparse) {
      if (!rows.empty() && tok.size() - 1 != dims)
        throw Error(io::where(path, lineno) + ": expected " + std::to_string(dims) +
                    " feature values, found " + std::to_string(tok.size() - 1));
      dims = tok.size() - 1;
    }
    rows.push_back(std::move(row));
  }
  if (rows.size() != expected_rows)
    throw Error(path.string() + ": feature row count mismatch, expected " +
                std::to_string(expected_rows) + " rows, found " +
                std::to_string(rows.size()));
  FeatureMatrix x = FeatureMatrix::Zero(static_cast<Eigen::Index>(expected_rows),
                                        static_cast<Eigen::Index>(dims));
  std::vector<char> seen(expected_rows, 0);
  for (const auto& r : rows) {
    if (static_cast<std::size_t>(r.node) >= expected_rows)
      throw Error(path.string() + ": feature node id " + std::to_string(r.node) +
                  " out of range");
    if (seen[static_cast<std::size_t>(r.node)])
      throw Error(path.string() + ": duplicate feature row for node " +
                  std::to_string(r.node));
    seen[static_cast<std::size_t>(r.node)] = 1;
    for (const auto& [d, v] : r.entries) x(r.node, static_cast<Eigen::Index>(d)) = v;
  }
  return x;
}

inline Dataset load_dataset(const DatasetPaths& paths, std::string name = {}) {
  Dataset ds;
  ds.name = name.empty() ? paths.labels.parent_path().filename().string() : std::move(name);
  ds.labels = read_labels(paths.labels, &ds.num_classes);
  ds.graph = build_graph(read_edge_list(paths.edges), ds.labels.size());
  if (paths.features) ds.features = read_features(*paths.features, ds.labels.size());
  return ds;
}

inline Dataset load_dataset(const std::filesystem::path& dir, std::string name = {}) {
  require(std::filesystem::is_directory(dir), "dataset directory not found: " + dir.string());
  return load_dataset(DatasetPaths::from_directory(dir),
                      name.empty() ? dir.filename().string() : std::move(name));
}

struct SplitSpec {
  double k = 0.0;
  std::uint64_t seed = 0;
  IndexSet train, validation, test;
};

/// Per-class split into train / validation / test at ratios k, (1-k)/2,
/// (1-k)/2. Train counts are round-half-to-even(k * class size), at least 1.
/// Odd class remainders give their extra node alternately to test and
/// validation, test first, so overall |test| - |validation| is 0 or 1.
inline SplitSpec stratified_split(const std::vector<int>& labels, int num_classes,
                                  double k, std::uint64_t seed) {
  require(k > 0.0 && k < 1.0, "stratified_split: k must be in (0, 1)");
  std::vector<IndexSet> members(static_cast<std::size_t>(num_classes));
  for (NodeId i = 0; i < labels.size(); ++i) {
    require(labels[i] >= 0 && labels[i] < num_classes, "stratified_split: label out of range");
    members[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  SplitSpec s;
  s.k = k;
  s.seed = seed;
  Rng rng(seed);
  bool extra_to_test = true;
  for (int c = 0; c < num_classes; ++c) {
    auto& m = members[static_cast<std::size_t>(c)];
    if (m.size() < 3)
      throw Error("stratified_split: class " + std::to_string(c) + " has " +
                  std::to_string(m.size()) +
                  " members; need at least one per train/validation/test");
    rng.shuffle(m);
    const double exact = std::round(k * static_cast<double>(m.size()) * 1e9) / 1e9;
    auto n_train = static_cast<std::size_t>(std::nearbyint(exact));
    n_train = std::clamp<std::size_t>(n_train, 1, m.size() - 2);
    const std::size_t rest = m.size() - n_train;
    std::size_t n_val = rest / 2;
    if (rest % 2 == 1) {
      if (!extra_to_test) ++n_val;
      extra_to_test = !extra_to_test;
    }
    s.train.insert(s.train.end(), m.begin(), m.begin() + static_cast<std::ptrdiff_t>(n_train));
    s.validation.insert(s.validation.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train),
                        m.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
    s.test.insert(s.test.end(), m.begin() + static_cast<std::ptrdiff_t>(n_train + n_val),
                  m.end());
  }
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

/// Dense score matrix: one row per node, whitespace-separated decimals.
inline ScoreMatrix read_score_matrix(const std::filesystem::path& path) {
  auto in = io::open(path);
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = io::tokens(line);
    if (tok.empty()) continue;
    std::vector<double> row;
    for (auto t : tok) {
      auto v = io::parse_number<double>(t);
      if (!v || !std::isfinite(*v)) throw Error(io::where(path, lineno) + ": malformed score");
      row.push_back(*v);
    }
    if (!rows.empty() && row.size() != rows.front().size())
      throw Error(io::where(path, lineno) + ": expected " +
                  std::to_string(rows.front().size()) + " columns, found " +
                  std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  require(!rows.empty(), path.string() + ": empty score matrix");
  ScoreMatrix m(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t c = 0; c < rows[i].size(); ++c)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = rows[i][c];
  return m;
}

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

inline void write_score_matrix(const std::filesystem::path& path, const ScoreMatrix& m) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(m(i, c));
    }
    out << '\n';
  }
}

/// Writes the canonical directory layout read by load_dataset. Features are
/// stored sparse, zeros omitted.
inline void write_dataset(const std::filesystem::path& dir, const std::vector<EdgeRecord>& edges,
                          const std::vector<int>& labels,
                          const std::optional<FeatureMatrix>& features) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "edges.txt");
    if (!out) throw Error("cannot write " + (dir / "edges.txt").string());
    for (const auto& e : edges) {
      out << e.u << ' ' << e.v;
      if (e.weight) out << ' ' << format_double(*e.weight);
      out << '\n';
    }
  }
  {
    std::ofstream out(dir / "labels.txt");
    if (!out) throw Error("cannot write " + (dir / "labels.txt").string());
    for (std::size_t i = 0; i < labels.size(); ++i) out << i << ' ' << labels[i] << '\n';
  }
  if (features) {
    std::ofstream out(dir / "features.txt");
    if (!out) throw Error("cannot write " + (dir / "features.txt").string());
    for (Eigen::Index i = 0; i < features->rows(); ++i) {
      out << i;
      for (Eigen::Index d = 0; d < features->cols(); ++d)
        if ((*features)(i, d) != 0.0) out << ' ' << d << ':' << format_double((*features)(i, d));
      out << '\n';
    }
  }
}

struct ConvertedDataset {
  std::vector<EdgeRecord> edges;
  std::vector<int> labels;
  FeatureMatrix features;
  std::vector<std::string> class_names;  // index = label id
  std::size_t dangling_citations = 0;    // cites lines naming unknown papers
};

/// LINQS `.content` (paper_id f1 ... fd class) and `.cites` (cited citing)
/// files. Node ids follow content order; class ids follow sorted class names.
inline ConvertedDataset convert_linqs(const std::filesystem::path& content,
                                      const std::filesystem::path& cites) {
  ConvertedDataset out;
  std::map<std::string, NodeId> ids;
  std::vector<std::string> raw_labels;
  std::vector<std::vector<double>> rows;
  {
    auto in = io::open(content);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const auto tok = io::tokens(line);
      if (tok.empty()) continue;
      if (tok.size() < 2) throw Error(io::where(content, lineno) + ": expected id, features, class");
      const std::string id(tok.front());
      if (!ids.emplace(id, static_cast<NodeId>(rows.size())).second)
        throw Error(io::where(content, lineno) + ": duplicate paper id " + id);
      std::vector<double> f;
      for (std::size_t t = 1; t + 1 < tok.size(); ++t) {
        auto v = io::parse_number<double>(tok[t]);
        if (!v) throw Error(io::where(content, lineno) + ": malformed feature value");
        f.push_back(*v);
      }
      if (!rows.empty() && f.size() != rows.front().size())
        throw Error(io::where(content, lineno) + ": inconsistent feature width");
      rows.push_back(std::move(f));
      raw_labels.emplace_back(tok.back());
    }
  }
  require(!rows.empty(), content.string() + ": no papers");
  out.class_names = raw_labels;
  std::sort(out.class_names.begin(), out.class_names.end());
  out.class_names.erase(std::unique(out.class_names.begin(), out.class_names.end()),
                        out.class_names.end());
  for (const auto& l : raw_labels)
    out.labels.push_back(static_cast<int>(
        std::lower_bound(out.class_names.begin(), out.class_names.end(), l) -
        out.class_names.begin()));
  out.features.resize(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t d = 0; d < rows[i].size(); ++d)
      out.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d)) = rows[i][d];

  auto in = io::open(cites);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = io::tokens(line);
    if (tok.empty()) continue;
    if (tok.size() != 2) throw Error(io::where(cites, lineno) + ": expected 'cited citing'");
    const auto a = ids.find(std::string(tok[0]));
    const auto b = ids.find(std::string(tok[1]));
    if (a == ids.end() || b == ids.end()) {
      ++out.dangling_citations;
      continue;
    }
    out.edges.push_back({a->second, b->second, std::nullopt});
  }
  return out;
}

}  // namespace nlcs
