#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "nlcs/config.hpp"
#include "nlcs/correct_smooth.hpp"
#include "nlcs/dataset.hpp"
#include "nlcs/graph.hpp"
#include "nlcs/models.hpp"
#include "nlcs/parallel.hpp"
#include "nlcs/propagation.hpp"
#include "nlcs/rng.hpp"
#include "nlcs/spectral.hpp"
#include "nlcs/triangles.hpp"

namespace nlcs {

/// Fraction of mask entries where pred matches truth.
inline double accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                       const IndexSet& mask) {
  require(pred.size() == truth.size(), "accuracy: prediction and truth lengths differ");
  require(!mask.empty(), "accuracy: empty mask");
  std::size_t hit = 0;
  for (NodeId i : mask) {
    require(i < pred.size(), "accuracy: mask index out of range");
    hit += pred[i] == truth[i];
  }
  return static_cast<double>(hit) / static_cast<double>(mask.size());
}

inline double accuracy(const ScoreMatrix& scores, const std::vector<int>& truth,
                       const IndexSet& mask) {
  return accuracy(predict_argmax(scores), truth, mask);
}

struct RunResult {
  std::string method;
  std::string dataset;
  double k = 0.0;
  std::uint64_t seed = 0;
  double accuracy = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> base_accuracy, correct_accuracy, smooth_accuracy;
  double wall_seconds = 0.0;  // not part of the CSV row
  std::string config_hash;
  std::optional<std::string> error;

  bool ok() const { return !error.has_value(); }
};

inline std::string result_csv_header() {
  return "method,dataset,k,seed,accuracy,base_accuracy,correct_accuracy,smooth_accuracy,"
         "config,status";
}

namespace experiment_detail {

inline std::string csv_field(std::string s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) out += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return out + "\"";
}

inline std::string opt(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace experiment_detail

inline std::string result_csv_row(const RunResult& r) {
  using namespace experiment_detail;
  std::ostringstream o;
  o << csv_field(r.method) << ',' << csv_field(r.dataset) << ',' << format_double(r.k) << ','
    << r.seed << ',' << (r.ok() ? format_double(r.accuracy) : std::string()) << ','
    << opt(r.base_accuracy) << ',' << opt(r.correct_accuracy) << ','
    << opt(r.smooth_accuracy) << ',' << r.config_hash << ','
    << csv_field(r.ok() ? std::string("ok") : "error: " + *r.error);
  return o.str();
}

inline std::string config_hash(const ExperimentConfig& cfg) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(experiment_detail::fnv1a(serialize_config(cfg))));
  return buf;
}

/// JSON mirror of the canonical config text, grouped by section.
inline nlohmann::json config_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  std::istringstream in(serialize_config(cfg));
  std::string line, section;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line.front() == '[') {
      section = line.substr(1, line.size() - 2);
      j[section] = nlohmann::json::object();
      continue;
    }
    const auto eq = line.find(" = ");
    j[section][line.substr(0, eq)] = line.substr(eq + 3);
  }
  return nlohmann::json{{"hash", config_hash(cfg)}, {"config", j}};
}

/// Everything that does not depend on the seed, prepared once.
struct ExperimentContext {
  ExperimentConfig cfg;
  Dataset data;
  NormalizedAdjacency S;
  TriangleSet triangles;
  FeatureMatrix base_features;          // pl and mlp
  std::optional<ScoreMatrix> external;  // file
  std::optional<SpectralEmbedding> embedding;
  std::string hash;

  std::size_t num_nodes() const { return data.labels.size(); }
};

inline std::string base_tag(const ExperimentConfig& cfg) {
  switch (cfg.base.model) {
    case BaseModel::plain_linear: return "PL";
    case BaseModel::mlp: return "MLP";
    case BaseModel::file: return "FILE";
  }
  return "PL";
}

/// Spectral coordinates rescaled so each column has unit mean square.
inline FeatureMatrix embedding_features(const SpectralEmbedding& e) {
  return e.coords * std::sqrt(static_cast<double>(e.coords.rows()));
}

inline ExperimentContext prepare_context(const ExperimentConfig& cfg, Dataset data) {
  cfg.validate();
  ExperimentContext ctx;
  ctx.cfg = cfg;
  ctx.data = std::move(data);
  if (!cfg.name.empty()) ctx.data.name = cfg.name;
  ctx.hash = config_hash(cfg);
  ctx.S = normalized_adjacency(ctx.data.graph);
  ctx.triangles = enumerate_triangles(ctx.data.graph, cfg.triangle_weight);
  const bool needs_base = cfg.has_method("base") || cfg.has_method("cs") || cfg.has_method("nlcs");
  if (!needs_base) return ctx;
  switch (cfg.base.model) {
    case BaseModel::plain_linear: {
      const int d = cfg.base.embedding_dim > 0
                        ? cfg.base.embedding_dim
                        : default_embedding_dim(ctx.data.num_classes, ctx.num_nodes());
      ctx.embedding = spectral_embedding(ctx.S, d, derive_seed(cfg.split_seed, SeedStream::init));
      ctx.base_features = embedding_features(*ctx.embedding);
      break;
    }
    case BaseModel::mlp:
      require(ctx.data.features.has_value(), "base model mlp needs a features file");
      ctx.base_features = *ctx.data.features;
      break;
    case BaseModel::file:
      ctx.external = read_score_matrix(cfg.base.file);
      require(static_cast<std::size_t>(ctx.external->rows()) == ctx.num_nodes(),
              "base prediction file has wrong row count");
      require(ctx.external->cols() == ctx.data.num_classes,
              "base prediction file has wrong column count");
      break;
  }
  return ctx;
}

inline ExperimentContext prepare_context(const ExperimentConfig& cfg) {
  require(!cfg.dataset.empty(), "[dataset] path is required");
  return prepare_context(cfg, load_dataset(std::filesystem::path(cfg.dataset), cfg.name));
}

inline SplitSpec split_for(const ExperimentContext& ctx, std::uint64_t seed) {
  const std::uint64_t s =
      ctx.cfg.split_per_seed ? derive_seed(seed, SeedStream::split) : ctx.cfg.split_seed;
  return stratified_split(ctx.data.labels, ctx.data.num_classes, ctx.cfg.k, s);
}

inline TrainConfig train_config_for(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainConfig t = cfg.base.train;
  t.seed = derive_seed(seed, SeedStream::init);
  return t;
}

/// Base prediction for one seed. The checkpoint hook is forwarded to training.
inline TrainResult base_prediction(const ExperimentContext& ctx, const SplitSpec& split,
                                   const LabelMatrix& Y, const TrainConfig& tcfg,
                                   const CheckpointFn& checkpoint = {}) {
  if (ctx.external) {
    TrainResult r;
    r.prediction = {*ctx.external, BaseSource::external_file};
    return r;
  }
  const Validation val{split.validation, ctx.data.labels};
  const Validation* v = split.validation.empty() ? nullptr : &val;
  if (ctx.cfg.base.model == BaseModel::mlp)
    return train_mlp(ctx.base_features, Y, tcfg, v, checkpoint);
  return train_linear_softmax(ctx.base_features, Y, tcfg, v, checkpoint);
}

namespace experiment_detail {

template <typename Fn>
RunResult timed(const ExperimentContext& ctx, std::uint64_t seed, std::string method, Fn&& fn) {
  RunResult r;
  r.method = std::move(method);
  r.dataset = ctx.data.name;
  r.k = ctx.cfg.k;
  r.seed = seed;
  r.config_hash = ctx.hash;
  const auto t0 = std::chrono::steady_clock::now();
  fn(r);
  r.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return r;
}

}  // namespace experiment_detail

/// All configured methods for one seed. A failure in any stage marks every
/// method of this seed as failed.
inline std::vector<RunResult> run_seed(const ExperimentContext& ctx, std::uint64_t seed) {
  using experiment_detail::timed;
  const auto& cfg = ctx.cfg;
  const auto& truth = ctx.data.labels;
  const std::string tag = base_tag(cfg);
  std::vector<RunResult> out;
  try {
    const SplitSpec split = split_for(ctx, seed);
    const LabelMatrix Y = make_label_matrix(truth, ctx.data.num_classes, split.train);
    if (cfg.has_method("lp"))
      out.push_back(timed(ctx, seed, "LP", [&](RunResult& r) {
        r.accuracy = accuracy(lp_iterate(ctx.S, Y, cfg.lp_params()), truth, split.test);
      }));
    if (cfg.has_method("nhols"))
      out.push_back(timed(ctx, seed, "NHOLS", [&](RunResult& r) {
        r.accuracy = accuracy(
            nhols_iterate(ctx.S, ctx.triangles, Y, cfg.nhols_params(), cfg.nhols_options()),
            truth, split.test);
      }));
    if (cfg.has_method("base") || cfg.has_method("cs") || cfg.has_method("nlcs")) {
      const auto t0 = std::chrono::steady_clock::now();
      const TrainResult base = base_prediction(ctx, split, Y, train_config_for(cfg, seed));
      const double base_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const ScoreMatrix& X = base.prediction.X;
      const double base_acc = accuracy(X, truth, split.test);
      if (cfg.has_method("base")) {
        auto r = timed(ctx, seed, tag, [&](RunResult& r) {
          r.accuracy = base_acc;
          r.base_accuracy = base_acc;
        });
        r.wall_seconds += base_seconds;
        out.push_back(std::move(r));
      }
      if (cfg.has_method("cs"))
        out.push_back(timed(ctx, seed, tag + "+C&S", [&](RunResult& r) {
          const auto p = linear_correct_and_smooth(X, Y, ctx.S, cfg.linear_cs_config());
          r.base_accuracy = base_acc;
          r.correct_accuracy = accuracy(p.corrected, truth, split.test);
          r.smooth_accuracy = accuracy(p.smoothed, truth, split.test);
          r.accuracy = *r.smooth_accuracy;
        }));
      if (cfg.has_method("nlcs"))
        out.push_back(timed(ctx, seed, tag + "+NLCS", [&](RunResult& r) {
          const auto p = nlcs_post_process(X, Y, ctx.S, ctx.triangles, cfg.nlcs_config());
          r.base_accuracy = base_acc;
          r.correct_accuracy = accuracy(p.corrected, truth, split.test);
          r.smooth_accuracy = accuracy(p.smoothed, truth, split.test);
          r.accuracy = *r.smooth_accuracy;
        }));
    }
  } catch (const std::exception& e) {
    out.clear();
    const std::string tags[] = {"LP", "NHOLS", tag, tag + "+C&S", tag + "+NLCS"};
    const char* keys[] = {"lp", "nhols", "base", "cs", "nlcs"};
    for (int m = 0; m < 5; ++m) {
      if (!cfg.has_method(keys[m])) continue;
      RunResult r;
      r.method = tags[m];
      r.dataset = ctx.data.name;
      r.k = cfg.k;
      r.seed = seed;
      r.config_hash = ctx.hash;
      r.error = e.what();
      out.push_back(std::move(r));
    }
  }
  return out;
}

/// Runs every seed as an independent job. Rows come back in seed order
/// whatever the thread count.
inline std::vector<RunResult> run_experiment(const ExperimentContext& ctx) {
  const auto& seeds = ctx.cfg.seeds;
  std::vector<std::vector<RunResult>> per_seed(seeds.size());
  parallel_for(0, seeds.size(), [&](std::size_t s) { per_seed[s] = run_seed(ctx, seeds[s]); }, 1);
  std::vector<RunResult> rows;
  for (auto& v : per_seed)
    for (auto& r : v) rows.push_back(std::move(r));
  return rows;
}

inline std::vector<RunResult> run_experiment(const ExperimentConfig& cfg) {
  set_num_threads(cfg.threads);
  return run_experiment(prepare_context(cfg));
}

struct MethodSummary {
  std::string method;
  std::size_t runs = 0, failures = 0;
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stddev = std::numeric_limits<double>::quiet_NaN();  // sample, n - 1
};

/// Mean and sample standard deviation of successful runs, per method in
/// first-appearance order.
inline std::vector<MethodSummary> summarize(const std::vector<RunResult>& rows) {
  std::vector<MethodSummary> out;
  std::map<std::string, std::vector<double>> values;
  for (const auto& r : rows) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const MethodSummary& s) { return s.method == r.method; });
    if (it == out.end()) {
      out.push_back({r.method});
      it = std::prev(out.end());
    }
    if (r.ok()) {
      ++it->runs;
      values[r.method].push_back(r.accuracy);
    } else {
      ++it->failures;
    }
  }
  for (auto& s : out) {
    const auto& v = values[s.method];
    if (v.empty()) continue;
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    if (v.size() > 1) {
      double sq = 0.0;
      for (double x : v) sq += (x - s.mean) * (x - s.mean);
      s.stddev = std::sqrt(sq / static_cast<double>(v.size() - 1));
    }
  }
  return out;
}

/// Appends rows to results.csv (header written on creation) and stores the
/// config snapshot as config-<hash>.json next to it.
inline void write_results(const std::filesystem::path& dir, const ExperimentConfig& cfg,
                          const std::vector<RunResult>& rows) {
  std::filesystem::create_directories(dir);
  const auto csv = dir / "results.csv";
  const bool fresh = !std::filesystem::exists(csv) || std::filesystem::file_size(csv) == 0;
  std::ofstream out(csv, std::ios::app);
  if (!out) throw Error("cannot write " + csv.string());
  if (fresh) out << result_csv_header() << '\n';
  for (const auto& r : rows) out << result_csv_row(r) << '\n';
  const auto snap = dir / ("config-" + config_hash(cfg) + ".json");
  std::ofstream js(snap);
  if (!js) throw Error("cannot write " + snap.string());
  js << config_json(cfg).dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Grid search

enum class GridTarget { lp, nhols, nlcs_correct, nlcs_smooth, nlcs_shared };

inline GridTarget parse_grid_target(const std::string& s) {
  if (s == "lp") return GridTarget::lp;
  if (s == "nhols") return GridTarget::nhols;
  if (s == "correct") return GridTarget::nlcs_correct;
  if (s == "smooth") return GridTarget::nlcs_smooth;
  if (s == "nlcs") return GridTarget::nlcs_shared;
  throw Error("grid target must be lp, nhols, correct, smooth or nlcs");
}

struct GridCell {
  double alpha = 0.0, beta = 0.0;
  double validation = 0.0;  // mean over seeds
  double test = 0.0;
};

struct GridResult {
  GridCell best;
  std::vector<GridCell> cells;  // alpha-major
};

inline std::vector<double> grid_range(double lo, double hi, double step) {
  require(step > 0.0, "grid step must be > 0");
  std::vector<double> v;
  for (int i = 0;; ++i) {
    const double x = std::round((lo + i * step) * 1e9) / 1e9;
    if (x > hi + 1e-12) break;
    v.push_back(x);
  }
  return v;
}

/// Admissible pairs satisfy alpha + beta < 1. Selection uses validation
/// accuracy only; ties go to the smaller alpha, then the smaller beta.
inline std::vector<std::pair<double, double>> admissible_pairs(const std::vector<double>& alphas,
                                                               const std::vector<double>& betas) {
  std::vector<std::pair<double, double>> out;
  for (double a : alphas) {
    require(a >= 0.0 && a < 1.0, "grid alpha values must lie in [0, 1)");
    for (double b : betas) {
      require(b >= 0.0 && b < 1.0, "grid beta values must lie in [0, 1)");
      if (a + b < 1.0 - 1e-9) out.emplace_back(a, b);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline GridResult grid_search(const ExperimentContext& ctx, GridTarget target,
                              const std::vector<double>& alphas,
                              const std::vector<double>& betas) {
  const auto& cfg = ctx.cfg;
  const auto& truth = ctx.data.labels;
  const auto pairs = admissible_pairs(alphas, betas);
  require(!pairs.empty(), "grid_search: no admissible (alpha, beta) pairs");
  const bool needs_base = target == GridTarget::nlcs_correct ||
                          target == GridTarget::nlcs_smooth || target == GridTarget::nlcs_shared;

  struct SeedState {
    SplitSpec split;
    LabelMatrix Y;
    ScoreMatrix X;
  };
  std::vector<SeedState> states(cfg.seeds.size());
  parallel_for(0, cfg.seeds.size(), [&](std::size_t s) {
    auto& st = states[s];
    st.split = split_for(ctx, cfg.seeds[s]);
    st.Y = make_label_matrix(truth, ctx.data.num_classes, st.split.train);
    if (needs_base)
      st.X = base_prediction(ctx, st.split, st.Y, train_config_for(cfg, cfg.seeds[s])).prediction.X;
  }, 1);

  GridResult res;
  res.cells.resize(pairs.size());
  parallel_for(0, pairs.size(), [&](std::size_t p) {
    const auto [a, b] = pairs[p];
    GridCell cell{a, b, 0.0, 0.0};
    for (const auto& st : states) {
      ScoreMatrix F;
      if (target == GridTarget::lp) {
        F = lp_iterate(ctx.S, st.Y, {a, 0.0, cfg.t, cfg.tolerance});
      } else if (target == GridTarget::nhols) {
        F = nhols_iterate(ctx.S, ctx.triangles, st.Y, {a, b, cfg.t, cfg.tolerance},
                          cfg.nhols_options());
      } else {
        NlcsConfig nc = cfg.nlcs_config();
        if (target != GridTarget::nlcs_smooth) nc.correction = {a, b, cfg.t, cfg.tolerance};
        if (target != GridTarget::nlcs_correct) nc.smoothing = {a, b, cfg.t, cfg.tolerance};
        F = nlcs_post_process(st.X, st.Y, ctx.S, ctx.triangles, nc).smoothed;
      }
      const auto pred = predict_argmax(F);
      cell.validation += accuracy(pred, truth, st.split.validation);
      cell.test += accuracy(pred, truth, st.split.test);
    }
    cell.validation /= static_cast<double>(states.size());
    cell.test /= static_cast<double>(states.size());
    res.cells[p] = cell;
  }, 1);

  // Pairs are sorted by (alpha, beta), so a strict improvement keeps ties
  // on the earliest pair.
  res.best = res.cells.front();
  for (const auto& c : res.cells)
    if (c.validation > res.best.validation) res.best = c;
  return res;
}

// ---------------------------------------------------------------------------
// Clustering-coefficient bins

struct BinSpec {
  double lo = 0.0, hi = 0.6, width = 0.1;

  int count() const { return static_cast<int>(std::lround((hi - lo) / width)); }

  // Bin index in [0, count()), count() for values above hi, -1 below lo.
  // Quotients are snapped by 1e-9 so 0.3 lands in [0.3, 0.4).
  int index(double c) const {
    if (c < lo) return -1;
    if (c > hi) return count();
    const int b = static_cast<int>(std::floor((c - lo) / width + 1e-9));
    return std::min(b, count() - 1);
  }
};

struct BinRow {
  double lo = 0.0, hi = 0.0;
  bool overflow = false;
  std::size_t count = 0;
  std::vector<std::optional<double>> accuracy;  // one per stage
};

/// Test nodes bucketed by clustering coefficient; per-stage accuracy in each
/// bucket. The trailing overflow row holds coefficients above spec.hi so the
/// populations always add up to the test-set size.
inline std::vector<BinRow> coefficient_binned_accuracy(
    const std::vector<double>& coefficient, const std::vector<int>& truth, const IndexSet& test,
    const std::vector<std::vector<int>>& stage_predictions, const BinSpec& spec = {}) {
  require(spec.width > 0.0 && spec.hi > spec.lo, "bins: need width > 0 and hi > lo");
  const int nb = spec.count();
  require(nb >= 1, "bins: empty range");
  std::vector<BinRow> rows(static_cast<std::size_t>(nb) + 1);
  std::vector<std::vector<std::size_t>> hits(rows.size(),
                                             std::vector<std::size_t>(stage_predictions.size()));
  for (int b = 0; b < nb; ++b) {
    rows[b].lo = spec.lo + b * spec.width;
    rows[b].hi = b + 1 == nb ? spec.hi : spec.lo + (b + 1) * spec.width;
  }
  rows[nb].lo = spec.hi;
  rows[nb].hi = 1.0;
  rows[nb].overflow = true;
  for (NodeId i : test) {
    int b = spec.index(coefficient[i]);
    require(b >= 0, "bins: coefficient below the first bin");
    ++rows[b].count;
    for (std::size_t s = 0; s < stage_predictions.size(); ++s)
      hits[b][s] += stage_predictions[s][i] == truth[i];
  }
  for (std::size_t b = 0; b < rows.size(); ++b) {
    rows[b].accuracy.resize(stage_predictions.size());
    if (rows[b].count == 0) continue;
    for (std::size_t s = 0; s < stage_predictions.size(); ++s)
      rows[b].accuracy[s] =
          static_cast<double>(hits[b][s]) / static_cast<double>(rows[b].count);
  }
  return rows;
}

inline void write_bins_csv(std::ostream& out, const std::vector<BinRow>& rows,
                           const std::vector<std::string>& stages) {
  out << "bin_lo,bin_hi,overflow,count";
  for (const auto& s : stages) out << ',' << s;
  out << '\n';
  for (const auto& r : rows) {
    out << format_double(r.lo) << ',' << format_double(r.hi) << ',' << (r.overflow ? 1 : 0)
        << ',' << r.count;
    for (const auto& a : r.accuracy) out << ',' << experiment_detail::opt(a);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Margins

struct MarginRow {
  std::string stage;
  NodeId node;
  int label;
  double margin;
};

/// score[class0] - score[class1] for every test node labeled class0 or class1,
/// stage-major.
inline std::vector<MarginRow> margin_export(
    const std::vector<std::pair<std::string, ScoreMatrix>>& stages, const std::vector<int>& truth,
    const IndexSet& test, int class0 = 0, int class1 = 1) {
  require(!stages.empty(), "margin_export: no stages");
  require(stages.front().second.cols() >= 2, "margin_export: fewer than two classes");
  require(class0 != class1 && class0 >= 0 && class1 >= 0 &&
              class0 < stages.front().second.cols() && class1 < stages.front().second.cols(),
          "margin_export: invalid class pair");
  std::vector<MarginRow> rows;
  for (const auto& [name, M] : stages)
    for (NodeId i : test)
      if (truth[i] == class0 || truth[i] == class1)
        rows.push_back({name, i, truth[i], M(i, class0) - M(i, class1)});
  return rows;
}

inline void write_margins_csv(std::ostream& out, const std::vector<MarginRow>& rows) {
  out << "stage,node,label,margin\n";
  for (const auto& r : rows)
    out << r.stage << ',' << r.node << ',' << r.label << ',' << format_double(r.margin) << '\n';
}

// ---------------------------------------------------------------------------
// PCA

struct PcaResult {
  Eigen::MatrixXd directions;  // columns x components, orthonormal
  Vector explained_variance;   // non-increasing
  ScoreMatrix projection;      // rows x components
  Vector mean;
};

inline PcaResult pca(const ScoreMatrix& M, int components) {
  require(components >= 1 && components <= M.cols(), "pca: components must be in [1, columns]");
  require(M.rows() >= 2, "pca: need at least two rows");
  PcaResult r;
  r.mean = M.colwise().mean().transpose();
  const Eigen::MatrixXd centered = M.rowwise() - r.mean.transpose();
  const Eigen::MatrixXd cov =
      (centered.transpose() * centered) / static_cast<double>(M.rows() - 1);
  require(cov.trace() > 0.0, "pca: zero-variance input");
  // Eigen returns ascending eigenvalues; keep the top ones, largest first.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  require(es.info() == Eigen::Success, "pca: eigendecomposition failed");
  r.explained_variance = es.eigenvalues().reverse().head(components).cwiseMax(0.0);
  r.directions = es.eigenvectors().rowwise().reverse().leftCols(components);
  for (int k = 0; k < components; ++k) {
    Eigen::Index arg;
    r.directions.col(k).cwiseAbs().maxCoeff(&arg);
    if (r.directions(arg, k) < 0.0) r.directions.col(k) *= -1.0;
  }
  r.projection = centered * r.directions;
  return r;
}

inline void write_pca_csv(std::ostream& out, const PcaResult& p, const std::vector<int>& labels) {
  out << "node,label";
  for (Eigen::Index k = 0; k < p.projection.cols(); ++k) out << ",pc" << k + 1;
  out << '\n';
  for (Eigen::Index i = 0; i < p.projection.rows(); ++i) {
    out << i << ',' << labels[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < p.projection.cols(); ++k)
      out << ',' << format_double(p.projection(i, k));
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Training timeline

struct TimelineRow {
  int epoch = 0;
  double base = 0.0, corrected = 0.0, nlcs = 0.0;
};

/// Runs NLCS on the live model every `every` epochs of one training run.
inline std::vector<TimelineRow> timeline_eval(const ExperimentContext& ctx, std::uint64_t seed,
                                              int every = 100) {
  require(every >= 1, "timeline: every must be >= 1");
  require(!ctx.external, "timeline: needs a trainable base model");
  const auto& truth = ctx.data.labels;
  const SplitSpec split = split_for(ctx, seed);
  const LabelMatrix Y = make_label_matrix(truth, ctx.data.num_classes, split.train);
  TrainConfig tcfg = train_config_for(ctx.cfg, seed);
  tcfg.checkpoint_every = every;
  const NlcsConfig nc = ctx.cfg.nlcs_config();
  std::vector<TimelineRow> rows;
  base_prediction(ctx, split, Y, tcfg, [&](int epoch, const ScoreMatrix& X) {
    const auto p = nlcs_post_process(X, Y, ctx.S, ctx.triangles, nc);
    rows.push_back({epoch, accuracy(X, truth, split.test), accuracy(p.corrected, truth, split.test),
                    accuracy(p.smoothed, truth, split.test)});
  });
  return rows;
}

inline void write_timeline_csv(std::ostream& out, const std::vector<TimelineRow>& rows) {
  out << "epoch,base,corrected,nlcs\n";
  for (const auto& r : rows)
    out << r.epoch << ',' << format_double(r.base) << ',' << format_double(r.corrected) << ','
        << format_double(r.nlcs) << '\n';
}

}  // namespace nlcs
