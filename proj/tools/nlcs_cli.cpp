// Command-line runner for propagation and correct-and-smooth experiments.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nlcs.hpp"

namespace fs = std::filesystem;
using namespace nlcs;

namespace {

struct Overrides {
  std::string config, dataset, seeds, sigma, base, teleport, out, methods, phi;
  std::optional<double> k, alpha, beta, lp_alpha;
  std::optional<int> t, threads;
  bool literal_teleport = false;
};

void add_common(CLI::App* app, Overrides& o) {
  app->add_option("--config", o.config, "Config file");
  app->add_option("--dataset", o.dataset, "Dataset directory");
  app->add_option("--k", o.k, "Training fraction");
  app->add_option("--seeds", o.seeds, "Comma separated seeds");
  app->add_option("--alpha", o.alpha, "Tensor weight for NHOLS, correction and smoothing");
  app->add_option("--beta", o.beta, "Adjacency weight for NHOLS, correction and smoothing");
  app->add_option("--lp-alpha", o.lp_alpha, "Label propagation alpha");
  app->add_option("--t", o.t, "Propagation iterations");
  app->add_option("--sigma", o.sigma, "Mixing function: mean|max|min|geomean|harmonic");
  app->add_option("--phi", o.phi, "Normalization: column|global");
  app->add_option("--base", o.base, "Base model: pl, mlp or file:<path>");
  auto* tele = app->add_option("--teleport", o.teleport, "Correction teleport: error|labels");
  app->add_flag("--paper-literal", o.literal_teleport, "Same as --teleport labels")->excludes(tele);
  app->add_option("--methods", o.methods, "Subset of lp,nhols,base,cs,nlcs");
  app->add_option("--threads", o.threads, "Worker threads");
  app->add_option("--out", o.out, "Output directory");
}

ExperimentConfig resolve(const Overrides& o) {
  ExperimentConfig c = o.config.empty() ? ExperimentConfig{} : parse_config(o.config);
  auto set = [&](const char* section, const char* key, const std::string& value) {
    set_config_value(c, section, key, value);
  };
  auto num = [](double v) { return format_double(v); };
  if (!o.dataset.empty()) set("dataset", "path", o.dataset);
  if (o.k) set("split", "k", num(*o.k));
  if (!o.seeds.empty()) set("split", "seeds", o.seeds);
  if (o.alpha)
    for (const char* s : {"nhols", "correct", "smooth"}) set(s, "alpha", num(*o.alpha));
  if (o.beta)
    for (const char* s : {"nhols", "correct", "smooth"}) set(s, "beta", num(*o.beta));
  if (o.lp_alpha) set("lp", "alpha", num(*o.lp_alpha));
  if (o.t) set("propagation", "t", std::to_string(*o.t));
  if (!o.sigma.empty()) set("propagation", "sigma", o.sigma);
  if (!o.phi.empty()) set("propagation", "phi", o.phi);
  if (!o.base.empty()) set("base", "model", o.base);
  if (!o.teleport.empty()) set("correct", "teleport", o.teleport);
  if (o.literal_teleport) set("correct", "teleport", "labels");
  if (!o.methods.empty()) set("run", "methods", o.methods);
  if (o.threads) set("run", "threads", std::to_string(*o.threads));
  if (!o.out.empty()) set("run", "out", o.out);
  c.validate();
  set_num_threads(c.threads);
  return c;
}

std::ofstream open_out(const fs::path& dir, const std::string& file) {
  fs::create_directories(dir);
  std::ofstream out(dir / file);
  if (!out) throw Error("cannot write " + (dir / file).string());
  std::cerr << "writing " << (dir / file).string() << '\n';
  return out;
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", 100.0 * v);
  return buf;
}

// Base, linear C&S and NLCS stages for the first configured seed.
struct Stages {
  SplitSpec split;
  ScoreMatrix base;
  PostProcessResult cs, nlcs;
};

Stages compute_stages(const ExperimentContext& ctx) {
  Stages s;
  const auto seed = ctx.cfg.seeds.front();
  s.split = split_for(ctx, seed);
  const LabelMatrix Y = make_label_matrix(ctx.data.labels, ctx.data.num_classes, s.split.train);
  s.base = base_prediction(ctx, s.split, Y, train_config_for(ctx.cfg, seed)).prediction.X;
  s.cs = linear_correct_and_smooth(s.base, Y, ctx.S, ctx.cfg.linear_cs_config());
  s.nlcs = nlcs_post_process(s.base, Y, ctx.S, ctx.triangles, ctx.cfg.nlcs_config());
  return s;
}

ExperimentConfig with_base_methods(ExperimentConfig c) {
  c.methods = {"base", "cs", "nlcs"};
  return c;
}

int cmd_run(const Overrides& o) {
  const auto cfg = resolve(o);
  const auto ctx = prepare_context(cfg);
  if (ctx.embedding && !ctx.embedding->converged)
    std::cerr << "warning: spectral embedding stopped after " << ctx.embedding->sweeps
              << " sweeps, residual " << ctx.embedding->residual << '\n';
  const auto rows = run_experiment(ctx);
  write_results(cfg.out, cfg, rows);
  int failures = 0;
  for (const auto& r : rows)
    if (!r.ok()) {
      ++failures;
      std::cerr << r.method << " seed " << r.seed << ": " << *r.error << '\n';
    }
  std::cout << "method,runs,failures,mean,std\n";
  for (const auto& s : summarize(rows))
    std::cout << s.method << ',' << s.runs << ',' << s.failures << ','
              << (s.runs ? pct(s.mean) : "") << ',' << (s.runs > 1 ? pct(s.stddev) : "")
              << '\n';
  return failures ? 1 : 0;
}

int cmd_grid(const Overrides& o, const std::string& target, double step, double max) {
  const auto cfg = resolve(o);
  const GridTarget t = parse_grid_target(target);
  const auto ctx = prepare_context(t == GridTarget::lp || t == GridTarget::nhols
                                       ? cfg
                                       : with_base_methods(cfg));
  const auto alphas = grid_range(0.0, max, step);
  const auto betas = t == GridTarget::lp ? std::vector<double>{0.0} : alphas;
  const auto res = grid_search(ctx, t, alphas, betas);
  auto out = open_out(cfg.out, "grid_" + target + ".csv");
  out << "alpha,beta,validation,test\n";
  for (const auto& c : res.cells)
    out << format_double(c.alpha) << ',' << format_double(c.beta) << ','
        << format_double(c.validation) << ',' << format_double(c.test) << '\n';
  std::cout << "best alpha=" << format_double(res.best.alpha)
            << " beta=" << format_double(res.best.beta) << " validation="
            << pct(res.best.validation) << " test=" << pct(res.best.test) << " ("
            << res.cells.size() << " pairs)\n";
  return 0;
}

int cmd_bins(const Overrides& o, const BinSpec& spec) {
  const auto cfg = resolve(o);
  const auto ctx = prepare_context(with_base_methods(cfg));
  const auto s = compute_stages(ctx);
  const auto coef = clustering_coefficient(ctx.data.graph, ctx.triangles);
  const auto rows = coefficient_binned_accuracy(
      coef, ctx.data.labels, s.split.test,
      {predict_argmax(s.base), predict_argmax(s.cs.smoothed), predict_argmax(s.nlcs.smoothed)},
      spec);
  auto out = open_out(cfg.out, "bins.csv");
  write_bins_csv(out, rows, {"base", "cs", "nlcs"});
  return 0;
}

int cmd_margins(const Overrides& o, int c0, int c1) {
  const auto cfg = resolve(o);
  const auto ctx = prepare_context(with_base_methods(cfg));
  const auto s = compute_stages(ctx);
  const auto rows = margin_export(
      {{"base", s.base}, {"corrected", s.nlcs.corrected}, {"smoothed", s.nlcs.smoothed}},
      ctx.data.labels, s.split.test, c0, c1);
  auto out = open_out(cfg.out, "margins.csv");
  write_margins_csv(out, rows);
  return 0;
}

int cmd_pca(const Overrides& o, const std::string& stage, int components) {
  const auto cfg = resolve(o);
  const auto ctx = prepare_context(with_base_methods(cfg));
  const auto s = compute_stages(ctx);
  const ScoreMatrix* m = nullptr;
  if (stage == "base") m = &s.base;
  else if (stage == "corrected") m = &s.nlcs.corrected;
  else if (stage == "nlcs") m = &s.nlcs.smoothed;
  else if (stage == "cs") m = &s.cs.smoothed;
  else throw Error("--stage must be base, corrected, nlcs or cs");
  const auto p = pca(*m, components);
  auto out = open_out(cfg.out, "pca_" + stage + ".csv");
  write_pca_csv(out, p, ctx.data.labels);
  std::cout << "explained variance:";
  for (Eigen::Index k = 0; k < p.explained_variance.size(); ++k)
    std::cout << ' ' << format_double(p.explained_variance(k));
  std::cout << '\n';
  return 0;
}

int cmd_timeline(const Overrides& o, int every) {
  const auto cfg = resolve(o);
  const auto ctx = prepare_context(with_base_methods(cfg));
  const auto rows = timeline_eval(ctx, cfg.seeds.front(), every);
  auto out = open_out(cfg.out, "timeline.csv");
  write_timeline_csv(out, rows);
  return 0;
}

int cmd_convert(const std::string& content, const std::string& cites, const std::string& out,
                bool keep_features) {
  const auto c = convert_linqs(content, cites);
  write_dataset(out, c.edges, c.labels,
                keep_features ? std::optional<FeatureMatrix>(c.features) : std::nullopt);
  const Graph g = build_graph(c.edges, c.labels.size());
  std::cout << "nodes " << c.labels.size() << ", edges " << g.num_edges() << ", classes "
            << c.class_names.size() << ", features " << c.features.cols()
            << ", dangling citations " << c.dangling_citations << ", self loops dropped "
            << g.self_loops_dropped() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Label propagation and correct-and-smooth experiments on graphs"};
  app.require_subcommand(1);
  Overrides o;

  auto* run = app.add_subcommand("run", "Run all configured methods over seeds");
  add_common(run, o);

  std::string target = "nhols";
  double step = 0.1, max = 0.9;
  auto* grid = app.add_subcommand("grid", "Validation grid over (alpha, beta)");
  add_common(grid, o);
  grid->add_option("--target", target, "lp|nhols|correct|smooth|nlcs");
  grid->add_option("--step", step, "Grid increment");
  grid->add_option("--max", max, "Largest grid value");

  BinSpec spec;
  auto* bins = app.add_subcommand("bins", "Accuracy by clustering-coefficient range");
  add_common(bins, o);
  bins->add_option("--bin-width", spec.width, "Bin width");
  bins->add_option("--bin-max", spec.hi, "Upper edge of the last bin");

  int c0 = 0, c1 = 1;
  auto* margins = app.add_subcommand("margins", "Score margin between two classes per stage");
  add_common(margins, o);
  margins->add_option("--class0", c0);
  margins->add_option("--class1", c1);

  std::string stage = "nlcs";
  int components = 2;
  auto* pcacmd = app.add_subcommand("pca", "Principal component projection of a stage");
  add_common(pcacmd, o);
  pcacmd->add_option("--stage", stage, "base|corrected|nlcs|cs");
  pcacmd->add_option("--components", components);

  int every = 100;
  auto* timeline = app.add_subcommand("timeline", "NLCS accuracy during base training");
  add_common(timeline, o);
  timeline->add_option("--every", every, "Epoch interval");

  std::string content, cites, out_dir;
  bool no_features = false;
  auto* convert = app.add_subcommand("convert", "Convert LINQS .content/.cites to edges/labels");
  convert->add_option("--content", content)->required();
  convert->add_option("--cites", cites)->required();
  convert->add_option("--out", out_dir)->required();
  convert->add_flag("--no-features", no_features, "Skip features.txt");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run) return cmd_run(o);
    if (*grid) return cmd_grid(o, target, step, max);
    if (*bins) return cmd_bins(o, spec);
    if (*margins) return cmd_margins(o, c0, c1);
    if (*pcacmd) return cmd_pca(o, stage, components);
    if (*timeline) return cmd_timeline(o, every);
    if (*convert) return cmd_convert(content, cites, out_dir, !no_features);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
