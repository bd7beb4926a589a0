#pragma once

#include <algorithm>
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
#include "nlcs/correct_smooth.hpp"
#include "nlcs/dataset.hpp"
#include "nlcs/mixing.hpp"
#include "nlcs/models.hpp"
#include "nlcs/triangles.hpp"

namespace nlcs {

enum class BaseModel { plain_linear, mlp, file };

struct BaseSpec {
  BaseModel model = BaseModel::plain_linear;
  std::string file;  // for BaseModel::file
  TrainConfig train{};
  int embedding_dim = 0;  // 0 = max(2c, 32) capped at n - 1
};

struct ExperimentConfig {
  // [dataset]
  std::string dataset;  // directory holding edges.txt, labels.txt[, features.txt]
  std::string name;
  TriangleWeightRule triangle_weight = TriangleWeightRule::geometric_mean;

  // [split]
  double k = 0.05;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::uint64_t split_seed = 0;
  bool split_per_seed = false;  // false: one split shared by every seed

  // [propagation]
  int t = 50;
  Mixing sigma = Mixing::arithmetic_mean;
  PhiMode phi = PhiMode::per_column;
  std::optional<double> tolerance;

  // [lp]
  double lp_alpha = 0.9;
  // [nhols]
  double nhols_alpha = 0.4;
  double nhols_beta = 0.5;
  // [correct]
  double correct_alpha = 0.5;
  double correct_beta = 0.4;
  ResidualTeleport correct_teleport = ResidualTeleport::initial_error;
  ResidualOrientation orientation = ResidualOrientation::truth_minus_prediction;
  // [smooth]
  double smooth_alpha = 0.5;
  double smooth_beta = 0.4;
  SmoothTeleport smooth_teleport = SmoothTeleport::labels;
  // [linear_cs]
  double cs_correct_alpha = 0.8;
  double cs_smooth_alpha = 0.8;

  // [base]
  BaseSpec base{};

  // [run]
  std::vector<std::string> methods{"lp", "nhols", "base", "cs", "nlcs"};
  int threads = 1;
  std::string out = "results";

  PropagationParams lp_params() const { return {lp_alpha, 0.0, t, tolerance}; }
  PropagationParams nhols_params() const { return {nhols_alpha, nhols_beta, t, tolerance}; }

  NholsOptions nhols_options() const { return {sigma, phi}; }

  NlcsConfig nlcs_config() const {
    NlcsConfig c;
    c.correction = {correct_alpha, correct_beta, t, tolerance};
    c.smoothing = {smooth_alpha, smooth_beta, t, tolerance};
    c.sigma = sigma;
    c.phi_mode = phi;
    c.residual_teleport = correct_teleport;
    c.orientation = orientation;
    c.smooth_teleport = smooth_teleport;
    return c;
  }

  LinearCsConfig linear_cs_config() const {
    return {cs_correct_alpha, cs_smooth_alpha, t, orientation};
  }

  bool has_method(std::string_view m) const {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  }

  /// Domain checks with field-level messages.
  void validate() const {
    auto pair = [](const char* section, double a, double b) {
      if (!(a >= 0.0)) throw Error(std::string("[") + section + "] alpha must be >= 0");
      if (!(b >= 0.0)) throw Error(std::string("[") + section + "] beta must be >= 0");
      if (!(a + b < 1.0))
        throw Error(std::string("[") + section + "] alpha+beta must be < 1");
    };
    if (!(k > 0.0 && k < 1.0)) throw Error("[split] k must be in (0, 1)");
    if (seeds.empty()) throw Error("[split] seeds must not be empty");
    if (t < 0) throw Error("[propagation] t must be >= 0");
    if (tolerance && *tolerance < 0.0) throw Error("[propagation] tolerance must be >= 0");
    if (!(lp_alpha >= 0.0 && lp_alpha < 1.0)) throw Error("[lp] alpha must be in [0, 1)");
    pair("nhols", nhols_alpha, nhols_beta);
    pair("correct", correct_alpha, correct_beta);
    pair("smooth", smooth_alpha, smooth_beta);
    if (!(cs_correct_alpha > 0.0 && cs_correct_alpha < 1.0))
      throw Error("[linear_cs] correct_alpha must be in (0, 1)");
    if (!(cs_smooth_alpha > 0.0 && cs_smooth_alpha < 1.0))
      throw Error("[linear_cs] smooth_alpha must be in (0, 1)");
    if (base.model == BaseModel::file && base.file.empty())
      throw Error("[base] model = file:<path> needs a path");
    if (base.embedding_dim < 0) throw Error("[base] embedding_dim must be >= 0");
    try {
      base.train.validate();
    } catch (const Error& e) {
      throw Error(std::string("[base] ") + e.what());
    }
    static const std::vector<std::string> known{"lp", "nhols", "base", "cs", "nlcs"};
    for (const auto& m : methods)
      if (std::find(known.begin(), known.end(), m) == known.end())
        throw Error("[run] unknown method '" + m + "'");
    if (threads < 1) throw Error("[run] threads must be >= 1");
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!trim(cur).empty() || !out.empty()) out.push_back(trim(cur));
  return out;
}

inline double to_double(const std::string& key, const std::string& v) {
  auto d = io::parse_number<double>(v);
  if (!d) throw Error(key + ": expected a number, got '" + v + "'");
  return *d;
}

inline long long to_int(const std::string& key, const std::string& v) {
  auto d = io::parse_number<long long>(v);
  if (!d) throw Error(key + ": expected an integer, got '" + v + "'");
  return *d;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(key + ": expected true or false, got '" + v + "'");
}

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

inline std::string_view rule_name(TriangleWeightRule r) {
  switch (r) {
    case TriangleWeightRule::unit: return "unit";
    case TriangleWeightRule::geometric_mean: return "geometric_mean";
    case TriangleWeightRule::arithmetic_mean: return "arithmetic_mean";
    case TriangleWeightRule::minimum: return "minimum";
  }
  return "geometric_mean";
}

}  // namespace config_detail

inline TriangleWeightRule parse_triangle_weight(const std::string& v) {
  for (auto r : {TriangleWeightRule::unit, TriangleWeightRule::geometric_mean,
                 TriangleWeightRule::arithmetic_mean, TriangleWeightRule::minimum})
    if (config_detail::rule_name(r) == v) return r;
  throw Error("unknown triangle weight rule '" + v + "'");
}

inline ResidualTeleport parse_residual_teleport(const std::string& v) {
  if (v == "error") return ResidualTeleport::initial_error;
  if (v == "labels") return ResidualTeleport::labels;
  throw Error("teleport: expected error or labels, got '" + v + "'");
}

inline SmoothTeleport parse_smooth_teleport(const std::string& v) {
  if (v == "labels") return SmoothTeleport::labels;
  if (v == "initial") return SmoothTeleport::initial_state;
  throw Error("teleport: expected labels or initial, got '" + v + "'");
}

inline ResidualOrientation parse_orientation(const std::string& v) {
  if (v == "truth-minus-prediction") return ResidualOrientation::truth_minus_prediction;
  if (v == "prediction-minus-truth") return ResidualOrientation::prediction_minus_truth;
  throw Error("orientation: expected truth-minus-prediction or prediction-minus-truth");
}

inline PhiMode parse_phi_mode(const std::string& v) {
  if (v == "column") return PhiMode::per_column;
  if (v == "global") return PhiMode::global;
  throw Error("phi: expected column or global, got '" + v + "'");
}

/// Parses `--base` style values: pl, mlp or file:<path>.
inline void parse_base_model(const std::string& v, BaseSpec& base) {
  if (v == "pl") {
    base.model = BaseModel::plain_linear;
  } else if (v == "mlp") {
    base.model = BaseModel::mlp;
  } else if (v.rfind("file:", 0) == 0) {
    base.model = BaseModel::file;
    base.file = v.substr(5);
  } else {
    throw Error("[base] model: expected pl, mlp or file:<path>, got '" + v + "'");
  }
}

inline std::string base_model_string(const BaseSpec& base) {
  switch (base.model) {
    case BaseModel::plain_linear: return "pl";
    case BaseModel::mlp: return "mlp";
    case BaseModel::file: return "file:" + base.file;
  }
  return "pl";
}

/// Applies one `section.key = value` assignment. Unknown keys are rejected.
inline void set_config_value(ExperimentConfig& c, const std::string& section,
                             const std::string& key, const std::string& value) {
  using namespace config_detail;
  const std::string full = section + "." + key;
  auto num = [&] { return to_double(full, value); };
  auto integer = [&] { return to_int(full, value); };

  if (section == "dataset") {
    if (key == "path") return void(c.dataset = value);
    if (key == "name") return void(c.name = value);
    if (key == "triangle_weight") return void(c.triangle_weight = parse_triangle_weight(value));
  } else if (section == "split") {
    if (key == "k") return void(c.k = num());
    if (key == "split_seed") return void(c.split_seed = static_cast<std::uint64_t>(integer()));
    if (key == "per_seed") return void(c.split_per_seed = to_bool(full, value));
    if (key == "seeds") {
      c.seeds.clear();
      for (const auto& s : split_list(value)) {
        const auto v = to_int(full, s);
        if (v < 0) throw Error(full + ": seeds must be non-negative");
        c.seeds.push_back(static_cast<std::uint64_t>(v));
      }
      return;
    }
  } else if (section == "propagation") {
    if (key == "t") return void(c.t = static_cast<int>(integer()));
    if (key == "sigma") return void(c.sigma = parse_mixing(value));
    if (key == "phi") return void(c.phi = parse_phi_mode(value));
    if (key == "tolerance") {
      if (value == "none") return void(c.tolerance.reset());
      return void(c.tolerance = num());
    }
  } else if (section == "lp") {
    if (key == "alpha") return void(c.lp_alpha = num());
  } else if (section == "nhols") {
    if (key == "alpha") return void(c.nhols_alpha = num());
    if (key == "beta") return void(c.nhols_beta = num());
  } else if (section == "correct") {
    if (key == "alpha") return void(c.correct_alpha = num());
    if (key == "beta") return void(c.correct_beta = num());
    if (key == "teleport") return void(c.correct_teleport = parse_residual_teleport(value));
    if (key == "orientation") return void(c.orientation = parse_orientation(value));
  } else if (section == "smooth") {
    if (key == "alpha") return void(c.smooth_alpha = num());
    if (key == "beta") return void(c.smooth_beta = num());
    if (key == "teleport") return void(c.smooth_teleport = parse_smooth_teleport(value));
  } else if (section == "linear_cs") {
    if (key == "correct_alpha") return void(c.cs_correct_alpha = num());
    if (key == "smooth_alpha") return void(c.cs_smooth_alpha = num());
  } else if (section == "base") {
    auto& tr = c.base.train;
    if (key == "model") return parse_base_model(value, c.base);
    if (key == "epochs") return void(tr.epochs = static_cast<int>(integer()));
    if (key == "lr") return void(tr.learning_rate = num());
    if (key == "weight_decay") return void(tr.weight_decay = num());
    if (key == "hidden") return void(tr.hidden = static_cast<int>(integer()));
    if (key == "dropout") return void(tr.dropout = num());
    if (key == "eval_every") return void(tr.eval_every = static_cast<int>(integer()));
    if (key == "embedding_dim") return void(c.base.embedding_dim = static_cast<int>(integer()));
    if (key == "optimizer") {
      if (value == "adam") return void(tr.optimizer = Optimizer::adam);
      if (value == "gd") return void(tr.optimizer = Optimizer::gradient_descent);
      throw Error(full + ": expected adam or gd");
    }
    if (key == "selection") {
      if (value == "best_validation") return void(tr.selection = ModelSelection::best_validation);
      if (value == "last") return void(tr.selection = ModelSelection::last_epoch);
      throw Error(full + ": expected best_validation or last");
    }
  } else if (section == "run") {
    if (key == "methods") return void(c.methods = split_list(value));
    if (key == "threads") return void(c.threads = static_cast<int>(integer()));
    if (key == "out") return void(c.out = value);
  }
  throw Error("unknown config key '" + key + "' in section [" + section + "]");
}

/// Parses sectioned `key = value` text. '#' and ';' start comments.
inline ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig c;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::size_t lineno = 0;
  while (std::getline(in, raw)) {
    ++lineno;
    std::string line = raw;
    for (char mark : {'#', ';'})
      if (auto p = line.find(mark); p != std::string::npos) line.erase(p);
    line = config_detail::trim(line);
    if (line.empty()) continue;
    const std::string at = "config line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(at + "unterminated section header");
      section = config_detail::trim(std::string_view(line).substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(at + "expected key = value");
    if (section.empty()) throw Error(at + "key outside of a [section]");
    const std::string key = config_detail::trim(std::string_view(line).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(line).substr(eq + 1));
    try {
      set_config_value(c, section, key, value);
    } catch (const Error& e) {
      throw Error(at + e.what());
    }
  }
  c.validate();
  return c;
}

inline ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

/// Canonical text form listing every key.
inline std::string serialize_config(const ExperimentConfig& c) {
  using config_detail::join;
  auto d = [](double v) { return format_double(v); };
  std::vector<std::string> seeds;
  for (auto s : c.seeds) seeds.push_back(std::to_string(s));
  const auto& tr = c.base.train;
  std::ostringstream o;
  o << "[dataset]\n"
    << "path = " << c.dataset << "\n"
    << "name = " << c.name << "\n"
    << "triangle_weight = " << config_detail::rule_name(c.triangle_weight) << "\n\n"
    << "[split]\n"
    << "k = " << d(c.k) << "\n"
    << "seeds = " << join(seeds) << "\n"
    << "split_seed = " << c.split_seed << "\n"
    << "per_seed = " << (c.split_per_seed ? "true" : "false") << "\n\n"
    << "[propagation]\n"
    << "t = " << c.t << "\n"
    << "sigma = " << to_string(c.sigma) << "\n"
    << "phi = " << (c.phi == PhiMode::per_column ? "column" : "global") << "\n"
    << "tolerance = " << (c.tolerance ? d(*c.tolerance) : std::string("none")) << "\n\n"
    << "[lp]\n"
    << "alpha = " << d(c.lp_alpha) << "\n\n"
    << "[nhols]\n"
    << "alpha = " << d(c.nhols_alpha) << "\n"
    << "beta = " << d(c.nhols_beta) << "\n\n"
    << "[correct]\n"
    << "alpha = " << d(c.correct_alpha) << "\n"
    << "beta = " << d(c.correct_beta) << "\n"
    << "teleport = " << to_string(c.correct_teleport) << "\n"
    << "orientation = " << to_string(c.orientation) << "\n\n"
    << "[smooth]\n"
    << "alpha = " << d(c.smooth_alpha) << "\n"
    << "beta = " << d(c.smooth_beta) << "\n"
    << "teleport = " << to_string(c.smooth_teleport) << "\n\n"
    << "[linear_cs]\n"
    << "correct_alpha = " << d(c.cs_correct_alpha) << "\n"
    << "smooth_alpha = " << d(c.cs_smooth_alpha) << "\n\n"
    << "[base]\n"
    << "model = " << base_model_string(c.base) << "\n"
    << "epochs = " << tr.epochs << "\n"
    << "lr = " << d(tr.learning_rate) << "\n"
    << "weight_decay = " << d(tr.weight_decay) << "\n"
    << "hidden = " << tr.hidden << "\n"
    << "dropout = " << d(tr.dropout) << "\n"
    << "optimizer = " << (tr.optimizer == Optimizer::adam ? "adam" : "gd") << "\n"
    << "selection = "
    << (tr.selection == ModelSelection::best_validation ? "best_validation" : "last") << "\n"
    << "eval_every = " << tr.eval_every << "\n"
    << "embedding_dim = " << c.base.embedding_dim << "\n\n"
    << "[run]\n"
    << "methods = " << join(c.methods) << "\n"
    << "threads = " << c.threads << "\n"
    << "out = " << c.out << "\n";
  return o.str();
}

}  // namespace nlcs
