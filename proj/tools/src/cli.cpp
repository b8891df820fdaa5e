#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "coupled/afs.hpp"
#include "coupled/coupled_loop.hpp"
#include "coupled/datagen.hpp"
#include "coupled/dataset.hpp"
#include "coupled/dictionary.hpp"
#include "coupled/errors.hpp"
#include "coupled/eval_cv.hpp"
#include "coupled/linear_coupled.hpp"
#include "coupled/rng.hpp"
#include "coupled/text.hpp"
#include "coupled/version.hpp"

namespace coupled::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  parts.push_back(cur);
  return parts;
}

double to_double(const std::string& s, const std::string& what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(value)) {
    throw ConfigError(what + " must be a finite number, got '" + s + "'");
  }
  return value;
}

int to_int(const std::string& s, const std::string& what) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ConfigError(what + " must be an integer, got '" + s + "'");
  }
  return value;
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json cfg;
  try {
    in >> cfg;
  } catch (const json::exception& e) {
    throw ConfigError("config file '" + path + "': " + e.what());
  }
  if (!cfg.is_object()) throw ConfigError("config root must be a JSON object");
  return cfg;
}

// Effective value precedence: command line flag > config file key > default.
template <class T>
void overlay(const CLI::Option* opt, const json& cfg, const char* key, T& value) {
  if (opt != nullptr && opt->count() > 0) return;
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  try {
    value = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

Eigen::VectorXd vector_from_json(const json& arr, const char* key) {
  if (!arr.is_array()) throw ConfigError(std::string("config key '") + key + "' must be an array");
  Eigen::VectorXd v(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_number()) {
      throw ConfigError(std::string("config key '") + key + "' must hold numbers");
    }
    v[static_cast<int>(i)] = arr[i].get<double>();
  }
  return v;
}

Eigen::MatrixXd matrix_from_json(const json& arr, const char* key) {
  if (!arr.is_array() || arr.empty() || !arr[0].is_array()) {
    throw ConfigError(std::string("config key '") + key + "' must be an array of arrays");
  }
  const std::size_t cols = arr[0].size();
  Eigen::MatrixXd mat(arr.size(), cols);
  for (std::size_t i = 0; i < arr.size(); ++i) {
    if (!arr[i].is_array() || arr[i].size() != cols) {
      throw ConfigError(std::string("config key '") + key + "' rows have uneven lengths");
    }
    for (std::size_t j = 0; j < cols; ++j) mat(i, j) = arr[i][j].get<double>();
  }
  return mat;
}

template <class T>
void get_if(const json& cfg, const char* key, T& out) {
  auto it = cfg.find(key);
  if (it == cfg.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

void get_vec_if(const json& cfg, const char* key, Eigen::VectorXd& out) {
  auto it = cfg.find(key);
  if (it != cfg.end()) out = vector_from_json(*it, key);
}

void get_mat_if(const json& cfg, const char* key, Eigen::MatrixXd& out) {
  auto it = cfg.find(key);
  if (it != cfg.end()) out = matrix_from_json(*it, key);
}

std::vector<double> parse_lambda_grid(const std::string& spec) {
  auto parts = split_list(spec);
  if (parts.size() != 3) {
    throw ConfigError("lambda grid must be START_EXP,END_EXP,COUNT, got '" + spec + "'");
  }
  double a = to_double(parts[0], "lambda grid start exponent");
  double b = to_double(parts[1], "lambda grid end exponent");
  int count = to_int(parts[2], "lambda grid count");
  if (count < 1) throw ConfigError("lambda grid count must be >= 1");
  if (count > 1 && a >= b) {
    throw ConfigError("lambda grid start exponent must be below the end exponent");
  }
  return log_grid(std::pow(10.0, a), std::pow(10.0, b), count);
}

void overlay_grid(const CLI::Option* opt, const json& cfg, std::string& grid_spec) {
  if (opt != nullptr && opt->count() > 0) return;
  auto it = cfg.find("lambda_grid");
  if (it == cfg.end()) return;
  if (it->is_string()) {
    grid_spec = it->get<std::string>();
  } else if (it->is_array() && it->size() == 3) {
    grid_spec = format_double((*it)[0].get<double>()) + "," +
                format_double((*it)[1].get<double>()) + "," +
                std::to_string((*it)[2].get<int>());
  } else {
    throw ConfigError("config key 'lambda_grid' must be \"A,B,C\" or [A, B, C]");
  }
}

// ---------------------------------------------------------------------------
// Generator presets

enum class Preset { linear_gaussian, controlled, logit_diag };

Preset preset_from_name(const std::string& name) {
  if (name == "linear_gaussian" || name == "linear") return Preset::linear_gaussian;
  if (name == "controlled") return Preset::controlled;
  if (name == "logit_diag" || name == "logit") return Preset::logit_diag;
  throw ConfigError("unknown preset '" + name +
                    "' (expected linear_gaussian, controlled, or logit_diag)");
}

std::string preset_name(Preset p) {
  switch (p) {
    case Preset::linear_gaussian: return "linear_gaussian";
    case Preset::controlled: return "controlled";
    default: return "logit_diag";
  }
}

void preset_default_sizes(Preset p, int& n, int& m, int& n_test) {
  int dn = 50, dm = 2000, dt = 5000;
  if (p == Preset::controlled) dn = 100, dm = 20000, dt = 10000;
  if (p == Preset::logit_diag) dn = 50, dm = 3000, dt = 6000;
  if (n < 0) n = dn;
  if (m < 0) m = dm;
  if (n_test < 0) n_test = dt;
}

LinearGaussianConfig linear_cfg_from_json(const json& cfg) {
  LinearGaussianConfig c;
  get_if(cfg, "d_x", c.d_x);
  get_if(cfg, "d_w", c.d_w);
  get_if(cfg, "cross_corr", c.cross_corr);
  get_if(cfg, "sigma", c.sigma);
  get_if(cfg, "theta_scale", c.theta_scale);
  get_vec_if(cfg, "beta", c.beta);
  get_vec_if(cfg, "theta", c.theta);
  get_mat_if(cfg, "mix", c.mix);
  get_mat_if(cfg, "joint_cov", c.joint_cov);
  return c;
}

ControlledConfig controlled_cfg_from_json(const json& cfg) {
  ControlledConfig c;
  get_if(cfg, "d_x", c.d_x);
  get_if(cfg, "q", c.q);
  get_if(cfg, "d_noise", c.d_noise);
  get_if(cfg, "rho_xw", c.rho_xw);
  get_if(cfg, "alpha", c.alpha);
  get_if(cfg, "sigma", c.sigma);
  get_mat_if(cfg, "A", c.A);
  get_vec_if(cfg, "beta", c.beta);
  get_vec_if(cfg, "theta", c.theta);
  return c;
}

LogitDiagConfig logit_cfg_from_json(const json& cfg) {
  LogitDiagConfig c;
  get_if(cfg, "d_x", c.d_x);
  get_if(cfg, "d_w", c.d_w);
  get_if(cfg, "corr_strength", c.corr_strength);
  get_if(cfg, "x_scale", c.x_scale);
  get_if(cfg, "w_scale", c.w_scale);
  get_if(cfg, "logit_noise_sd", c.logit_noise_sd);
  get_if(cfg, "unlabeled_mean", c.unlabeled_mean);
  get_vec_if(cfg, "beta_x", c.beta_x);
  get_vec_if(cfg, "beta_w", c.beta_w);
  return c;
}

// Source selection shared by the generator-backed subcommands.
struct GenSource {
  std::string preset = "controlled";
  int n = -1, m = -1, n_test = -1;  // -1: use the preset default
  CLI::Option* preset_opt = nullptr;
  CLI::Option* n_opt = nullptr;
  CLI::Option* m_opt = nullptr;
  CLI::Option* n_test_opt = nullptr;
};

void add_gen_source(CLI::App* sc, GenSource& src) {
  src.preset_opt = sc->add_option("--preset", src.preset,
                                  "generator: linear_gaussian, controlled, logit_diag")
                       ->capture_default_str();
  src.n_opt = sc->add_option("--n", src.n, "labeled rows (preset default when omitted)");
  src.m_opt = sc->add_option("--m", src.m, "unlabeled rows (preset default when omitted)");
  src.n_test_opt = sc->add_option("--n-test", src.n_test, "test rows (preset default when omitted)");
}

void apply_source_config(GenSource& src, const json& cfg) {
  overlay(src.preset_opt, cfg, "preset", src.preset);
  overlay(src.n_opt, cfg, "n", src.n);
  overlay(src.m_opt, cfg, "m", src.m);
  overlay(src.n_test_opt, cfg, "n_test", src.n_test);
}

SyntheticData make_synthetic(const GenSource& src, const json& cfg, std::uint64_t seed) {
  Preset p = preset_from_name(src.preset);
  int n = src.n, m = src.m, n_test = src.n_test;
  preset_default_sizes(p, n, m, n_test);
  switch (p) {
    case Preset::linear_gaussian:
      return gen_linear_gaussian(linear_cfg_from_json(cfg), n, m, n_test, seed);
    case Preset::controlled:
      return gen_controlled(controlled_cfg_from_json(cfg), n, m, n_test, seed);
    default:
      return gen_logit_diag(logit_cfg_from_json(cfg), n, m, n_test, seed);
  }
}

TaskKind preset_kind(Preset p) {
  return p == Preset::logit_diag ? TaskKind::binary : TaskKind::regression;
}

MetricKind default_metric(TaskKind kind) {
  return kind == TaskKind::binary ? MetricKind::brier : MetricKind::mse;
}

// ---------------------------------------------------------------------------
// Methods and output plumbing

struct MethodSet {
  Trainer primary;  // the single lambda-dependent method
  std::vector<Trainer> references;
};

MethodSet build_methods(const std::vector<std::string>& names, TaskKind kind, double ridge_f,
                        double ridge_g) {
  MethodSet ms;
  bool have_primary = false;
  for (const auto& name : names) {
    if (name.empty()) throw ConfigError("empty method name in --method list");
    Trainer t = make_trainer(name, kind, ridge_f, ridge_g);
    if (t.uses_lambda) {
      if (have_primary) {
        throw ConfigError("method list may contain only one lambda-dependent method");
      }
      ms.primary = std::move(t);
      have_primary = true;
    } else {
      ms.references.push_back(std::move(t));
    }
  }
  if (!have_primary) {
    throw ConfigError("method list needs one lambda-dependent method (e.g. coupled)");
  }
  return ms;
}

std::vector<std::string> method_names(const MethodSet& ms) {
  std::vector<std::string> names{ms.primary.name};
  for (const auto& r : ms.references) names.push_back(r.name);
  return names;
}

void sort_rows(std::vector<SweepRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.method != b.method) return a.method < b.method;
    double la = a.lambda ? *a.lambda : -std::numeric_limits<double>::infinity();
    double lb = b.lambda ? *b.lambda : -std::numeric_limits<double>::infinity();
    if (la != lb) return la < lb;
    if (a.seed != b.seed) return a.seed < b.seed;
    if (a.tag != b.tag) return a.tag < b.tag;
    return a.metric < b.metric;
  });
}

fs::path ensure_out_dir(const std::string& out) {
  fs::path dir(out.empty() ? std::string(".") : out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  return dir;
}

void write_json_file(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_results_csv(const fs::path& dir, std::vector<SweepRow> rows) {
  sort_rows(rows);
  std::ofstream out(dir / "results.csv");
  if (!out) throw DataError("cannot write '" + (dir / "results.csv").string() + "'");
  write_rows_csv(out, rows);
}

json manifest_base(const std::string& command) {
  return json{{"command", command}, {"version", kVersion}};
}

json grid_json(const std::vector<double>& grid) {
  json arr = json::array();
  for (double v : grid) arr.push_back(v);
  return arr;
}

std::vector<std::uint64_t> seed_list(std::uint64_t seed, int num_seeds) {
  if (num_seeds < 1) throw ConfigError("--num-seeds must be >= 1");
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < num_seeds; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
  return seeds;
}

// ---------------------------------------------------------------------------
// gen-data

struct GenDataOpts {
  GenSource src;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  CLI::Option *seed_opt = nullptr, *out_opt = nullptr;
};

void handle_gen_data(GenDataOpts& o) {
  json cfg = load_config(o.config_path);
  apply_source_config(o.src, cfg);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.out_opt, cfg, "out", o.out);

  SyntheticData data = make_synthetic(o.src, cfg, o.seed);
  fs::path dir = ensure_out_dir(o.out);
  write_csv(data.train, (dir / "train.csv").string());
  write_csv(data.test, (dir / "test.csv").string());
  write_json_file(dir / "truth.json", data.truth.params);

  json man = manifest_base("gen-data");
  man["seed"] = o.seed;
  man["preset"] = preset_name(preset_from_name(o.src.preset));
  man["sizes"] = {{"n", data.train.n()}, {"m", data.train.m()}, {"n_test", data.test.n()}};
  man["generator"] = data.truth.params;
  man["outputs"] = {"train.csv", "test.csv", "truth.json"};
  man["design_decisions"] = {
      {"sub_seed_streams", "params=0 labeled=1 unlabeled=2 test=3, counter-mixed from the seed"},
      {"coefficient_defaults", "unit-sphere draws from the params stream when not supplied"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "wrote " << (dir / "train.csv").string() << " (" << data.train.n() << "+"
            << data.train.m() << " rows), test.csv (" << data.test.n() << " rows)\n";
}

// ---------------------------------------------------------------------------
// lambda-curve

struct LambdaCurveOpts {
  GenSource src;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  int num_seeds = 1;
  std::string grid_spec = "-4,4,25";
  std::string methods;
  std::string metric;
  double ridge_f = 1e-8, ridge_g = 1e-8;
  CLI::Option *seed_opt = nullptr, *num_seeds_opt = nullptr, *grid_opt = nullptr,
              *methods_opt = nullptr, *metric_opt = nullptr, *ridge_f_opt = nullptr,
              *ridge_g_opt = nullptr, *out_opt = nullptr;
};

void handle_lambda_curve(LambdaCurveOpts& o) {
  json cfg = load_config(o.config_path);
  apply_source_config(o.src, cfg);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.num_seeds_opt, cfg, "num_seeds", o.num_seeds);
  overlay_grid(o.grid_opt, cfg, o.grid_spec);
  overlay(o.methods_opt, cfg, "method", o.methods);
  overlay(o.metric_opt, cfg, "metric", o.metric);
  overlay(o.ridge_f_opt, cfg, "ridge_f", o.ridge_f);
  overlay(o.ridge_g_opt, cfg, "ridge_g", o.ridge_g);
  overlay(o.out_opt, cfg, "out", o.out);

  Preset p = preset_from_name(o.src.preset);
  TaskKind kind = preset_kind(p);
  std::vector<std::string> names =
      o.methods.empty() ? std::vector<std::string>{"coupled", "baseline", "two_stage"}
                        : split_list(o.methods);
  MethodSet ms = build_methods(names, kind, o.ridge_f, o.ridge_g);
  MetricKind metric = o.metric.empty() ? default_metric(kind) : metric_from_name(o.metric);
  std::vector<double> grid = parse_lambda_grid(o.grid_spec);
  auto seeds = seed_list(o.seed, o.num_seeds);

  SweepResult all;
  for (std::uint64_t s : seeds) {
    SyntheticData data = make_synthetic(o.src, cfg, s);
    Eigen::VectorXd mu;
    const Eigen::VectorXd* truth_override = nullptr;
    if (metric == MetricKind::est_err_vs_mu) {
      if (!data.truth.mu) {
        throw ConfigError("est_err_vs_mu needs a generator with a regression truth");
      }
      mu = data.truth.mu(data.test.x_labeled());
      truth_override = &mu;
    }
    all.append(lambda_sweep(data.train, data.test, grid, ms.primary, ms.references, metric,
                            truth_override, static_cast<long>(s)));
  }

  fs::path dir = ensure_out_dir(o.out);
  write_results_csv(dir, all.rows);
  json man = manifest_base("lambda-curve");
  man["preset"] = preset_name(p);
  man["sizes"] = {{"n", o.src.n}, {"m", o.src.m}, {"n_test", o.src.n_test}};
  man["seeds"] = seeds;
  man["lambda_grid"] = grid_json(grid);
  man["methods"] = method_names(ms);
  man["metric"] = metric_name(metric);
  man["ridge_f"] = o.ridge_f;
  man["ridge_g"] = o.ridge_g;
  man["outputs"] = {"results.csv"};
  man["design_decisions"] = {
      {"lambda_grid_spec", o.grid_spec},
      {"rows", "one row per (lambda, seed) for the primary method, one per seed for references"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "wrote " << (dir / "results.csv").string() << " (" << all.rows.size() << " rows)\n";
}

// ---------------------------------------------------------------------------
// synth-sweep

struct SynthSweepOpts {
  std::string which;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  int num_seeds = 10;
  int n = -1, m = -1, n_test = -1;
  std::string grid_spec = "-4,4,25";
  std::string methods;
  int folds = 5;
  double ridge_f = 1e-8, ridge_g = 1e-8;
  CLI::Option *seed_opt = nullptr, *num_seeds_opt = nullptr, *n_opt = nullptr, *m_opt = nullptr,
              *n_test_opt = nullptr, *grid_opt = nullptr, *methods_opt = nullptr,
              *folds_opt = nullptr, *ridge_f_opt = nullptr, *ridge_g_opt = nullptr,
              *out_opt = nullptr;
};

void handle_synth_sweep(SynthSweepOpts& o) {
  json cfg = load_config(o.config_path);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.num_seeds_opt, cfg, "num_seeds", o.num_seeds);
  overlay(o.n_opt, cfg, "n", o.n);
  overlay(o.m_opt, cfg, "m", o.m);
  overlay(o.n_test_opt, cfg, "n_test", o.n_test);
  overlay_grid(o.grid_opt, cfg, o.grid_spec);
  overlay(o.methods_opt, cfg, "method", o.methods);
  overlay(o.folds_opt, cfg, "folds", o.folds);
  overlay(o.ridge_f_opt, cfg, "ridge_f", o.ridge_f);
  overlay(o.ridge_g_opt, cfg, "ridge_g", o.ridge_g);
  overlay(o.out_opt, cfg, "out", o.out);

  if (o.which != "signal" && o.which != "wdim" && o.which != "unlabeled") {
    throw ConfigError("--which must be signal, wdim, or unlabeled");
  }
  int n = o.n >= 0 ? o.n : (o.which == "unlabeled" ? 40 : 100);
  int m = o.m >= 0 ? o.m : 20000;
  int n_test = o.n_test >= 0 ? o.n_test : 10000;

  // Swept knob per panel: privileged signal strength, nuisance dimension, or
  // unlabeled sample count. Defaults are overridable through the config file.
  std::vector<double> alpha_grid{0.0, 0.25, 0.5, 1.0, 2.0, 4.0};
  std::vector<double> d_noise_grid{0, 10, 20, 30, 40};
  std::vector<double> m_grid{100, 1000, 10000};
  get_if(cfg, "alpha_grid", alpha_grid);
  get_if(cfg, "d_noise_grid", d_noise_grid);
  get_if(cfg, "m_grid", m_grid);

  std::vector<std::string> names =
      o.methods.empty() ? std::vector<std::string>{"coupled", "baseline", "two_stage"}
                        : split_list(o.methods);
  MethodSet ms = build_methods(names, TaskKind::regression, o.ridge_f, o.ridge_g);
  std::vector<double> grid = parse_lambda_grid(o.grid_spec);
  auto seeds = seed_list(o.seed, o.num_seeds);
  ControlledConfig base = controlled_cfg_from_json(cfg);

  const std::vector<double>& knob_grid =
      o.which == "signal" ? alpha_grid : (o.which == "wdim" ? d_noise_grid : m_grid);
  std::vector<SweepRow> rows;
  for (double knob : knob_grid) {
    ControlledConfig c = base;
    int m_eff = m;
    std::string tag;
    if (o.which == "signal") {
      c.alpha = knob;
      tag = "alpha=" + format_double(knob);
    } else if (o.which == "wdim") {
      c.d_noise = static_cast<int>(knob);
      tag = "d_noise=" + std::to_string(c.d_noise);
    } else {
      m_eff = static_cast<int>(knob);
      tag = "m=" + std::to_string(m_eff);
    }
    for (std::uint64_t s : seeds) {
      SyntheticData data = gen_controlled(c, n, m_eff, n_test, s);
      Eigen::VectorXd mu = data.truth.mu(data.test.x_labeled());
      CvOptions cvo;
      cvo.folds = o.folds;
      cvo.seed = s;
      cvo.metric = MetricKind::mse;  // CV scores noisy labels; mu is unknown to selection
      CvReport rep = cv_select_lambda(data.train, grid, ms.primary, cvo);
      Eigen::VectorXd pred = ms.primary.run(data.train, rep.lambda_hat, data.test.x_labeled());
      rows.push_back({ms.primary.name, rep.lambda_hat, static_cast<long>(s), tag,
                      metric_name(MetricKind::est_err_vs_mu),
                      metric_value(MetricKind::est_err_vs_mu, pred, mu)});
      for (const auto& ref : ms.references) {
        Eigen::VectorXd rp = ref.run(data.train, 0.0, data.test.x_labeled());
        rows.push_back({ref.name, std::nullopt, static_cast<long>(s), tag,
                        metric_name(MetricKind::est_err_vs_mu),
                        metric_value(MetricKind::est_err_vs_mu, rp, mu)});
      }
    }
  }

  fs::path dir = ensure_out_dir(o.out);
  write_results_csv(dir, rows);
  json man = manifest_base("synth-sweep");
  man["which"] = o.which;
  man["sizes"] = {{"n", n}, {"m", m}, {"n_test", n_test}};
  man["knob_grid"] = knob_grid;
  man["seeds"] = seeds;
  man["lambda_grid"] = grid_json(grid);
  man["folds"] = o.folds;
  man["methods"] = method_names(ms);
  man["metric"] = metric_name(MetricKind::est_err_vs_mu);
  man["generator"] = {{"d_x", base.d_x},    {"q", base.q},         {"d_noise", base.d_noise},
                      {"rho_xw", base.rho_xw}, {"alpha", base.alpha}, {"sigma", base.sigma}};
  man["design_decisions"] = {
      {"alpha_grid", alpha_grid},
      {"d_noise_grid", d_noise_grid},
      {"m_grid", m_grid},
      {"cv", "labeled-only MSE selects lambda; the swept knob is recorded in the fold column"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "wrote " << (dir / "results.csv").string() << " (" << rows.size() << " rows)\n";
}

// ---------------------------------------------------------------------------
// afs-demo

struct AfsDemoOpts {
  GenSource src;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  double lambda = 1.0;
  int iters = 50;
  std::string dict = "rbf";
  int dict_size = 256;
  double rbf_gamma = 0.0;
  CLI::Option *seed_opt = nullptr, *lambda_opt = nullptr, *iters_opt = nullptr,
              *dict_opt = nullptr, *dict_size_opt = nullptr, *rbf_gamma_opt = nullptr,
              *out_opt = nullptr;
};

void handle_afs_demo(AfsDemoOpts& o) {
  json cfg = load_config(o.config_path);
  apply_source_config(o.src, cfg);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.lambda_opt, cfg, "lambda", o.lambda);
  overlay(o.iters_opt, cfg, "iters", o.iters);
  overlay(o.dict_opt, cfg, "dict", o.dict);
  overlay(o.dict_size_opt, cfg, "dict_size", o.dict_size);
  overlay(o.rbf_gamma_opt, cfg, "rbf_gamma", o.rbf_gamma);
  overlay(o.out_opt, cfg, "out", o.out);

  // Greedy selection scans every atom each iteration; default to a compact
  // sample instead of the full generator presets.
  if (o.src.n < 0) o.src.n = 100;
  if (o.src.m < 0) o.src.m = 400;
  if (o.src.n_test < 0) o.src.n_test = 2000;

  DictKind dict_kind = dict_kind_from_name(o.dict);
  if (dict_kind == DictKind::custom) {
    throw ConfigError("--dict must be raw, random_projection, or rbf");
  }
  SyntheticData data = make_synthetic(o.src, cfg, o.seed);

  DictionaryParams pf;
  pf.block = AtomBlock::f;
  pf.count = o.dict_size;
  pf.seed = o.seed;
  pf.rbf_gamma = o.rbf_gamma;
  DictionaryParams pg = pf;
  pg.block = AtomBlock::g;
  Dictionary dict_f = normalize_atoms(build_dictionary(dict_kind, pf, data.train));
  Dictionary dict_g = normalize_atoms(build_dictionary(dict_kind, pg, data.train));

  auto [model, trace] = run_afs(data.train, dict_f, dict_g, o.lambda, o.iters);

  fs::path dir = ensure_out_dir(o.out);
  {
    std::ofstream out(dir / "trace.csv");
    if (!out) throw DataError("cannot write trace.csv");
    out << "iter,alpha,beta,residual_norm,objective,scans,envelope_stat\n";
    for (std::size_t k = 0; k < trace.residual_norm.size(); ++k) {
      double rsq = trace.residual_norm[k] * trace.residual_norm[k];
      double it = static_cast<double>(k + 1);
      out << (k + 1) << ',' << format_double(trace.alpha[k]) << ',' << format_double(trace.beta[k])
          << ',' << format_double(trace.residual_norm[k]) << ','
          << format_double(trace.objective[k]) << ',' << trace.scans[k] << ','
          << format_double(rsq * it / std::log(it + 1.0)) << '\n';
    }
  }
  write_json_file(dir / "model.json", model.to_json());

  std::vector<SweepRow> rows;
  Eigen::VectorXd pred = model.predict_f(data.test.x_labeled());
  rows.push_back({"afs", o.lambda, static_cast<long>(o.seed), "test",
                  metric_name(MetricKind::mse),
                  metric_value(MetricKind::mse, pred, data.test.y_labeled())});
  Trainer baseline = make_trainer_baseline(1e-8);
  Eigen::VectorXd bp = baseline.run(data.train, 0.0, data.test.x_labeled());
  rows.push_back({baseline.name, std::nullopt, static_cast<long>(o.seed), "test",
                  metric_name(MetricKind::mse),
                  metric_value(MetricKind::mse, bp, data.test.y_labeled())});
  write_results_csv(dir, rows);

  json man = manifest_base("afs-demo");
  man["preset"] = preset_name(preset_from_name(o.src.preset));
  man["sizes"] = {{"n", data.train.n()}, {"m", data.train.m()}, {"n_test", data.test.n()}};
  man["seed"] = o.seed;
  man["lambda"] = o.lambda;
  man["max_iters"] = o.iters;
  man["dictionary"] = {{"kind", dict_kind_name(dict_kind)},
                       {"f_atoms", dict_f.size()},
                       {"g_atoms", dict_g.size()},
                       {"dropped_f", dict_f.dropped},
                       {"dropped_g", dict_g.dropped},
                       {"rbf_gamma", o.rbf_gamma > 0 ? json(o.rbf_gamma) : json("median heuristic")}};
  man["result"] = {{"iterations", model.iterations},
                   {"stop_reason", trace.stop_reason},
                   {"initial_residual_norm", trace.initial_residual_norm},
                   {"final_residual_norm",
                    trace.residual_norm.empty() ? trace.initial_residual_norm
                                                : trace.residual_norm.back()},
                   {"f_atoms_selected", model.f_atoms.size()},
                   {"g_atoms_selected", model.g_atoms.size()}};
  man["outputs"] = {"results.csv", "trace.csv", "model.json"};
  man["design_decisions"] = {
      {"envelope_stat", "residual_norm^2 * iter / log(iter + 1), tabulated per iteration"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "wrote " << (dir / "trace.csv").string() << " (" << trace.residual_norm.size()
            << " iterations, stop: " << trace.stop_reason << ")\n";
}

// ---------------------------------------------------------------------------
// cv-select and run-csv

struct CsvSource {
  std::string path;
  std::string x_cols, w_cols, label_col = "y", groups, task = "regression";
  CLI::Option *path_opt = nullptr, *x_opt = nullptr, *w_opt = nullptr, *label_opt = nullptr,
              *groups_opt = nullptr, *task_opt = nullptr;
};

void add_csv_source(CLI::App* sc, CsvSource& src, bool required) {
  src.path_opt = sc->add_option("--csv", src.path, "input CSV path");
  if (required) src.path_opt->required();
  src.x_opt = sc->add_option("--x-cols", src.x_cols, "deployment feature columns, comma separated");
  src.w_opt = sc->add_option("--w-cols", src.w_cols, "privileged feature columns, comma separated");
  src.label_opt = sc->add_option("--label-col", src.label_col, "label column (empty cell = unlabeled)")
                      ->capture_default_str();
  src.groups_opt = sc->add_option("--groups", src.groups, "group column for grouped CV folds");
  src.task_opt = sc->add_option("--task", src.task, "regression or binary")->capture_default_str();
}

void apply_csv_config(CsvSource& src, const json& cfg) {
  overlay(src.path_opt, cfg, "csv", src.path);
  overlay(src.x_opt, cfg, "x_cols", src.x_cols);
  overlay(src.w_opt, cfg, "w_cols", src.w_cols);
  overlay(src.label_opt, cfg, "label_col", src.label_col);
  overlay(src.groups_opt, cfg, "groups", src.groups);
  overlay(src.task_opt, cfg, "task", src.task);
}

LoadedCsv load_csv_source(const CsvSource& src) {
  if (src.x_cols.empty()) throw ConfigError("--x-cols is required for CSV input");
  if (src.w_cols.empty()) throw ConfigError("--w-cols is required for CSV input");
  ColumnSpec spec;
  spec.deployment_cols = split_list(src.x_cols);
  spec.privileged_cols = split_list(src.w_cols);
  spec.label_col = src.label_col;
  spec.kind = task_kind_from_name(src.task);
  spec.group_col = src.groups;
  return load_csv(src.path, spec);
}

struct CvSelectOpts {
  GenSource gen;
  CsvSource csv;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  std::string method = "coupled";
  std::string grid_spec = "-4,4,25";
  int folds = 5;
  std::string metric;
  bool stratify = false;
  double ridge_f = 1e-8, ridge_g = 1e-8;
  CLI::Option *seed_opt = nullptr, *method_opt = nullptr, *grid_opt = nullptr,
              *folds_opt = nullptr, *metric_opt = nullptr, *stratify_opt = nullptr,
              *ridge_f_opt = nullptr, *ridge_g_opt = nullptr, *out_opt = nullptr;
};

void handle_cv_select(CvSelectOpts& o) {
  json cfg = load_config(o.config_path);
  apply_source_config(o.gen, cfg);
  apply_csv_config(o.csv, cfg);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.method_opt, cfg, "method", o.method);
  overlay_grid(o.grid_opt, cfg, o.grid_spec);
  overlay(o.folds_opt, cfg, "folds", o.folds);
  overlay(o.metric_opt, cfg, "metric", o.metric);
  overlay(o.stratify_opt, cfg, "stratify", o.stratify);
  overlay(o.ridge_f_opt, cfg, "ridge_f", o.ridge_f);
  overlay(o.ridge_g_opt, cfg, "ridge_g", o.ridge_g);
  overlay(o.out_opt, cfg, "out", o.out);

  const bool from_csv = !o.csv.path.empty();
  json source;
  std::vector<std::string> groups;
  std::optional<Dataset> ds;
  if (from_csv) {
    LoadedCsv lc = load_csv_source(o.csv);
    ds.emplace(std::move(lc.dataset));
    groups = std::move(lc.groups);
    source = {{"csv", o.csv.path}, {"x_cols", o.csv.x_cols}, {"w_cols", o.csv.w_cols},
              {"label_col", o.csv.label_col}, {"task", o.csv.task}};
    if (!o.csv.groups.empty()) source["groups"] = o.csv.groups;
  } else {
    SyntheticData data = make_synthetic(o.gen, cfg, o.seed);
    ds.emplace(std::move(data.train));
    source = {{"preset", preset_name(preset_from_name(o.gen.preset))},
              {"n", ds->n()},
              {"m", ds->m()},
              {"seed", o.seed}};
  }

  TaskKind kind = ds->kind();
  Trainer primary = make_trainer(o.method, kind, o.ridge_f, o.ridge_g);
  if (!primary.uses_lambda) {
    throw ConfigError("cv-select needs a lambda-dependent method, got '" + o.method + "'");
  }
  MetricKind metric = o.metric.empty() ? default_metric(kind) : metric_from_name(o.metric);
  std::vector<double> grid = parse_lambda_grid(o.grid_spec);

  CvOptions cvo;
  cvo.folds = o.folds;
  cvo.seed = o.seed;
  cvo.metric = metric;
  cvo.groups = groups;
  cvo.stratify = o.stratify;
  CvReport rep = cv_select_lambda(*ds, grid, primary, cvo);

  fs::path dir = ensure_out_dir(o.out);
  write_results_csv(dir, cv_report_rows(rep, primary.name, metric, static_cast<long>(o.seed)));
  json man = manifest_base("cv-select");
  man["source"] = source;
  man["method"] = primary.name;
  man["metric"] = metric_name(metric);
  man["folds"] = o.folds;
  man["seed"] = o.seed;
  man["stratify"] = o.stratify;
  man["lambda_grid"] = grid_json(grid);
  man["ridge_f"] = o.ridge_f;
  man["ridge_g"] = o.ridge_g;
  man["lambda_hat"] = rep.lambda_hat;
  man["lambda_hat_index"] = rep.lambda_hat_index;
  man["tie"] = rep.tie;
  man["outputs"] = {"results.csv"};
  man["design_decisions"] = {
      {"tie_break", "ties pick the smallest lambda"},
      {"cv", "labeled-only scoring; every fold trains with all unlabeled rows"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "lambda_hat = " << format_double(rep.lambda_hat) << (rep.tie ? " (tie)" : "")
            << "\n";
}

struct RunCsvOpts {
  CsvSource csv;
  std::string config_path, out = ".";
  std::uint64_t seed = 0;
  std::string methods;
  std::string grid_spec = "-4,4,25";
  int folds = 5;
  std::string metric;
  bool stratify = false;
  double ridge_f = 1e-8, ridge_g = 1e-8;
  CLI::Option *seed_opt = nullptr, *methods_opt = nullptr, *grid_opt = nullptr,
              *folds_opt = nullptr, *metric_opt = nullptr, *stratify_opt = nullptr,
              *ridge_f_opt = nullptr, *ridge_g_opt = nullptr, *out_opt = nullptr;
};

std::vector<SweepRow> reference_cv_rows(const Dataset& ds,
                                        const std::vector<std::vector<int>>& folds,
                                        const Trainer& ref, MetricKind metric, long seed) {
  std::vector<SweepRow> rows;
  double sum = 0.0;
  for (std::size_t k = 0; k < folds.size(); ++k) {
    std::vector<bool> held(ds.n(), false);
    for (int i : folds[k]) held[i] = true;
    std::vector<int> keep;
    for (int i = 0; i < ds.n(); ++i) {
      if (!held[i]) keep.push_back(i);
    }
    Dataset sub = ds.labeled_subset(keep);
    Eigen::MatrixXd x_val(folds[k].size(), ds.dim_x());
    Eigen::VectorXd y_val(folds[k].size());
    for (std::size_t j = 0; j < folds[k].size(); ++j) {
      x_val.row(static_cast<int>(j)) = ds.x_labeled().row(folds[k][j]);
      y_val[static_cast<int>(j)] = ds.y_labeled()[folds[k][j]];
    }
    double value = metric_value(metric, ref.run(sub, 0.0, x_val), y_val);
    rows.push_back({ref.name, std::nullopt, seed, "fold" + std::to_string(k),
                    metric_name(metric), value});
    sum += value;
  }
  rows.push_back({ref.name, std::nullopt, seed, "mean", metric_name(metric),
                  sum / static_cast<double>(folds.size())});
  return rows;
}

void handle_run_csv(RunCsvOpts& o) {
  json cfg = load_config(o.config_path);
  apply_csv_config(o.csv, cfg);
  overlay(o.seed_opt, cfg, "seed", o.seed);
  overlay(o.methods_opt, cfg, "method", o.methods);
  overlay_grid(o.grid_opt, cfg, o.grid_spec);
  overlay(o.folds_opt, cfg, "folds", o.folds);
  overlay(o.metric_opt, cfg, "metric", o.metric);
  overlay(o.stratify_opt, cfg, "stratify", o.stratify);
  overlay(o.ridge_f_opt, cfg, "ridge_f", o.ridge_f);
  overlay(o.ridge_g_opt, cfg, "ridge_g", o.ridge_g);
  overlay(o.out_opt, cfg, "out", o.out);

  LoadedCsv lc = load_csv_source(o.csv);
  const Dataset& ds = lc.dataset;
  TaskKind kind = ds.kind();
  MetricKind metric = o.metric.empty() ? default_metric(kind) : metric_from_name(o.metric);
  if (metric == MetricKind::est_err_vs_mu) {
    throw ConfigError("est_err_vs_mu needs a synthetic truth; CSV data has none");
  }
  std::vector<std::string> names =
      o.methods.empty() ? std::vector<std::string>{"coupled", "baseline", "two_stage"}
                        : split_list(o.methods);
  MethodSet ms = build_methods(names, kind, o.ridge_f, o.ridge_g);
  std::vector<double> grid = parse_lambda_grid(o.grid_spec);

  CvOptions cvo;
  cvo.folds = o.folds;
  cvo.seed = o.seed;
  cvo.metric = metric;
  cvo.groups = lc.groups;
  cvo.stratify = o.stratify;
  CvReport rep = cv_select_lambda(ds, grid, ms.primary, cvo);

  std::vector<SweepRow> rows =
      cv_report_rows(rep, ms.primary.name, metric, static_cast<long>(o.seed));
  std::vector<std::vector<int>> folds = make_folds(ds.n(), ds.y_labeled(), cvo, kind);
  for (const auto& ref : ms.references) {
    auto ref_rows = reference_cv_rows(ds, folds, ref, metric, static_cast<long>(o.seed));
    rows.insert(rows.end(), ref_rows.begin(), ref_rows.end());
  }

  // Final fit on the full dataset at the selected lambda.
  json fitted;
  if (kind == TaskKind::regression) {
    CoupledLinearModel model = solve_coupled_linear(ds, rep.lambda_hat, o.ridge_f, o.ridge_g);
    fitted = {{"method", ms.primary.name},
              {"lambda", rep.lambda_hat},
              {"beta", std::vector<double>(model.beta.data(), model.beta.data() + model.beta.size())},
              {"gamma",
               std::vector<double>(model.gamma.data(), model.gamma.data() + model.gamma.size())},
              {"degenerate", model.degenerate},
              {"objective", model.objective},
              {"coefficient_order", "intercept first, then x columns (gamma: x then w)"}};
  } else {
    LogisticCoupledFit fit = run_coupled_logistic(ds, rep.lambda_hat);
    fitted = {{"method", ms.primary.name},
              {"lambda", rep.lambda_hat},
              {"beta", std::vector<double>(fit.beta.data(), fit.beta.data() + fit.beta.size())},
              {"gamma", std::vector<double>(fit.gamma.data(), fit.gamma.data() + fit.gamma.size())},
              {"coefficient_order", "intercept first, then x columns (gamma: x then w)"}};
  }

  fs::path dir = ensure_out_dir(o.out);
  write_results_csv(dir, rows);
  write_json_file(dir / "model.json", fitted);
  json man = manifest_base("run-csv");
  man["source"] = {{"csv", o.csv.path},       {"x_cols", o.csv.x_cols},
                   {"w_cols", o.csv.w_cols},  {"label_col", o.csv.label_col},
                   {"task", o.csv.task},      {"n", ds.n()},
                   {"m", ds.m()}};
  if (!o.csv.groups.empty()) man["source"]["groups"] = o.csv.groups;
  man["methods"] = method_names(ms);
  man["metric"] = metric_name(metric);
  man["folds"] = o.folds;
  man["seed"] = o.seed;
  man["stratify"] = o.stratify;
  man["lambda_grid"] = grid_json(grid);
  man["ridge_f"] = o.ridge_f;
  man["ridge_g"] = o.ridge_g;
  man["lambda_hat"] = rep.lambda_hat;
  man["lambda_hat_index"] = rep.lambda_hat_index;
  man["tie"] = rep.tie;
  man["outputs"] = {"results.csv", "model.json"};
  man["design_decisions"] = {
      {"tie_break", "ties pick the smallest lambda"},
      {"cv", "labeled-only scoring; every fold trains with all unlabeled rows"},
      {"reference_methods", "scored on the same folds with the same metric"},
  };
  write_json_file(dir / "manifest.json", man);
  std::cout << "lambda_hat = " << format_double(rep.lambda_hat) << (rep.tie ? " (tie)" : "")
            << ", wrote " << (dir / "results.csv").string() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"coupled training toolkit: synthetic generators, lambda sweeps, CV selection"};
  app.require_subcommand(1);

  GenDataOpts gen_opts;
  auto* sc_gen = app.add_subcommand("gen-data", "generate a synthetic dataset as CSV + truth JSON");
  add_gen_source(sc_gen, gen_opts.src);
  gen_opts.seed_opt = sc_gen->add_option("--seed", gen_opts.seed, "generator seed")
                          ->capture_default_str();
  gen_opts.out_opt = sc_gen->add_option("--out", gen_opts.out, "output directory")
                         ->capture_default_str();
  sc_gen->add_option("--config", gen_opts.config_path, "JSON config file (flags override)");

  LambdaCurveOpts curve_opts;
  auto* sc_curve =
      app.add_subcommand("lambda-curve", "test metric of every method across a lambda grid");
  add_gen_source(sc_curve, curve_opts.src);
  curve_opts.seed_opt =
      sc_curve->add_option("--seed", curve_opts.seed, "base seed")->capture_default_str();
  curve_opts.num_seeds_opt =
      sc_curve->add_option("--num-seeds", curve_opts.num_seeds, "consecutive seeds to run")
          ->capture_default_str();
  curve_opts.grid_opt = sc_curve
                            ->add_option("--lambda-grid", curve_opts.grid_spec,
                                         "log grid START_EXP,END_EXP,COUNT")
                            ->capture_default_str();
  curve_opts.methods_opt =
      sc_curve->add_option("--method", curve_opts.methods, "comma list (default coupled,baseline,two_stage)");
  curve_opts.metric_opt =
      sc_curve->add_option("--metric", curve_opts.metric,
                           "mse, est_err_vs_mu, brier, zero_one, auroc (default by task)");
  curve_opts.ridge_f_opt =
      sc_curve->add_option("--ridge-f", curve_opts.ridge_f, "ridge on the deployment model")
          ->capture_default_str();
  curve_opts.ridge_g_opt =
      sc_curve->add_option("--ridge-g", curve_opts.ridge_g, "ridge on the rich-view model")
          ->capture_default_str();
  curve_opts.out_opt =
      sc_curve->add_option("--out", curve_opts.out, "output directory")->capture_default_str();
  sc_curve->add_option("--config", curve_opts.config_path, "JSON config file (flags override)");

  SynthSweepOpts sweep_opts;
  auto* sc_sweep = app.add_subcommand(
      "synth-sweep", "estimation-error sweeps on the controlled generator (signal, wdim, unlabeled)");
  sc_sweep->add_option("--which", sweep_opts.which, "signal, wdim, or unlabeled")->required();
  sweep_opts.seed_opt =
      sc_sweep->add_option("--seed", sweep_opts.seed, "base seed")->capture_default_str();
  sweep_opts.num_seeds_opt =
      sc_sweep->add_option("--num-seeds", sweep_opts.num_seeds, "consecutive seeds to run")
          ->capture_default_str();
  sweep_opts.n_opt = sc_sweep->add_option("--n", sweep_opts.n, "labeled rows");
  sweep_opts.m_opt = sc_sweep->add_option("--m", sweep_opts.m, "unlabeled rows");
  sweep_opts.n_test_opt = sc_sweep->add_option("--n-test", sweep_opts.n_test, "test rows");
  sweep_opts.grid_opt = sc_sweep
                            ->add_option("--lambda-grid", sweep_opts.grid_spec,
                                         "log grid START_EXP,END_EXP,COUNT for CV selection")
                            ->capture_default_str();
  sweep_opts.methods_opt = sc_sweep->add_option("--method", sweep_opts.methods, "comma list");
  sweep_opts.folds_opt =
      sc_sweep->add_option("--folds", sweep_opts.folds, "CV folds")->capture_default_str();
  sweep_opts.ridge_f_opt = sc_sweep->add_option("--ridge-f", sweep_opts.ridge_f, "ridge on f")
                               ->capture_default_str();
  sweep_opts.ridge_g_opt = sc_sweep->add_option("--ridge-g", sweep_opts.ridge_g, "ridge on g")
                               ->capture_default_str();
  sweep_opts.out_opt =
      sc_sweep->add_option("--out", sweep_opts.out, "output directory")->capture_default_str();
  sc_sweep->add_option("--config", sweep_opts.config_path, "JSON config file (flags override)");

  AfsDemoOpts afs_opts;
  auto* sc_afs = app.add_subcommand("afs-demo",
                                    "greedy atom selection on a synthetic instance, with trace");
  add_gen_source(sc_afs, afs_opts.src);
  afs_opts.seed_opt =
      sc_afs->add_option("--seed", afs_opts.seed, "generator seed")->capture_default_str();
  afs_opts.lambda_opt =
      sc_afs->add_option("--lambda", afs_opts.lambda, "coupling weight")->capture_default_str();
  afs_opts.iters_opt =
      sc_afs->add_option("--iters", afs_opts.iters, "max iterations")->capture_default_str();
  afs_opts.dict_opt = sc_afs->add_option("--dict", afs_opts.dict, "raw, random_projection, or rbf")
                          ->capture_default_str();
  afs_opts.dict_size_opt =
      sc_afs->add_option("--dict-size", afs_opts.dict_size, "atoms per dictionary (random_projection)")
          ->capture_default_str();
  afs_opts.rbf_gamma_opt = sc_afs->add_option("--rbf-gamma", afs_opts.rbf_gamma,
                                              "rbf bandwidth (<= 0: median heuristic)")
                               ->capture_default_str();
  afs_opts.out_opt =
      sc_afs->add_option("--out", afs_opts.out, "output directory")->capture_default_str();
  sc_afs->add_option("--config", afs_opts.config_path, "JSON config file (flags override)");

  CvSelectOpts cv_opts;
  auto* sc_cv = app.add_subcommand("cv-select",
                                   "select lambda by labeled-only cross validation");
  add_gen_source(sc_cv, cv_opts.gen);
  add_csv_source(sc_cv, cv_opts.csv, false);
  cv_opts.seed_opt =
      sc_cv->add_option("--seed", cv_opts.seed, "seed (generator and fold shuffle)")
          ->capture_default_str();
  cv_opts.method_opt =
      sc_cv->add_option("--method", cv_opts.method, "lambda-dependent method")->capture_default_str();
  cv_opts.grid_opt = sc_cv
                         ->add_option("--lambda-grid", cv_opts.grid_spec,
                                      "log grid START_EXP,END_EXP,COUNT")
                         ->capture_default_str();
  cv_opts.folds_opt = sc_cv->add_option("--folds", cv_opts.folds, "CV folds")->capture_default_str();
  cv_opts.metric_opt = sc_cv->add_option("--metric", cv_opts.metric, "CV metric (default by task)");
  cv_opts.stratify_opt = sc_cv->add_flag("--stratify", cv_opts.stratify,
                                         "stratified folds (binary tasks)");
  cv_opts.ridge_f_opt =
      sc_cv->add_option("--ridge-f", cv_opts.ridge_f, "ridge on f")->capture_default_str();
  cv_opts.ridge_g_opt =
      sc_cv->add_option("--ridge-g", cv_opts.ridge_g, "ridge on g")->capture_default_str();
  cv_opts.out_opt =
      sc_cv->add_option("--out", cv_opts.out, "output directory")->capture_default_str();
  sc_cv->add_option("--config", cv_opts.config_path, "JSON config file (flags override)");

  RunCsvOpts run_opts;
  auto* sc_run = app.add_subcommand("run-csv", "cross-validated comparison on a CSV dataset");
  add_csv_source(sc_run, run_opts.csv, true);
  run_opts.seed_opt =
      sc_run->add_option("--seed", run_opts.seed, "fold shuffle seed")->capture_default_str();
  run_opts.methods_opt = sc_run->add_option("--method", run_opts.methods,
                                            "comma list (default coupled,baseline,two_stage)");
  run_opts.grid_opt = sc_run
                          ->add_option("--lambda-grid", run_opts.grid_spec,
                                       "log grid START_EXP,END_EXP,COUNT")
                          ->capture_default_str();
  run_opts.folds_opt =
      sc_run->add_option("--folds", run_opts.folds, "CV folds")->capture_default_str();
  run_opts.metric_opt = sc_run->add_option("--metric", run_opts.metric, "CV metric (default by task)");
  run_opts.stratify_opt = sc_run->add_flag("--stratify", run_opts.stratify,
                                           "stratified folds (binary tasks)");
  run_opts.ridge_f_opt =
      sc_run->add_option("--ridge-f", run_opts.ridge_f, "ridge on f")->capture_default_str();
  run_opts.ridge_g_opt =
      sc_run->add_option("--ridge-g", run_opts.ridge_g, "ridge on g")->capture_default_str();
  run_opts.out_opt =
      sc_run->add_option("--out", run_opts.out, "output directory")->capture_default_str();
  sc_run->add_option("--config", run_opts.config_path, "JSON config file (flags override)");

  try {
    std::vector<std::string> rev(args.rbegin(), args.rend());
    app.parse(rev);
    if (*sc_gen) handle_gen_data(gen_opts);
    if (*sc_curve) handle_lambda_curve(curve_opts);
    if (*sc_sweep) handle_synth_sweep(sweep_opts);
    if (*sc_afs) handle_afs_demo(afs_opts);
    if (*sc_cv) handle_cv_select(cv_opts);
    if (*sc_run) handle_run_csv(run_opts);
    return 0;
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace coupled::cli
