#include "coupled/eval_cv.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "coupled/coupled_loop.hpp"
#include "coupled/errors.hpp"
#include "coupled/linear_coupled.hpp"
#include "coupled/rng.hpp"
#include "coupled/text.hpp"

namespace coupled {

std::string metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::mse: return "mse";
    case MetricKind::est_err_vs_mu: return "est_err_vs_mu";
    case MetricKind::brier: return "brier";
    case MetricKind::zero_one: return "zero_one";
    case MetricKind::auroc: return "auroc";
  }
  return "mse";
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "mse") return MetricKind::mse;
  if (name == "est_err_vs_mu") return MetricKind::est_err_vs_mu;
  if (name == "brier") return MetricKind::brier;
  if (name == "zero_one") return MetricKind::zero_one;
  if (name == "auroc") return MetricKind::auroc;
  throw ConfigError("unknown metric '" + name + "'");
}

double metric_value(MetricKind kind, const Eigen::VectorXd& predictions,
                    const Eigen::VectorXd& truth) {
  if (predictions.size() != truth.size()) throw ConfigError("metric: size mismatch");
  if (predictions.size() == 0) throw ConfigError("metric: empty input");
  const int k = static_cast<int>(predictions.size());
  switch (kind) {
    case MetricKind::mse:
    case MetricKind::est_err_vs_mu:
      return (predictions - truth).squaredNorm() / k;
    case MetricKind::brier: {
      double total = 0.0;
      for (int i = 0; i < k; ++i) {
        double p = std::min(1.0 - 1e-6, std::max(1e-6, predictions[i]));
        total += (p - truth[i]) * (p - truth[i]);
      }
      return total / k;
    }
    case MetricKind::zero_one: {
      double wrong = 0.0;
      for (int i = 0; i < k; ++i) {
        double cls = predictions[i] >= 0.5 ? 1.0 : 0.0;
        if (cls != truth[i]) wrong += 1.0;
      }
      return wrong / k;
    }
    case MetricKind::auroc: {
      int pos = 0;
      for (int i = 0; i < k; ++i) {
        if (truth[i] == 1.0) ++pos;
      }
      int neg = k - pos;
      if (pos == 0 || neg == 0) throw DataError("auroc needs both classes present");
      // Midrank construction.
      std::vector<int> order(k);
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(),
                [&](int a, int b) { return predictions[a] < predictions[b]; });
      std::vector<double> rank(k);
      int i = 0;
      while (i < k) {
        int j = i;
        while (j + 1 < k && predictions[order[j + 1]] == predictions[order[i]]) ++j;
        double mid = 0.5 * (i + j) + 1.0;  // average of 1-based ranks i+1..j+1
        for (int t = i; t <= j; ++t) rank[order[t]] = mid;
        i = j + 1;
      }
      double pos_rank_sum = 0.0;
      for (int t = 0; t < k; ++t) {
        if (truth[t] == 1.0) pos_rank_sum += rank[t];
      }
      return (pos_rank_sum - 0.5 * pos * (pos + 1.0)) / (static_cast<double>(pos) * neg);
    }
  }
  throw ConfigError("bad metric kind");
}

// ---------------------------------------------------------------------------
// Trainers

Trainer make_trainer_coupled_linear(double ridge_f, double ridge_g) {
  Trainer t;
  t.name = "coupled";
  t.run = [ridge_f, ridge_g](const Dataset& train, double lambda, const Eigen::MatrixXd& x_eval) {
    return solve_coupled_linear(train, lambda, ridge_f, ridge_g).predict_f(x_eval);
  };
  return t;
}

Trainer make_trainer_baseline(double alpha) {
  Trainer t;
  t.name = "baseline";
  t.uses_lambda = false;
  t.run = [alpha](const Dataset& train, double, const Eigen::MatrixXd& x_eval) {
    Eigen::VectorXd coef = fit_ridge(with_intercept(train.x_labeled()), train.y_labeled(),
                                     Eigen::VectorXd::Ones(train.n()), alpha);
    return predict_affine(coef, x_eval);
  };
  return t;
}

Trainer make_trainer_two_stage(double alpha_teacher, double alpha_student) {
  Trainer t;
  t.name = "two_stage";
  t.uses_lambda = false;
  t.run = [alpha_teacher, alpha_student](const Dataset& train, double,
                                         const Eigen::MatrixXd& x_eval) {
    return solve_two_stage(train, alpha_teacher, alpha_student).predict_f(x_eval);
  };
  return t;
}

Trainer make_trainer_gen_distill_xw(double alpha_teacher, double alpha_student) {
  Trainer t;
  t.name = "gen_distill";
  t.uses_lambda = false;
  t.run = [alpha_teacher, alpha_student](const Dataset& train, double,
                                         const Eigen::MatrixXd& x_eval) {
    GenDistillConfig cfg;
    cfg.view = TeacherView::xw;
    cfg.alpha_teacher = alpha_teacher;
    cfg.alpha_student = alpha_student;
    return solve_gen_distill(train, cfg).predict_f(x_eval);
  };
  return t;
}

Trainer make_trainer_coupled_logistic() {
  Trainer t;
  t.name = "coupled_logistic";
  t.run = [](const Dataset& train, double lambda, const Eigen::MatrixXd& x_eval) {
    LogisticCoupledFit fit = run_coupled_logistic(train, lambda, LogisticCoupledConfig{});
    return fit.predict_f(x_eval);
  };
  return t;
}

Trainer make_trainer_logistic_baseline() {
  Trainer t;
  t.name = "baseline_logistic";
  t.uses_lambda = false;
  t.run = [](const Dataset& train, double, const Eigen::MatrixXd& x_eval) {
    Eigen::VectorXd coef = fit_logistic_baseline(train);
    return sigmoid(with_intercept(x_eval) * coef);
  };
  return t;
}

Trainer make_trainer_logistic_two_stage() {
  Trainer t;
  t.name = "two_stage_logistic";
  t.uses_lambda = false;
  t.run = [](const Dataset& train, double, const Eigen::MatrixXd& x_eval) {
    LogisticTwoStageModel model = fit_logistic_two_stage(train);
    return sigmoid(with_intercept(x_eval) * model.student);
  };
  return t;
}

Trainer make_trainer(const std::string& method, TaskKind kind, double ridge_f, double ridge_g) {
  if (kind == TaskKind::regression) {
    if (method == "coupled") return make_trainer_coupled_linear(ridge_f, ridge_g);
    if (method == "baseline") return make_trainer_baseline(ridge_f);
    if (method == "two_stage") return make_trainer_two_stage(ridge_g, ridge_f);
    if (method == "gen_distill") return make_trainer_gen_distill_xw(ridge_g, ridge_f);
  } else {
    if (method == "coupled") return make_trainer_coupled_logistic();
    if (method == "baseline") return make_trainer_logistic_baseline();
    if (method == "two_stage") return make_trainer_logistic_two_stage();
  }
  throw ConfigError("unknown method '" + method + "' for " + task_kind_name(kind) + " tasks");
}

// ---------------------------------------------------------------------------
// Folds

std::vector<std::vector<int>> make_folds(int n, const Eigen::VectorXd& y, const CvOptions& opts,
                                         TaskKind kind) {
  if (opts.folds < 2) throw ConfigError("folds must be >= 2");
  if (opts.folds > n) throw ConfigError("folds exceed the labeled row count");
  if (!opts.groups.empty() && opts.stratify) throw ConfigError("groups and stratify are exclusive");
  std::vector<std::vector<int>> folds(opts.folds);
  Rng rng(derive_seed(opts.seed, 37));

  if (!opts.groups.empty()) {
    if (static_cast<int>(opts.groups.size()) != n) throw ConfigError("one group key per labeled row required");
    // Unique keys, lexicographic, shuffled by seed, dealt round robin; a row
    // lands in its group's fold.
    std::map<std::string, std::vector<int>> by_group;
    for (int i = 0; i < n; ++i) by_group[opts.groups[i]].push_back(i);
    if (static_cast<int>(by_group.size()) < opts.folds) {
      throw ConfigError("fewer groups than folds");
    }
    std::vector<const std::vector<int>*> groups;
    for (const auto& [key, rows] : by_group) groups.push_back(&rows);
    std::vector<int> order = rng.permutation(static_cast<int>(groups.size()));
    for (std::size_t g = 0; g < order.size(); ++g) {
      for (int row : *groups[order[g]]) folds[g % opts.folds].push_back(row);
    }
  } else if (opts.stratify) {
    if (kind != TaskKind::binary) throw ConfigError("stratified folds require a binary task");
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<int> rows;
      for (int i = 0; i < n; ++i) {
        if ((y[i] == 1.0) == (cls == 1)) rows.push_back(i);
      }
      std::vector<int> order = rng.permutation(static_cast<int>(rows.size()));
      for (std::size_t j = 0; j < order.size(); ++j) {
        folds[j % opts.folds].push_back(rows[order[j]]);
      }
    }
  } else {
    std::vector<int> order = rng.permutation(n);
    for (int j = 0; j < n; ++j) folds[j % opts.folds].push_back(order[j]);
  }
  for (auto& fold : folds) {
    std::sort(fold.begin(), fold.end());
    if (fold.empty()) throw ConfigError("empty fold (too many folds for the data layout)");
  }
  return folds;
}

CvReport cv_select_lambda(const Dataset& ds, const std::vector<double>& grid,
                          const Trainer& trainer, const CvOptions& opts) {
  if (grid.empty()) throw ConfigError("empty lambda grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("lambda grid must be strictly increasing");
  }
  if (opts.metric == MetricKind::est_err_vs_mu) {
    throw ConfigError("est_err_vs_mu is not a validation metric (no mu on held-out rows)");
  }
  std::vector<std::vector<int>> folds = make_folds(ds.n(), ds.y_labeled(), opts, ds.kind());

  CvReport report;
  report.lambdas = grid;
  report.fold_metric.resize(opts.folds, grid.size());

  std::vector<bool> in_fold(ds.n());
  for (int f = 0; f < opts.folds; ++f) {
    std::fill(in_fold.begin(), in_fold.end(), false);
    for (int i : folds[f]) in_fold[i] = true;
    std::vector<int> train_rows;
    for (int i = 0; i < ds.n(); ++i) {
      if (!in_fold[i]) train_rows.push_back(i);
    }
    Dataset train = ds.labeled_subset(train_rows);  // keeps all unlabeled rows
    Eigen::MatrixXd x_val(folds[f].size(), ds.dim_x());
    Eigen::VectorXd y_val(folds[f].size());
    for (std::size_t i = 0; i < folds[f].size(); ++i) {
      x_val.row(i) = ds.x_labeled().row(folds[f][i]);
      y_val[i] = ds.y_labeled()[folds[f][i]];
    }
    for (std::size_t li = 0; li < grid.size(); ++li) {
      Eigen::VectorXd pred = trainer.run(train, grid[li], x_val);
      report.fold_metric(f, li) = metric_value(opts.metric, pred, y_val);
    }
  }
  report.fold_mean = report.fold_metric.colwise().mean();

  // Smallest lambda wins ties (ties compared exactly).
  report.lambda_hat_index = 0;
  for (std::size_t li = 1; li < grid.size(); ++li) {
    if (report.fold_mean[li] < report.fold_mean[report.lambda_hat_index]) {
      report.lambda_hat_index = static_cast<int>(li);
    }
  }
  for (std::size_t li = 0; li < grid.size(); ++li) {
    if (static_cast<int>(li) != report.lambda_hat_index &&
        report.fold_mean[li] == report.fold_mean[report.lambda_hat_index]) {
      report.tie = true;
    }
  }
  report.lambda_hat = grid[report.lambda_hat_index];
  return report;
}

// ---------------------------------------------------------------------------
// Sweeps and serialization

void SweepResult::append(const SweepResult& other) {
  rows.insert(rows.end(), other.rows.begin(), other.rows.end());
}

void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "method,lambda,seed,fold,metric,value\n";
  for (const auto& r : rows) {
    if (!std::isfinite(r.value)) throw ConfigError("refusing to serialize a non-finite metric value");
    out << r.method << ',';
    if (r.lambda) out << format_double(*r.lambda);
    out << ',' << r.seed << ',' << r.tag << ',' << r.metric << ',' << format_double(r.value)
        << '\n';
  }
}

std::vector<SweepRow> cv_report_rows(const CvReport& report, const std::string& method,
                                     MetricKind metric, long seed) {
  std::vector<SweepRow> rows;
  for (std::size_t li = 0; li < report.lambdas.size(); ++li) {
    for (int f = 0; f < report.fold_metric.rows(); ++f) {
      rows.push_back({method, report.lambdas[li], seed, "fold" + std::to_string(f),
                      metric_name(metric), report.fold_metric(f, li)});
    }
    rows.push_back({method, report.lambdas[li], seed, "mean", metric_name(metric),
                    report.fold_mean[li]});
  }
  return rows;
}

SweepResult lambda_sweep(const Dataset& train, const Dataset& test,
                         const std::vector<double>& grid, const Trainer& primary,
                         const std::vector<Trainer>& references, MetricKind metric,
                         const Eigen::VectorXd* truth_override, long seed) {
  if (grid.empty()) throw ConfigError("empty lambda grid");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    if (!(grid[i] > grid[i - 1])) throw ConfigError("lambda grid must be strictly increasing");
  }
  if (test.n() < 1) throw ConfigError("test block needs labeled rows");
  Eigen::VectorXd target = truth_override ? *truth_override : test.y_labeled();
  if (target.size() != test.n()) throw ConfigError("truth override size mismatch");

  SweepResult out;
  for (double lambda : grid) {
    Eigen::VectorXd pred = primary.run(train, lambda, test.x_labeled());
    out.rows.push_back({primary.name, lambda, seed, "test", metric_name(metric),
                        metric_value(metric, pred, target)});
  }
  for (const auto& ref : references) {
    Eigen::VectorXd pred = ref.run(train, 0.0, test.x_labeled());
    out.rows.push_back({ref.name, std::nullopt, seed, "test", metric_name(metric),
                        metric_value(metric, pred, target)});
  }
  return out;
}

std::vector<double> log_grid(double start, double end, int count) {
  if (!(start > 0.0) || !(end > start) || count < 1) {
    if (count == 1 && start > 0.0) return {start};
    throw ConfigError("log grid needs 0 < start < end and count >= 1");
  }
  std::vector<double> grid(count);
  if (count == 1) {
    grid[0] = start;
    return grid;
  }
  double lstart = std::log10(start), lend = std::log10(end);
  for (int i = 0; i < count; ++i) {
    grid[i] = std::pow(10.0, lstart + (lend - lstart) * i / (count - 1));
  }
  grid.front() = start;
  grid.back() = end;
  return grid;
}

// ---------------------------------------------------------------------------
// Transfer factor

double gamma_factor(int n, int m, double lambda, double rho_star) {
  if (n < 1 || m < 0) throw ConfigError("gamma_factor needs n >= 1, m >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (!(rho_star >= 0.0 && rho_star <= 1.0)) throw ConfigError("rho_star must lie in [0, 1]");
  if (m == 0) return 1.0;
  // Single-ratio form: at rho = 1, lambda = 0 the quotient collapses to n/N
  // exactly (num = n*m, den = N*m), so the corner value is bit-exact.
  double N = n + m;
  double den = N * (m + n * lambda);
  double num = den - static_cast<double>(m) * m * rho_star * rho_star;
  return num / den;
}

double rho_star_mc(const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& hat_f,
                   const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                                       const Eigen::MatrixXd&)>& hat_g,
                   const Truth& truth, double lambda, int n, int m, int mc_samples,
                   std::uint64_t seed) {
  if (mc_samples < 100) throw ConfigError("rho_star_mc needs at least 100 samples");
  if (n < 1 || m < 0) throw ConfigError("rho_star_mc needs n >= 1, m >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  double denom = m + static_cast<double>(n) * lambda;
  if (denom <= 0.0) throw ConfigError("m + n*lambda must be positive to define g*");
  if (!truth.mu || !truth.eta || !truth.sample_joint) {
    throw ConfigError("rho_star_mc needs mu, eta and a sampler on the truth handle");
  }

  auto [x, w] = truth.sample_joint(mc_samples, seed);
  Eigen::VectorXd mu = truth.mu(x);
  Eigen::VectorXd eta = truth.eta(x, w);
  Eigen::VectorXd gstar = (m / denom) * mu + (n * lambda / denom) * eta;
  Eigen::VectorXd e_f = mu - hat_f(x);
  Eigen::VectorXd e_g = gstar - hat_g(x, w);

  double m_ff = e_f.squaredNorm() / mc_samples;
  double m_gg = e_g.squaredNorm() / mc_samples;
  if (m_ff <= 1e-300 || m_gg <= 1e-300) return 0.0;
  double m_fg = e_f.dot(e_g) / mc_samples;
  double rho = std::abs(m_fg) / std::sqrt(m_ff * m_gg);
  return std::min(rho, 1.0);
}

}  // namespace coupled
