#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "coupled/dataset.hpp"
#include "coupled/truth.hpp"

namespace coupled {

enum class MetricKind { mse, est_err_vs_mu, brier, zero_one, auroc };

std::string metric_name(MetricKind kind);
MetricKind metric_from_name(const std::string& name);

// For mse the truth vector holds labels; for est_err_vs_mu it holds mu(x)
// (callers must have a synthetic truth in hand — CSV data cannot supply one).
// brier clips predictions to [1e-6, 1 - 1e-6] before squaring; zero_one
// thresholds at exactly 1/2 with >= mapped to class 1; auroc uses midranks
// for ties and errors when only one class is present.
double metric_value(MetricKind kind, const Eigen::VectorXd& predictions,
                    const Eigen::VectorXd& truth);

// A named training routine: fit on `train`, return predictions at x_eval
// (probabilities for binary methods). Reference methods ignore lambda.
struct Trainer {
  std::string name;
  bool uses_lambda = true;
  std::function<Eigen::VectorXd(const Dataset& train, double lambda, const Eigen::MatrixXd& x_eval)>
      run;
};

Trainer make_trainer_coupled_linear(double ridge_f, double ridge_g);
Trainer make_trainer_baseline(double alpha);
Trainer make_trainer_two_stage(double alpha_teacher, double alpha_student);
Trainer make_trainer_gen_distill_xw(double alpha_teacher, double alpha_student);
Trainer make_trainer_coupled_logistic();
Trainer make_trainer_logistic_baseline();
Trainer make_trainer_logistic_two_stage();
Trainer make_trainer(const std::string& method, TaskKind kind, double ridge_f, double ridge_g);

struct CvOptions {
  int folds = 5;
  std::uint64_t seed = 0;
  MetricKind metric = MetricKind::mse;
  std::vector<std::string> groups;  // one key per labeled row; grouped folds when non-empty
  bool stratify = false;            // binary tasks only; mutually exclusive with groups
};

// Deterministic partition of {0..n-1} into `folds` disjoint validation index
// sets; depends only on (n, seed, folds, group keys / strata).
std::vector<std::vector<int>> make_folds(int n, const Eigen::VectorXd& y, const CvOptions& opts,
                                         TaskKind kind);

struct CvReport {
  std::vector<double> lambdas;
  Eigen::MatrixXd fold_metric;  // folds x lambdas
  Eigen::VectorXd fold_mean;    // per lambda
  double lambda_hat = 0.0;
  int lambda_hat_index = -1;
  bool tie = false;  // the minimum was attained at several lambdas (smallest wins)
};

// Labeled-only cross validation: each fold's training set is the remaining
// labeled rows plus *all* unlabeled rows; validation predictions are scored
// on the held-out labeled rows. Hidden labels of unlabeled rows are never
// consulted (they are not even stored).
CvReport cv_select_lambda(const Dataset& ds, const std::vector<double>& grid,
                          const Trainer& trainer, const CvOptions& opts);

struct SweepRow {
  std::string method;
  std::optional<double> lambda;  // empty for lambda-free reference methods
  long seed = 0;
  std::string tag;               // "test", "fold3", "alpha=1.5", ...
  std::string metric;
  double value = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  void append(const SweepResult& other);
};

// Fixed schema "method,lambda,seed,fold,metric,value".
void write_rows_csv(std::ostream& out, const std::vector<SweepRow>& rows);
std::vector<SweepRow> cv_report_rows(const CvReport& report, const std::string& method,
                                     MetricKind metric, long seed);

// Trains `primary` at every grid point (ascending), evaluates on the test
// block, and appends one row per lambda-free reference trainer. When
// truth_override is non-null it replaces test labels as the scoring target
// (est_err_vs_mu).
SweepResult lambda_sweep(const Dataset& train, const Dataset& test,
                         const std::vector<double>& grid, const Trainer& primary,
                         const std::vector<Trainer>& references, MetricKind metric,
                         const Eigen::VectorXd* truth_override, long seed);

// count log-spaced points from start to end inclusive.
std::vector<double> log_grid(double start, double end, int count);

// Relative excess risk factor 1 - m^2 rho^2 / (N (m + n lambda)); equals 1
// when m == 0 and never falls below n / N.
double gamma_factor(int n, int m, double lambda, double rho_star);

// Monte Carlo estimate of the normalized cross-error correlation between
// f* - hat_f and g* - hat_g under the truth's population, where f* = mu and
// g* = (m mu + n lambda eta) / (m + n lambda). Returns 0 when either error
// second moment vanishes.
double rho_star_mc(const std::function<Eigen::VectorXd(const Eigen::MatrixXd&)>& hat_f,
                   const std::function<Eigen::VectorXd(const Eigen::MatrixXd&,
                                                       const Eigen::MatrixXd&)>& hat_g,
                   const Truth& truth, double lambda, int n, int m, int mc_samples,
                   std::uint64_t seed);

}  // namespace coupled
