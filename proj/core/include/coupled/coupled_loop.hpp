#pragma once

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <vector>

#include "coupled/dataset.hpp"

namespace coupled {

struct Predictor {
  std::function<Eigen::VectorXd(const Eigen::MatrixXd&)> predict;
};

// A fitter trains on (features, targets, row weights) and returns a predictor.
// Targets may be pseudo-labels produced by the other block.
struct Fitter {
  std::string name;
  std::function<Predictor(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& weights)>
      fit;
};

// Weighted ridge with intercept; exact block minimizer for the square loss.
Fitter make_exact_linear_fitter(double alpha);

struct CoupledLoopConfig {
  int max_iters = 15;
  int patience = 2;
  double disagreement_tol = 1e-4;  // relative change of the unlabeled disagreement
};

struct CoupledTrace {
  // Penalized objective (1/N normalized, no ridge terms) after each full (f, g) iteration.
  std::vector<double> objective;
  // Mean squared f-g disagreement on unlabeled rows after each iteration; empty when m == 0.
  std::vector<double> disagreement;
  int iterations = 0;
  std::string stop_reason;  // "max_iters" | "disagreement_converged"
};

struct CoupledFit {
  Predictor f, g;
  CoupledTrace trace;
};

// Alternating minimization: f fits pooled targets (y_L, g(z_U)) with unit
// weights on features x; g fits pooled targets (y_L, f(x_U)) with weights
// (lambda on labeled, 1 on unlabeled) on features z. g starts at the zero
// predictor, f starts from the labeled baseline fit. Errors when m == 0 and
// lambda == 0 (the objective then never sees g).
CoupledFit run_coupled_square(const Dataset& ds, double lambda, const Fitter& fitter_f,
                              const Fitter& fitter_g, const CoupledLoopConfig& cfg = {});

// (1/m) sum_U (g(z) - f(x))^2; errors when m == 0.
double disagreement(const Predictor& f, const Predictor& g, const Dataset& ds);

// ---------------------------------------------------------------------------
// Logistic variant: alternating full-batch gradient descent on cross-entropy
// blocks. Probabilities are clamped to [1e-12, 1 - 1e-12] inside the loss.

struct LogisticCoupledConfig {
  int outer_iters = 5;
  int inner_steps = 150;
  double step_size = 0.02;
  double alpha_f = 1e-4;  // ridge on beta[1:], enters as (alpha/2)|.|^2
  double alpha_g = 1e-1;
  int baseline_steps = 500;  // labeled-only initialization of beta
  double baseline_step_size = 0.05;
};

struct LogisticCoupledFit {
  Eigen::VectorXd beta;   // over x, intercept first
  Eigen::VectorXd gamma;  // over z, intercept first
  std::vector<double> f_objective;  // block objective after each f update
  std::vector<double> g_objective;  // block objective after each g update
  Eigen::VectorXd predict_f(const Eigen::MatrixXd& x) const;  // probabilities
  Eigen::VectorXd predict_g(const Eigen::MatrixXd& z) const;
};

LogisticCoupledFit run_coupled_logistic(const Dataset& ds, double lambda,
                                        const LogisticCoupledConfig& cfg = {});

// Full-batch gradient descent on weighted cross entropy with ridge
// (alpha/2)|c[1:]|^2; targets may be soft labels in [0,1].
Eigen::VectorXd fit_logistic_gd(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& weights, double alpha, int steps,
                                double step_size, Eigen::VectorXd init);

// The two block objectives of the logistic variant at (beta, gamma):
//   f: sum_L ce(y, pf) + sum_U ce(pg, pf) + (alpha_f/2)|beta[1:]|^2
//   g: sum_U ce(pf, pg) + lambda sum_L ce(y, pg) + (alpha_g/2)|gamma[1:]|^2
std::pair<double, double> logistic_block_objectives(const Dataset& ds, double lambda,
                                                    const LogisticCoupledConfig& cfg,
                                                    const Eigen::VectorXd& beta,
                                                    const Eigen::VectorXd& gamma);

double cross_entropy(double target, double p);  // clamped
Eigen::VectorXd sigmoid(const Eigen::VectorXd& t);

struct LogisticComparatorConfig {
  int steps = 700;
  double step_size = 0.03;
  double alpha_teacher = 1e-1;
  double alpha_student = 1e-4;
};

// Labeled-only logistic fit on x (the baseline comparator).
Eigen::VectorXd fit_logistic_baseline(const Dataset& ds, double alpha = 1e-4, int steps = 500,
                                      double step_size = 0.05);

struct LogisticTwoStageModel {
  Eigen::VectorXd teacher;  // over z
  Eigen::VectorXd student;  // over x
};

// Teacher logistic fit on labeled z; student fits soft teacher probabilities
// on labeled + unlabeled x.
LogisticTwoStageModel fit_logistic_two_stage(const Dataset& ds,
                                             const LogisticComparatorConfig& cfg = {});

}  // namespace coupled
