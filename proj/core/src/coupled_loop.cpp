#include "coupled/coupled_loop.hpp"

#include <cmath>

#include "coupled/errors.hpp"
#include "coupled/linear_coupled.hpp"
#include "coupled/star_space.hpp"

namespace coupled {

Fitter make_exact_linear_fitter(double alpha) {
  Fitter fitter;
  fitter.name = "ridge(" + std::to_string(alpha) + ")";
  fitter.fit = [alpha](const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                       const Eigen::VectorXd& weights) {
    Eigen::VectorXd coef = fit_ridge(with_intercept(features), targets, weights, alpha);
    Predictor p;
    p.predict = [coef](const Eigen::MatrixXd& pts) { return predict_affine(coef, pts); };
    return p;
  };
  return fitter;
}

double disagreement(const Predictor& f, const Predictor& g, const Dataset& ds) {
  if (ds.m() == 0) throw ConfigError("disagreement needs unlabeled rows");
  Eigen::VectorXd fu = f.predict(ds.x_unlabeled());
  Eigen::VectorXd gu = g.predict(ds.z_unlabeled());
  return (gu - fu).squaredNorm() / ds.m();
}

CoupledFit run_coupled_square(const Dataset& ds, double lambda, const Fitter& fitter_f,
                              const Fitter& fitter_g, const CoupledLoopConfig& cfg) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (ds.m() == 0 && lambda == 0.0) {
    throw ConfigError("m == 0 with lambda == 0 leaves g outside the objective");
  }
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be >= 1");
  if (cfg.patience < 1) throw ConfigError("patience must be >= 1");

  const int n = ds.n(), m = ds.m();
  const StarSpace space(n, m, lambda);
  const Eigen::MatrixXd x_pool = ds.x_all();
  const Eigen::MatrixXd z_pool = ds.z_all();

  Eigen::VectorXd w_unit = Eigen::VectorXd::Ones(n + m);
  Eigen::VectorXd w_g(n + m);
  w_g.head(n).setConstant(lambda);
  w_g.tail(m).setOnes();

  CoupledFit out;
  // Initialization: f from the labeled baseline, g at zero.
  out.f = fitter_f.fit(ds.x_labeled(), ds.y_labeled(), Eigen::VectorXd::Ones(n));
  out.g.predict = [](const Eigen::MatrixXd& pts) { return Eigen::VectorXd::Zero(pts.rows()); };

  double prev_disagreement = 0.0;
  int quiet_streak = 0;
  out.trace.stop_reason = "max_iters";

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    // f step: pooled targets (y, g(z_U)), unit weights.
    Eigen::VectorXd t_f(n + m);
    t_f.head(n) = ds.y_labeled();
    t_f.tail(m) = out.g.predict(ds.z_unlabeled());
    out.f = fitter_f.fit(x_pool, t_f, w_unit);

    // g step: pooled targets (y, f(x_U)), weights (lambda, 1).
    Eigen::VectorXd t_g(n + m);
    t_g.head(n) = ds.y_labeled();
    t_g.tail(m) = out.f.predict(ds.x_unlabeled());
    out.g = fitter_g.fit(z_pool, t_g, w_g);

    Eigen::VectorXd f_vals(n + m), g_vals(n + m);
    f_vals.head(n) = out.f.predict(ds.x_labeled());
    f_vals.tail(m) = out.f.predict(ds.x_unlabeled());
    g_vals.head(n) = out.g.predict(ds.z_labeled());
    g_vals.tail(m) = out.g.predict(ds.z_unlabeled());
    out.trace.objective.push_back(space.objective_value(f_vals, g_vals, ds.y_labeled()));
    out.trace.iterations = iter;

    if (m > 0) {
      double d = (g_vals.tail(m) - f_vals.tail(m)).squaredNorm() / m;
      out.trace.disagreement.push_back(d);
      if (iter >= 2) {
        double rel = std::abs(d - prev_disagreement) / std::max(std::abs(prev_disagreement), 1e-300);
        quiet_streak = rel < cfg.disagreement_tol ? quiet_streak + 1 : 0;
        if (quiet_streak >= cfg.patience) {
          out.trace.stop_reason = "disagreement_converged";
          break;
        }
      }
      prev_disagreement = d;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Logistic variant

namespace {

constexpr double kProbClamp = 1e-12;

double clamp_prob(double p) {
  return std::min(1.0 - kProbClamp, std::max(kProbClamp, p));
}

double weighted_ce(const Eigen::VectorXd& targets, const Eigen::VectorXd& probs,
                   const Eigen::VectorXd& weights) {
  double total = 0.0;
  for (int i = 0; i < targets.size(); ++i) {
    total += weights[i] * cross_entropy(targets[i], probs[i]);
  }
  return total;
}

}  // namespace

double cross_entropy(double target, double p) {
  p = clamp_prob(p);
  return -target * std::log(p) - (1.0 - target) * std::log(1.0 - p);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& t) {
  return t.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Eigen::VectorXd fit_logistic_gd(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                                const Eigen::VectorXd& weights, double alpha, int steps,
                                double step_size, Eigen::VectorXd init) {
  if (features.rows() != targets.size() || weights.size() != targets.size()) {
    throw ConfigError("fit_logistic_gd: size mismatch");
  }
  if (init.size() != features.cols()) throw ConfigError("fit_logistic_gd: bad init size");
  Eigen::VectorXd coef = std::move(init);
  for (int s = 0; s < steps; ++s) {
    Eigen::VectorXd p = sigmoid(features * coef);
    // d ce(a, sigmoid(t)) / dt = p - a
    Eigen::VectorXd grad = features.transpose() * (weights.asDiagonal() * (p - targets));
    grad.tail(coef.size() - 1) += alpha * coef.tail(coef.size() - 1);
    coef -= step_size * grad;
  }
  return coef;
}

Eigen::VectorXd LogisticCoupledFit::predict_f(const Eigen::MatrixXd& x) const {
  return sigmoid(with_intercept(x) * beta);
}
Eigen::VectorXd LogisticCoupledFit::predict_g(const Eigen::MatrixXd& z) const {
  return sigmoid(with_intercept(z) * gamma);
}

std::pair<double, double> logistic_block_objectives(const Dataset& ds, double lambda,
                                                    const LogisticCoupledConfig& cfg,
                                                    const Eigen::VectorXd& beta,
                                                    const Eigen::VectorXd& gamma) {
  const int n = ds.n(), m = ds.m();
  Eigen::VectorXd pf_l = sigmoid(with_intercept(ds.x_labeled()) * beta);
  Eigen::VectorXd pf_u = sigmoid(with_intercept(ds.x_unlabeled()) * beta);
  Eigen::VectorXd pg_l = sigmoid(with_intercept(ds.z_labeled()) * gamma);
  Eigen::VectorXd pg_u = sigmoid(with_intercept(ds.z_unlabeled()) * gamma);

  double f_obj = weighted_ce(ds.y_labeled(), pf_l, Eigen::VectorXd::Ones(n)) +
                 weighted_ce(pg_u, pf_u, Eigen::VectorXd::Ones(m)) +
                 0.5 * cfg.alpha_f * beta.tail(beta.size() - 1).squaredNorm();
  double g_obj = weighted_ce(pf_u, pg_u, Eigen::VectorXd::Ones(m)) +
                 lambda * weighted_ce(ds.y_labeled(), pg_l, Eigen::VectorXd::Ones(n)) +
                 0.5 * cfg.alpha_g * gamma.tail(gamma.size() - 1).squaredNorm();
  return {f_obj, g_obj};
}

LogisticCoupledFit run_coupled_logistic(const Dataset& ds, double lambda,
                                        const LogisticCoupledConfig& cfg) {
  if (ds.kind() != TaskKind::binary) throw ConfigError("logistic loop needs a binary task");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  if (ds.m() == 0 && lambda == 0.0) {
    throw ConfigError("m == 0 with lambda == 0 leaves g outside the objective");
  }
  const int n = ds.n(), m = ds.m();
  const Eigen::MatrixXd xl = with_intercept(ds.x_labeled());
  const Eigen::MatrixXd xu = with_intercept(ds.x_unlabeled());
  const Eigen::MatrixXd zl = with_intercept(ds.z_labeled());
  const Eigen::MatrixXd zu = with_intercept(ds.z_unlabeled());
  const Eigen::MatrixXd x_pool = with_intercept(ds.x_all());
  const Eigen::MatrixXd z_pool = with_intercept(ds.z_all());

  LogisticCoupledFit fit;
  // beta starts at the labeled logistic baseline, gamma at zero.
  fit.beta = fit_logistic_gd(xl, ds.y_labeled(), Eigen::VectorXd::Ones(n), cfg.alpha_f,
                             cfg.baseline_steps, cfg.baseline_step_size,
                             Eigen::VectorXd::Zero(xl.cols()));
  fit.gamma = Eigen::VectorXd::Zero(zl.cols());

  Eigen::VectorXd w_f = Eigen::VectorXd::Ones(n + m);
  Eigen::VectorXd w_g(n + m);
  w_g.head(n).setConstant(lambda);
  w_g.tail(m).setOnes();

  for (int outer = 0; outer < cfg.outer_iters; ++outer) {
    // f update against current g probabilities.
    Eigen::VectorXd t_f(n + m);
    t_f.head(n) = ds.y_labeled();
    t_f.tail(m) = sigmoid(zu * fit.gamma);
    fit.beta = fit_logistic_gd(x_pool, t_f, w_f, cfg.alpha_f, cfg.inner_steps, cfg.step_size,
                               fit.beta);
    auto [f_obj_a, g_obj_a] = logistic_block_objectives(ds, lambda, cfg, fit.beta, fit.gamma);
    fit.f_objective.push_back(f_obj_a);

    // g update against current f probabilities.
    Eigen::VectorXd t_g(n + m);
    t_g.head(n) = ds.y_labeled();
    t_g.tail(m) = sigmoid(xu * fit.beta);
    fit.gamma = fit_logistic_gd(z_pool, t_g, w_g, cfg.alpha_g, cfg.inner_steps, cfg.step_size,
                                fit.gamma);
    auto [f_obj_b, g_obj_b] = logistic_block_objectives(ds, lambda, cfg, fit.beta, fit.gamma);
    fit.g_objective.push_back(g_obj_b);
  }
  return fit;
}

Eigen::VectorXd fit_logistic_baseline(const Dataset& ds, double alpha, int steps,
                                      double step_size) {
  if (ds.kind() != TaskKind::binary) throw ConfigError("logistic baseline needs a binary task");
  Eigen::MatrixXd xl = with_intercept(ds.x_labeled());
  return fit_logistic_gd(xl, ds.y_labeled(), Eigen::VectorXd::Ones(ds.n()), alpha, steps,
                         step_size, Eigen::VectorXd::Zero(xl.cols()));
}

LogisticTwoStageModel fit_logistic_two_stage(const Dataset& ds,
                                             const LogisticComparatorConfig& cfg) {
  if (ds.kind() != TaskKind::binary) throw ConfigError("logistic comparators need a binary task");
  LogisticTwoStageModel model;
  Eigen::MatrixXd zl = with_intercept(ds.z_labeled());
  model.teacher = fit_logistic_gd(zl, ds.y_labeled(), Eigen::VectorXd::Ones(ds.n()),
                                  cfg.alpha_teacher, cfg.steps, cfg.step_size,
                                  Eigen::VectorXd::Zero(zl.cols()));
  Eigen::MatrixXd x_pool = with_intercept(ds.x_all());
  Eigen::VectorXd soft(ds.total());
  soft.head(ds.n()) = sigmoid(zl * model.teacher);
  soft.tail(ds.m()) = sigmoid(with_intercept(ds.z_unlabeled()) * model.teacher);
  model.student = fit_logistic_gd(x_pool, soft, Eigen::VectorXd::Ones(ds.total()),
                                  cfg.alpha_student, cfg.steps, cfg.step_size,
                                  Eigen::VectorXd::Zero(x_pool.cols()));
  return model;
}

}  // namespace coupled
