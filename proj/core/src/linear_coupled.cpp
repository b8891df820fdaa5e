#include "coupled/linear_coupled.hpp"

#include <cmath>

#include "coupled/errors.hpp"

namespace coupled {

namespace {

constexpr double kRankTol = 1e-10;

void check_penalty(double alpha, const char* name) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw ConfigError(std::string(name) + " must be finite and >= 0");
  }
}

// Solves the PSD normal system M c = b. Jitter only when told to; falls back
// to the minimum-norm solution (complete orthogonal decomposition) when the
// factorization cannot certify the solve or the system is rank deficient (the
// jittered factorization would otherwise leak null-space components of
// roundoff/jitter scale into the answer). `degenerate` reports rank
// deficiency of the unjittered system.
Eigen::VectorXd solve_normal_system(const Eigen::MatrixXd& M, const Eigen::VectorXd& b,
                                    bool jitter, bool* degenerate) {
  const int p = static_cast<int>(M.rows());
  Eigen::MatrixXd Ms = M;
  if (jitter && p > 0) {
    Ms.diagonal().array() += 1e-12 * M.trace() / p;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Ms);
  Eigen::VectorXd c = ldlt.solve(b);
  double resid = (M * c - b).norm();
  bool ok = ldlt.info() == Eigen::Success && c.allFinite() && resid <= 1e-7 * (b.norm() + 1.0);

  bool rank_deficient = false;
  if (!ok || jitter) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    cod.setThreshold(kRankTol);
    rank_deficient = cod.rank() < p;
    if (!ok || rank_deficient) c = cod.solve(b);  // minimum-norm least squares solution
  }
  if (degenerate) *degenerate = rank_deficient;
  return c;
}

}  // namespace

Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& points) {
  Eigen::MatrixXd out(points.rows(), points.cols() + 1);
  out.col(0).setOnes();
  out.rightCols(points.cols()) = points;
  return out;
}

Eigen::VectorXd predict_affine(const Eigen::VectorXd& coef, const Eigen::MatrixXd& points) {
  if (coef.size() != points.cols() + 1) throw ConfigError("coefficient/feature size mismatch");
  return Eigen::VectorXd::Constant(points.rows(), coef[0]) + points * coef.tail(points.cols());
}

Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& weights, double alpha) {
  if (features.rows() != targets.size()) throw ConfigError("fit_ridge: row/target mismatch");
  if (weights.size() != targets.size()) throw ConfigError("fit_ridge: row/weight mismatch");
  if ((weights.array() < 0.0).any()) throw ConfigError("fit_ridge: negative weight");
  check_penalty(alpha, "alpha");
  const int p = static_cast<int>(features.cols());

  Eigen::MatrixXd M = features.transpose() * weights.asDiagonal() * features;
  for (int j = 1; j < p; ++j) M(j, j) += alpha;  // intercept (column 0) unpenalized
  Eigen::VectorXd b = features.transpose() * (weights.asDiagonal() * targets);
  return solve_normal_system(M, b, /*jitter=*/alpha == 0.0, nullptr);
}

CoupledLinearModel solve_coupled_linear(const Dataset& ds, double lambda, double ridge_f,
                                        double ridge_g) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
  check_penalty(ridge_f, "ridge_f");
  check_penalty(ridge_g, "ridge_g");

  const Eigen::MatrixXd xl = with_intercept(ds.x_labeled());
  const Eigen::MatrixXd xu = with_intercept(ds.x_unlabeled());
  const Eigen::MatrixXd zl = with_intercept(ds.z_labeled());
  const Eigen::MatrixXd zu = with_intercept(ds.z_unlabeled());
  const int px = static_cast<int>(xl.cols());
  const int pz = static_cast<int>(zl.cols());
  const int p = px + pz;

  // Stationarity of the objective in (beta, gamma):
  //   (Xl'Xl + Xu'Xu + rf P) beta - Xu'Zu gamma          = Xl'y
  //   -Zu'Xu beta + (Zu'Zu + lambda Zl'Zl + rg P) gamma  = lambda Zl'y
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(p, p);
  M.topLeftCorner(px, px) = xl.transpose() * xl + xu.transpose() * xu;
  M.topRightCorner(px, pz) = -xu.transpose() * zu;
  M.bottomLeftCorner(pz, px) = M.topRightCorner(px, pz).transpose();
  M.bottomRightCorner(pz, pz) = zu.transpose() * zu + lambda * (zl.transpose() * zl);
  for (int j = 1; j < px; ++j) M(j, j) += ridge_f;
  for (int j = px + 1; j < p; ++j) M(j, j) += ridge_g;

  Eigen::VectorXd b = Eigen::VectorXd::Zero(p);
  b.head(px) = xl.transpose() * ds.y_labeled();
  b.tail(pz) = lambda * (zl.transpose() * ds.y_labeled());

  CoupledLinearModel model;
  bool jitter = ridge_f == 0.0 && ridge_g == 0.0;
  Eigen::VectorXd c = solve_normal_system(M, b, jitter, &model.degenerate);
  model.beta = c.head(px);
  model.gamma = c.tail(pz);
  model.objective = coupled_linear_objective(ds, lambda, ridge_f, ridge_g, model.beta, model.gamma);
  return model;
}

double coupled_linear_objective(const Dataset& ds, double lambda, double ridge_f, double ridge_g,
                                const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma) {
  Eigen::VectorXd fl = predict_affine(beta, ds.x_labeled());
  Eigen::VectorXd fu = predict_affine(beta, ds.x_unlabeled());
  Eigen::VectorXd gl = predict_affine(gamma, ds.z_labeled());
  Eigen::VectorXd gu = predict_affine(gamma, ds.z_unlabeled());
  double value = (ds.y_labeled() - fl).squaredNorm();
  value += (fu - gu).squaredNorm();
  value += lambda * (ds.y_labeled() - gl).squaredNorm();
  value += ridge_f * beta.tail(beta.size() - 1).squaredNorm();
  value += ridge_g * gamma.tail(gamma.size() - 1).squaredNorm();
  return value;
}

TwoStageModel solve_two_stage(const Dataset& ds, double alpha_teacher, double alpha_student) {
  check_penalty(alpha_teacher, "alpha_teacher");
  check_penalty(alpha_student, "alpha_student");
  TwoStageModel model;
  Eigen::MatrixXd zl = with_intercept(ds.z_labeled());
  model.teacher = fit_ridge(zl, ds.y_labeled(), Eigen::VectorXd::Ones(ds.n()), alpha_teacher);

  Eigen::MatrixXd x_pool = with_intercept(ds.x_all());
  Eigen::VectorXd t_pool(ds.total());
  t_pool.head(ds.n()) = ds.y_labeled();
  t_pool.tail(ds.m()) = predict_affine(model.teacher, ds.z_unlabeled());
  model.student = fit_ridge(x_pool, t_pool, Eigen::VectorXd::Ones(ds.total()), alpha_student);
  return model;
}

GenDistillModel solve_gen_distill(const Dataset& ds, const GenDistillConfig& cfg) {
  check_penalty(cfg.alpha_teacher, "alpha_teacher");
  check_penalty(cfg.alpha_student, "alpha_student");
  if (cfg.weight_labeled < 0.0 || cfg.weight_unlabeled < 0.0) {
    throw ConfigError("distillation weights must be >= 0");
  }
  auto view_of = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    if (cfg.view == TeacherView::w_only) return w;
    Eigen::MatrixXd z(x.rows(), x.cols() + w.cols());
    z.leftCols(x.cols()) = x;
    z.rightCols(w.cols()) = w;
    return z;
  };

  GenDistillModel model;
  Eigen::MatrixXd vl = with_intercept(view_of(ds.x_labeled(), ds.w_labeled()));
  model.teacher = fit_ridge(vl, ds.y_labeled(), Eigen::VectorXd::Ones(ds.n()), cfg.alpha_teacher);

  Eigen::VectorXd q_labeled = predict_affine(model.teacher, view_of(ds.x_labeled(), ds.w_labeled()));
  Eigen::VectorXd q_unlabeled =
      predict_affine(model.teacher, view_of(ds.x_unlabeled(), ds.w_unlabeled()));

  // Stacked student rows: (labeled, y, 1), (labeled, q, wL), (unlabeled, q, wU).
  const int n = ds.n(), m = ds.m();
  Eigen::MatrixXd feats(2 * n + m, ds.dim_x() + 1);
  Eigen::VectorXd targets(2 * n + m), weights(2 * n + m);
  feats.topRows(n) = with_intercept(ds.x_labeled());
  feats.middleRows(n, n) = feats.topRows(n);
  feats.bottomRows(m) = with_intercept(ds.x_unlabeled());
  targets.head(n) = ds.y_labeled();
  targets.segment(n, n) = q_labeled;
  targets.tail(m) = q_unlabeled;
  weights.head(n).setOnes();
  weights.segment(n, n).setConstant(cfg.weight_labeled);
  weights.tail(m).setConstant(cfg.weight_unlabeled);
  model.student = fit_ridge(feats, targets, weights, cfg.alpha_student);
  return model;
}

}  // namespace coupled
