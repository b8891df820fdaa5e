#pragma once

#include <Eigen/Dense>

#include "coupled/dataset.hpp"

namespace coupled {

// Affine prediction with intercept-first coefficient layout:
// pred = coef[0] + points * coef[1:].
Eigen::VectorXd predict_affine(const Eigen::VectorXd& coef, const Eigen::MatrixXd& points);

// Prepends a column of ones.
Eigen::MatrixXd with_intercept(const Eigen::MatrixXd& points);

// Weighted ridge with an unpenalized leading intercept column:
//   min_c sum_i w_i (t_i - x_i' c)^2 + alpha * |c[1:]|^2
// `features` must already carry the intercept column first. Returns the
// minimum-norm minimizer when the normal system is singular.
Eigen::VectorXd fit_ridge(const Eigen::MatrixXd& features, const Eigen::VectorXd& targets,
                          const Eigen::VectorXd& weights, double alpha);

struct CoupledLinearModel {
  Eigen::VectorXd beta;   // 1 + dim_x, intercept first
  Eigen::VectorXd gamma;  // 1 + dim_x + dim_w, intercept first
  bool degenerate = false;  // normal system was rank-deficient; coefficients are minimum-norm
  double objective = 0.0;   // penalized objective at the solution (unnormalized, incl. ridge terms)

  Eigen::VectorXd predict_f(const Eigen::MatrixXd& x) const { return predict_affine(beta, x); }
  Eigen::VectorXd predict_g(const Eigen::MatrixXd& z) const { return predict_affine(gamma, z); }
};

// Joint minimizer of
//   sum_L (y - x' beta)^2 + sum_U (x' beta - z' gamma)^2 + lambda sum_L (y - z' gamma)^2
//     + ridge_f |beta[1:]|^2 + ridge_g |gamma[1:]|^2
// over affine beta, gamma (z = (x, w)). Solved through the symmetric 2-block
// normal system; a diagonal jitter of 1e-12 * trace/p is applied only when
// both ridges are exactly zero (reproducibility over pivot-order sensitivity).
CoupledLinearModel solve_coupled_linear(const Dataset& ds, double lambda, double ridge_f,
                                        double ridge_g);

// The objective minimized above, evaluated by direct summation.
double coupled_linear_objective(const Dataset& ds, double lambda, double ridge_f, double ridge_g,
                                const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma);

struct TwoStageModel {
  Eigen::VectorXd teacher;  // gamma over (x, w), intercept first
  Eigen::VectorXd student;  // beta over x, intercept first
  Eigen::VectorXd predict_f(const Eigen::MatrixXd& x) const { return predict_affine(student, x); }
};

// Teacher: labeled ridge on z. Student: ridge on labeled rows with real labels
// plus unlabeled rows with teacher pseudo-labels, all unit weights.
TwoStageModel solve_two_stage(const Dataset& ds, double alpha_teacher, double alpha_student);

enum class TeacherView { w_only, xw };

struct GenDistillConfig {
  TeacherView view = TeacherView::xw;
  double alpha_teacher = 1e-8;
  double alpha_student = 1e-8;
  double weight_labeled = 0.0;    // weight on (teacher target, labeled row) terms
  double weight_unlabeled = 1.0;  // weight on (teacher target, unlabeled row) terms
};

struct GenDistillModel {
  Eigen::VectorXd teacher;  // over the chosen view, intercept first
  Eigen::VectorXd student;  // over x, intercept first
  Eigen::VectorXd predict_f(const Eigen::MatrixXd& x) const { return predict_affine(student, x); }
};

// Teacher ridge of y on the chosen privileged view; student ridge of
//   sum_L (y - x'b)^2 + wL sum_L (q - x'b)^2 + wU sum_U (q - x'b)^2 + alpha_student |b[1:]|^2
// where q are the teacher's soft targets. With view = xw, wL = 0, wU = 1 and
// matched ridges this reduces exactly to solve_two_stage.
GenDistillModel solve_gen_distill(const Dataset& ds, const GenDistillConfig& cfg);

}  // namespace coupled
