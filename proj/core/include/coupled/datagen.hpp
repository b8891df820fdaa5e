#pragma once

#include <Eigen/Dense>
#include <cstdint>

#include "coupled/dataset.hpp"
#include "coupled/truth.hpp"

namespace coupled {

// Output bundle of every generator: a semi-supervised training set, a fully
// labeled test set (m == 0), and the population truth handle.
struct SyntheticData {
  Dataset train;
  Dataset test;
  Truth truth;
};

// Jointly Gaussian (X, W) with Y = beta'X + theta'W + noise. By default W is
// built structurally as W = r A'X + sqrt(1 - r^2) E with A having unit-norm
// columns, so E[W | X] = r A'X. Supplying joint_cov (a (dX+dW)^2 covariance)
// overrides the structural route; it must be symmetric positive definite.
struct LinearGaussianConfig {
  int d_x = 10;
  int d_w = 5;
  double cross_corr = 0.5;     // r above; ignored when joint_cov is set
  double sigma = 1.0;          // noise sd, > 0
  double theta_scale = 1.0;    // scales the default unit-sphere theta draw
  Eigen::VectorXd beta;        // empty: unit-sphere draw per seed
  Eigen::VectorXd theta;       // empty: theta_scale * unit-sphere draw per seed
  Eigen::MatrixXd mix;         // dX x dW, unit-norm columns; empty: random per seed
  Eigen::MatrixXd joint_cov;   // optional explicit covariance of (X, W)
};

// Controlled design: X ~ N(0, I), H ~ N(0, I_q) independent of X,
// W_sig = rho * X A + sqrt(1 - rho^2) H with unit-norm columns of A,
// W = (W_sig, V) where V ~ N(0, I_{d_noise}) is pure noise, and
// Y = X'beta + alpha * H'theta + sigma * eps. The deployment target is
// mu(X) = X'beta because H is independent of X.
struct ControlledConfig {
  int d_x = 10;
  int q = 3;
  int d_noise = 0;
  double rho_xw = 0.7;         // in [0, 1]
  double alpha = 1.0;          // privileged-signal strength
  double sigma = 1.0;
  Eigen::MatrixXd A;           // d_x x q, unit-norm columns; empty: random per seed
  Eigen::VectorXd beta;        // empty: unit-sphere draw per seed
  Eigen::VectorXd theta;       // dim q; empty: unit-sphere draw per seed
};

// Binary diagnostic with correlated views. A shared scalar latent s ~ N(shift, 1)
// is mixed into both views with weight c (the correlation strength):
//   X = x_scale * (c * s * u + sqrt(1 - c^2) * ex),   ex ~ N(0, I_dX)
//   W = w_scale * (c * s * v + sqrt(1 - c^2) * ew),   ew ~ N(0, I_dW)
// with fixed unit vectors u, v drawn per seed. Labels are Bernoulli on the
// sigmoid of bx'X + bw'W plus N(0, logit_noise_sd^2) logit noise. The labeled
// and test blocks use shift = 0; the unlabeled pool uses shift = unlabeled_mean
// (interpreting the "unlabeled mean parameter" as a latent mean shift; the
// interpretation is recorded in Truth::params).
struct LogitDiagConfig {
  int d_x = 5;
  int d_w = 40;
  double corr_strength = 0.95;  // c in [0, 1]
  double x_scale = 1.0;         // > 0
  double w_scale = 1.05;        // > 0
  double logit_noise_sd = 0.70; // >= 0
  double unlabeled_mean = 1.0;
  Eigen::VectorXd beta_x;       // empty: unit-sphere draw per seed
  Eigen::VectorXd beta_w;       // empty: unit-sphere draw per seed
};

SyntheticData gen_linear_gaussian(const LinearGaussianConfig& cfg, int n, int m, int n_test,
                                  std::uint64_t seed);
SyntheticData gen_controlled(const ControlledConfig& cfg, int n, int m, int n_test,
                             std::uint64_t seed);
SyntheticData gen_logit_diag(const LogitDiagConfig& cfg, int n, int m, int n_test,
                             std::uint64_t seed);

}  // namespace coupled
