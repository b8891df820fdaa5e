#include "coupled/datagen.hpp"

#include <cmath>
#include <utility>
#include <vector>

#include "coupled/errors.hpp"
#include "coupled/rng.hpp"

namespace coupled {

namespace {

// Sub-seed streams per generator call. Each block owns an engine so that, for
// example, growing n_test never changes the training draws.
constexpr std::uint64_t kStreamParams = 0;
constexpr std::uint64_t kStreamLabeled = 1;
constexpr std::uint64_t kStreamUnlabeled = 2;
constexpr std::uint64_t kStreamTest = 3;
constexpr std::uint64_t kStreamJoint = 91;  // Truth::sample_joint re-mixes its own seed

Eigen::VectorXd normal_vector(Rng& rng, int d) {
  Eigen::VectorXd v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

Eigen::VectorXd unit_sphere(Rng& rng, int d) {
  for (;;) {
    Eigen::VectorXd v = normal_vector(rng, d);
    double norm = v.norm();
    if (norm > 1e-12) return v / norm;
  }
}

Eigen::MatrixXd unit_column_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd mat(rows, cols);
  for (int j = 0; j < cols; ++j) mat.col(j) = unit_sphere(rng, rows);
  return mat;
}

std::vector<double> to_std(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

nlohmann::json matrix_json(const Eigen::MatrixXd& mat) {
  nlohmann::json rows = nlohmann::json::array();
  for (int i = 0; i < mat.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (int j = 0; j < mat.cols(); ++j) row.push_back(mat(i, j));
    rows.push_back(row);
  }
  return rows;
}

void check_sizes(int n, int m, int n_test) {
  if (n < 1) throw ConfigError("generator needs at least one labeled row");
  if (m < 0) throw ConfigError("negative unlabeled count");
  if (n_test < 1) throw ConfigError("generator needs at least one test row");
}

void check_vector(const Eigen::VectorXd& v, int d, const char* what) {
  if (v.size() != d) throw ConfigError(std::string(what) + " has the wrong dimension");
  if (!v.allFinite()) throw ConfigError(std::string(what) + " contains non-finite values");
}

void check_unit_columns(const Eigen::MatrixXd& mat, int rows, int cols, const char* what) {
  if (mat.rows() != rows || mat.cols() != cols) {
    throw ConfigError(std::string(what) + " has the wrong shape");
  }
  if (!mat.allFinite()) throw ConfigError(std::string(what) + " contains non-finite values");
  for (int j = 0; j < cols; ++j) {
    if (std::abs(mat.col(j).norm() - 1.0) > 1e-8) {
      throw ConfigError(std::string(what) + " columns must have unit norm");
    }
  }
}

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

SyntheticData gen_linear_gaussian(const LinearGaussianConfig& cfg, int n, int m, int n_test,
                                  std::uint64_t seed) {
  check_sizes(n, m, n_test);
  if (cfg.d_x < 1 || cfg.d_w < 1) throw ConfigError("feature dimensions must be positive");
  if (!(cfg.sigma > 0.0) || !std::isfinite(cfg.sigma)) {
    throw ConfigError("noise sd must be positive");
  }
  const bool explicit_cov = cfg.joint_cov.size() > 0;
  if (!explicit_cov && (cfg.cross_corr < -1.0 || cfg.cross_corr > 1.0)) {
    throw ConfigError("cross correlation must lie in [-1, 1]");
  }

  Rng params(derive_seed(seed, kStreamParams));
  Eigen::VectorXd beta = cfg.beta.size() ? cfg.beta : Eigen::VectorXd(unit_sphere(params, cfg.d_x));
  check_vector(beta, cfg.d_x, "beta");
  Eigen::VectorXd theta =
      cfg.theta.size() ? cfg.theta
                       : Eigen::VectorXd(cfg.theta_scale * unit_sphere(params, cfg.d_w));
  check_vector(theta, cfg.d_w, "theta");

  const int d = cfg.d_x + cfg.d_w;
  Eigen::MatrixXd mix;     // structural route: E[W | X] = cross_corr * mix' X
  Eigen::MatrixXd chol;    // explicit route: (X, W) = chol * g
  Eigen::MatrixXd cond;    // d_w x d_x map with E[W | X = x] = cond * x
  double resid_scale = 0.0;
  if (explicit_cov) {
    if (cfg.joint_cov.rows() != d || cfg.joint_cov.cols() != d) {
      throw ConfigError("joint covariance has the wrong shape");
    }
    if (!cfg.joint_cov.allFinite() ||
        (cfg.joint_cov - cfg.joint_cov.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
      throw ConfigError("joint covariance must be symmetric");
    }
    Eigen::LLT<Eigen::MatrixXd> llt(cfg.joint_cov);
    if (llt.info() != Eigen::Success) {
      throw ConfigError("joint covariance must be positive definite");
    }
    chol = llt.matrixL();
    Eigen::MatrixXd sxx = cfg.joint_cov.topLeftCorner(cfg.d_x, cfg.d_x);
    Eigen::MatrixXd sxw = cfg.joint_cov.topRightCorner(cfg.d_x, cfg.d_w);
    cond = sxx.ldlt().solve(sxw).transpose();
  } else {
    mix = cfg.mix.size() ? cfg.mix
                         : Eigen::MatrixXd(unit_column_matrix(params, cfg.d_x, cfg.d_w));
    check_unit_columns(mix, cfg.d_x, cfg.d_w, "mixing matrix");
    cond = cfg.cross_corr * mix.transpose();
    resid_scale = std::sqrt(std::max(0.0, 1.0 - cfg.cross_corr * cfg.cross_corr));
  }

  const double sigma = cfg.sigma;
  auto draw_xw = [=](Rng& rng) {
    std::pair<Eigen::VectorXd, Eigen::VectorXd> xw;
    if (explicit_cov) {
      Eigen::VectorXd z = chol * normal_vector(rng, d);
      xw.first = z.head(cfg.d_x);
      xw.second = z.tail(cfg.d_w);
    } else {
      xw.first = normal_vector(rng, cfg.d_x);
      xw.second = cond * xw.first + resid_scale * normal_vector(rng, cfg.d_w);
    }
    return xw;
  };
  auto fill_block = [&](std::uint64_t stream, int rows, bool labeled, Eigen::MatrixXd& x,
                        Eigen::MatrixXd& w, Eigen::VectorXd& y) {
    Rng rng(derive_seed(seed, stream));
    x.resize(rows, cfg.d_x);
    w.resize(rows, cfg.d_w);
    y.resize(labeled ? rows : 0);
    for (int i = 0; i < rows; ++i) {
      auto [xi, wi] = draw_xw(rng);
      x.row(i) = xi;
      w.row(i) = wi;
      if (labeled) y[i] = beta.dot(xi) + theta.dot(wi) + sigma * rng.normal();
    }
  };

  Eigen::MatrixXd xl, wl, xu, wu, xt, wt;
  Eigen::VectorXd yl, yu, yt;
  fill_block(kStreamLabeled, n, true, xl, wl, yl);
  fill_block(kStreamUnlabeled, m, false, xu, wu, yu);
  fill_block(kStreamTest, n_test, true, xt, wt, yt);

  Eigen::VectorXd mu_coef = beta + cond.transpose() * theta;

  Truth truth;
  truth.mu = [mu_coef](const Eigen::MatrixXd& x) { return Eigen::VectorXd(x * mu_coef); };
  truth.eta = [beta, theta](const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    return Eigen::VectorXd(x * beta + w * theta);
  };
  truth.sample_joint = [draw_xw, dx = cfg.d_x, dw = cfg.d_w](int count, std::uint64_t s) {
    Rng rng(derive_seed(s, kStreamJoint));
    Eigen::MatrixXd x(count, dx), w(count, dw);
    for (int i = 0; i < count; ++i) {
      auto [xi, wi] = draw_xw(rng);
      x.row(i) = xi;
      w.row(i) = wi;
    }
    return std::make_pair(x, w);
  };
  truth.params = {
      {"generator", "linear_gaussian"},
      {"d_x", cfg.d_x},
      {"d_w", cfg.d_w},
      {"sigma", sigma},
      {"theta_scale", cfg.theta_scale},
      {"beta", to_std(beta)},
      {"theta", to_std(theta)},
      {"mu_coef", to_std(mu_coef)},
      {"explicit_joint_cov", explicit_cov},
      {"seed", seed},
  };
  if (!explicit_cov) {
    truth.params["cross_corr"] = cfg.cross_corr;
    truth.params["mix"] = matrix_json(mix);
  }

  return SyntheticData{
      Dataset(std::move(xl), std::move(wl), std::move(yl), std::move(xu), std::move(wu)),
      Dataset(std::move(xt), std::move(wt), std::move(yt), Eigen::MatrixXd(0, cfg.d_x),
              Eigen::MatrixXd(0, cfg.d_w)),
      std::move(truth)};
}

SyntheticData gen_controlled(const ControlledConfig& cfg, int n, int m, int n_test,
                             std::uint64_t seed) {
  check_sizes(n, m, n_test);
  if (cfg.d_x < 1 || cfg.q < 1) throw ConfigError("feature dimensions must be positive");
  if (cfg.d_noise < 0) throw ConfigError("negative noise dimension");
  if (cfg.rho_xw < 0.0 || cfg.rho_xw > 1.0) throw ConfigError("rho_xw must lie in [0, 1]");
  if (cfg.sigma < 0.0 || !std::isfinite(cfg.sigma)) throw ConfigError("noise sd must be >= 0");
  if (!std::isfinite(cfg.alpha)) throw ConfigError("alpha must be finite");

  Rng params(derive_seed(seed, kStreamParams));
  Eigen::MatrixXd A = cfg.A.size() ? cfg.A : Eigen::MatrixXd(unit_column_matrix(params, cfg.d_x, cfg.q));
  check_unit_columns(A, cfg.d_x, cfg.q, "A");
  Eigen::VectorXd beta = cfg.beta.size() ? cfg.beta : Eigen::VectorXd(unit_sphere(params, cfg.d_x));
  check_vector(beta, cfg.d_x, "beta");
  Eigen::VectorXd theta = cfg.theta.size() ? cfg.theta : Eigen::VectorXd(unit_sphere(params, cfg.q));
  check_vector(theta, cfg.q, "theta");

  const int d_w = cfg.q + cfg.d_noise;
  const double rho = cfg.rho_xw;
  const double h_scale = std::sqrt(std::max(0.0, 1.0 - rho * rho));
  auto draw_xhw = [=](Rng& rng, Eigen::VectorXd& x, Eigen::VectorXd& h, Eigen::VectorXd& w) {
    x = normal_vector(rng, cfg.d_x);
    h = normal_vector(rng, cfg.q);
    w.resize(d_w);
    w.head(cfg.q) = rho * (A.transpose() * x) + h_scale * h;
    if (cfg.d_noise > 0) w.tail(cfg.d_noise) = normal_vector(rng, cfg.d_noise);
  };
  auto fill_block = [&](std::uint64_t stream, int rows, bool labeled, Eigen::MatrixXd& x,
                        Eigen::MatrixXd& w, Eigen::VectorXd& y) {
    Rng rng(derive_seed(seed, stream));
    x.resize(rows, cfg.d_x);
    w.resize(rows, d_w);
    y.resize(labeled ? rows : 0);
    Eigen::VectorXd xi, hi, wi;
    for (int i = 0; i < rows; ++i) {
      draw_xhw(rng, xi, hi, wi);
      x.row(i) = xi;
      w.row(i) = wi;
      if (labeled) y[i] = beta.dot(xi) + cfg.alpha * theta.dot(hi) + cfg.sigma * rng.normal();
    }
  };

  Eigen::MatrixXd xl, wl, xu, wu, xt, wt;
  Eigen::VectorXd yl, yu, yt;
  fill_block(kStreamLabeled, n, true, xl, wl, yl);
  fill_block(kStreamUnlabeled, m, false, xu, wu, yu);
  fill_block(kStreamTest, n_test, true, xt, wt, yt);

  Truth truth;
  truth.mu = [beta](const Eigen::MatrixXd& x) { return Eigen::VectorXd(x * beta); };
  // Inverting the signal construction: H = (W_sig - rho A'X) / sqrt(1 - rho^2),
  // so E[y | x, w] adds alpha * theta'H. At rho == 1 the privileged view carries
  // no information about H and the conditional mean falls back to mu.
  truth.eta = [beta, theta, A, rho, h_scale, alpha = cfg.alpha,
               q = cfg.q](const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    Eigen::VectorXd out = x * beta;
    if (h_scale > 0.0) {
      Eigen::MatrixXd h = (w.leftCols(q) - rho * (x * A)) / h_scale;
      out += alpha * (h * theta);
    }
    return out;
  };
  truth.sample_joint = [draw_xhw, dx = cfg.d_x, d_w](int count, std::uint64_t s) {
    Rng rng(derive_seed(s, kStreamJoint));
    Eigen::MatrixXd x(count, dx), w(count, d_w);
    Eigen::VectorXd xi, hi, wi;
    for (int i = 0; i < count; ++i) {
      draw_xhw(rng, xi, hi, wi);
      x.row(i) = xi;
      w.row(i) = wi;
    }
    return std::make_pair(x, w);
  };
  truth.params = {
      {"generator", "controlled"},
      {"d_x", cfg.d_x},
      {"q", cfg.q},
      {"d_noise", cfg.d_noise},
      {"rho_xw", rho},
      {"alpha", cfg.alpha},
      {"sigma", cfg.sigma},
      {"A", matrix_json(A)},
      {"beta", to_std(beta)},
      {"theta", to_std(theta)},
      {"seed", seed},
  };

  return SyntheticData{
      Dataset(std::move(xl), std::move(wl), std::move(yl), std::move(xu), std::move(wu)),
      Dataset(std::move(xt), std::move(wt), std::move(yt), Eigen::MatrixXd(0, cfg.d_x),
              Eigen::MatrixXd(0, d_w)),
      std::move(truth)};
}

SyntheticData gen_logit_diag(const LogitDiagConfig& cfg, int n, int m, int n_test,
                             std::uint64_t seed) {
  check_sizes(n, m, n_test);
  if (cfg.d_x < 1 || cfg.d_w < 1) throw ConfigError("feature dimensions must be positive");
  if (!(cfg.x_scale > 0.0) || !(cfg.w_scale > 0.0)) throw ConfigError("scales must be positive");
  if (cfg.corr_strength < 0.0 || cfg.corr_strength > 1.0) {
    throw ConfigError("correlation strength must lie in [0, 1]");
  }
  if (cfg.logit_noise_sd < 0.0 || !std::isfinite(cfg.logit_noise_sd)) {
    throw ConfigError("logit noise sd must be >= 0");
  }
  if (!std::isfinite(cfg.unlabeled_mean)) throw ConfigError("unlabeled mean must be finite");

  Rng params(derive_seed(seed, kStreamParams));
  Eigen::VectorXd u = unit_sphere(params, cfg.d_x);
  Eigen::VectorXd v = unit_sphere(params, cfg.d_w);
  Eigen::VectorXd bx =
      cfg.beta_x.size() ? cfg.beta_x : Eigen::VectorXd(unit_sphere(params, cfg.d_x));
  check_vector(bx, cfg.d_x, "beta_x");
  Eigen::VectorXd bw =
      cfg.beta_w.size() ? cfg.beta_w : Eigen::VectorXd(unit_sphere(params, cfg.d_w));
  check_vector(bw, cfg.d_w, "beta_w");

  const double c = cfg.corr_strength;
  const double r = std::sqrt(std::max(0.0, 1.0 - c * c));
  auto draw_xw = [=](Rng& rng, double shift, Eigen::VectorXd& x, Eigen::VectorXd& w) {
    double s = shift + rng.normal();
    x = cfg.x_scale * (c * s * u + r * normal_vector(rng, cfg.d_x));
    w = cfg.w_scale * (c * s * v + r * normal_vector(rng, cfg.d_w));
  };
  auto fill_block = [&](std::uint64_t stream, int rows, double shift, bool labeled,
                        Eigen::MatrixXd& x, Eigen::MatrixXd& w, Eigen::VectorXd& y) {
    Rng rng(derive_seed(seed, stream));
    x.resize(rows, cfg.d_x);
    w.resize(rows, cfg.d_w);
    y.resize(labeled ? rows : 0);
    Eigen::VectorXd xi, wi;
    for (int i = 0; i < rows; ++i) {
      draw_xw(rng, shift, xi, wi);
      x.row(i) = xi;
      w.row(i) = wi;
      if (labeled) {
        double logit = bx.dot(xi) + bw.dot(wi) + cfg.logit_noise_sd * rng.normal();
        y[i] = rng.uniform() < sigmoid(logit) ? 1.0 : 0.0;
      }
    }
  };

  Eigen::MatrixXd xl, wl, xu, wu, xt, wt;
  Eigen::VectorXd yl, yu, yt;
  fill_block(kStreamLabeled, n, 0.0, true, xl, wl, yl);
  fill_block(kStreamUnlabeled, m, cfg.unlabeled_mean, false, xu, wu, yu);
  fill_block(kStreamTest, n_test, 0.0, true, xt, wt, yt);

  Truth truth;
  truth.clean_logit = [bx, bw](const Eigen::MatrixXd& x, const Eigen::MatrixXd& w) {
    return Eigen::VectorXd(x * bx + w * bw);
  };
  truth.sample_joint = [draw_xw, dx = cfg.d_x, dw = cfg.d_w](int count, std::uint64_t s) {
    Rng rng(derive_seed(s, kStreamJoint));
    Eigen::MatrixXd x(count, dx), w(count, dw);
    Eigen::VectorXd xi, wi;
    for (int i = 0; i < count; ++i) {
      draw_xw(rng, 0.0, xi, wi);
      x.row(i) = xi;
      w.row(i) = wi;
    }
    return std::make_pair(x, w);
  };
  truth.params = {
      {"generator", "logit_diag"},
      {"d_x", cfg.d_x},
      {"d_w", cfg.d_w},
      {"corr_strength", c},
      {"x_scale", cfg.x_scale},
      {"w_scale", cfg.w_scale},
      {"logit_noise_sd", cfg.logit_noise_sd},
      {"unlabeled_mean", cfg.unlabeled_mean},
      {"unlabeled_mean_interpretation",
       "mean shift of the shared latent factor in the unlabeled pool"},
      {"latent_dir_x", to_std(u)},
      {"latent_dir_w", to_std(v)},
      {"beta_x", to_std(bx)},
      {"beta_w", to_std(bw)},
      {"seed", seed},
  };

  return SyntheticData{
      Dataset(std::move(xl), std::move(wl), std::move(yl), std::move(xu), std::move(wu),
              TaskKind::binary),
      Dataset(std::move(xt), std::move(wt), std::move(yt), Eigen::MatrixXd(0, cfg.d_x),
              Eigen::MatrixXd(0, cfg.d_w), TaskKind::binary),
      std::move(truth)};
}

}  // namespace coupled
