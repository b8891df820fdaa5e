#include "coupled/star_space.hpp"

#include <cmath>

#include "coupled/errors.hpp"

namespace coupled {

StarSpace::StarSpace(int n, int m, double lambda) : n_(n), m_(m), lambda_(lambda) {
  if (n < 1) throw ConfigError("star space needs n >= 1");
  if (m < 0) throw ConfigError("star space needs m >= 0");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be finite and >= 0");
}

void StarSpace::check_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const {
  if (a.size() != total() || b.size() != total()) {
    throw ConfigError("function values must have length n + m");
  }
}

double StarSpace::dot(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2,
                      const Eigen::VectorXd& v1, const Eigen::VectorXd& v2) const {
  check_pair(u1, u2);
  check_pair(v1, v2);
  const int N = total();
  double lab = u1.head(n_).dot(v1.head(n_));
  double unl = (u1.tail(m_) - u2.tail(m_)).dot(v1.tail(m_) - v2.tail(m_));
  double lab_g = u2.head(n_).dot(v2.head(n_));
  return (lab + unl + lambda_ * lab_g) / N;
}

double StarSpace::squared_norm(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const {
  return dot(u1, u2, u1, u2);
}

Eigen::VectorXd StarSpace::embed(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const {
  check_pair(u1, u2);
  const double root_n = std::sqrt(static_cast<double>(total()));
  Eigen::VectorXd e(embed_dim());
  e.head(n_) = u1.head(n_) / root_n;
  e.segment(n_, m_) = (u1.tail(m_) - u2.tail(m_)) / root_n;
  e.tail(n_) = std::sqrt(lambda_) * u2.head(n_) / root_n;
  return e;
}

Eigen::VectorXd StarSpace::embed_atom(AtomBlock block, const Eigen::VectorXd& values) const {
  if (values.size() != total()) throw ConfigError("atom values must have length n + m");
  const double root_n = std::sqrt(static_cast<double>(total()));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(embed_dim());
  if (block == AtomBlock::f) {
    e.head(n_) = values.head(n_) / root_n;
    e.segment(n_, m_) = values.tail(m_) / root_n;
  } else {
    e.segment(n_, m_) = -values.tail(m_) / root_n;
    e.tail(n_) = std::sqrt(lambda_) * values.head(n_) / root_n;
  }
  return e;
}

Eigen::VectorXd StarSpace::make_target(const Eigen::VectorXd& y_labeled) const {
  if (y_labeled.size() != n_) throw ConfigError("target needs one label per labeled row");
  const double root_n = std::sqrt(static_cast<double>(total()));
  Eigen::VectorXd e = Eigen::VectorXd::Zero(embed_dim());
  e.head(n_) = y_labeled / root_n;
  e.tail(n_) = std::sqrt(lambda_) * y_labeled / root_n;
  return e;
}

double StarSpace::objective_value(const Eigen::VectorXd& f_vals, const Eigen::VectorXd& g_vals,
                                  const Eigen::VectorXd& y_labeled) const {
  check_pair(f_vals, g_vals);
  if (y_labeled.size() != n_) throw ConfigError("objective needs one label per labeled row");
  const int N = total();
  double lab = (y_labeled - f_vals.head(n_)).squaredNorm();
  double unl = (g_vals.tail(m_) - f_vals.tail(m_)).squaredNorm();
  double lab_g = (y_labeled - g_vals.head(n_)).squaredNorm();
  return (lab + unl + lambda_ * lab_g) / N;
}

}  // namespace coupled
