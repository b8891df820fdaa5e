#include "coupled/qr.hpp"

#include <cmath>

#include "coupled/errors.hpp"

namespace coupled {

QrBasis::QrBasis(int dim, double eps_rel) : dim_(dim), eps_rel_(eps_rel) {
  if (dim < 1) throw ConfigError("QrBasis needs dim >= 1");
  int cap = std::min(dim, 64);
  q_.resize(dim_, cap);
  r_.setZero(cap, cap);
}

bool QrBasis::insert(const Eigen::VectorXd& column) {
  if (column.size() != dim_) throw ConfigError("QrBasis::insert: wrong dimension");
  const double col_norm = column.norm();
  if (!(col_norm > 0.0)) return false;

  // Modified Gram-Schmidt with one reorthogonalization pass.
  Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(k_);
  Eigen::VectorXd v = column;
  for (int pass = 0; pass < 2; ++pass) {
    for (int i = 0; i < k_; ++i) {
      double c = q_.col(i).dot(v);
      v -= c * q_.col(i);
      coeffs[i] += c;
    }
  }
  double resid = v.norm();
  if (resid <= eps_rel_ * col_norm) return false;

  if (k_ == q_.cols()) {  // grow capacity
    int cap = std::min(dim_, static_cast<int>(q_.cols()) * 2);
    Eigen::MatrixXd q2(dim_, cap);
    q2.leftCols(k_) = q_.leftCols(k_);
    q_.swap(q2);
    Eigen::MatrixXd r2 = Eigen::MatrixXd::Zero(cap, cap);
    r2.topLeftCorner(k_, k_) = r_.topLeftCorner(k_, k_);
    r_.swap(r2);
  }
  q_.col(k_) = v / resid;
  r_.col(k_).head(k_) = coeffs;
  r_(k_, k_) = resid;
  ++k_;
  return true;
}

Eigen::VectorXd QrBasis::basis_coeffs(const Eigen::VectorXd& v) const {
  return q_.leftCols(k_).transpose() * v;
}

Eigen::VectorXd QrBasis::project(const Eigen::VectorXd& v) const {
  if (k_ == 0) return Eigen::VectorXd::Zero(dim_);
  return q_.leftCols(k_) * basis_coeffs(v);
}

Eigen::VectorXd QrBasis::column_coeffs(const Eigen::VectorXd& y) const {
  if (y.size() != k_) throw ConfigError("column_coeffs: wrong size");
  Eigen::VectorXd c(k_);
  for (int i = k_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int j = i + 1; j < k_; ++j) s -= r_(i, j) * c[j];
    c[i] = s / r_(i, i);
  }
  return c;
}

// ---------------------------------------------------------------------------

CandidatePool::CandidatePool(Eigen::MatrixXd candidates, double eps_rel) : eps_rel_(eps_rel) {
  const int p = static_cast<int>(candidates.cols());
  cache_.reserve(p);
  norm2_.reserve(p);
  orig_norm_.reserve(p);
  taken_.assign(p, false);
  for (int j = 0; j < p; ++j) {
    cache_.emplace_back(candidates.col(j));
    double n2 = candidates.col(j).squaredNorm();
    norm2_.push_back(n2);
    orig_norm_.push_back(std::sqrt(n2));
  }
}

CandidatePool::Selection CandidatePool::select_best(const Eigen::VectorXd& residual) {
  Selection best;
  for (std::size_t j = 0; j < cache_.size(); ++j) {
    if (taken_[j]) continue;
    double floor_norm = eps_rel_ * orig_norm_[j];
    if (norm2_[j] <= floor_norm * floor_norm) continue;  // spanned, ineligible
    ++scans_;
    double dot = cache_[j].dot(residual);
    double score = std::abs(dot) / std::sqrt(norm2_[j]);
    if (!best.found || score > best.score) {
      best.found = true;
      best.index = static_cast<int>(j);
      best.sign = dot >= 0.0 ? 1.0 : -1.0;
      best.score = score;
    }
  }
  return best;
}

void CandidatePool::orthogonalize_against(const Eigen::VectorXd& q) {
  for (std::size_t j = 0; j < cache_.size(); ++j) {
    if (taken_[j]) continue;
    ++scans_;
    double c = q.dot(cache_[j]);
    cache_[j] -= c * q;
    norm2_[j] -= c * c;
    // Downdating loses accuracy once most of the mass is gone; refresh then.
    if (norm2_[j] < 1e-8 * orig_norm_[j] * orig_norm_[j]) {
      ++scans_;
      norm2_[j] = cache_[j].squaredNorm();
    }
  }
}

void CandidatePool::mark_taken(int index) { taken_.at(index) = true; }

int CandidatePool::alive() const {
  int count = 0;
  for (std::size_t j = 0; j < taken_.size(); ++j) {
    if (taken_[j]) continue;
    double floor_norm = eps_rel_ * orig_norm_[j];
    if (norm2_[j] > floor_norm * floor_norm) ++count;
  }
  return count;
}

}  // namespace coupled
