#pragma once

#include <Eigen/Dense>

namespace coupled {

enum class AtomBlock { f, g };

// Weighted inner-product geometry for pairs (u1, u2) of functions observed on
// n labeled + m unlabeled sample points (labeled rows first, N = n + m):
//
//   <u, v> = (1/N) sum_L u1 v1 + (1/N) sum_U (u1 - u2)(v1 - v2) + (lambda/N) sum_L u2 v2
//
// The penalized training objective of a pair (f, g) against labels y is the
// squared distance to the target pair (y, y) in this geometry. An explicit
// isometric embedding into R^(2n+m) is provided so that search and QR updates
// can run on plain vectors:
//
//   rows 0..n-1      u1(i) / sqrt(N)              (labeled)
//   rows n..N-1      (u1(j) - u2(j)) / sqrt(N)    (unlabeled)
//   rows N..N+n-1    sqrt(lambda) u2(i) / sqrt(N) (labeled)
class StarSpace {
 public:
  StarSpace(int n, int m, double lambda);

  int n() const { return n_; }
  int m() const { return m_; }
  int total() const { return n_ + m_; }
  int embed_dim() const { return 2 * n_ + m_; }
  double lambda() const { return lambda_; }

  // Per-row weights of the three blocks: (1/N, 1/N, lambda/N).
  double weight_labeled() const { return 1.0 / total(); }
  double weight_unlabeled() const { return 1.0 / total(); }
  double weight_labeled_g() const { return lambda_ / total(); }

  double dot(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2, const Eigen::VectorXd& v1,
             const Eigen::VectorXd& v2) const;
  double squared_norm(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const;

  Eigen::VectorXd embed(const Eigen::VectorXd& u1, const Eigen::VectorXd& u2) const;
  // Embeds (values, 0) for the f block or (0, values) for the g block.
  Eigen::VectorXd embed_atom(AtomBlock block, const Eigen::VectorXd& values) const;
  // Embeds the target pair (y, y); the unlabeled extension of y cancels in the
  // geometry, so zeros are used there.
  Eigen::VectorXd make_target(const Eigen::VectorXd& y_labeled) const;

  // (1/N)[ sum_L (y - f)^2 + sum_U (g - f)^2 + lambda sum_L (y - g)^2 ]
  double objective_value(const Eigen::VectorXd& f_vals, const Eigen::VectorXd& g_vals,
                         const Eigen::VectorXd& y_labeled) const;

 private:
  void check_pair(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;
  int n_, m_;
  double lambda_;
};

}  // namespace coupled
