#pragma once

#include <Eigen/Dense>
#include <vector>

namespace coupled {

// Incrementally grown orthonormal basis with the R factor of the inserted
// columns. Insertion runs modified Gram-Schmidt plus one reorthogonalization
// pass; a column whose orthogonal part falls below eps_rel times its norm is
// rejected (already spanned).
class QrBasis {
 public:
  explicit QrBasis(int dim, double eps_rel = 1e-10);

  // Returns false (state untouched) when the column is spanned.
  bool insert(const Eigen::VectorXd& column);

  int dim() const { return dim_; }
  int size() const { return k_; }

  // Q^T v (coefficients of the projection in the orthonormal basis).
  Eigen::VectorXd basis_coeffs(const Eigen::VectorXd& v) const;
  // Q Q^T v.
  Eigen::VectorXd project(const Eigen::VectorXd& v) const;
  // Back-substitution R c = y: coefficients over the inserted columns.
  Eigen::VectorXd column_coeffs(const Eigen::VectorXd& y) const;

  Eigen::MatrixXd q() const { return q_.leftCols(k_); }
  Eigen::MatrixXd r() const { return r_.topLeftCorner(k_, k_); }

 private:
  int dim_;
  double eps_rel_;
  int k_ = 0;
  Eigen::MatrixXd q_;  // dim x capacity
  Eigen::MatrixXd r_;  // capacity x capacity, upper triangular
};

// Residualized-candidate cache for one dictionary block. Holds every
// candidate's component orthogonal to the current selected span and scores
// candidates against a residual in O(dim) each. All O(dim) passes over a
// candidate are counted in scans().
class CandidatePool {
 public:
  // candidates: embed_dim x p, one column per unsigned atom.
  CandidatePool(Eigen::MatrixXd candidates, double eps_rel = 1e-10);

  struct Selection {
    bool found = false;
    int index = -1;
    double sign = 1.0;
    double score = 0.0;  // |<residual, a_perp>| / |a_perp|
  };

  // Best eligible candidate for the signed score max_a <r, a_perp> / |a_perp|
  // over both signs of each atom.
  Selection select_best(const Eigen::VectorXd& residual);

  // Inform the pool that basis gained the orthonormal column q; caches are
  // downdated in one pass per alive candidate. `taken` marks the inserted
  // candidate as used.
  void orthogonalize_against(const Eigen::VectorXd& q);
  void mark_taken(int index);

  int alive() const;
  long scans() const { return scans_; }
  const Eigen::VectorXd& residualized(int index) const { return cache_[index]; }

 private:
  double eps_rel_;
  std::vector<Eigen::VectorXd> cache_;   // a - P_span a
  std::vector<double> norm2_;           // |a_perp|^2, downdated then refreshed on drift
  std::vector<double> orig_norm_;       // |a| at construction
  std::vector<bool> taken_;
  long scans_ = 0;
};

}  // namespace coupled
