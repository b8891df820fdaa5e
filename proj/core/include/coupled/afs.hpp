#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>
#include <string>
#include <utility>
#include <vector>

#include "coupled/dataset.hpp"
#include "coupled/dictionary.hpp"
#include "coupled/star_space.hpp"

namespace coupled {

struct AfsConfig {
  double eps_proj = 1e-10;     // eligibility floor, relative to the atom's embedded norm
  double residual_tol = 1e-12; // stop once the residual norm falls below this
};

struct SelectedAtom {
  AtomBlock block = AtomBlock::f;
  int dict_index = -1;   // column in the originating dictionary
  double sign = 1.0;     // sign chosen at selection time
  double coefficient = 0.0;  // for the unsigned normalized atom (sign folded in)
  AtomDesc desc;
};

struct AfsModel {
  double lambda = 0.0;
  int iterations = 0;
  std::vector<SelectedAtom> f_atoms;  // in selection order
  std::vector<SelectedAtom> g_atoms;

  Eigen::VectorXd predict_f(const Eigen::MatrixXd& x) const;
  Eigen::VectorXd predict_g(const Eigen::MatrixXd& z) const;
  double f_coefficient_l1() const;
  double g_coefficient_l1() const;

  nlohmann::json to_json() const;
  static AfsModel from_json(const nlohmann::json& j);
};

struct AfsTrace {
  double initial_residual_norm = 0.0;
  std::vector<double> alpha;          // f-step projection gain per iteration
  std::vector<double> beta;           // g-step projection gain per iteration
  std::vector<double> residual_norm;  // after each full iteration
  std::vector<double> objective;      // penalized objective of (f_k, g_k), recomputed from values
  std::vector<long> scans;            // candidate O(embed_dim) passes per iteration
  std::string stop_reason;            // "max_iters" | "residual_tol" | "no_candidates" | "zero_target"
};

// Alternating greedy selection over two normalized dictionaries in the
// embedded geometry. Each iteration: pick the f atom maximizing
// |<r, a_perp>| / |a_perp| (a_perp orthogonal to the current f span), refit f
// on its grown span by projection, then do the same for g against the updated
// residual. Dictionaries must be normalized and tabulated on ds's rows.
std::pair<AfsModel, AfsTrace> run_afs(const Dataset& ds, const Dictionary& dict_f,
                                      const Dictionary& dict_g, double lambda, int max_iters,
                                      const AfsConfig& cfg = {});

// Refits the f coefficients by ridge regression of pooled targets
// (y on labeled rows, g(z) on unlabeled rows) on the selected f atoms; g is
// untouched. All coefficients are penalized. Errors on custom atoms.
AfsModel ridge_refit(const Dataset& ds, const AfsModel& model, double alpha = 1e-3);

}  // namespace coupled
