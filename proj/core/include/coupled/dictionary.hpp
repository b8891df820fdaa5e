#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "coupled/dataset.hpp"
#include "coupled/star_space.hpp"

namespace coupled {

enum class DictKind { raw, random_projection, rbf, custom };

std::string dict_kind_name(DictKind kind);
DictKind dict_kind_from_name(const std::string& name);

// Everything needed to re-evaluate one atom at new points. `scale` is the
// normalization factor applied on top of the raw atom.
struct AtomDesc {
  DictKind kind = DictKind::custom;
  int index = -1;            // raw: coordinate index, -1 for the constant atom
  Eigen::VectorXd vec;       // random_projection: direction; rbf: center
  double gamma = 0.0;        // rbf bandwidth
  double scale = 1.0;
};

// Atom values at arbitrary points (columns must match the block the atom was
// built for). Errors for custom atoms, which exist only on training rows.
Eigen::VectorXd eval_atom(const AtomDesc& atom, const Eigen::MatrixXd& points);

struct DictionaryParams {
  AtomBlock block = AtomBlock::f;
  int count = 2048;          // random_projection only
  std::uint64_t seed = 0;
  int rbf_center_cap = 500;  // max unlabeled centers (all labeled points are centers)
  int rbf_median_cap = 600;  // subsample size for the bandwidth heuristic
  double rbf_gamma = 0.0;    // <= 0 selects the median heuristic
};

// Atoms tabulated on the training sample, labeled rows first.
struct Dictionary {
  AtomBlock block = AtomBlock::f;
  DictKind kind = DictKind::custom;
  Eigen::MatrixXd values;         // (n + m) x p
  std::vector<AtomDesc> atoms;    // size p; empty descs for custom dictionaries
  bool normalized = false;
  int dropped = 0;                // zero atoms removed by normalize_atoms

  int size() const { return static_cast<int>(values.cols()); }
};

// raw: coordinate atoms plus one constant atom. random_projection: `count`
// Gaussian directions (unit 1/sqrt(d) entries variance). rbf: Gaussian bumps
// at every labeled point plus up to rbf_center_cap sampled unlabeled points.
Dictionary build_dictionary(DictKind kind, const DictionaryParams& params, const Dataset& ds);

// Training-sample-only atoms from an explicit value matrix.
Dictionary custom_dictionary(AtomBlock block, Eigen::MatrixXd values);

// sqrt of the mean square over all N sample rows.
double pooled_norm(const Eigen::VectorXd& values);

// Rescales every atom to pooled norm exactly 1 and drops zero atoms,
// recording how many were dropped. Errors if nothing survives.
Dictionary normalize_atoms(Dictionary dict);

// 1 / median of pairwise squared distances, computed on at most `cap` rows
// (seeded subsample when the input is larger). Even counts use the mean of
// the two middle values.
double median_heuristic_gamma(const Eigen::MatrixXd& points, int cap, std::uint64_t seed);

}  // namespace coupled
