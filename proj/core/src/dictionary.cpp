#include "coupled/dictionary.hpp"

#include <algorithm>
#include <cmath>

#include "coupled/errors.hpp"
#include "coupled/rng.hpp"

namespace coupled {

std::string dict_kind_name(DictKind kind) {
  switch (kind) {
    case DictKind::raw: return "raw";
    case DictKind::random_projection: return "random_projection";
    case DictKind::rbf: return "rbf";
    case DictKind::custom: return "custom";
  }
  return "custom";
}

DictKind dict_kind_from_name(const std::string& name) {
  if (name == "raw") return DictKind::raw;
  if (name == "random_projection") return DictKind::random_projection;
  if (name == "rbf") return DictKind::rbf;
  if (name == "custom") return DictKind::custom;
  throw ConfigError("unknown dictionary kind '" + name + "'");
}

Eigen::VectorXd eval_atom(const AtomDesc& atom, const Eigen::MatrixXd& points) {
  switch (atom.kind) {
    case DictKind::raw:
      if (atom.index < 0) return Eigen::VectorXd::Constant(points.rows(), atom.scale);
      if (atom.index >= points.cols()) throw ConfigError("raw atom index out of range");
      return atom.scale * points.col(atom.index);
    case DictKind::random_projection:
      if (atom.vec.size() != points.cols()) throw ConfigError("projection atom dimension mismatch");
      return atom.scale * (points * atom.vec);
    case DictKind::rbf: {
      if (atom.vec.size() != points.cols()) throw ConfigError("rbf atom dimension mismatch");
      Eigen::VectorXd out(points.rows());
      for (int i = 0; i < points.rows(); ++i) {
        out[i] = atom.scale * std::exp(-atom.gamma * (points.row(i).transpose() - atom.vec).squaredNorm());
      }
      return out;
    }
    case DictKind::custom:
      throw ConfigError("custom atoms exist only on their training rows");
  }
  throw ConfigError("bad atom kind");
}

double pooled_norm(const Eigen::VectorXd& values) {
  return std::sqrt(values.squaredNorm() / values.size());
}

double median_heuristic_gamma(const Eigen::MatrixXd& points, int cap, std::uint64_t seed) {
  int rows = static_cast<int>(points.rows());
  if (rows < 2) throw ConfigError("median heuristic needs at least 2 points");
  Eigen::MatrixXd sub;
  if (rows > cap) {
    Rng rng(derive_seed(seed, 101));
    std::vector<int> pick = rng.sample_without_replacement(rows, cap);
    std::sort(pick.begin(), pick.end());
    sub.resize(cap, points.cols());
    for (int i = 0; i < cap; ++i) sub.row(i) = points.row(pick[i]);
  } else {
    sub = points;
  }
  std::vector<double> d2;
  d2.reserve(static_cast<std::size_t>(sub.rows()) * (sub.rows() - 1) / 2);
  for (int i = 0; i < sub.rows(); ++i) {
    for (int j = i + 1; j < sub.rows(); ++j) {
      d2.push_back((sub.row(i) - sub.row(j)).squaredNorm());
    }
  }
  std::sort(d2.begin(), d2.end());
  std::size_t k = d2.size();
  double median = (k % 2 == 1) ? d2[k / 2] : 0.5 * (d2[k / 2 - 1] + d2[k / 2]);
  if (!(median > 0.0)) throw ConfigError("median heuristic: all pairwise distances are zero");
  return 1.0 / median;
}

namespace {

Eigen::MatrixXd block_points(const Dataset& ds, AtomBlock block) {
  return block == AtomBlock::f ? ds.x_all() : ds.z_all();
}

}  // namespace

Dictionary custom_dictionary(AtomBlock block, Eigen::MatrixXd values) {
  Dictionary dict;
  dict.block = block;
  dict.kind = DictKind::custom;
  dict.values = std::move(values);
  dict.atoms.assign(dict.size(), AtomDesc{});
  return dict;
}

Dictionary build_dictionary(DictKind kind, const DictionaryParams& params, const Dataset& ds) {
  Dictionary dict;
  dict.block = params.block;
  dict.kind = kind;
  const Eigen::MatrixXd pts = block_points(ds, params.block);
  const int d = static_cast<int>(pts.cols());
  const int N = static_cast<int>(pts.rows());

  switch (kind) {
    case DictKind::raw: {
      dict.values.resize(N, d + 1);
      dict.atoms.clear();
      AtomDesc constant;
      constant.kind = DictKind::raw;
      constant.index = -1;
      dict.values.col(0).setOnes();
      dict.atoms.push_back(constant);
      for (int j = 0; j < d; ++j) {
        AtomDesc a;
        a.kind = DictKind::raw;
        a.index = j;
        dict.values.col(j + 1) = pts.col(j);
        dict.atoms.push_back(a);
      }
      break;
    }
    case DictKind::random_projection: {
      if (params.count < 1) throw ConfigError("random_projection needs count >= 1");
      Rng rng(derive_seed(params.seed, params.block == AtomBlock::f ? 11 : 12));
      dict.values.resize(N, params.count);
      dict.atoms.clear();
      for (int j = 0; j < params.count; ++j) {
        AtomDesc a;
        a.kind = DictKind::random_projection;
        a.vec.resize(d);
        for (int i = 0; i < d; ++i) a.vec[i] = rng.normal() / std::sqrt(static_cast<double>(d));
        dict.values.col(j) = pts * a.vec;
        dict.atoms.push_back(a);
      }
      break;
    }
    case DictKind::rbf: {
      double gamma = params.rbf_gamma > 0.0
                         ? params.rbf_gamma
                         : median_heuristic_gamma(pts, params.rbf_median_cap, params.seed);
      std::vector<int> centers;
      for (int i = 0; i < ds.n(); ++i) centers.push_back(i);
      int extra = std::min(params.rbf_center_cap, ds.m());
      if (extra > 0) {
        Rng rng(derive_seed(params.seed, params.block == AtomBlock::f ? 21 : 22));
        std::vector<int> pick = rng.sample_without_replacement(ds.m(), extra);
        std::sort(pick.begin(), pick.end());
        for (int u : pick) centers.push_back(ds.n() + u);
      }
      dict.values.resize(N, centers.size());
      dict.atoms.clear();
      for (std::size_t j = 0; j < centers.size(); ++j) {
        AtomDesc a;
        a.kind = DictKind::rbf;
        a.gamma = gamma;
        a.vec = pts.row(centers[j]).transpose();
        for (int i = 0; i < N; ++i) {
          dict.values(i, j) = std::exp(-gamma * (pts.row(i) - pts.row(centers[j])).squaredNorm());
        }
        dict.atoms.push_back(a);
      }
      break;
    }
    case DictKind::custom:
      throw ConfigError("use custom_dictionary(block, values) for custom atoms");
  }
  return dict;
}

Dictionary normalize_atoms(Dictionary dict) {
  const int p = dict.size();
  std::vector<int> keep;
  keep.reserve(p);
  std::vector<double> scales;
  for (int j = 0; j < p; ++j) {
    double norm = pooled_norm(dict.values.col(j));
    if (norm > 0.0 && std::isfinite(norm)) {
      keep.push_back(j);
      scales.push_back(1.0 / norm);
    }
  }
  if (keep.empty()) throw ConfigError("normalize_atoms: every atom is identically zero");

  Dictionary out;
  out.block = dict.block;
  out.kind = dict.kind;
  out.normalized = true;
  out.dropped = dict.dropped + (p - static_cast<int>(keep.size()));
  out.values.resize(dict.values.rows(), keep.size());
  out.atoms.reserve(keep.size());
  for (std::size_t c = 0; c < keep.size(); ++c) {
    out.values.col(c) = dict.values.col(keep[c]) * scales[c];
    AtomDesc a = dict.atoms[keep[c]];
    a.scale *= scales[c];
    out.atoms.push_back(a);
  }
  return out;
}

}  // namespace coupled
