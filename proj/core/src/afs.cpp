#include "coupled/afs.hpp"

#include <cmath>

#include "coupled/errors.hpp"
#include "coupled/qr.hpp"

namespace coupled {

namespace {

Eigen::VectorXd atoms_times(const std::vector<SelectedAtom>& atoms, const Eigen::MatrixXd& points) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(points.rows());
  for (const auto& a : atoms) out += a.coefficient * eval_atom(a.desc, points);
  return out;
}

double coefficient_l1(const std::vector<SelectedAtom>& atoms) {
  double total = 0.0;
  for (const auto& a : atoms) total += std::abs(a.coefficient);
  return total;
}

nlohmann::json atom_to_json(const SelectedAtom& a) {
  nlohmann::json j;
  j["block"] = a.block == AtomBlock::f ? "f" : "g";
  j["dict_index"] = a.dict_index;
  j["sign"] = a.sign;
  j["coefficient"] = a.coefficient;
  j["kind"] = dict_kind_name(a.desc.kind);
  j["index"] = a.desc.index;
  j["gamma"] = a.desc.gamma;
  j["scale"] = a.desc.scale;
  j["vec"] = std::vector<double>(a.desc.vec.data(), a.desc.vec.data() + a.desc.vec.size());
  return j;
}

SelectedAtom atom_from_json(const nlohmann::json& j) {
  SelectedAtom a;
  a.block = j.at("block").get<std::string>() == "f" ? AtomBlock::f : AtomBlock::g;
  a.dict_index = j.at("dict_index").get<int>();
  a.sign = j.at("sign").get<double>();
  a.coefficient = j.at("coefficient").get<double>();
  a.desc.kind = dict_kind_from_name(j.at("kind").get<std::string>());
  a.desc.index = j.at("index").get<int>();
  a.desc.gamma = j.at("gamma").get<double>();
  a.desc.scale = j.at("scale").get<double>();
  std::vector<double> vec = j.at("vec").get<std::vector<double>>();
  a.desc.vec = Eigen::Map<Eigen::VectorXd>(vec.data(), vec.size());
  return a;
}

}  // namespace

Eigen::VectorXd AfsModel::predict_f(const Eigen::MatrixXd& x) const { return atoms_times(f_atoms, x); }
Eigen::VectorXd AfsModel::predict_g(const Eigen::MatrixXd& z) const { return atoms_times(g_atoms, z); }
double AfsModel::f_coefficient_l1() const { return coefficient_l1(f_atoms); }
double AfsModel::g_coefficient_l1() const { return coefficient_l1(g_atoms); }

nlohmann::json AfsModel::to_json() const {
  nlohmann::json j;
  j["lambda"] = lambda;
  j["iterations"] = iterations;
  j["f_atoms"] = nlohmann::json::array();
  j["g_atoms"] = nlohmann::json::array();
  for (const auto& a : f_atoms) j["f_atoms"].push_back(atom_to_json(a));
  for (const auto& a : g_atoms) j["g_atoms"].push_back(atom_to_json(a));
  return j;
}

AfsModel AfsModel::from_json(const nlohmann::json& j) {
  AfsModel model;
  model.lambda = j.at("lambda").get<double>();
  model.iterations = j.at("iterations").get<int>();
  for (const auto& a : j.at("f_atoms")) model.f_atoms.push_back(atom_from_json(a));
  for (const auto& a : j.at("g_atoms")) model.g_atoms.push_back(atom_from_json(a));
  return model;
}

std::pair<AfsModel, AfsTrace> run_afs(const Dataset& ds, const Dictionary& dict_f,
                                      const Dictionary& dict_g, double lambda, int max_iters,
                                      const AfsConfig& cfg) {
  if (!dict_f.normalized || !dict_g.normalized) throw ConfigError("run_afs needs normalized dictionaries");
  if (dict_f.block != AtomBlock::f || dict_g.block != AtomBlock::g) {
    throw ConfigError("run_afs: dictionary blocks are swapped");
  }
  if (dict_f.values.rows() != ds.total() || dict_g.values.rows() != ds.total()) {
    throw ConfigError("run_afs: dictionaries were tabulated on different rows");
  }
  if (max_iters < 1) throw ConfigError("run_afs needs max_iters >= 1");

  const StarSpace space(ds.n(), ds.m(), lambda);
  const int dim = space.embed_dim();
  const int pf = dict_f.size();
  const int pg = dict_g.size();

  // Embedded candidate matrices.
  Eigen::MatrixXd emb_f(dim, pf), emb_g(dim, pg);
  for (int j = 0; j < pf; ++j) emb_f.col(j) = space.embed_atom(AtomBlock::f, dict_f.values.col(j));
  for (int j = 0; j < pg; ++j) emb_g.col(j) = space.embed_atom(AtomBlock::g, dict_g.values.col(j));

  AfsModel model;
  model.lambda = lambda;
  AfsTrace trace;

  Eigen::VectorXd target = space.make_target(ds.y_labeled());
  Eigen::VectorXd r = target;
  trace.initial_residual_norm = r.norm();

  QrBasis qr_f(dim, cfg.eps_proj), qr_g(dim, cfg.eps_proj);
  CandidatePool pool_f(emb_f, cfg.eps_proj), pool_g(emb_g, cfg.eps_proj);

  if (trace.initial_residual_norm <= cfg.residual_tol) {
    trace.stop_reason = "zero_target";
    return {model, trace};
  }

  // Selected atom values on training rows (signed), grown one column a step.
  Eigen::MatrixXd vals_f(ds.total(), 0), vals_g(ds.total(), 0);
  Eigen::VectorXd y_f(0), y_g(0);  // accumulated basis coefficients

  auto select_and_insert = [&](CandidatePool& pool, QrBasis& qr, const Dictionary& dict,
                               const Eigen::MatrixXd& emb, Eigen::MatrixXd& vals,
                               Eigen::VectorXd& y_basis, AtomBlock block,
                               std::vector<SelectedAtom>& chosen) -> bool {
    while (true) {
      CandidatePool::Selection sel = pool.select_best(r);
      if (!sel.found) return false;
      Eigen::VectorXd signed_col = sel.sign * emb.col(sel.index);
      if (!qr.insert(signed_col)) {
        // The pool's cached norm said eligible but the exact MGS pass says
        // spanned; retire the atom and rescan.
        pool.mark_taken(sel.index);
        continue;
      }
      pool.mark_taken(sel.index);
      pool.orthogonalize_against(qr.q().col(qr.size() - 1));

      vals.conservativeResize(Eigen::NoChange, vals.cols() + 1);
      vals.col(vals.cols() - 1) = sel.sign * dict.values.col(sel.index);
      y_basis.conservativeResize(y_basis.size() + 1);
      y_basis[y_basis.size() - 1] = 0.0;

      SelectedAtom atom;
      atom.block = block;
      atom.dict_index = sel.index;
      atom.sign = sel.sign;
      atom.desc = dict.atoms[sel.index];
      chosen.push_back(atom);
      return true;
    }
  };

  trace.stop_reason = "max_iters";
  for (int iter = 1; iter <= max_iters; ++iter) {
    if (r.norm() <= cfg.residual_tol) {
      trace.stop_reason = "residual_tol";
      break;
    }
    long scans_before = pool_f.scans() + pool_g.scans();

    // Step 1: grow the f span, then project the residual onto the whole span
    // (the g step below breaks orthogonality, so older coefficients move too).
    bool f_added = select_and_insert(pool_f, qr_f, dict_f, emb_f, vals_f, y_f, AtomBlock::f,
                                     model.f_atoms);
    if (!f_added && iter == 1) {
      throw ConfigError("run_afs: no eligible f atom at the first iteration");
    }
    double alpha_k = 0.0;
    if (qr_f.size() > 0) {
      Eigen::VectorXd coeffs = qr_f.basis_coeffs(r);
      Eigen::VectorXd delta = qr_f.q() * coeffs;
      y_f += coeffs;
      alpha_k = delta.norm();
      r -= delta;
    }

    // Step 2: same for g against the deflated residual.
    bool g_added = select_and_insert(pool_g, qr_g, dict_g, emb_g, vals_g, y_g, AtomBlock::g,
                                     model.g_atoms);
    double beta_k = 0.0;
    if (qr_g.size() > 0) {
      Eigen::VectorXd coeffs = qr_g.basis_coeffs(r);
      Eigen::VectorXd delta = qr_g.q() * coeffs;
      y_g += coeffs;
      beta_k = delta.norm();
      r -= delta;
    }

    // Recover atom coefficients (signed basis) and refresh model values.
    Eigen::VectorXd c_f = qr_f.size() > 0 ? qr_f.column_coeffs(y_f) : Eigen::VectorXd(0);
    Eigen::VectorXd c_g = qr_g.size() > 0 ? qr_g.column_coeffs(y_g) : Eigen::VectorXd(0);
    for (int j = 0; j < c_f.size(); ++j) {
      model.f_atoms[j].coefficient = model.f_atoms[j].sign * c_f[j];
    }
    for (int j = 0; j < c_g.size(); ++j) {
      model.g_atoms[j].coefficient = model.g_atoms[j].sign * c_g[j];
    }
    model.iterations = iter;

    Eigen::VectorXd f_vals = c_f.size() > 0 ? Eigen::VectorXd(vals_f * c_f)
                                            : Eigen::VectorXd::Zero(ds.total());
    Eigen::VectorXd g_vals = c_g.size() > 0 ? Eigen::VectorXd(vals_g * c_g)
                                            : Eigen::VectorXd::Zero(ds.total());

    trace.alpha.push_back(alpha_k);
    trace.beta.push_back(beta_k);
    trace.residual_norm.push_back(r.norm());
    trace.objective.push_back(space.objective_value(f_vals, g_vals, ds.y_labeled()));
    trace.scans.push_back(pool_f.scans() + pool_g.scans() - scans_before);

    if (!f_added && !g_added) {
      trace.stop_reason = "no_candidates";
      break;
    }
  }
  return {model, trace};
}

AfsModel ridge_refit(const Dataset& ds, const AfsModel& model, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be finite and >= 0");
  if (model.f_atoms.empty()) return model;

  const int n = ds.n(), m = ds.m();
  Eigen::MatrixXd design(n + m, model.f_atoms.size());
  Eigen::MatrixXd x_all = ds.x_all();
  for (std::size_t j = 0; j < model.f_atoms.size(); ++j) {
    design.col(j) = eval_atom(model.f_atoms[j].desc, x_all);
  }
  Eigen::VectorXd targets(n + m);
  targets.head(n) = ds.y_labeled();
  targets.tail(m) = model.predict_g(ds.z_unlabeled());

  // All-coefficient ridge (no intercept concept here; atoms are the features).
  Eigen::MatrixXd M = design.transpose() * design;
  M.diagonal().array() += alpha;
  Eigen::VectorXd b = design.transpose() * targets;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
  Eigen::VectorXd c = ldlt.solve(b);
  if (ldlt.info() != Eigen::Success || !c.allFinite() ||
      (M * c - b).norm() > 1e-7 * (b.norm() + 1.0)) {
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(M);
    cod.setThreshold(1e-10);
    c = cod.solve(b);
  }

  AfsModel out = model;
  for (std::size_t j = 0; j < out.f_atoms.size(); ++j) out.f_atoms[j].coefficient = c[j];
  return out;
}

}  // namespace coupled
