#include "coupled/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "coupled/errors.hpp"
#include "coupled/rng.hpp"
#include "coupled/text.hpp"

namespace coupled {

namespace {

void require_finite(const Eigen::MatrixXd& mat, const char* what) {
  if (!mat.allFinite()) throw ConfigError(std::string(what) + " contains non-finite values");
}

std::vector<std::string> default_names(const std::string& prefix, int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i));
  return names;
}

}  // namespace

std::string task_kind_name(TaskKind kind) {
  return kind == TaskKind::regression ? "regression" : "binary";
}

TaskKind task_kind_from_name(const std::string& name) {
  if (name == "regression") return TaskKind::regression;
  if (name == "binary") return TaskKind::binary;
  throw ConfigError("unknown task kind '" + name + "'");
}

Dataset::Dataset(Eigen::MatrixXd x_labeled, Eigen::MatrixXd w_labeled, Eigen::VectorXd y_labeled,
                 Eigen::MatrixXd x_unlabeled, Eigen::MatrixXd w_unlabeled, TaskKind kind)
    : x_labeled_(std::move(x_labeled)),
      w_labeled_(std::move(w_labeled)),
      y_labeled_(std::move(y_labeled)),
      x_unlabeled_(std::move(x_unlabeled)),
      w_unlabeled_(std::move(w_unlabeled)),
      kind_(kind) {
  if (x_labeled_.rows() < 1) throw ConfigError("dataset needs at least one labeled row");
  if (x_labeled_.cols() < 1) throw ConfigError("dataset needs at least one deployment feature");
  if (w_labeled_.rows() != x_labeled_.rows()) {
    // An unlabeled-shaped W block here means privileged values are missing for
    // labeled rows, which the training objectives cannot absorb.
    throw ConfigError("labeled X and W row counts differ");
  }
  if (y_labeled_.size() != x_labeled_.rows()) throw ConfigError("labeled X and y sizes differ");
  if (x_unlabeled_.cols() != x_labeled_.cols()) throw ConfigError("X column counts differ between blocks");
  if (w_unlabeled_.rows() != x_unlabeled_.rows()) throw ConfigError("unlabeled X and W row counts differ");
  if (w_unlabeled_.cols() != w_labeled_.cols()) throw ConfigError("W column counts differ between blocks");
  require_finite(x_labeled_, "labeled X");
  require_finite(w_labeled_, "labeled W");
  require_finite(y_labeled_, "labeled y");
  require_finite(x_unlabeled_, "unlabeled X");
  require_finite(w_unlabeled_, "unlabeled W");
  if (kind_ == TaskKind::binary) {
    for (int i = 0; i < y_labeled_.size(); ++i) {
      double y = y_labeled_[i];
      if (y != 0.0 && y != 1.0) throw ConfigError("binary task labels must be 0 or 1");
    }
  }
  x_names = default_names("x", dim_x());
  w_names = default_names("w", dim_w());
}

Eigen::MatrixXd Dataset::z_labeled() const {
  Eigen::MatrixXd z(n(), dim_z());
  z.leftCols(dim_x()) = x_labeled_;
  z.rightCols(dim_w()) = w_labeled_;
  return z;
}

Eigen::MatrixXd Dataset::z_unlabeled() const {
  Eigen::MatrixXd z(m(), dim_z());
  z.leftCols(dim_x()) = x_unlabeled_;
  z.rightCols(dim_w()) = w_unlabeled_;
  return z;
}

Eigen::MatrixXd Dataset::x_all() const {
  Eigen::MatrixXd x(total(), dim_x());
  x.topRows(n()) = x_labeled_;
  x.bottomRows(m()) = x_unlabeled_;
  return x;
}

Eigen::MatrixXd Dataset::z_all() const {
  Eigen::MatrixXd z(total(), dim_z());
  z.topRows(n()) = z_labeled();
  z.bottomRows(m()) = z_unlabeled();
  return z;
}

Dataset Dataset::labeled_subset(const std::vector<int>& rows) const {
  Eigen::MatrixXd x(rows.size(), dim_x());
  Eigen::MatrixXd w(rows.size(), dim_w());
  Eigen::VectorXd y(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    int r = rows[i];
    if (r < 0 || r >= n()) throw ConfigError("labeled_subset: row index out of range");
    x.row(i) = x_labeled_.row(r);
    w.row(i) = w_labeled_.row(r);
    y[i] = y_labeled_[r];
  }
  return with_labeled(std::move(x), std::move(w), std::move(y));
}

Dataset Dataset::with_labeled(Eigen::MatrixXd x, Eigen::MatrixXd w, Eigen::VectorXd y) const {
  Dataset out(std::move(x), std::move(w), std::move(y), x_unlabeled_, w_unlabeled_, kind_);
  out.x_names = x_names;
  out.w_names = w_names;
  out.y_name = y_name;
  return out;
}

// ---------------------------------------------------------------------------
// CSV

LoadedCsv load_csv(const std::string& path, const ColumnSpec& spec) {
  if (spec.deployment_cols.empty()) throw ConfigError("column spec needs at least one deployment column");
  if (spec.label_col.empty()) throw ConfigError("column spec needs a label column");

  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError(path + ": empty file");
  std::vector<std::string> header = split_csv_line(line);

  auto find_col = [&](const std::string& name) {
    int found = -1;
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        if (found >= 0) throw DataError(path + ": duplicate column '" + name + "'");
        found = static_cast<int>(i);
      }
    }
    if (found < 0) throw DataError(path + ": missing column '" + name + "'");
    return found;
  };

  std::vector<int> x_idx, w_idx;
  for (const auto& c : spec.deployment_cols) x_idx.push_back(find_col(c));
  for (const auto& c : spec.privileged_cols) w_idx.push_back(find_col(c));
  int y_idx = find_col(spec.label_col);
  int g_idx = spec.group_col.empty() ? -1 : find_col(spec.group_col);

  std::vector<Eigen::VectorXd> lab_x, lab_w, unl_x, unl_w;
  std::vector<double> lab_y;
  std::vector<std::string> lab_groups;

  int row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || (line.size() == 1 && line[0] == '\r')) continue;
    std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw DataError(path + " row " + std::to_string(row_no) + ": expected " +
                      std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()));
    }
    auto where = [&](const std::string& col) {
      return path + " row " + std::to_string(row_no) + " column '" + col + "'";
    };
    Eigen::VectorXd x(x_idx.size()), w(w_idx.size());
    for (std::size_t j = 0; j < x_idx.size(); ++j) {
      x[j] = parse_finite_double(cells[x_idx[j]], where(spec.deployment_cols[j]));
    }
    for (std::size_t j = 0; j < w_idx.size(); ++j) {
      w[j] = parse_finite_double(cells[w_idx[j]], where(spec.privileged_cols[j]));
    }
    const std::string& y_cell = cells[y_idx];
    if (y_cell.empty()) {
      unl_x.push_back(std::move(x));
      unl_w.push_back(std::move(w));
    } else {
      double y = parse_finite_double(y_cell, where(spec.label_col));
      if (spec.kind == TaskKind::binary && y != 0.0 && y != 1.0) {
        throw DataError(where(spec.label_col) + ": binary label must be 0 or 1, got '" + y_cell + "'");
      }
      lab_x.push_back(std::move(x));
      lab_w.push_back(std::move(w));
      lab_y.push_back(y);
      if (g_idx >= 0) lab_groups.push_back(cells[g_idx]);
    }
  }
  if (lab_x.empty()) throw DataError(path + ": no labeled rows (every label cell is empty)");

  auto stack = [](const std::vector<Eigen::VectorXd>& rows, int cols) {
    Eigen::MatrixXd out(rows.size(), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(i) = rows[i];
    return out;
  };
  int dx = static_cast<int>(x_idx.size());
  int dw = static_cast<int>(w_idx.size());
  Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(lab_y.data(), lab_y.size());

  try {
    Dataset ds(stack(lab_x, dx), stack(lab_w, dw), y, stack(unl_x, dx), stack(unl_w, dw), spec.kind);
    ds.x_names = spec.deployment_cols;
    ds.w_names = spec.privileged_cols;
    ds.y_name = spec.label_col;
    return LoadedCsv{std::move(ds), std::move(lab_groups)};
  } catch (const ConfigError& e) {
    throw DataError(path + ": " + e.what());  // content problems surface as data errors
  }
}

void write_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  for (int j = 0; j < ds.dim_x(); ++j) out << ds.x_names[j] << ',';
  for (int j = 0; j < ds.dim_w(); ++j) out << ds.w_names[j] << ',';
  out << ds.y_name << '\n';
  auto write_row = [&](const Eigen::MatrixXd& x, const Eigen::MatrixXd& w, int i, const double* y) {
    for (int j = 0; j < x.cols(); ++j) out << format_double(x(i, j)) << ',';
    for (int j = 0; j < w.cols(); ++j) out << format_double(w(i, j)) << ',';
    if (y) out << format_double(*y);
    out << '\n';
  };
  for (int i = 0; i < ds.n(); ++i) {
    double y = ds.y_labeled()[i];
    write_row(ds.x_labeled(), ds.w_labeled(), i, &y);
  }
  for (int i = 0; i < ds.m(); ++i) {
    write_row(ds.x_unlabeled(), ds.w_unlabeled(), i, nullptr);
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------
// Split

Dataset make_semisupervised_split(const Dataset& full, int n_labeled, std::uint64_t seed,
                                  bool stratify) {
  if (full.m() != 0) throw ConfigError("split input must be fully labeled (m == 0)");
  int total = full.n();
  if (n_labeled < 1 || n_labeled > total) throw ConfigError("n_labeled out of range");

  std::vector<int> keep;  // labeled row indices
  Rng rng(derive_seed(seed, 17));
  if (stratify) {
    if (full.kind() != TaskKind::binary) throw ConfigError("stratified split requires a binary task");
    std::vector<int> by_class[2];
    for (int i = 0; i < total; ++i) by_class[full.y_labeled()[i] == 1.0 ? 1 : 0].push_back(i);
    // Largest remainder allocation of n_labeled across the two classes.
    double quota0 = static_cast<double>(n_labeled) * by_class[0].size() / total;
    int take0 = static_cast<int>(std::floor(quota0));
    int take1 = static_cast<int>(std::floor(static_cast<double>(n_labeled) * by_class[1].size() / total));
    int leftover = n_labeled - take0 - take1;
    double rem0 = quota0 - take0;
    double rem1 = (static_cast<double>(n_labeled) * by_class[1].size() / total) - take1;
    while (leftover-- > 0) {
      if (rem0 > rem1 || (rem0 == rem1 && take0 <= take1)) { ++take0; rem0 = -1; }
      else { ++take1; rem1 = -1; }
    }
    take0 = std::min<int>(take0, by_class[0].size());
    take1 = std::min<int>(take1, by_class[1].size());
    // Rebalance if a class ran out of rows.
    int short_by = n_labeled - take0 - take1;
    if (short_by > 0) {
      if (take0 < static_cast<int>(by_class[0].size())) take0 += short_by; else take1 += short_by;
    }
    for (int c = 0; c < 2; ++c) {
      int take = c == 0 ? take0 : take1;
      std::vector<int> chosen = rng.sample_without_replacement(static_cast<int>(by_class[c].size()), take);
      for (int p : chosen) keep.push_back(by_class[c][p]);
    }
  } else {
    std::vector<int> chosen = rng.sample_without_replacement(total, n_labeled);
    keep = chosen;
  }
  std::sort(keep.begin(), keep.end());

  std::vector<bool> is_labeled(total, false);
  for (int i : keep) is_labeled[i] = true;

  Eigen::MatrixXd xl(n_labeled, full.dim_x()), wl(n_labeled, full.dim_w());
  Eigen::VectorXd yl(n_labeled);
  Eigen::MatrixXd xu(total - n_labeled, full.dim_x()), wu(total - n_labeled, full.dim_w());
  int li = 0, ui = 0;
  for (int i = 0; i < total; ++i) {
    if (is_labeled[i]) {
      xl.row(li) = full.x_labeled().row(i);
      wl.row(li) = full.w_labeled().row(i);
      yl[li++] = full.y_labeled()[i];
    } else {
      xu.row(ui) = full.x_labeled().row(i);
      wu.row(ui++) = full.w_labeled().row(i);
    }
  }
  Dataset out(std::move(xl), std::move(wl), std::move(yl), std::move(xu), std::move(wu), full.kind());
  out.x_names = full.x_names;
  out.w_names = full.w_names;
  out.y_name = full.y_name;
  return out;
}

// ---------------------------------------------------------------------------
// Standardization

namespace {

void fit_columns(const Eigen::MatrixXd& all, Eigen::VectorXd& mean, Eigen::VectorXd& scale,
                 std::vector<bool>& constant) {
  int cols = static_cast<int>(all.cols());
  mean.resize(cols);
  scale.resize(cols);
  constant.assign(cols, false);
  for (int j = 0; j < cols; ++j) {
    double mu = all.col(j).mean();
    double var = (all.col(j).array() - mu).square().sum() / all.rows();  // population variance
    double sd = std::sqrt(var);
    if (sd == 0.0) {
      constant[j] = true;  // passed through unchanged
      mean[j] = 0.0;
      scale[j] = 1.0;
    } else {
      mean[j] = mu;
      scale[j] = sd;
    }
  }
}

Eigen::MatrixXd apply_columns(const Eigen::MatrixXd& mat, const Eigen::VectorXd& mean,
                              const Eigen::VectorXd& scale, bool inverse) {
  Eigen::MatrixXd out = mat;
  for (int j = 0; j < out.cols(); ++j) {
    if (inverse) {
      out.col(j) = out.col(j).array() * scale[j] + mean[j];
    } else {
      out.col(j) = (out.col(j).array() - mean[j]) / scale[j];
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXd Standardizer::transform_x(const Eigen::MatrixXd& x) const {
  return apply_columns(x, x_mean, x_scale, false);
}
Eigen::MatrixXd Standardizer::transform_w(const Eigen::MatrixXd& w) const {
  return apply_columns(w, w_mean, w_scale, false);
}
Eigen::VectorXd Standardizer::transform_y(const Eigen::VectorXd& y) const {
  if (policy != StandardizePolicy::features_and_label || y_constant) return y;
  return (y.array() - y_mean) / y_scale;
}
Eigen::MatrixXd Standardizer::inverse_x(const Eigen::MatrixXd& x) const {
  return apply_columns(x, x_mean, x_scale, true);
}
Eigen::MatrixXd Standardizer::inverse_w(const Eigen::MatrixXd& w) const {
  return apply_columns(w, w_mean, w_scale, true);
}
Eigen::VectorXd Standardizer::inverse_y(const Eigen::VectorXd& y) const {
  if (policy != StandardizePolicy::features_and_label || y_constant) return y;
  return y.array() * y_scale + y_mean;
}

std::pair<Dataset, Standardizer> standardize(const Dataset& ds, StandardizePolicy policy) {
  if (policy == StandardizePolicy::features_and_label && ds.kind() == TaskKind::binary) {
    throw ConfigError("label standardization is not defined for binary tasks");
  }
  Standardizer st;
  st.policy = policy;
  fit_columns(ds.x_all(), st.x_mean, st.x_scale, st.x_constant);
  if (ds.dim_w() > 0) {
    Eigen::MatrixXd w_all(ds.total(), ds.dim_w());
    w_all.topRows(ds.n()) = ds.w_labeled();
    w_all.bottomRows(ds.m()) = ds.w_unlabeled();
    fit_columns(w_all, st.w_mean, st.w_scale, st.w_constant);
  } else {
    st.w_mean.resize(0);
    st.w_scale.resize(0);
  }
  if (policy == StandardizePolicy::features_and_label) {
    double mu = ds.y_labeled().mean();
    double sd = std::sqrt((ds.y_labeled().array() - mu).square().sum() / ds.n());
    if (sd == 0.0) {
      st.y_constant = true;
      st.y_mean = 0.0;
      st.y_scale = 1.0;
    } else {
      st.y_mean = mu;
      st.y_scale = sd;
    }
  }
  Dataset out(st.transform_x(ds.x_labeled()), st.transform_w(ds.w_labeled()),
              st.transform_y(ds.y_labeled()), st.transform_x(ds.x_unlabeled()),
              st.transform_w(ds.w_unlabeled()), ds.kind());
  out.x_names = ds.x_names;
  out.w_names = ds.w_names;
  out.y_name = ds.y_name;
  return {std::move(out), std::move(st)};
}

}  // namespace coupled
