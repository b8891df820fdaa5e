#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace coupled {

enum class TaskKind { regression, binary };

std::string task_kind_name(TaskKind kind);
TaskKind task_kind_from_name(const std::string& name);

// Column selection for CSV loading. A row whose label cell is empty becomes an
// unlabeled row; every feature cell must parse as a finite number.
struct ColumnSpec {
  std::vector<std::string> deployment_cols;   // X
  std::vector<std::string> privileged_cols;   // W
  std::string label_col;
  TaskKind kind = TaskKind::regression;
  std::string group_col;                      // optional row-group keys (grouped CV)
};

// Semi-supervised sample: n labeled rows carrying (x, w, y) and m unlabeled
// rows carrying (x, w). Unlabeled labels are never stored. Immutable after
// construction; all accessors are const, so concurrent reads are safe.
class Dataset {
 public:
  Dataset(Eigen::MatrixXd x_labeled, Eigen::MatrixXd w_labeled, Eigen::VectorXd y_labeled,
          Eigen::MatrixXd x_unlabeled, Eigen::MatrixXd w_unlabeled,
          TaskKind kind = TaskKind::regression);

  int n() const { return static_cast<int>(x_labeled_.rows()); }
  int m() const { return static_cast<int>(x_unlabeled_.rows()); }
  int total() const { return n() + m(); }
  int dim_x() const { return static_cast<int>(x_labeled_.cols()); }
  int dim_w() const { return static_cast<int>(w_labeled_.cols()); }
  int dim_z() const { return dim_x() + dim_w(); }
  TaskKind kind() const { return kind_; }

  const Eigen::MatrixXd& x_labeled() const { return x_labeled_; }
  const Eigen::MatrixXd& w_labeled() const { return w_labeled_; }
  const Eigen::VectorXd& y_labeled() const { return y_labeled_; }
  const Eigen::MatrixXd& x_unlabeled() const { return x_unlabeled_; }
  const Eigen::MatrixXd& w_unlabeled() const { return w_unlabeled_; }

  Eigen::MatrixXd z_labeled() const;    // [X W] labeled
  Eigen::MatrixXd z_unlabeled() const;  // [X W] unlabeled
  Eigen::MatrixXd x_all() const;        // labeled rows then unlabeled rows
  Eigen::MatrixXd z_all() const;

  // Keeps only the given labeled rows; the unlabeled block carries over whole
  // (CV folds restrict labels but always train against every unlabeled row).
  Dataset labeled_subset(const std::vector<int>& rows) const;
  // New dataset with the same unlabeled block but the given labeled block.
  Dataset with_labeled(Eigen::MatrixXd x, Eigen::MatrixXd w, Eigen::VectorXd y) const;

  std::vector<std::string> x_names;  // defaults x0..; kept for CSV round trips
  std::vector<std::string> w_names;
  std::string y_name = "y";

 private:
  Eigen::MatrixXd x_labeled_, w_labeled_;
  Eigen::VectorXd y_labeled_;
  Eigen::MatrixXd x_unlabeled_, w_unlabeled_;
  TaskKind kind_;
};

struct LoadedCsv {
  Dataset dataset;
  std::vector<std::string> groups;  // group key per labeled row; empty when no group_col
};

LoadedCsv load_csv(const std::string& path, const ColumnSpec& spec);
void write_csv(const Dataset& ds, const std::string& path);

// Splits a fully labeled dataset (m == 0) into n_labeled labeled rows and the
// rest unlabeled, discarding the hidden labels. Deterministic in seed.
// stratify requires a binary task and keeps per-class counts by largest
// remainder allocation.
Dataset make_semisupervised_split(const Dataset& full, int n_labeled, std::uint64_t seed,
                                  bool stratify = false);

enum class StandardizePolicy { features_only, features_and_label };

struct Standardizer {
  StandardizePolicy policy = StandardizePolicy::features_only;
  Eigen::VectorXd x_mean, x_scale;  // scale = population sd; constant columns get scale 1, mean 0
  Eigen::VectorXd w_mean, w_scale;
  std::vector<bool> x_constant, w_constant;
  double y_mean = 0.0, y_scale = 1.0;
  bool y_constant = false;

  Eigen::MatrixXd transform_x(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd transform_w(const Eigen::MatrixXd& w) const;
  Eigen::VectorXd transform_y(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd inverse_x(const Eigen::MatrixXd& x) const;
  Eigen::MatrixXd inverse_w(const Eigen::MatrixXd& w) const;
  Eigen::VectorXd inverse_y(const Eigen::VectorXd& y) const;
};

// Fits on labeled+unlabeled rows for features and on labeled rows for the
// label (only under features_and_label), then returns the transformed dataset.
std::pair<Dataset, Standardizer> standardize(const Dataset& ds, StandardizePolicy policy);

}  // namespace coupled
