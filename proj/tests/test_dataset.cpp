#include <doctest.h>

#include <Eigen/Dense>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "coupled/dataset.hpp"
#include "coupled/errors.hpp"
#include "oracles.hpp"

using coupled::ColumnSpec;
using coupled::Dataset;
using coupled::TaskKind;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "coupled_dataset_tests";
  std::filesystem::create_directories(dir);
  return dir / name;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  out << body;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Dataset tiny_labeled(int rows, TaskKind kind = TaskKind::regression) {
  Eigen::MatrixXd x(rows, 2), w(rows, 1);
  Eigen::VectorXd y(rows);
  for (int i = 0; i < rows; ++i) {
    x(i, 0) = i;
    x(i, 1) = 2.0 * i - 3.0;
    w(i, 0) = 0.5 * i;
    y[i] = kind == TaskKind::binary ? static_cast<double>(i % 2) : 0.1 * i;
  }
  return Dataset(x, w, y, Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 1), kind);
}

}  // namespace

TEST_CASE("constructor validates shapes, finiteness and binary labels") {
  Eigen::MatrixXd x2 = Eigen::MatrixXd::Ones(2, 2);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Ones(2, 1);
  Eigen::VectorXd y2 = Eigen::VectorXd::Ones(2);
  Eigen::MatrixXd empty_x(0, 2), empty_w(0, 1);

  CHECK_NOTHROW(Dataset(x2, w2, y2, empty_x, empty_w));
  // zero labeled rows
  CHECK_THROWS_AS(Dataset(Eigen::MatrixXd(0, 2), Eigen::MatrixXd(0, 1), Eigen::VectorXd(0),
                          empty_x, empty_w),
                  coupled::ConfigError);
  // row count mismatch between x and w
  CHECK_THROWS_AS(Dataset(x2, Eigen::MatrixXd::Ones(3, 1), y2, empty_x, empty_w),
                  coupled::ConfigError);
  // y length mismatch
  CHECK_THROWS_AS(Dataset(x2, w2, Eigen::VectorXd::Ones(3), empty_x, empty_w),
                  coupled::ConfigError);
  // unlabeled column count mismatch even with zero rows
  CHECK_THROWS_AS(Dataset(x2, w2, y2, Eigen::MatrixXd(0, 3), empty_w), coupled::ConfigError);
  // non-finite feature
  Eigen::MatrixXd bad = x2;
  bad(0, 0) = std::nan("");
  CHECK_THROWS_AS(Dataset(bad, w2, y2, empty_x, empty_w), coupled::ConfigError);
  // binary labels must be 0/1
  Eigen::VectorXd y01(2);
  y01 << 0.0, 1.0;
  CHECK_NOTHROW(Dataset(x2, w2, y01, empty_x, empty_w, TaskKind::binary));
  Eigen::VectorXd ybad(2);
  ybad << 0.0, 0.5;
  CHECK_THROWS_AS(Dataset(x2, w2, ybad, empty_x, empty_w, TaskKind::binary),
                  coupled::ConfigError);
}

TEST_CASE("z blocks concatenate x and w; dW = 0 means z equals x") {
  Dataset ds = testsupport::random_dataset(3, 4, 2, 3, 2);
  CHECK(ds.z_labeled().cols() == 5);
  CHECK(ds.z_labeled().leftCols(3) == ds.x_labeled());
  CHECK(ds.z_labeled().rightCols(2) == ds.w_labeled());
  CHECK(ds.z_unlabeled().rows() == 2);
  CHECK(ds.x_all().rows() == 6);
  CHECK(ds.x_all().topRows(4) == ds.x_labeled());

  Eigen::MatrixXd x = Eigen::MatrixXd::Random(3, 2);
  Dataset no_w(x, Eigen::MatrixXd(3, 0), Eigen::VectorXd::Zero(3), Eigen::MatrixXd(0, 2),
               Eigen::MatrixXd(0, 0));
  CHECK(no_w.dim_z() == no_w.dim_x());
  CHECK(no_w.z_labeled() == no_w.x_labeled());
}

TEST_CASE("csv: 3-row file with one empty label cell loads as n=2, m=1") {
  auto path = temp_file("three_rows.csv");
  write_text(path, "a,b,p,y\n1,2,3,4\n5,6,7,\n8,9,10,11\n");
  ColumnSpec spec;
  spec.deployment_cols = {"a", "b"};
  spec.privileged_cols = {"p"};
  spec.label_col = "y";
  auto loaded = coupled::load_csv(path.string(), spec);
  CHECK(loaded.dataset.n() == 2);
  CHECK(loaded.dataset.m() == 1);
  // file order preserved: labeled rows are file rows 1 and 3
  CHECK(loaded.dataset.x_labeled()(0, 0) == 1.0);
  CHECK(loaded.dataset.x_labeled()(1, 0) == 8.0);
  CHECK(loaded.dataset.y_labeled()[1] == 11.0);
  CHECK(loaded.dataset.x_unlabeled()(0, 1) == 6.0);
}

TEST_CASE("csv: missing column error names the column") {
  auto path = temp_file("missing_col.csv");
  write_text(path, "a,y\n1,2\n");
  ColumnSpec spec;
  spec.deployment_cols = {"a"};
  spec.privileged_cols = {"nope"};
  spec.label_col = "y";
  try {
    coupled::load_csv(path.string(), spec);
    FAIL("expected a throw");
  } catch (const coupled::DataError& e) {
    CHECK(std::string(e.what()).find("nope") != std::string::npos);
  }
}

TEST_CASE("csv: bad feature cell error carries row and column") {
  auto path = temp_file("bad_cell.csv");
  write_text(path, "a,y\n1,2\nzzz,3\n");
  ColumnSpec spec;
  spec.deployment_cols = {"a"};
  spec.label_col = "y";
  try {
    coupled::load_csv(path.string(), spec);
    FAIL("expected a throw");
  } catch (const coupled::DataError& e) {
    const std::string what = e.what();
    CHECK(what.find("row 3") != std::string::npos);
    CHECK(what.find("'a'") != std::string::npos);
  }
}

TEST_CASE("csv: all labels empty is an error; binary labels validated") {
  auto path = temp_file("no_labels.csv");
  write_text(path, "a,y\n1,\n2,\n");
  ColumnSpec spec;
  spec.deployment_cols = {"a"};
  spec.label_col = "y";
  CHECK_THROWS_AS(coupled::load_csv(path.string(), spec), coupled::DataError);

  auto path2 = temp_file("bad_binary.csv");
  write_text(path2, "a,y\n1,2\n");
  spec.kind = TaskKind::binary;
  CHECK_THROWS_AS(coupled::load_csv(path2.string(), spec), coupled::DataError);
}

TEST_CASE("csv: group column is captured per labeled row") {
  auto path = temp_file("groups.csv");
  write_text(path, "a,y,subject\n1,2,s1\n3,,s9\n4,5,s2\n");
  ColumnSpec spec;
  spec.deployment_cols = {"a"};
  spec.label_col = "y";
  spec.group_col = "subject";
  auto loaded = coupled::load_csv(path.string(), spec);
  CHECK(loaded.groups == std::vector<std::string>{"s1", "s2"});
}

TEST_CASE("csv: write then load then write round-trips byte-identically") {
  Dataset ds = testsupport::random_dataset(99, 7, 5, 3, 2);
  auto first = temp_file("round1.csv");
  auto second = temp_file("round2.csv");
  coupled::write_csv(ds, first.string());

  ColumnSpec spec;
  spec.deployment_cols = ds.x_names;
  spec.privileged_cols = ds.w_names;
  spec.label_col = ds.y_name;
  auto loaded = coupled::load_csv(first.string(), spec);
  CHECK(loaded.dataset.n() == ds.n());
  CHECK(loaded.dataset.m() == ds.m());
  CHECK(loaded.dataset.x_labeled() == ds.x_labeled());
  CHECK(loaded.dataset.w_unlabeled() == ds.w_unlabeled());

  coupled::write_csv(loaded.dataset, second.string());
  CHECK(read_text(first) == read_text(second));
}

TEST_CASE("split: full labeling keeps everything labeled") {
  Dataset full = tiny_labeled(100);
  Dataset out = coupled::make_semisupervised_split(full, 100, 5);
  CHECK(out.n() == 100);
  CHECK(out.m() == 0);
  CHECK(out.x_labeled() == full.x_labeled());
  CHECK(out.y_labeled() == full.y_labeled());
}

TEST_CASE("split: partition property and determinism") {
  Dataset full = tiny_labeled(60);
  Dataset a = coupled::make_semisupervised_split(full, 25, 7);
  Dataset b = coupled::make_semisupervised_split(full, 25, 7);
  CHECK(a.x_labeled() == b.x_labeled());
  CHECK(a.x_unlabeled() == b.x_unlabeled());
  CHECK(a.n() == 25);
  CHECK(a.m() == 35);

  // Every original row appears exactly once across the two blocks. Row
  // signatures are unique by construction (first x column is the row index).
  std::multiset<double> seen;
  for (int i = 0; i < a.n(); ++i) seen.insert(a.x_labeled()(i, 0));
  for (int i = 0; i < a.m(); ++i) seen.insert(a.x_unlabeled()(i, 0));
  CHECK(seen.size() == 60);
  std::multiset<double> expect;
  for (int i = 0; i < 60; ++i) expect.insert(full.x_labeled()(i, 0));
  CHECK(seen == expect);

  Dataset c = coupled::make_semisupervised_split(full, 25, 8);
  CHECK(c.x_labeled() != a.x_labeled());  // different seed, different subset
}

TEST_CASE("split: stratified keeps the 23/177 class counts of a 200-row full labeling") {
  const int total = 200, pos = 23;
  Eigen::MatrixXd x(total, 1), w(total, 0);
  Eigen::VectorXd y(total);
  for (int i = 0; i < total; ++i) {
    x(i, 0) = i;
    y[i] = i < pos ? 1.0 : 0.0;
  }
  Dataset full(x, w, y, Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 0), TaskKind::binary);
  Dataset out = coupled::make_semisupervised_split(full, 200, 3, true);
  CHECK(out.n() == 200);
  CHECK(out.m() == 0);
  CHECK(static_cast<int>(out.y_labeled().sum()) == 23);
}

TEST_CASE("split: stratified halving allocates largest-remainder per class") {
  const int total = 400, pos = 46;
  Eigen::MatrixXd x(total, 1), w(total, 0);
  Eigen::VectorXd y(total);
  for (int i = 0; i < total; ++i) {
    x(i, 0) = i;
    y[i] = i < pos ? 1.0 : 0.0;
  }
  Dataset full(x, w, y, Eigen::MatrixXd(0, 1), Eigen::MatrixXd(0, 0), TaskKind::binary);
  Dataset out = coupled::make_semisupervised_split(full, 200, 11, true);
  CHECK(out.n() == 200);
  CHECK(static_cast<int>(out.y_labeled().sum()) == 23);  // 46 * (200/400)
}

TEST_CASE("split: stratification on a regression task is rejected") {
  Dataset full = tiny_labeled(10);
  CHECK_THROWS_AS(coupled::make_semisupervised_split(full, 5, 1, true), coupled::ConfigError);
  CHECK_THROWS_AS(coupled::make_semisupervised_split(full, 0, 1), coupled::ConfigError);
  CHECK_THROWS_AS(coupled::make_semisupervised_split(full, 11, 1), coupled::ConfigError);
}

TEST_CASE("standardize: fitted columns have mean 0 and population sd 1") {
  Dataset ds = testsupport::random_dataset(21, 40, 30, 3, 2);
  auto [out, st] = coupled::standardize(ds, coupled::StandardizePolicy::features_only);
  Eigen::MatrixXd all = out.x_all();
  for (int j = 0; j < all.cols(); ++j) {
    CHECK(std::abs(all.col(j).mean()) < 1e-12);
    const double var = (all.col(j).array() - all.col(j).mean()).square().sum() / all.rows();
    CHECK(std::abs(var - 1.0) < 1e-12);
  }
  // label untouched under features_only
  CHECK(out.y_labeled() == ds.y_labeled());
}

TEST_CASE("standardize: the column [1,3] maps to [-1,1] under the population sd") {
  Eigen::MatrixXd x(2, 1);
  x << 1.0, 3.0;
  Dataset ds(x, Eigen::MatrixXd(2, 0), Eigen::VectorXd::Zero(2), Eigen::MatrixXd(0, 1),
             Eigen::MatrixXd(0, 0));
  auto [out, st] = coupled::standardize(ds, coupled::StandardizePolicy::features_only);
  CHECK(out.x_labeled()(0, 0) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(out.x_labeled()(1, 0) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("standardize: constant columns pass through and are flagged") {
  Eigen::MatrixXd x(3, 2);
  x << 0.0, 1.0, 0.0, 2.0, 0.0, 3.0;
  Dataset ds(x, Eigen::MatrixXd(3, 0), Eigen::VectorXd::Zero(3), Eigen::MatrixXd(0, 2),
             Eigen::MatrixXd(0, 0));
  auto [out, st] = coupled::standardize(ds, coupled::StandardizePolicy::features_only);
  CHECK(st.x_constant[0]);
  CHECK_FALSE(st.x_constant[1]);
  CHECK(out.x_labeled().col(0) == x.col(0));
}

TEST_CASE("standardize: apply then invert recovers the original within 1e-10") {
  Dataset ds = testsupport::random_dataset(33, 12, 9, 4, 3);
  auto [out, st] = coupled::standardize(ds, coupled::StandardizePolicy::features_and_label);
  CHECK((st.inverse_x(out.x_labeled()) - ds.x_labeled()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((st.inverse_w(out.w_unlabeled()) - ds.w_unlabeled()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((st.inverse_y(out.y_labeled()) - ds.y_labeled()).cwiseAbs().maxCoeff() < 1e-10);
  // label statistics fitted on labeled rows only
  CHECK(std::abs(out.y_labeled().mean()) < 1e-12);
}

TEST_CASE("standardize: label policy rejected for binary tasks") {
  Dataset ds = tiny_labeled(6, TaskKind::binary);
  CHECK_THROWS_AS(coupled::standardize(ds, coupled::StandardizePolicy::features_and_label),
                  coupled::ConfigError);
  CHECK_NOTHROW(coupled::standardize(ds, coupled::StandardizePolicy::features_only));
}

TEST_CASE("labeled_subset keeps chosen rows and the whole unlabeled block") {
  Dataset ds = testsupport::random_dataset(77, 6, 4, 2, 2);
  Dataset sub = ds.labeled_subset({0, 3, 5});
  CHECK(sub.n() == 3);
  CHECK(sub.m() == 4);
  CHECK(sub.x_labeled().row(1) == ds.x_labeled().row(3));
  CHECK(sub.y_labeled()[2] == ds.y_labeled()[5]);
  CHECK(sub.x_unlabeled() == ds.x_unlabeled());
  CHECK(sub.w_unlabeled() == ds.w_unlabeled());
}
