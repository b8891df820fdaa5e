#include <benchmark/benchmark.h>

#include <Eigen/Dense>

#include "coupled/afs.hpp"
#include "coupled/dataset.hpp"
#include "coupled/dictionary.hpp"
#include "coupled/linear_coupled.hpp"
#include "coupled/qr.hpp"
#include "coupled/rng.hpp"

namespace {

Eigen::MatrixXd gauss(coupled::Rng& rng, int rows, int cols) {
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) out(i, j) = rng.normal();
  return out;
}

coupled::Dataset make_instance(int n, int m, int dx, int dw) {
  coupled::Rng rng(7);
  Eigen::MatrixXd xl = gauss(rng, n, dx), wl = gauss(rng, n, dw);
  Eigen::VectorXd y = gauss(rng, n, 1).col(0);
  Eigen::MatrixXd xu = gauss(rng, m, dx), wu = gauss(rng, m, dw);
  return coupled::Dataset(std::move(xl), std::move(wl), std::move(y), std::move(xu),
                          std::move(wu));
}

}  // namespace

static void BM_SolveCoupledLinear(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  coupled::Dataset ds = make_instance(128, m, 10, 8);
  for (auto _ : state) {
    coupled::CoupledLinearModel model = coupled::solve_coupled_linear(ds, 1.0, 1e-8, 1e-8);
    benchmark::DoNotOptimize(model.objective);
  }
  state.SetItemsProcessed(state.iterations() * (128 + m));
}
BENCHMARK(BM_SolveCoupledLinear)->Arg(256)->Arg(1024)->Arg(4096)->Arg(16384);

static void BM_QrInsert(benchmark::State& state) {
  const int dim = static_cast<int>(state.range(0));
  const int cols = 64;
  coupled::Rng rng(11);
  Eigen::MatrixXd pool = gauss(rng, dim, cols);
  for (auto _ : state) {
    coupled::QrBasis basis(dim);
    for (int j = 0; j < cols; ++j) benchmark::DoNotOptimize(basis.insert(pool.col(j)));
  }
  state.SetItemsProcessed(state.iterations() * cols);
}
BENCHMARK(BM_QrInsert)->Arg(128)->Arg(512)->Arg(2048);

static void BM_RunAfs(benchmark::State& state) {
  const int atoms = static_cast<int>(state.range(0));
  coupled::Dataset ds = make_instance(80, 240, 6, 4);
  coupled::DictionaryParams pf;
  pf.block = coupled::AtomBlock::f;
  pf.count = atoms;
  coupled::DictionaryParams pg;
  pg.block = coupled::AtomBlock::g;
  pg.count = atoms;
  coupled::Dictionary dict_f = coupled::normalize_atoms(
      coupled::build_dictionary(coupled::DictKind::random_projection, pf, ds));
  coupled::Dictionary dict_g = coupled::normalize_atoms(
      coupled::build_dictionary(coupled::DictKind::random_projection, pg, ds));
  for (auto _ : state) {
    auto [model, trace] = coupled::run_afs(ds, dict_f, dict_g, 1.0, 25);
    benchmark::DoNotOptimize(trace.residual_norm.back());
  }
  state.SetItemsProcessed(state.iterations() * atoms);
}
BENCHMARK(BM_RunAfs)->Arg(128)->Arg(512)->Arg(2048);

BENCHMARK_MAIN();
