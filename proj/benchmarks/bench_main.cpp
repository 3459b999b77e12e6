#include <benchmark/benchmark.h>

#include "copmix/algebra.hpp"
#include "copmix/copula.hpp"
#include "copmix/grid.hpp"
#include "copmix/measures.hpp"
#include "copmix/mixing.hpp"
#include "copmix/simulate.hpp"

using namespace copmix;

namespace {

void bm_fold_product_grid(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const GridCopula a = GridCopula::random(m, 11);
  const GridCopula b = GridCopula::random(m, 12);
  for (auto _ : state) benchmark::DoNotOptimize(fold_product_grid(a, b));
}
BENCHMARK(bm_fold_product_grid)->Arg(32)->Arg(64)->Arg(128);

void bm_n_fold_grid(benchmark::State& state) {
  const GridCopula g = GridCopula::random(64, 5);
  const int n = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(n_fold_grid(g, n));
}
BENCHMARK(bm_n_fold_grid)->Arg(4)->Arg(16);

void bm_alpha_exact(benchmark::State& state) {
  const GridCopula g = GridCopula::random(static_cast<int>(state.range(0)), 7);
  for (auto _ : state) benchmark::DoNotOptimize(alpha_coefficient(g));
}
BENCHMARK(bm_alpha_exact)->Arg(8)->Arg(12)->Arg(16);

void bm_alpha_heuristic(benchmark::State& state) {
  const GridCopula g = GridCopula::random(32, 7);
  for (auto _ : state) benchmark::DoNotOptimize(alpha_coefficient(g));
}
BENCHMARK(bm_alpha_heuristic);

void bm_rho_svd(benchmark::State& state) {
  const GridCopula g = GridCopula::random(static_cast<int>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(rho_coefficient(g));
}
BENCHMARK(bm_rho_svd)->Arg(16)->Arg(64);

void bm_spearman_grid(benchmark::State& state) {
  const CopulaExpr c = CopulaExpr::grid(GridCopula::random(128, 9));
  for (auto _ : state) benchmark::DoNotOptimize(spearman_rho(c));
}
BENCHMARK(bm_spearman_grid);

void bm_chain_frechet(benchmark::State& state) {
  const CopulaExpr c = CopulaExpr::mardia(0.3, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(sample_chain(c, 100000, 42));
}
BENCHMARK(bm_chain_frechet);

void bm_chain_grid(benchmark::State& state) {
  const CopulaExpr c = CopulaExpr::grid(GridCopula::random(32, 21));
  for (auto _ : state) benchmark::DoNotOptimize(sample_chain(c, 100000, 42));
}
BENCHMARK(bm_chain_grid);

}  // namespace

BENCHMARK_MAIN();
