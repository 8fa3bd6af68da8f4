#include <benchmark/benchmark.h>

#include <vector>

#include "mabo/gp.hpp"
#include "mabo/kernels.hpp"
#include "mabo/rng.hpp"
#include "mabo/safe_bo.hpp"

namespace {

using namespace mabo;

KernelSpec agent_kernel() { return spatio_temporal_kernel({0.4, 1.0}, {10.0, 1.0}, {5.0, 1.0}, 50); }

Dataset random_dataset(std::size_t n, std::size_t dims, RandomStream& rng) {
  Dataset d;
  d.noise_std = 0.01;
  for (std::size_t i = 0; i < n; ++i) {
    SpatioTemporalInput x{Eigen::VectorXd(static_cast<Eigen::Index>(dims)), rng.uniform(1.0, 50.0)};
    for (Eigen::Index j = 0; j < x.spatial.size(); ++j) x.spatial[j] = rng.uniform01();
    d.add(std::move(x), rng.uniform(0.0, 1.0));
  }
  return d;
}

void BM_KernelEval(benchmark::State& state) {
  const KernelSpec k = agent_kernel();
  RandomStream rng(1);
  const Dataset d = random_dataset(64, 4, rng);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(eval_spatio_temporal(k, d.inputs[i % 64], d.inputs[(i * 7 + 3) % 64]));
    ++i;
  }
}
BENCHMARK(BM_KernelEval);

void BM_GramMatrix(benchmark::State& state) {
  const KernelSpec k = agent_kernel();
  RandomStream rng(2);
  const Dataset d = random_dataset(static_cast<std::size_t>(state.range(0)), 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(gram(k, d.inputs));
}
BENCHMARK(BM_GramMatrix)->Arg(16)->Arg(64)->Arg(256);

void BM_GpFit(benchmark::State& state) {
  const KernelSpec k = agent_kernel();
  RandomStream rng(3);
  const Dataset d = random_dataset(static_cast<std::size_t>(state.range(0)), 4, rng);
  for (auto _ : state) benchmark::DoNotOptimize(fit(d, k));
}
BENCHMARK(BM_GpFit)->Arg(16)->Arg(64)->Arg(256);

void BM_GpPredictGrid(benchmark::State& state) {
  const KernelSpec k = agent_kernel();
  RandomStream rng(4);
  const Posterior p = fit(random_dataset(static_cast<std::size_t>(state.range(0)), 2, rng), k);
  const ParamGrid grid = ParamGrid::lattice(2, 15, 0.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(p.predict(grid.points(), 25.0));
}
BENCHMARK(BM_GpPredictGrid)->Arg(16)->Arg(64);

void BM_SafeSet(benchmark::State& state) {
  const KernelSpec k = agent_kernel();
  RandomStream rng(5);
  const Posterior p = fit(random_dataset(32, 2, rng), k);
  const ParamGrid grid = ParamGrid::lattice(2, static_cast<std::size_t>(state.range(0)), 0.0, 1.0);
  const std::vector<std::size_t> seeds{grid.size() / 2};
  const double b = beta(p, 1.0, 0.01, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(compute_safe_set(grid, p, b, 1.0, 0.2, seeds, 25.0));
}
BENCHMARK(BM_SafeSet)->Arg(11)->Arg(21);

}  // namespace
BENCHMARK_MAIN();
