#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "rlscale/allocate.hpp"
#include "rlscale/bootstrap.hpp"
#include "rlscale/preprocess.hpp"
#include "rlscale/rng.hpp"
#include "rlscale/scaling_laws.hpp"
#include "rlscale/synth.hpp"

using namespace rlscale;

namespace {

const DataFit kLaw = DataFit::from_factored({1e5, 2.0, 0.8, 2e6, 0.6});

void BM_Isotonic(benchmark::State& state) {
  CounterRng rng(stream_key(1));
  std::vector<double> y(static_cast<std::size_t>(state.range(0)));
  double level = 0.0;
  for (auto& v : y) {
    level += rng.normal();
    v = level;
  }
  for (auto _ : state) benchmark::DoNotOptimize(isotonic(y));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Isotonic)->RangeMultiplier(8)->Range(64, 32768)->Complexity();

void BM_FitDataThreshold(benchmark::State& state) {
  std::vector<EfficiencyPoint> pts;
  CounterRng rng(stream_key(2));
  for (double s : {0.5, 1.0, 2.0, 4.0, 8.0}) {
    for (double n : {1e5, 4e5, 1.6e6, 6.4e6, 2.56e7}) {
      pts.push_back({"t", s, n, 64, 500, eval_data_fit(kLaw, s, n) * std::exp(0.05 * rng.normal()), std::nullopt});
    }
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_data_threshold(pts));
}
BENCHMARK(BM_FitDataThreshold)->Unit(benchmark::kMillisecond);

void BM_FitBatchRule(benchmark::State& state) {
  const BatchRuleFit truth{1680.64, 0.30, 6.01e7, 1.12};
  std::vector<BatchObservation> obs;
  for (double s : {1.0, 2.0, 4.0, 8.0}) {
    for (double n : {1e6, 4e6, 1.6e7, 6.4e7}) obs.push_back({s, n, eval_batch_rule(truth, s, n)});
  }
  for (auto _ : state) benchmark::DoNotOptimize(fit_batch_rule(obs));
}
BENCHMARK(BM_FitBatchRule)->Unit(benchmark::kMillisecond);

void BM_MinimizeBudget(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(minimize_budget(kLaw, ComputeModel{}, 1e8));
}
BENCHMARK(BM_MinimizeBudget)->Unit(benchmark::kMicrosecond);

void BM_ComputeBudget(benchmark::State& state) {
  const double c0 = 100.0 * minimal_compute(kLaw, ComputeModel{});
  for (auto _ : state) benchmark::DoNotOptimize(optimal_for_compute_budget(kLaw, ComputeModel{}, c0));
}
BENCHMARK(BM_ComputeBudget)->Unit(benchmark::kMicrosecond);

void BM_BootstrapBestBatch(benchmark::State& state) {
  SynthSpec spec;
  spec.meta.task_id = "t";
  spec.meta.j_min = 300;
  spec.meta.j_max = 780;
  spec.meta.delta = 1e8;
  spec.truth_data = DataFit::from_factored({1e5, 2.0, 0.8, 2e6, 0.6}, 780.0);
  spec.truth_batch = BatchRuleFit{1680.64, 0.30, 6.01e7, 1.12};
  spec.sigma_grid = {1.0};
  spec.n_grid = {1e6};
  spec.b_grid = {64, 128, 256, 512, 1024};
  spec.seeds_per_cell = 5;
  spec.noise_sigma = 0.1;
  spec.eval_points = 500;
  const auto curves = process_runset(gen_learning_curves(spec));
  const auto groups = group_by_config(curves);
  const auto grid = threshold_grid(spec.meta, 20);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_best_batch(groups.front().arms, grid, BootstrapConfig{100, 7}));
  }
}
BENCHMARK(BM_BootstrapBestBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
