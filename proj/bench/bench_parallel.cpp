// Serial reference versus OpenMP kernels. Thread count follows ENTLAB_THREADS.
#include <benchmark/benchmark.h>

#include "entlab/entanglement.hpp"
#include "entlab/tomography.hpp"

using namespace entlab;

namespace {

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_Bootstrap(benchmark::State& state) {
  const DetectorModel model{0.2, 0.2, 1.0, 22.5, true};
  const auto probes = experimental_probe_set();
  for (auto _ : state) {
    benchmark::DoNotOptimize(bootstrap_errors(model, probes, 100000, 24, 1, mode(state)));
  }
}

void BM_SwapCheck(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(swap_check(1000, 1, mode(state)));
}

void BM_SimulatedSweep(benchmark::State& state) {
  const auto grid = parse_grid("0:1:11");
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_sweep(0.2, 0.2, grid, SimulatedMode{100000, 6, 1}, mode(state)));
  }
}

}  // namespace

BENCHMARK(BM_Bootstrap)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SwapCheck)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimulatedSweep)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
