#include "peergrid/data_io.hpp"
#include "peergrid/standalone.hpp"
#include "peergrid/trading.hpp"

#include <benchmark/benchmark.h>

namespace {

void bm_standalone_community(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto community = peergrid::generate_synthetic(42, n, 1, {});
  peergrid::GridTariff tariff;
  tariff.p2p_price = Eigen::VectorXd::Constant(24, 0.12);
  for (auto _ : state) {
    const auto results = peergrid::solve_standalone_community(
        community.profiles, community.env, tariff, peergrid::TimeHorizon{24});
    benchmark::DoNotOptimize(results.front().solver_objective);
  }
}
BENCHMARK(bm_standalone_community)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void bm_run_admm(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const auto community = peergrid::generate_synthetic(42, n, 1, {});
  peergrid::GridTariff tariff;
  tariff.p2p_price = Eigen::VectorXd::Constant(24, 0.12);
  peergrid::AdmmSettings settings;
  settings.record_trace = false;
  for (auto _ : state) {
    const auto result = peergrid::run_admm(community.profiles, community.env, tariff,
                                           peergrid::TimeHorizon{24}, settings);
    benchmark::DoNotOptimize(result.iterations);
  }
}
BENCHMARK(bm_run_admm)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
