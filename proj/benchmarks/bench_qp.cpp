#include "peergrid/qp.hpp"

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

namespace {

/// Random box-constrained QP with a diagonally dominant PSD quadratic and
/// a handful of equality rows; shaped like the scheduling blocks.
peergrid::QpProblem random_qp(int n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  peergrid::QpProblem p;
  p.dim = n;
  std::vector<Eigen::Triplet<double>> quad;
  for (int i = 0; i < n; ++i) quad.emplace_back(i, i, 0.5 + u01(rng));
  for (int i = 0; i + 1 < n; i += 3) {
    const double off = 0.2 * (u01(rng) - 0.5);
    quad.emplace_back(i, i + 1, off);
    quad.emplace_back(i + 1, i, off);
  }
  p.quad.resize(n, n);
  p.quad.setFromTriplets(quad.begin(), quad.end());

  p.lin.resize(n);
  for (int i = 0; i < n; ++i) p.lin[i] = 2.0 * u01(rng) - 1.0;

  const int m = n / 8;
  std::vector<Eigen::Triplet<double>> eq;
  p.eq_rhs.resize(m);
  for (int r = 0; r < m; ++r) {
    for (int k = 0; k < 4; ++k) eq.emplace_back(r, (r * 4 + k) % n, 1.0);
    p.eq_rhs[r] = u01(rng);
  }
  p.eq_matrix.resize(m, n);
  p.eq_matrix.setFromTriplets(eq.begin(), eq.end());

  p.lower = Eigen::VectorXd::Constant(n, -1.0);
  p.upper = Eigen::VectorXd::Constant(n, 1.0);
  return p;
}

void bm_solve_qp(benchmark::State& state) {
  const auto problem = random_qp(static_cast<int>(state.range(0)), 17);
  for (auto _ : state) {
    const auto solution = peergrid::solve_qp(problem);
    benchmark::DoNotOptimize(solution.objective);
  }
}
BENCHMARK(bm_solve_qp)->Arg(32)->Arg(128)->Arg(512);

void bm_warm_resolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  peergrid::QpSolver solver(random_qp(n, 17));
  solver.solve();
  Eigen::VectorXd lin = solver.problem().lin;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (auto _ : state) {
    lin[static_cast<int>(rng() % n)] += 0.01 * (u01(rng) - 0.5);
    const auto solution = solver.solve_with_lin(lin);
    benchmark::DoNotOptimize(solution.objective);
  }
}
BENCHMARK(bm_warm_resolve)->Arg(32)->Arg(128)->Arg(512);

}  // namespace

BENCHMARK_MAIN();
