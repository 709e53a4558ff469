#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "peergrid/qp.hpp"
#include "support/qp_oracle.hpp"
#include "support/random_qp.hpp"

#include <cmath>
#include <limits>
#include <sstream>

using namespace peergrid;
using peergrid::testing::densify;
using peergrid::testing::enumerate_boxes;
using peergrid::testing::ipm_solve;
using peergrid::testing::random_box_qp;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

QpProblem one_var(double quad, double lin, double lo, double hi) {
  QpProblem p;
  p.dim = 1;
  p.quad.resize(1, 1);
  p.quad.insert(0, 0) = quad;
  p.lin = Eigen::VectorXd::Constant(1, lin);
  p.eq_matrix.resize(0, 1);
  p.eq_rhs.resize(0);
  p.lower = Eigen::VectorXd::Constant(1, lo);
  p.upper = Eigen::VectorXd::Constant(1, hi);
  return p;
}

}  // namespace

TEST_CASE("hand-checked minimizers") {
  // min x^2 - 2x: unconstrained optimum x = 1, objective -1.
  auto sol = solve_qp(one_var(2.0, -2.0, -kInf, kInf));
  CHECK(sol.status == SolveStatus::optimal);
  CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(-1.0).epsilon(1e-9));

  // Same objective clipped to [0, 0.6]: active upper bound.
  sol = solve_qp(one_var(2.0, -2.0, 0.0, 0.6));
  CHECK(sol.status == SolveStatus::optimal);
  CHECK(sol.primal[0] == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(sol.objective == doctest::Approx(-0.84).epsilon(1e-9));

  // min x^2 + y^2 subject to x + y = 2: symmetric split at (1, 1).
  QpProblem p;
  p.dim = 2;
  p.quad.resize(2, 2);
  p.quad.insert(0, 0) = 2.0;
  p.quad.insert(1, 1) = 2.0;
  p.lin = Eigen::VectorXd::Zero(2);
  p.eq_matrix.resize(1, 2);
  p.eq_matrix.insert(0, 0) = 1.0;
  p.eq_matrix.insert(0, 1) = 1.0;
  p.eq_rhs = Eigen::VectorXd::Constant(1, 2.0);
  p.lower = Eigen::VectorXd::Constant(2, -kInf);
  p.upper = Eigen::VectorXd::Constant(2, kInf);
  sol = solve_qp(p);
  CHECK(sol.status == SolveStatus::optimal);
  CHECK(sol.primal[0] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.primal[1] == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(sol.objective == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("contradictory equalities are certified infeasible") {
  QpProblem p = one_var(2.0, 0.0, -kInf, kInf);
  p.eq_matrix.resize(2, 1);
  p.eq_matrix.insert(0, 0) = 1.0;
  p.eq_matrix.insert(1, 0) = 1.0;
  p.eq_rhs.resize(2);
  p.eq_rhs << 0.0, 1.0;
  const auto sol = solve_qp(p);
  CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("bound-box emptiness is certified infeasible") {
  // x = 0.5 with x confined to [2, 3].
  QpProblem p = one_var(2.0, 0.0, 2.0, 3.0);
  p.eq_matrix.resize(1, 1);
  p.eq_matrix.insert(0, 0) = 1.0;
  p.eq_rhs = Eigen::VectorXd::Constant(1, 0.5);
  const auto sol = solve_qp(p);
  CHECK(sol.status == SolveStatus::infeasible);
}

TEST_CASE("three-way agreement with both oracles on small instances") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const int dim = 2 + static_cast<int>(seed % 7);
    const int eq = static_cast<int>(seed % 3);
    const QpProblem p = random_box_qp(seed, dim, eq);
    CAPTURE(seed);

    const auto sol = solve_qp(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.kkt_residual <= 1e-8);

    const auto dense = densify(p);
    const auto brute = enumerate_boxes(dense);
    REQUIRE(brute.converged);
    const auto ipm = ipm_solve(dense);
    REQUIRE(ipm.converged);

    CHECK(std::abs(brute.objective - ipm.objective) <=
          1e-6 * (1.0 + std::abs(brute.objective)));
    CHECK(std::abs(sol.objective - brute.objective) <=
          1e-6 * (1.0 + std::abs(brute.objective)));
  }
}

TEST_CASE("agrees with the interior-point oracle up to dim 50") {
  for (std::uint64_t seed = 100; seed < 140; ++seed) {
    const int dim = 5 + static_cast<int>((seed * 7) % 46);
    const int eq = static_cast<int>(seed % 11);
    const QpProblem p = random_box_qp(seed, dim, eq);
    CAPTURE(seed);
    CAPTURE(dim);

    const auto sol = solve_qp(p);
    REQUIRE(sol.status == SolveStatus::optimal);
    CHECK(sol.kkt_residual <= 1e-8);

    const auto ipm = ipm_solve(densify(p));
    REQUIRE(ipm.converged);
    CHECK(std::abs(sol.objective - ipm.objective) <=
          1e-6 * (1.0 + std::abs(ipm.objective)));
  }
}

TEST_CASE("warm restart with a new linear term matches a cold solve") {
  const QpProblem p = random_box_qp(7, 20, 4);
  QpSolver solver(p);
  REQUIRE(solver.solve().status == SolveStatus::optimal);

  Eigen::VectorXd lin = p.lin;
  for (int i = 0; i < lin.size(); i += 3) lin[i] += 0.25;
  const auto warm = solver.solve_with_lin(lin);

  QpProblem shifted = p;
  shifted.lin = lin;
  const auto cold = solve_qp(shifted);

  REQUIRE(warm.status == SolveStatus::optimal);
  REQUIRE(cold.status == SolveStatus::optimal);
  CHECK(std::abs(warm.objective - cold.objective) <=
        1e-7 * (1.0 + std::abs(cold.objective)));
}

TEST_CASE("tighter tolerance never returns a worse KKT point") {
  for (std::uint64_t seed = 200; seed < 212; ++seed) {
    const QpProblem p = random_box_qp(seed, 18, 3);
    CAPTURE(seed);

    SolverSettings loose;
    loose.tolerance = 1e-6;
    SolverSettings tight;
    tight.tolerance = 1e-10;

    const auto a = solve_qp(p, loose);
    const auto b = solve_qp(p, tight);
    REQUIRE(a.status == SolveStatus::optimal);
    REQUIRE(b.status == SolveStatus::optimal);
    // Floating-point slack only; the guarantee is monotone improvement.
    CHECK(b.kkt_residual <= a.kkt_residual + 1e-12);
  }
}

TEST_CASE("splitting merit is non-increasing at a fixed penalty") {
  SolverSettings settings;
  settings.adaptive_penalty = false;
  settings.record_trace = true;
  const QpProblem p = random_box_qp(33, 24, 5);
  const auto sol = solve_qp(p, settings);
  REQUIRE(sol.trace.size() > 2);
  for (size_t i = 1; i < sol.trace.size(); ++i) {
    CHECK(sol.trace[i].fixed_point_delta <=
          sol.trace[i - 1].fixed_point_delta + 1e-12);
  }
}

TEST_CASE("validate rejects malformed problems") {
  QpProblem p = one_var(2.0, 0.0, 0.0, 1.0);
  CHECK_NOTHROW(p.validate());

  QpProblem bad = p;
  bad.lower[0] = 2.0;  // lower above upper
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.lin.resize(2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  bad = p;
  bad.quad.coeffRef(0, 0) = -1.0;  // negative curvature
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  QpProblem asym;
  asym.dim = 2;
  asym.quad.resize(2, 2);
  asym.quad.insert(0, 1) = 1.0;  // missing transpose entry
  asym.lin = Eigen::VectorXd::Zero(2);
  asym.eq_matrix.resize(0, 2);
  asym.eq_rhs.resize(0);
  asym.lower = Eigen::VectorXd::Constant(2, -1.0);
  asym.upper = Eigen::VectorXd::Constant(2, 1.0);
  CHECK_THROWS_AS(asym.validate(), std::invalid_argument);
}

TEST_CASE("problem dump uses the documented plain-text layout") {
  const QpProblem p = one_var(2.0, -2.0, 0.0, kInf);
  std::ostringstream out;
  dump_problem(p, out);
  const std::string text = out.str();

  CHECK(text.rfind("%%peergrid-qp 1\n", 0) == 0);
  CHECK(text.find("inf") != std::string::npos);
}

TEST_CASE("badly scaled costs still solve to the same argmin") {
  QpProblem p = random_box_qp(55, 12, 2);
  const auto base = solve_qp(p);
  REQUIRE(base.status == SolveStatus::optimal);

  QpProblem scaled = p;
  scaled.quad = p.quad * 1e4;
  scaled.lin = p.lin * 1e4;
  const auto big = solve_qp(scaled);
  REQUIRE(big.status == SolveStatus::optimal);
  CHECK((big.primal - base.primal).lpNorm<Eigen::Infinity>() <= 1e-5);
  CHECK(big.objective == doctest::Approx(base.objective * 1e4).epsilon(1e-6));
}

TEST_CASE("unconstrained strictly convex minimum is exact") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> normal(0.0, 1.0);
  const int n = 15;
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) g(i, j) = normal(rng);
  }
  const Eigen::MatrixXd qd = g * g.transpose() / n + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd q(n);
  for (int i = 0; i < n; ++i) q[i] = normal(rng);

  QpProblem p;
  p.dim = n;
  p.quad = qd.sparseView();
  p.lin = q;
  p.eq_matrix.resize(0, n);
  p.eq_rhs.resize(0);
  p.lower = Eigen::VectorXd::Constant(n, -kInf);
  p.upper = Eigen::VectorXd::Constant(n, kInf);

  const auto sol = solve_qp(p);
  REQUIRE(sol.status == SolveStatus::optimal);
  const Eigen::VectorXd expected = qd.ldlt().solve(-q);
  CHECK((sol.primal - expected).lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("iteration limit is reported, not papered over") {
  SolverSettings settings;
  settings.max_iter = 3;
  settings.polish = false;
  const QpProblem p = random_box_qp(99, 30, 6);
  const auto sol = solve_qp(p, settings);
  CHECK(sol.status == SolveStatus::iteration_limit);
  CHECK(std::isfinite(sol.kkt_residual));
}
