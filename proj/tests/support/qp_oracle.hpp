#pragma once

#include "peergrid/qp.hpp"

#include <Eigen/Dense>

namespace peergrid::testing {

/// Dense mirror of QpProblem for the reference solvers.
struct OracleProblem {
  Eigen::MatrixXd quad;
  Eigen::VectorXd lin;
  Eigen::MatrixXd eq_matrix;
  Eigen::VectorXd eq_rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int dim() const { return static_cast<int>(lin.size()); }
};

struct OracleResult {
  Eigen::VectorXd primal;
  double objective = 0.0;
  bool converged = false;
  int iterations = 0;
};

OracleProblem densify(const QpProblem& problem);

/// Primal-dual interior-point reference solver (Mehrotra predictor-
/// corrector, dense Schur-complement KKT factorization per step).
/// Independent of the operator-splitting kernel under test. Intended for
/// dim up to a few hundred.
OracleResult ipm_solve(const OracleProblem& problem, double tol = 1e-10,
                       int max_iter = 100);

/// Exhaustive active-set enumeration: every {free, at-lower, at-upper}
/// assignment, equality-KKT solve per pattern, KKT sign verification.
/// Exponential; dim <= 10 or so.
OracleResult enumerate_boxes(const OracleProblem& problem, double tol = 1e-7);

}  // namespace peergrid::testing
