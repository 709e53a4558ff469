#pragma once

#include <Eigen/Core>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>

#include <iosfwd>
#include <limits>
#include <vector>

namespace peergrid {

enum class SolveStatus { optimal, infeasible, iteration_limit };

const char* to_string(SolveStatus status);

struct SolverSettings {
  double tolerance = 1e-8;       // absolute KKT tolerance on the returned point
  int max_iter = 50'000;
  double split_penalty = 0.1;    // internal splitting step; adapted when adaptive is on
  double eq_penalty_scale = 1e3; // extra stiffness on equality rows
  double relaxation = 1.6;       // over-relaxation, in (0, 2)
  double regularization = 1e-6;  // proximal term keeping the KKT system quasi-definite
  bool adaptive_penalty = true;
  bool scaling = true;           // Ruiz equilibration
  int scaling_iters = 10;
  int check_interval = 25;       // residual / certificate cadence
  double eps_infeasible = 1e-8;
  bool polish = true;            // active-set refinement of the converged point
  bool record_trace = false;
};

/// Canonical structured convex QP:
///   minimize 1/2 x'Qx + q'x   s.t.  Ax = a,  lower <= x <= upper.
/// Bound entries may be +-infinity.
struct QpProblem {
  int dim = 0;
  Eigen::SparseMatrix<double> quad;       // Q, symmetric PSD
  Eigen::VectorXd lin;                    // q
  Eigen::SparseMatrix<double> eq_matrix;  // A, may have zero rows
  Eigen::VectorXd eq_rhs;                 // a
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  int eq_count() const { return static_cast<int>(eq_matrix.rows()); }

  /// Shape checks, bound ordering, symmetry, and PSD probing along seeded
  /// random directions. Throws std::invalid_argument on the first failure.
  void validate() const;
};

struct SolveTraceEntry {
  int iteration = 0;
  double primal_residual = 0.0;    // unscaled, inf-norm
  double dual_residual = 0.0;      // unscaled, inf-norm
  double fixed_point_delta = 0.0;  // splitting merit, non-increasing at fixed penalty
};

struct QpSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd lower_duals;  // nonnegative
  Eigen::VectorXd upper_duals;  // nonnegative
  double objective = 0.0;
  SolveStatus status = SolveStatus::iteration_limit;
  double kkt_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool polished = false;
  std::vector<SolveTraceEntry> trace;
};

/// Max of the stationarity, primal-feasibility, and complementarity
/// residuals (inf-norms) of a candidate KKT point. Zero iff exact.
double kkt_residual(const QpProblem& problem, const Eigen::VectorXd& primal,
                    const Eigen::VectorXd& eq_duals, const Eigen::VectorXd& lower_duals,
                    const Eigen::VectorXd& upper_duals);

/// Reusable solver: factors the KKT system once, then serves repeated
/// solves that share the matrices. Re-solves with a new linear term keep
/// the factorization and warm-start from the previous iterate.
class QpSolver {
 public:
  explicit QpSolver(QpProblem problem, SolverSettings settings = {});

  QpSolution solve();
  /// Same Q/A/bounds, new linear term. Warm-starts from the last iterate.
  QpSolution solve_with_lin(const Eigen::VectorXd& lin);

  const QpProblem& problem() const { return problem_; }

 private:
  void build_scaling();
  void build_kkt(double penalty);
  QpSolution run();
  void evaluate_candidate(QpSolution& best, int iteration) const;
  QpSolution polish_and_finish(QpSolution best, int iterations) const;

  QpProblem problem_;
  SolverSettings settings_;
  int n_ = 0;
  int m_ = 0;  // equality rows; stacked constraint count is m_ + n_

  // Scaled data. K stacks the equality matrix over the identity.
  Eigen::SparseMatrix<double> P_;
  Eigen::SparseMatrix<double> K_;
  Eigen::VectorXd q_;
  Eigen::VectorXd lo_;
  Eigen::VectorXd hi_;
  Eigen::VectorXd var_scale_;   // D
  Eigen::VectorXd row_scale_;   // E
  double cost_scale_ = 1.0;     // c

  Eigen::VectorXd penalty_vec_;
  Eigen::VectorXd penalty_inv_;
  double penalty_ = 0.1;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> kkt_;

  // Persistent scaled iterates for warm restarts.
  Eigen::VectorXd x_;
  Eigen::VectorXd z_;
  Eigen::VectorXd y_;
  bool warm_ = false;
};

/// One-shot convenience wrapper around QpSolver.
QpSolution solve_qp(const QpProblem& problem, const SolverSettings& settings = {});

/// Plain-text coordinate-format dump for offline inspection; layout is
/// documented in docs/data-formats.md.
void dump_problem(const QpProblem& problem, std::ostream& out);

}  // namespace peergrid
