#pragma once

// Internal QP assembly shared by the standalone scenario, the per-agent
// trading subproblem, and the centralized oracle. Not installed.

#include "peergrid/model.hpp"
#include "peergrid/qp.hpp"
#include "peergrid/standalone.hpp"

#include <vector>

namespace peergrid::detail {

/// Incremental builder for the canonical QP form.
struct QpBuilder {
  explicit QpBuilder(int dim);

  int dim = 0;
  std::vector<Eigen::Triplet<double>> quad;
  Eigen::VectorXd lin;
  std::vector<Eigen::Triplet<double>> eq;
  std::vector<double> rhs;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  /// Opens a new equality row and returns its index.
  int add_row(double rhs_value);
  void set_bounds(int var, double lo, double hi);

  QpProblem finish();
};

/// Emits one user's physical block (objective terms, balance / battery /
/// thermal / epigraph rows, bounds) at layout.base. Returns the indices
/// of the H balance rows so trade variables can be joined to them.
std::vector<int> append_user_block(QpBuilder& builder, const ScheduleLayout& layout,
                                   const UserProfile& profile,
                                   const UserEnvironment& env, const GridTariff& tariff,
                                   const TimeHorizon& horizon, TerminalSoc terminal);

}  // namespace peergrid::detail
