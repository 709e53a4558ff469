#pragma once

#include "peergrid/model.hpp"
#include "peergrid/qp.hpp"

#include <string>
#include <vector>

namespace peergrid {

/// End-of-horizon battery handling. free_end matches the day-ahead
/// formulation; return_to_initial pins the last level back to b_0 so
/// chained multi-day runs cannot dump the battery at each seam.
enum class TerminalSoc { free_end, return_to_initial };

/// Variable offsets of one user's block inside a day-ahead QP.
/// Layout over H slots: [grid, renewable, hvac, charge, discharge,
/// battery_level, indoor_temp, peak, peak_slack], then trade_count
/// trade variables (zero in the standalone problem).
struct ScheduleLayout {
  int horizon = 0;
  int base = 0;
  int trade_count = 0;

  int grid(int t) const { return base + t; }
  int renewable(int t) const { return base + horizon + t; }
  int hvac(int t) const { return base + 2 * horizon + t; }
  int charge(int t) const { return base + 3 * horizon + t; }
  int discharge(int t) const { return base + 4 * horizon + t; }
  int battery(int t) const { return base + 5 * horizon + t; }
  int temp(int t) const { return base + 6 * horizon + t; }
  int peak() const { return base + 7 * horizon; }
  int peak_slack(int t) const { return base + 7 * horizon + 1 + t; }
  /// Trade with counterparty v at slot t; only valid when trade_count > 0.
  int trade(int v, int t) const { return base + 8 * horizon + 1 + v * horizon + t; }

  int size() const { return 8 * horizon + 1 + trade_count; }
};

/// Static per-slot feasibility screen run before any solve: flags slots
/// where the inflexible load cannot be met even at full grid, renewable,
/// and discharge capacity. Returns human-readable messages, empty = ok.
std::vector<std::string> precheck_feasibility(const UserProfile& profile,
                                              const UserEnvironment& env,
                                              const TimeHorizon& horizon);

/// Scenario 1 problem for one user: minimize grid + battery + discomfort
/// cost subject to balance, battery and thermal recursions, and all box
/// limits. The peak charge is encoded with the epigraph variable m and
/// slack rows grid[t] - m + s[t] = 0. Throws std::invalid_argument on
/// dimension mismatches or a failed precheck.
QpProblem assemble_standalone(const UserProfile& profile, const UserEnvironment& env,
                              const GridTariff& tariff, const TimeHorizon& horizon,
                              TerminalSoc terminal = TerminalSoc::free_end);

/// Constant comfort term dropped by the quadratic encoding
/// (comfort_weight * preferred_temp^2 * H). Add to a QP objective to get
/// the model cost.
double standalone_objective_offset(const UserProfile& profile,
                                   const TimeHorizon& horizon);

/// Reads one user's Schedule out of a QP primal vector.
Schedule extract_schedule(const Eigen::VectorXd& primal, const ScheduleLayout& layout);

struct StandaloneResult {
  Schedule schedule;
  CostBreakdown costs;
  SolveStatus solver_status = SolveStatus::iteration_limit;
  double solver_objective = 0.0;  // QP objective plus the constant offset
  int iterations = 0;
};

/// Assembles and solves Scenario 1 for one user, recomputing the cost
/// breakdown from the returned schedule (p2p_cost = 0).
StandaloneResult solve_standalone(const UserProfile& profile, const UserEnvironment& env,
                                  const GridTariff& tariff, const TimeHorizon& horizon,
                                  TerminalSoc terminal = TerminalSoc::free_end,
                                  const SolverSettings& settings = {});

/// Scenario 1 for a whole community; per-user solves are independent and
/// run on `workers` threads (0 = hardware concurrency). Results are
/// ordered by community index regardless of completion order.
std::vector<StandaloneResult> solve_standalone_community(
    const std::vector<UserProfile>& community, const EnvironmentSeries& env,
    const GridTariff& tariff, const TimeHorizon& horizon,
    TerminalSoc terminal = TerminalSoc::free_end, const SolverSettings& settings = {},
    int workers = 0);

}  // namespace peergrid
