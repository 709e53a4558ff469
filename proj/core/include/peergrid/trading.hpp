#pragma once

#include "peergrid/model.hpp"
#include "peergrid/qp.hpp"
#include "peergrid/standalone.hpp"

#include <vector>

namespace peergrid {

struct AdmmSettings {
  double rho = 1.0;             // penalty coefficient
  double eps_primal = 1e-6;     // threshold on sum_u ||e^u - aux^u||
  double eps_dual = 1e-6;       // threshold on ||duals(k) - duals(k-1)||
  int max_iterations = 500;
  bool record_trace = true;
  // Extensions beyond the base algorithm, both off by default:
  bool adaptive_rho = false;    // residual balancing, x2 / /2 when 10x apart
  bool infinity_norms = false;  // swap the Euclidean norms for inf-norms
};

/// The only agent-to-coordinator message: the sender and its proposed
/// trades, trades(t, v) kWh bought from counterparty v at slot t.
/// No schedule, load, or price data crosses this boundary.
struct TradeProposal {
  int user_id = 0;
  Eigen::MatrixXd trades;  // slots x users
};

/// Coordinator-to-agent message: the cleared (antisymmetric) auxiliary
/// trades and the dual prices for one user's rows.
struct CoordinatorBroadcast {
  int user_id = 0;
  Eigen::MatrixXd auxiliary;  // slots x users
  Eigen::MatrixXd duals;      // slots x users
};

struct AdmmIterationStats {
  int iteration = 0;
  double primal_residual = 0.0;       // sum_u ||e^u - aux^u||
  double dual_change = 0.0;           // ||duals(k) - duals(k-1)||
  Eigen::VectorXd user_objectives;    // model cost per user at this iterate
  double total_objective = 0.0;
};

using AdmmTrace = std::vector<AdmmIterationStats>;

enum class TradingStatus { converged, iteration_limit };

const char* to_string(TradingStatus status);

struct TradingResult {
  std::vector<Schedule> schedules;
  std::vector<CostBreakdown> costs;
  TradeState trade_state;
  AdmmTrace trace;
  TradingStatus status = TradingStatus::iteration_limit;
  int iterations = 0;
};

/// Scenario 2 subproblem for one agent: the standalone problem extended
/// with one trade variable per counterparty and slot. aux/duals are the
/// slots x users rows broadcast to this user; rho is the penalty
/// coefficient. Self-trades are fixed to zero through their bounds.
QpProblem assemble_primal(const UserProfile& profile, const UserEnvironment& env,
                          const GridTariff& tariff, const TimeHorizon& horizon,
                          const Eigen::MatrixXd& aux, const Eigen::MatrixXd& duals,
                          double rho, TerminalSoc terminal = TerminalSoc::free_end);

/// Closed-form coordinator solution for the auxiliary tensor:
///   aux[u][v][t] = (rho*(e[u][v][t] - e[v][u][t])
///                   - (duals[u][v][t] - duals[v][u][t])) / (2*rho).
/// The result is exactly antisymmetric with a zero diagonal.
PairTensor coordinator_update_aux(const TradeState& state, double rho);

/// Dual ascent step duals + rho*(auxiliary - trades); call after the
/// auxiliary tensor has been refreshed this iteration.
PairTensor coordinator_update_duals(const TradeState& state, double rho);

/// Joint stopping test: primal residual below eps_primal and dual change
/// below eps_dual.
bool check_convergence(const AdmmIterationStats& latest, const AdmmSettings& settings);

/// The coordinator role. It sees TradeProposal values and nothing else;
/// schedules never reach this type.
class TradingCoordinator {
 public:
  TradingCoordinator(int users, int slots, AdmmSettings settings);

  /// Folds the proposals into the trade tensor. Order-insensitive:
  /// rows are addressed by user_id.
  void collect(const std::vector<TradeProposal>& proposals);

  /// One coordinator block: auxiliary closed form, then dual ascent.
  /// Refreshes the residuals read by primal_residual()/dual_change().
  void step();

  CoordinatorBroadcast broadcast_for(int user) const;
  const TradeState& state() const { return state_; }
  double primal_residual() const { return primal_residual_; }
  double dual_change() const { return dual_change_; }
  void set_rho(double rho) { settings_.rho = rho; }
  double rho() const { return settings_.rho; }

 private:
  AdmmSettings settings_;
  TradeState state_;
  double primal_residual_ = 0.0;
  double dual_change_ = 0.0;
};

/// Full distributed loop: broadcast, concurrent agent solves, collect,
/// auxiliary update, dual update, convergence test. After convergence
/// each agent re-solves once against its cleared trades so the returned
/// schedules balance exactly against the antisymmetric tensor. workers
/// 0 = hardware concurrency; results do not depend on the worker count.
TradingResult run_admm(const std::vector<UserProfile>& community,
                       const EnvironmentSeries& env, const GridTariff& tariff,
                       const TimeHorizon& horizon, const AdmmSettings& settings = {},
                       TerminalSoc terminal = TerminalSoc::free_end, int workers = 0,
                       const SolverSettings& solver_settings = {});

/// One monolithic QP over every user with trade antisymmetry imposed as
/// equality rows; the equivalence oracle for run_admm. Guarded at about
/// 1e5 variables.
TradingResult centralized_oracle(const std::vector<UserProfile>& community,
                                 const EnvironmentSeries& env, const GridTariff& tariff,
                                 const TimeHorizon& horizon,
                                 TerminalSoc terminal = TerminalSoc::free_end,
                                 const SolverSettings& solver_settings = {});

}  // namespace peergrid
