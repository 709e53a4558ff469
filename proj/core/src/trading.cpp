#include "peergrid/trading.hpp"

#include "parallel.hpp"
#include "schedule_qp.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>

namespace peergrid {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(TradingStatus status) {
  switch (status) {
    case TradingStatus::converged: return "converged";
    case TradingStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

QpProblem assemble_primal(const UserProfile& profile, const UserEnvironment& env,
                          const GridTariff& tariff, const TimeHorizon& horizon,
                          const Eigen::MatrixXd& aux, const Eigen::MatrixXd& duals,
                          double rho, TerminalSoc terminal) {
  const int H = horizon.slot_count;
  const int users = static_cast<int>(aux.cols());
  if (aux.rows() != H || duals.rows() != H || duals.cols() != users) {
    throw std::invalid_argument("assemble_primal: aux/duals shape mismatch");
  }
  if (rho <= 0.0) throw std::invalid_argument("assemble_primal: rho must be positive");
  if (profile.user_id < 0 || profile.user_id >= users) {
    throw std::invalid_argument("assemble_primal: user_id outside the community");
  }

  auto report = precheck_feasibility(profile, env, horizon);
  if (!report.empty()) {
    std::string joined = "assemble_primal precheck failed:";
    for (const auto& msg : report) joined += "\n  " + msg;
    throw std::invalid_argument(joined);
  }

  ScheduleLayout layout{H, 0, users * H};
  detail::QpBuilder builder(layout.size());
  const std::vector<int> balance_rows = detail::append_user_block(
      builder, layout, profile, env, tariff, horizon, terminal);

  for (int v = 0; v < users; ++v) {
    for (int t = 0; t < H; ++t) {
      const int idx = layout.trade(v, t);
      if (v == profile.user_id) {
        builder.set_bounds(idx, 0.0, 0.0);
      } else {
        builder.set_bounds(idx, -kInf, kInf);
      }
      builder.quad.emplace_back(idx, idx, rho);
      builder.lin[idx] =
          tariff.p2p_price[t] - rho * aux(t, v) - duals(t, v);
      builder.eq.emplace_back(balance_rows[t], idx, 1.0);
    }
  }
  return builder.finish();
}

PairTensor coordinator_update_aux(const TradeState& state, double rho) {
  if (rho <= 0.0) {
    throw std::invalid_argument("coordinator_update_aux: rho must be positive");
  }
  const int n = state.trades.user_count;
  const int H = state.trades.slot_count;
  PairTensor aux(n, H);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      for (int t = 0; t < H; ++t) {
        aux.at(u, v, t) = (rho * (state.trades.at(u, v, t) - state.trades.at(v, u, t)) -
                           (state.duals.at(u, v, t) - state.duals.at(v, u, t))) /
                          (2.0 * rho);
      }
    }
  }
  return aux;
}

PairTensor coordinator_update_duals(const TradeState& state, double rho) {
  PairTensor duals = state.duals;
  duals.data += rho * (state.auxiliary.data - state.trades.data);
  return duals;
}

bool check_convergence(const AdmmIterationStats& latest, const AdmmSettings& settings) {
  return latest.primal_residual < settings.eps_primal &&
         latest.dual_change < settings.eps_dual;
}

TradingCoordinator::TradingCoordinator(int users, int slots, AdmmSettings settings)
    : settings_(settings), state_(users, slots) {}

void TradingCoordinator::collect(const std::vector<TradeProposal>& proposals) {
  const int n = state_.trades.user_count;
  const int H = state_.trades.slot_count;
  for (const auto& proposal : proposals) {
    if (proposal.user_id < 0 || proposal.user_id >= n) {
      throw std::invalid_argument("TradingCoordinator: unknown user_id " +
                                  std::to_string(proposal.user_id));
    }
    if (proposal.trades.rows() != H || proposal.trades.cols() != n) {
      throw std::invalid_argument("TradingCoordinator: proposal shape mismatch");
    }
    auto block = state_.trades.user_block(proposal.user_id);
    for (int v = 0; v < n; ++v) {
      block.segment(static_cast<Eigen::Index>(v) * H, H) = proposal.trades.col(v);
    }
  }
}

void TradingCoordinator::step() {
  const int n = state_.trades.user_count;
  state_.auxiliary = coordinator_update_aux(state_, settings_.rho);
  const PairTensor new_duals = coordinator_update_duals(state_, settings_.rho);

  const Eigen::VectorXd dual_delta = new_duals.data - state_.duals.data;
  dual_change_ = settings_.infinity_norms
                     ? (dual_delta.size() ? dual_delta.cwiseAbs().maxCoeff() : 0.0)
                     : dual_delta.norm();
  state_.duals = new_duals;

  double primal = 0.0;
  for (int u = 0; u < n; ++u) {
    const Eigen::VectorXd gap = state_.trades.user_block(u) - state_.auxiliary.user_block(u);
    primal += settings_.infinity_norms ? (gap.size() ? gap.cwiseAbs().maxCoeff() : 0.0)
                                       : gap.norm();
  }
  primal_residual_ = primal;
}

CoordinatorBroadcast TradingCoordinator::broadcast_for(int user) const {
  const int n = state_.trades.user_count;
  const int H = state_.trades.slot_count;
  CoordinatorBroadcast bc;
  bc.user_id = user;
  bc.auxiliary = Eigen::Map<const Eigen::MatrixXd>(
      state_.auxiliary.data.data() + state_.auxiliary.index(user, 0, 0), H, n);
  bc.duals = Eigen::Map<const Eigen::MatrixXd>(
      state_.duals.data.data() + state_.duals.index(user, 0, 0), H, n);
  return bc;
}

namespace {

/// One user's side of the loop: owns the subproblem solver (factored
/// once), refreshes only the linear term between iterations.
class TradingAgent {
 public:
  TradingAgent(const UserProfile& profile, UserEnvironment env, const GridTariff& tariff,
               const TimeHorizon& horizon, int users, double rho, TerminalSoc terminal,
               const SolverSettings& solver_settings)
      : profile_(profile),
        env_(std::move(env)),
        tariff_(tariff),
        horizon_(horizon),
        users_(users),
        terminal_(terminal),
        solver_settings_(solver_settings) {
    rebuild(rho);
  }

  /// Rebuilds the subproblem and its factorization for a new rho.
  void rebuild(double rho) {
    rho_ = rho;
    const Eigen::MatrixXd zeros =
        Eigen::MatrixXd::Zero(horizon_.slot_count, users_);
    QpProblem problem = assemble_primal(profile_, env_, tariff_, horizon_, zeros,
                                        zeros, rho, terminal_);
    base_lin_ = problem.lin;
    solver_ = std::make_unique<QpSolver>(std::move(problem), solver_settings_);
  }

  TradeProposal respond(const CoordinatorBroadcast& broadcast) {
    const int H = horizon_.slot_count;
    const ScheduleLayout layout{H, 0, users_ * H};
    Eigen::VectorXd lin = base_lin_;
    for (int v = 0; v < users_; ++v) {
      for (int t = 0; t < H; ++t) {
        lin[layout.trade(v, t)] -= rho_ * broadcast.auxiliary(t, v) +
                                   broadcast.duals(t, v);
      }
    }
    last_ = solver_->solve_with_lin(lin);
    if (last_.status != SolveStatus::optimal) {
      std::ostringstream msg;
      msg << "user " << profile_.user_id << ": subproblem solve returned "
          << to_string(last_.status) << " (kkt residual " << last_.kkt_residual << ")";
      throw std::runtime_error(msg.str());
    }

    TradeProposal proposal;
    proposal.user_id = profile_.user_id;
    proposal.trades = Eigen::Map<const Eigen::MatrixXd>(
        last_.primal.data() + layout.trade(0, 0), H, users_);
    return proposal;
  }

  Schedule schedule() const {
    const ScheduleLayout layout{horizon_.slot_count, 0, users_ * horizon_.slot_count};
    return extract_schedule(last_.primal, layout);
  }

  /// Model cost (not the penalized subproblem objective) at the last
  /// iterate: grid + battery + discomfort + trade payments.
  double model_cost() const {
    const int H = horizon_.slot_count;
    const ScheduleLayout layout{H, 0, users_ * H};
    const Schedule s = extract_schedule(last_.primal, layout);
    double p2p = 0.0;
    for (int t = 0; t < H; ++t) {
      double net = 0.0;
      for (int v = 0; v < users_; ++v) net += last_.primal[layout.trade(v, t)];
      p2p += tariff_.p2p_price[t] * net;
    }
    return grid_cost(s.grid, tariff_) +
           battery_cost(s.charge, s.discharge, profile_.battery) +
           discomfort_cost(s.indoor_temp, profile_.hvac) + p2p;
  }

  const UserProfile& profile() const { return profile_; }
  const UserEnvironment& env() const { return env_; }

 private:
  UserProfile profile_;
  UserEnvironment env_;
  GridTariff tariff_;
  TimeHorizon horizon_;
  int users_ = 0;
  double rho_ = 1.0;
  TerminalSoc terminal_;
  SolverSettings solver_settings_;
  Eigen::VectorXd base_lin_;
  std::unique_ptr<QpSolver> solver_;
  QpSolution last_;
};

/// Exact re-solve of one user's physical block with its cleared trades
/// folded into the balance as a fixed net injection.
StandaloneResult settle_user(const UserProfile& profile, const UserEnvironment& env,
                             const GridTariff& tariff, const TimeHorizon& horizon,
                             const Eigen::VectorXd& net_trade, TerminalSoc terminal,
                             const SolverSettings& settings) {
  UserEnvironment adjusted = env;
  adjusted.inflexible_load -= net_trade;

  ScheduleLayout layout{horizon.slot_count, 0, 0};
  detail::QpBuilder builder(layout.size());
  detail::append_user_block(builder, layout, profile, adjusted, tariff, horizon,
                            terminal);
  const QpSolution sol = solve_qp(builder.finish(), settings);

  StandaloneResult result;
  result.solver_status = sol.status;
  result.iterations = sol.iterations;
  if (sol.status != SolveStatus::optimal) return result;
  result.schedule = extract_schedule(sol.primal, layout);
  result.solver_objective =
      sol.objective + standalone_objective_offset(profile, horizon);
  return result;
}

}  // namespace

TradingResult run_admm(const std::vector<UserProfile>& community,
                       const EnvironmentSeries& env, const GridTariff& tariff,
                       const TimeHorizon& horizon, const AdmmSettings& settings,
                       TerminalSoc terminal, int workers,
                       const SolverSettings& solver_settings) {
  const int n = static_cast<int>(community.size());
  const int H = horizon.slot_count;
  if (n < 1) throw std::invalid_argument("run_admm: community is empty");
  if (settings.rho <= 0.0 || settings.eps_primal <= 0.0 || settings.eps_dual <= 0.0) {
    throw std::invalid_argument("run_admm: rho and thresholds must be positive");
  }
  for (int u = 0; u < n; ++u) {
    if (community[u].user_id != u) {
      throw std::invalid_argument("run_admm: user_id must equal the community index");
    }
  }

  std::vector<std::unique_ptr<TradingAgent>> agents(n);
  detail::parallel_for(n, workers, [&](int u) {
    try {
      agents[u] = std::make_unique<TradingAgent>(community[u], user_slice(env, u),
                                                 tariff, horizon, n, settings.rho,
                                                 terminal, solver_settings);
    } catch (const std::exception& err) {
      throw std::runtime_error("user " + std::to_string(u) + ": " + err.what());
    }
  });

  TradingCoordinator coordinator(n, H, settings);
  TradingResult result;
  result.status = TradingStatus::iteration_limit;
  result.iterations = settings.max_iterations;
  double rho = settings.rho;

  std::vector<TradeProposal> proposals(n);
  Eigen::VectorXd objectives(n);

  for (int k = 1; k <= settings.max_iterations; ++k) {
    std::vector<CoordinatorBroadcast> broadcasts(n);
    for (int u = 0; u < n; ++u) broadcasts[u] = coordinator.broadcast_for(u);

    detail::parallel_for(n, workers, [&](int u) {
      proposals[u] = agents[u]->respond(broadcasts[u]);
      objectives[u] = agents[u]->model_cost();
    });

    coordinator.collect(proposals);
    coordinator.step();

    AdmmIterationStats stats;
    stats.iteration = k;
    stats.primal_residual = coordinator.primal_residual();
    stats.dual_change = coordinator.dual_change();
    stats.user_objectives = objectives;
    stats.total_objective = objectives.sum();
    if (settings.record_trace) result.trace.push_back(stats);

    if (check_convergence(stats, settings)) {
      result.status = TradingStatus::converged;
      result.iterations = k;
      break;
    }

    if (settings.adaptive_rho) {
      double next_rho = rho;
      if (stats.primal_residual > 10.0 * stats.dual_change) {
        next_rho = rho * 2.0;
      } else if (stats.dual_change > 10.0 * stats.primal_residual) {
        next_rho = rho / 2.0;
      }
      if (next_rho != rho) {
        rho = next_rho;
        coordinator.set_rho(rho);
        detail::parallel_for(n, workers, [&](int u) { agents[u]->rebuild(rho); });
      }
    }
  }

  const TradeState& state = coordinator.state();
  result.schedules.resize(n);
  result.costs.resize(n);

  // At convergence, re-solve each user against its cleared trades so the
  // returned schedules balance exactly against the antisymmetric tensor
  // and payments settle on cleared quantities. Falls back to the raw
  // iterates if any settlement solve fails.
  bool settled = false;
  if (result.status == TradingStatus::converged) {
    std::vector<StandaloneResult> settlements(n);
    detail::parallel_for(n, workers, [&](int u) {
      Eigen::VectorXd net = Eigen::VectorXd::Zero(H);
      for (int t = 0; t < H; ++t) {
        for (int v = 0; v < n; ++v) net[t] += state.auxiliary.at(u, v, t);
      }
      settlements[u] = settle_user(agents[u]->profile(), agents[u]->env(), tariff,
                                   horizon, net, terminal, solver_settings);
    });
    settled = true;
    for (const auto& s : settlements) {
      if (s.solver_status != SolveStatus::optimal) settled = false;
    }
    if (settled) {
      result.trade_state = state;
      result.trade_state.trades = state.auxiliary;
      for (int u = 0; u < n; ++u) {
        result.schedules[u] = settlements[u].schedule;
        result.costs[u] = make_cost_breakdown(
            grid_cost(result.schedules[u].grid, tariff),
            battery_cost(result.schedules[u].charge, result.schedules[u].discharge,
                         community[u].battery),
            discomfort_cost(result.schedules[u].indoor_temp, community[u].hvac),
            p2p_cost(result.trade_state.trades, u, tariff));
      }
    }
  }

  if (!settled) {
    result.trade_state = state;
    for (int u = 0; u < n; ++u) {
      result.schedules[u] = agents[u]->schedule();
      result.costs[u] = make_cost_breakdown(
          grid_cost(result.schedules[u].grid, tariff),
          battery_cost(result.schedules[u].charge, result.schedules[u].discharge,
                       community[u].battery),
          discomfort_cost(result.schedules[u].indoor_temp, community[u].hvac),
          p2p_cost(result.trade_state.trades, u, tariff));
    }
  }
  return result;
}

TradingResult centralized_oracle(const std::vector<UserProfile>& community,
                                 const EnvironmentSeries& env, const GridTariff& tariff,
                                 const TimeHorizon& horizon, TerminalSoc terminal,
                                 const SolverSettings& solver_settings) {
  const int n = static_cast<int>(community.size());
  const int H = horizon.slot_count;
  if (n < 1) throw std::invalid_argument("centralized_oracle: community is empty");
  const long block = 8L * H + 1 + static_cast<long>(n) * H;
  if (block * n > 100'000L) {
    throw std::invalid_argument("centralized_oracle: instance exceeds the variable guard");
  }

  detail::QpBuilder builder(static_cast<int>(block * n));
  std::vector<ScheduleLayout> layouts(n);
  std::vector<std::vector<int>> balance_rows(n);
  for (int u = 0; u < n; ++u) {
    layouts[u] = ScheduleLayout{H, static_cast<int>(u * block), n * H};
    const UserEnvironment slice = user_slice(env, u);
    auto report = precheck_feasibility(community[u], slice, horizon);
    if (!report.empty()) {
      std::string joined = "centralized_oracle precheck failed (user " +
                           std::to_string(u) + "):";
      for (const auto& msg : report) joined += "\n  " + msg;
      throw std::invalid_argument(joined);
    }
    balance_rows[u] = detail::append_user_block(builder, layouts[u], community[u],
                                                slice, tariff, horizon, terminal);
  }
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      for (int t = 0; t < H; ++t) {
        const int idx = layouts[u].trade(v, t);
        if (v == u) {
          builder.set_bounds(idx, 0.0, 0.0);
        } else {
          builder.set_bounds(idx, -kInf, kInf);
        }
        builder.lin[idx] = tariff.p2p_price[t];
        builder.eq.emplace_back(balance_rows[u][t], idx, 1.0);
      }
    }
  }
  // Market clearing: e[u][v][t] + e[v][u][t] = 0 for every unordered pair.
  for (int u = 0; u < n; ++u) {
    for (int v = u + 1; v < n; ++v) {
      for (int t = 0; t < H; ++t) {
        const int row = builder.add_row(0.0);
        builder.eq.emplace_back(row, layouts[u].trade(v, t), 1.0);
        builder.eq.emplace_back(row, layouts[v].trade(u, t), 1.0);
      }
    }
  }

  const QpSolution sol = solve_qp(builder.finish(), solver_settings);
  if (sol.status == SolveStatus::infeasible) {
    throw std::runtime_error("centralized_oracle: problem reported infeasible");
  }

  TradingResult result;
  result.status = sol.status == SolveStatus::optimal ? TradingStatus::converged
                                                     : TradingStatus::iteration_limit;
  result.iterations = sol.iterations;
  result.trade_state = TradeState(n, H);
  result.schedules.resize(n);
  result.costs.resize(n);
  for (int u = 0; u < n; ++u) {
    result.schedules[u] = extract_schedule(sol.primal, layouts[u]);
    for (int v = 0; v < n; ++v) {
      for (int t = 0; t < H; ++t) {
        result.trade_state.trades.at(u, v, t) = sol.primal[layouts[u].trade(v, t)];
      }
    }
  }
  for (int u = 0; u < n; ++u) {
    result.costs[u] = make_cost_breakdown(
        grid_cost(result.schedules[u].grid, tariff),
        battery_cost(result.schedules[u].charge, result.schedules[u].discharge,
                     community[u].battery),
        discomfort_cost(result.schedules[u].indoor_temp, community[u].hvac),
        p2p_cost(result.trade_state.trades, u, tariff));
  }
  return result;
}

}  // namespace peergrid
