#include "peergrid/standalone.hpp"

#include "parallel.hpp"
#include "schedule_qp.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace peergrid {

std::vector<std::string> precheck_feasibility(const UserProfile& profile,
                                              const UserEnvironment& env,
                                              const TimeHorizon& horizon) {
  std::vector<std::string> out = validate_profile(profile);
  const int H = horizon.slot_count;
  if (env.outdoor_temp.size() != H || env.renewable_cap.size() != H ||
      env.inflexible_load.size() != H) {
    out.push_back("environment series length does not match the horizon");
    return out;
  }
  for (int t = 0; t < H; ++t) {
    const double supply_cap =
        profile.grid_cap + env.renewable_cap[t] + profile.battery.max_discharge;
    if (env.inflexible_load[t] > supply_cap) {
      std::ostringstream msg;
      msg << "slot " << t << ": inflexible load " << env.inflexible_load[t]
          << " exceeds grid_cap + renewable_cap + max_discharge = " << supply_cap;
      out.push_back(msg.str());
    }
  }

  // Exact reachability of the temperature band. The indoor state is one
  // dimensional, so the set of temperatures reachable at slot t under the
  // band constraints up to t is an interval; an empty interval means no
  // HVAC sequence can hold the band (a one-directional unit cannot push
  // the other way).
  if (!out.empty()) return out;
  const auto& hv = profile.hvac;
  const double kappa = std::exp(-1.0 / hv.thermal_rc);
  const double swing = hv.efficiency * hv.hvac_max;
  double lo = hv.initial_temp;
  double hi = hv.initial_temp;
  for (int t = 0; t < H; ++t) {
    const double drift_lo = kappa * lo + (1.0 - kappa) * env.outdoor_temp[t];
    const double drift_hi = kappa * hi + (1.0 - kappa) * env.outdoor_temp[t];
    const double reach_lo = drift_lo + std::min(0.0, swing);
    const double reach_hi = drift_hi + std::max(0.0, swing);
    lo = std::max(reach_lo, hv.temp_min);
    hi = std::min(reach_hi, hv.temp_max);
    if (lo > hi + 1e-12) {
      std::ostringstream msg;
      msg << "slot " << t << ": temperature band [" << hv.temp_min << ", "
          << hv.temp_max << "] is unreachable (attainable range [" << reach_lo
          << ", " << reach_hi << "])";
      out.push_back(msg.str());
      break;
    }
  }
  return out;
}

QpProblem assemble_standalone(const UserProfile& profile, const UserEnvironment& env,
                              const GridTariff& tariff, const TimeHorizon& horizon,
                              TerminalSoc terminal) {
  auto report = precheck_feasibility(profile, env, horizon);
  if (!report.empty()) {
    std::string joined = "assemble_standalone precheck failed:";
    for (const auto& msg : report) joined += "\n  " + msg;
    throw std::invalid_argument(joined);
  }
  ScheduleLayout layout{horizon.slot_count, 0, 0};
  detail::QpBuilder builder(layout.size());
  detail::append_user_block(builder, layout, profile, env, tariff, horizon, terminal);
  return builder.finish();
}

double standalone_objective_offset(const UserProfile& profile,
                                   const TimeHorizon& horizon) {
  const auto& hv = profile.hvac;
  return hv.comfort_weight * hv.preferred_temp * hv.preferred_temp *
         horizon.slot_count;
}

Schedule extract_schedule(const Eigen::VectorXd& primal, const ScheduleLayout& layout) {
  const int H = layout.horizon;
  Schedule s;
  s.grid = primal.segment(layout.grid(0), H);
  s.renewable = primal.segment(layout.renewable(0), H);
  s.hvac = primal.segment(layout.hvac(0), H);
  s.charge = primal.segment(layout.charge(0), H);
  s.discharge = primal.segment(layout.discharge(0), H);
  s.battery_level = primal.segment(layout.battery(0), H);
  s.indoor_temp = primal.segment(layout.temp(0), H);
  s.peak = primal[layout.peak()];
  return s;
}

StandaloneResult solve_standalone(const UserProfile& profile, const UserEnvironment& env,
                                  const GridTariff& tariff, const TimeHorizon& horizon,
                                  TerminalSoc terminal, const SolverSettings& settings) {
  const QpProblem problem = assemble_standalone(profile, env, tariff, horizon, terminal);
  const QpSolution sol = solve_qp(problem, settings);

  StandaloneResult result;
  result.solver_status = sol.status;
  result.iterations = sol.iterations;
  if (sol.status == SolveStatus::infeasible) return result;

  ScheduleLayout layout{horizon.slot_count, 0, 0};
  result.schedule = extract_schedule(sol.primal, layout);
  result.solver_objective =
      sol.objective + standalone_objective_offset(profile, horizon);
  result.costs = make_cost_breakdown(
      grid_cost(result.schedule.grid, tariff),
      battery_cost(result.schedule.charge, result.schedule.discharge, profile.battery),
      discomfort_cost(result.schedule.indoor_temp, profile.hvac), 0.0);
  return result;
}

std::vector<StandaloneResult> solve_standalone_community(
    const std::vector<UserProfile>& community, const EnvironmentSeries& env,
    const GridTariff& tariff, const TimeHorizon& horizon, TerminalSoc terminal,
    const SolverSettings& settings, int workers) {
  const int n = static_cast<int>(community.size());
  std::vector<StandaloneResult> results(n);
  detail::parallel_for(n, workers, [&](int u) {
    results[u] = solve_standalone(community[u], user_slice(env, u), tariff, horizon,
                                  terminal, settings);
  });
  return results;
}

}  // namespace peergrid
