#include "schedule_qp.hpp"

#include <limits>
#include <stdexcept>

namespace peergrid::detail {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

QpBuilder::QpBuilder(int dim_in)
    : dim(dim_in),
      lin(Eigen::VectorXd::Zero(dim_in)),
      lower(Eigen::VectorXd::Constant(dim_in, -kInf)),
      upper(Eigen::VectorXd::Constant(dim_in, kInf)) {}

int QpBuilder::add_row(double rhs_value) {
  rhs.push_back(rhs_value);
  return static_cast<int>(rhs.size()) - 1;
}

void QpBuilder::set_bounds(int var, double lo, double hi) {
  lower[var] = lo;
  upper[var] = hi;
}

QpProblem QpBuilder::finish() {
  QpProblem p;
  p.dim = dim;
  p.quad.resize(dim, dim);
  p.quad.setFromTriplets(quad.begin(), quad.end());
  p.lin = lin;
  p.eq_matrix.resize(static_cast<int>(rhs.size()), dim);
  p.eq_matrix.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = Eigen::Map<const Eigen::VectorXd>(rhs.data(), rhs.size());
  p.lower = lower;
  p.upper = upper;
  return p;
}

std::vector<int> append_user_block(QpBuilder& b, const ScheduleLayout& layout,
                                   const UserProfile& profile,
                                   const UserEnvironment& env, const GridTariff& tariff,
                                   const TimeHorizon& horizon, TerminalSoc terminal) {
  const int H = horizon.slot_count;
  if (env.outdoor_temp.size() != H || env.renewable_cap.size() != H ||
      env.inflexible_load.size() != H) {
    throw std::invalid_argument("append_user_block: environment length mismatch");
  }
  const auto& bat = profile.battery;
  const auto& hv = profile.hvac;
  const double kappa = thermal_decay(hv);

  // Bounds.
  for (int t = 0; t < H; ++t) {
    b.set_bounds(layout.grid(t), 0.0, profile.grid_cap);
    b.set_bounds(layout.renewable(t), 0.0, env.renewable_cap[t]);
    b.set_bounds(layout.hvac(t), 0.0, hv.hvac_max);
    b.set_bounds(layout.charge(t), 0.0, bat.max_charge);
    b.set_bounds(layout.discharge(t), 0.0, bat.max_discharge);
    b.set_bounds(layout.battery(t), 0.0, bat.capacity);
    b.set_bounds(layout.temp(t), hv.temp_min, hv.temp_max);
    b.set_bounds(layout.peak_slack(t), 0.0, kInf);
  }
  b.set_bounds(layout.peak(), 0.0, profile.grid_cap);

  // Objective: energy + peak + battery throughput + quadratic discomfort.
  for (int t = 0; t < H; ++t) {
    b.lin[layout.grid(t)] += tariff.energy_price;
    b.lin[layout.charge(t)] += bat.degradation_cost;
    b.lin[layout.discharge(t)] += bat.degradation_cost;
    b.quad.emplace_back(layout.temp(t), layout.temp(t), 2.0 * hv.comfort_weight);
    b.lin[layout.temp(t)] += -2.0 * hv.comfort_weight * hv.preferred_temp;
  }
  b.lin[layout.peak()] += tariff.peak_price;

  // Balance rows: g + r + d - h - c = load (trade columns joined later).
  std::vector<int> balance_rows(H);
  for (int t = 0; t < H; ++t) {
    const int row = b.add_row(env.inflexible_load[t]);
    balance_rows[t] = row;
    b.eq.emplace_back(row, layout.grid(t), 1.0);
    b.eq.emplace_back(row, layout.renewable(t), 1.0);
    b.eq.emplace_back(row, layout.discharge(t), 1.0);
    b.eq.emplace_back(row, layout.hvac(t), -1.0);
    b.eq.emplace_back(row, layout.charge(t), -1.0);
  }

  // Battery recursion b_t - b_{t-1} - c_t + d_t = 0, anchored at b_0.
  for (int t = 0; t < H; ++t) {
    const int row = b.add_row(t == 0 ? bat.initial_level : 0.0);
    b.eq.emplace_back(row, layout.battery(t), 1.0);
    if (t > 0) b.eq.emplace_back(row, layout.battery(t - 1), -1.0);
    b.eq.emplace_back(row, layout.charge(t), -1.0);
    b.eq.emplace_back(row, layout.discharge(t), 1.0);
  }

  // Thermal recursion tau_t - kappa*tau_{t-1} - alpha*h_t = T_t*(1-kappa).
  for (int t = 0; t < H; ++t) {
    double rhs = env.outdoor_temp[t] * (1.0 - kappa);
    if (t == 0) rhs += kappa * hv.initial_temp;
    const int row = b.add_row(rhs);
    b.eq.emplace_back(row, layout.temp(t), 1.0);
    if (t > 0) b.eq.emplace_back(row, layout.temp(t - 1), -kappa);
    b.eq.emplace_back(row, layout.hvac(t), -hv.efficiency);
  }

  // Peak epigraph: g_t - m + s_t = 0 with s_t >= 0.
  for (int t = 0; t < H; ++t) {
    const int row = b.add_row(0.0);
    b.eq.emplace_back(row, layout.grid(t), 1.0);
    b.eq.emplace_back(row, layout.peak(), -1.0);
    b.eq.emplace_back(row, layout.peak_slack(t), 1.0);
  }

  if (terminal == TerminalSoc::return_to_initial) {
    const int row = b.add_row(bat.initial_level);
    b.eq.emplace_back(row, layout.battery(H - 1), 1.0);
  }

  return balance_rows;
}

}  // namespace peergrid::detail
