#include "peergrid/model.hpp"

#include <algorithm>
#include <cmath>

namespace peergrid {

EnvironmentSeries EnvironmentSeries::slice(int first_slot, int count) const {
  if (first_slot < 0 || count < 0 || first_slot + count > slots()) {
    throw std::out_of_range("EnvironmentSeries::slice: span out of range");
  }
  EnvironmentSeries out;
  out.outdoor_temp = outdoor_temp.segment(first_slot, count);
  out.renewable_cap = renewable_cap.middleRows(first_slot, count);
  out.inflexible_load = inflexible_load.middleRows(first_slot, count);
  return out;
}

UserEnvironment user_slice(const EnvironmentSeries& env, int user) {
  if (user < 0 || user >= env.users()) {
    throw std::out_of_range("user_slice: user index out of range");
  }
  return UserEnvironment{env.outdoor_temp, env.renewable_cap.col(user),
                         env.inflexible_load.col(user)};
}

double thermal_decay(const HvacParams& hvac) {
  return std::exp(-1.0 / hvac.thermal_rc);
}

double thermal_step(double indoor_temp, double outdoor_next, double hvac_energy,
                    const HvacParams& hvac) {
  const double kappa = thermal_decay(hvac);
  return outdoor_next - (outdoor_next - indoor_temp) * kappa +
         hvac.efficiency * hvac_energy;
}

double grid_cost(const Eigen::VectorXd& grid, const GridTariff& tariff) {
  if (grid.size() == 0) return 0.0;
  return tariff.energy_price * grid.sum() + tariff.peak_price * grid.maxCoeff();
}

double battery_cost(const Eigen::VectorXd& charge, const Eigen::VectorXd& discharge,
                    const BatteryParams& params) {
  if (charge.size() != discharge.size()) {
    throw std::invalid_argument("battery_cost: charge/discharge length mismatch");
  }
  return params.degradation_cost * (charge.sum() + discharge.sum());
}

double discomfort_cost(const Eigen::VectorXd& indoor_temp, const HvacParams& hvac) {
  const Eigen::VectorXd dev =
      indoor_temp.array() - hvac.preferred_temp;
  return hvac.comfort_weight * dev.squaredNorm();
}

double p2p_cost(const PairTensor& trades, int user, const GridTariff& tariff) {
  double cost = 0.0;
  for (int t = 0; t < trades.slot_count; ++t) {
    double net = 0.0;
    for (int v = 0; v < trades.user_count; ++v) net += trades.at(user, v, t);
    cost += tariff.p2p_price[t] * net;
  }
  return cost;
}

CostBreakdown make_cost_breakdown(double grid, double battery, double discomfort,
                                  double p2p) {
  CostBreakdown c;
  c.grid_cost = grid;
  c.battery_cost = battery;
  c.discomfort_cost = discomfort;
  c.p2p_cost = p2p;
  c.total = grid + battery + discomfort + p2p;
  return c;
}

namespace {

void check_box(std::vector<ConstraintViolation>& out, const std::string& name,
               const Eigen::VectorXd& x, double lo, double hi, double tol) {
  for (int t = 0; t < x.size(); ++t) {
    if (x[t] < lo - tol) out.push_back({name + " lower bound", t, lo - x[t]});
    if (x[t] > hi + tol) out.push_back({name + " upper bound", t, x[t] - hi});
  }
}

}  // namespace

std::vector<ConstraintViolation> validate_schedule(
    const Schedule& schedule, const UserProfile& profile, const UserEnvironment& env,
    const TimeHorizon& horizon, const Eigen::VectorXd* net_trade, double tolerance) {
  std::vector<ConstraintViolation> out;
  const int H = horizon.slot_count;

  const auto check_len = [&](const char* name, const Eigen::VectorXd& v) {
    if (v.size() != H) {
      out.push_back({std::string(name) + " length", -1,
                     static_cast<double>(v.size() - H)});
      return false;
    }
    return true;
  };
  bool sized = true;
  sized &= check_len("grid", schedule.grid);
  sized &= check_len("renewable", schedule.renewable);
  sized &= check_len("hvac", schedule.hvac);
  sized &= check_len("charge", schedule.charge);
  sized &= check_len("discharge", schedule.discharge);
  sized &= check_len("battery_level", schedule.battery_level);
  sized &= check_len("indoor_temp", schedule.indoor_temp);
  if (!sized) return out;

  check_box(out, "grid", schedule.grid, 0.0, profile.grid_cap, tolerance);
  for (int t = 0; t < H; ++t) {
    if (schedule.renewable[t] < -tolerance) {
      out.push_back({"renewable lower bound", t, -schedule.renewable[t]});
    }
    if (schedule.renewable[t] > env.renewable_cap[t] + tolerance) {
      out.push_back({"renewable cap", t, schedule.renewable[t] - env.renewable_cap[t]});
    }
  }
  check_box(out, "hvac", schedule.hvac, 0.0, profile.hvac.hvac_max, tolerance);
  check_box(out, "charge", schedule.charge, 0.0, profile.battery.max_charge, tolerance);
  check_box(out, "discharge", schedule.discharge, 0.0, profile.battery.max_discharge,
            tolerance);
  check_box(out, "battery_level", schedule.battery_level, 0.0,
            profile.battery.capacity, tolerance);
  check_box(out, "indoor_temp", schedule.indoor_temp, profile.hvac.temp_min,
            profile.hvac.temp_max, tolerance);

  for (int t = 0; t < H; ++t) {
    if (schedule.grid[t] > schedule.peak + tolerance) {
      out.push_back({"peak epigraph", t, schedule.grid[t] - schedule.peak});
    }
  }

  // Battery recursion b_t = b_{t-1} + c_t - d_t, anchored at initial_level.
  double prev_level = profile.battery.initial_level;
  for (int t = 0; t < H; ++t) {
    const double expected = prev_level + schedule.charge[t] - schedule.discharge[t];
    const double err = std::abs(schedule.battery_level[t] - expected);
    if (err > tolerance) out.push_back({"battery recursion", t, err});
    prev_level = schedule.battery_level[t];
  }

  // Thermal recursion, anchored at initial_temp.
  double prev_temp = profile.hvac.initial_temp;
  for (int t = 0; t < H; ++t) {
    const double expected =
        thermal_step(prev_temp, env.outdoor_temp[t], schedule.hvac[t], profile.hvac);
    const double err = std::abs(schedule.indoor_temp[t] - expected);
    if (err > tolerance) out.push_back({"thermal recursion", t, err});
    prev_temp = schedule.indoor_temp[t];
  }

  // Energy balance: r + g + d (+ net trade) = h + l + c.
  for (int t = 0; t < H; ++t) {
    double supply = schedule.renewable[t] + schedule.grid[t] + schedule.discharge[t];
    if (net_trade != nullptr) supply += (*net_trade)[t];
    const double demand =
        schedule.hvac[t] + env.inflexible_load[t] + schedule.charge[t];
    const double err = std::abs(supply - demand);
    if (err > tolerance) out.push_back({"energy balance", t, err});
  }

  return out;
}

std::vector<std::string> validate_profile(const UserProfile& profile) {
  std::vector<std::string> out;
  const auto& b = profile.battery;
  const auto& h = profile.hvac;
  if (profile.grid_cap <= 0.0) out.push_back("grid_cap must be positive");
  if (b.capacity < 0.0) out.push_back("battery capacity must be nonnegative");
  if (b.max_charge <= 0.0) out.push_back("battery max_charge must be positive");
  if (b.max_discharge <= 0.0) out.push_back("battery max_discharge must be positive");
  if (b.degradation_cost < 0.0) out.push_back("battery degradation_cost must be nonnegative");
  if (b.initial_level < 0.0 || b.initial_level > b.capacity) {
    out.push_back("battery initial_level must lie in [0, capacity]");
  }
  if (h.thermal_rc <= 0.0) out.push_back("hvac thermal_rc must be positive");
  if (h.efficiency == 0.0) out.push_back("hvac efficiency must be nonzero");
  if (h.comfort_weight < 0.0) out.push_back("hvac comfort_weight must be nonnegative");
  if (h.temp_min > h.temp_max) out.push_back("hvac temp_min must not exceed temp_max");
  if (h.preferred_temp < h.temp_min || h.preferred_temp > h.temp_max) {
    out.push_back("hvac preferred_temp must lie in [temp_min, temp_max]");
  }
  if (h.initial_temp < h.temp_min || h.initial_temp > h.temp_max) {
    out.push_back("hvac initial_temp must lie in [temp_min, temp_max]");
  }
  if (h.hvac_max <= 0.0) out.push_back("hvac hvac_max must be positive");
  return out;
}

std::vector<std::string> validate_tariff(const GridTariff& tariff, int slot_count) {
  std::vector<std::string> out;
  if (tariff.energy_price < 0.0) out.push_back("energy_price must be nonnegative");
  if (tariff.peak_price < 0.0) out.push_back("peak_price must be nonnegative");
  if (tariff.p2p_price.size() != slot_count) {
    out.push_back("p2p_price must have one entry per slot");
    return out;
  }
  for (int t = 0; t < slot_count; ++t) {
    if (tariff.p2p_price[t] < 0.0) {
      out.push_back("p2p_price[" + std::to_string(t) + "] must be nonnegative");
    }
    if (tariff.p2p_price[t] >= tariff.energy_price) {
      out.push_back("p2p_price[" + std::to_string(t) +
                    "] must undercut energy_price (trading must be cheaper than the grid)");
    }
  }
  return out;
}

std::vector<std::string> validate_environment(const EnvironmentSeries& env,
                                              int expected_slots, int expected_users) {
  std::vector<std::string> out;
  if (env.outdoor_temp.size() != expected_slots) {
    out.push_back("outdoor_temp length mismatch: expected " +
                  std::to_string(expected_slots) + ", got " +
                  std::to_string(env.outdoor_temp.size()));
  }
  const auto check_matrix = [&](const char* name, const Eigen::MatrixXd& m,
                                bool nonnegative) {
    if (m.rows() != expected_slots || m.cols() != expected_users) {
      out.push_back(std::string(name) + " shape mismatch: expected " +
                    std::to_string(expected_slots) + "x" + std::to_string(expected_users) +
                    ", got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
      return;
    }
    if (nonnegative && (m.array() < 0.0).any()) {
      out.push_back(std::string(name) + " contains negative entries");
    }
  };
  check_matrix("renewable_cap", env.renewable_cap, true);
  check_matrix("inflexible_load", env.inflexible_load, true);
  return out;
}

}  // namespace peergrid
