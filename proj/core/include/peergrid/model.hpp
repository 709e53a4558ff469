#pragma once

#include <Eigen/Core>

#include <stdexcept>
#include <string>
#include <vector>

namespace peergrid {

/// Day-ahead planning window. Slots are one hour; multi-day studies are
/// chained single-day solves.
struct TimeHorizon {
  int slot_count = 24;
  double slot_hours = 1.0;
};

/// Two-part grid tariff plus the fixed community trading price.
/// p2p_price has one entry per slot and must undercut energy_price.
struct GridTariff {
  double energy_price = 0.0;      // currency/kWh
  double peak_price = 0.0;        // currency/kW on the max slot draw
  Eigen::VectorXd p2p_price;      // currency/kWh, length = slot_count
};

struct BatteryParams {
  double capacity = 0.0;          // kWh
  double max_charge = 0.0;        // kWh per slot
  double max_discharge = 0.0;     // kWh per slot
  double degradation_cost = 0.0;  // currency/kWh of throughput
  double initial_level = 0.0;     // kWh at the start of the horizon
};

/// First-order RC description of one home's thermal envelope plus the
/// comfort preference. efficiency is degC per kWh: positive heats,
/// negative cools.
struct HvacParams {
  double thermal_rc = 2.0;        // hours (R*C product)
  double efficiency = -2.0;       // degC/kWh, sign = mode
  double comfort_weight = 0.0;    // currency per degC^2
  double preferred_temp = 25.0;   // degC
  double temp_min = 15.0;         // degC
  double temp_max = 32.0;         // degC
  double initial_temp = 25.0;     // degC at the start of the horizon
  double hvac_max = 0.0;          // kWh per slot
};

struct UserProfile {
  int user_id = 0;
  double grid_cap = 0.0;          // kWh per slot from the grid
  BatteryParams battery;
  HvacParams hvac;
};

/// Exogenous traces over a span of slots. outdoor_temp is shared by all
/// users; renewable_cap and inflexible_load are slots x users.
struct EnvironmentSeries {
  Eigen::VectorXd outdoor_temp;
  Eigen::MatrixXd renewable_cap;
  Eigen::MatrixXd inflexible_load;

  int slots() const { return static_cast<int>(outdoor_temp.size()); }
  int users() const { return static_cast<int>(renewable_cap.cols()); }

  /// Contiguous sub-span [first_slot, first_slot + count).
  EnvironmentSeries slice(int first_slot, int count) const;
};

/// One user's column of an EnvironmentSeries over one horizon.
struct UserEnvironment {
  Eigen::VectorXd outdoor_temp;
  Eigen::VectorXd renewable_cap;
  Eigen::VectorXd inflexible_load;
};

UserEnvironment user_slice(const EnvironmentSeries& env, int user);

/// One user's decision vectors over the horizon. peak is the epigraph
/// scalar for max_t grid[t].
struct Schedule {
  Eigen::VectorXd grid;
  Eigen::VectorXd renewable;
  Eigen::VectorXd hvac;
  Eigen::VectorXd charge;
  Eigen::VectorXd discharge;
  Eigen::VectorXd battery_level;
  Eigen::VectorXd indoor_temp;
  double peak = 0.0;
};

/// Dense ordered-pair tensor x[u][v][t]. Storage is u-major, then v,
/// then t, so user u's block is one contiguous segment.
struct PairTensor {
  int user_count = 0;
  int slot_count = 0;
  Eigen::VectorXd data;

  PairTensor() = default;
  PairTensor(int users, int slots)
      : user_count(users),
        slot_count(slots),
        data(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(users) * users * slots)) {}

  Eigen::Index index(int u, int v, int t) const {
    return (static_cast<Eigen::Index>(u) * user_count + v) * slot_count + t;
  }
  double& at(int u, int v, int t) { return data[index(u, v, t)]; }
  double at(int u, int v, int t) const { return data[index(u, v, t)]; }

  /// All counterparties of user u, flattened (v-major, then t).
  Eigen::VectorBlock<Eigen::VectorXd> user_block(int u) {
    return data.segment(static_cast<Eigen::Index>(u) * user_count * slot_count,
                        static_cast<Eigen::Index>(user_count) * slot_count);
  }
  Eigen::VectorBlock<const Eigen::VectorXd> user_block(int u) const {
    return data.segment(static_cast<Eigen::Index>(u) * user_count * slot_count,
                        static_cast<Eigen::Index>(user_count) * slot_count);
  }
};

/// The trading triple (trades, auxiliary, duals). This is the only data
/// that crosses the agent/coordinator boundary.
struct TradeState {
  PairTensor trades;     // e[u][v][t], kWh; positive = u buys from v
  PairTensor auxiliary;  // antisymmetric copy maintained by the coordinator
  PairTensor duals;      // currency/kWh

  TradeState() = default;
  TradeState(int users, int slots)
      : trades(users, slots), auxiliary(users, slots), duals(users, slots) {}
};

struct CostBreakdown {
  double grid_cost = 0.0;
  double battery_cost = 0.0;
  double discomfort_cost = 0.0;
  double p2p_cost = 0.0;
  double total = 0.0;
};

// ---------------------------------------------------------------------------
// Cost formulas and physics
// ---------------------------------------------------------------------------

/// Retention factor of the indoor-outdoor temperature gap over one slot,
/// exp(-slot / (R*C)) with R*C in hours.
double thermal_decay(const HvacParams& hvac);

/// Next indoor temperature:
///   tau' = T_next - (T_next - tau) * exp(-1/RC) + efficiency * hvac_energy.
/// Affine in (tau, hvac_energy).
double thermal_step(double indoor_temp, double outdoor_next, double hvac_energy,
                    const HvacParams& hvac);

/// energy_price * sum(grid) + peak_price * max(grid).
double grid_cost(const Eigen::VectorXd& grid, const GridTariff& tariff);

/// degradation_cost * sum(charge + discharge).
double battery_cost(const Eigen::VectorXd& charge, const Eigen::VectorXd& discharge,
                    const BatteryParams& params);

/// comfort_weight * sum((indoor_temp - preferred)^2).
double discomfort_cost(const Eigen::VectorXd& indoor_temp, const HvacParams& hvac);

/// sum_t p2p_price[t] * sum_v trades[user][v][t]. Negative = net earnings.
double p2p_cost(const PairTensor& trades, int user, const GridTariff& tariff);

CostBreakdown make_cost_breakdown(double grid, double battery, double discomfort,
                                  double p2p);

// ---------------------------------------------------------------------------
// Feasibility validation
// ---------------------------------------------------------------------------

struct ConstraintViolation {
  std::string constraint;
  int slot = -1;        // -1 when not slot-specific
  double magnitude = 0.0;
};

/// Checks every schedule box bound, the battery recursion, the thermal
/// recursion, and the energy balance. net_trade (per-slot sum of the
/// user's trades) switches the balance to the trading form; pass nullptr
/// for the standalone form. Violations are data, not errors.
std::vector<ConstraintViolation> validate_schedule(
    const Schedule& schedule, const UserProfile& profile, const UserEnvironment& env,
    const TimeHorizon& horizon, const Eigen::VectorXd* net_trade = nullptr,
    double tolerance = 1e-6);

/// Static parameter checks (bounds ordered, rates positive, ...).
/// Returns one message per violated invariant.
std::vector<std::string> validate_profile(const UserProfile& profile);
std::vector<std::string> validate_tariff(const GridTariff& tariff, int slot_count);
std::vector<std::string> validate_environment(const EnvironmentSeries& env,
                                              int expected_slots, int expected_users);

}  // namespace peergrid
