#pragma once

#include "peergrid/model.hpp"
#include "peergrid/standalone.hpp"
#include "peergrid/trading.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace peergrid {

enum class Scenario { standalone, trading, both };

const char* to_string(Scenario scenario);
Scenario parse_scenario(const std::string& name);

/// Raised by loaders and validators; the message names the offending
/// file, field, and user where applicable.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CommunityConfig {
  TimeHorizon horizon;  // slots per day
  int day_count = 1;
  GridTariff tariff;
  std::vector<UserProfile> users;
  std::filesystem::path temperature_csv;  // resolved against the config dir
  std::filesystem::path renewable_csv;
  std::filesystem::path load_csv;
  AdmmSettings admm;
  Scenario scenario = Scenario::both;
  TerminalSoc terminal = TerminalSoc::free_end;
  std::uint64_t seed = 0;
  int workers = 0;

  int total_slots() const { return horizon.slot_count * day_count; }
};

/// Parses and fully validates a JSON config file. `overrides` are
/// dotted-path key/value pairs (e.g. {"admm.rho", "5"}) applied to the
/// parsed document before validation. Throws ConfigError.
CommunityConfig load_config(const std::filesystem::path& path,
                            const std::vector<std::pair<std::string, std::string>>&
                                overrides = {});

/// Reads a series CSV with header `t,u1,...,uN` (or `t,temp` when
/// expected_columns is 1). Returns the expected_rows x expected_columns
/// value matrix (the t column is checked, not returned). Throws
/// ConfigError naming the offending row/column.
Eigen::MatrixXd load_series_csv(const std::filesystem::path& path, int expected_columns,
                                int expected_rows, bool require_nonnegative);

/// Loads the three series files referenced by the config and checks
/// every core-model environment invariant.
EnvironmentSeries load_environment(const CommunityConfig& config);

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

struct SyntheticParams {
  double temp_mean = 28.0;      // daily average outdoor temperature, degC
  double temp_swing = 4.5;      // sinusoid amplitude, degC
  bool heating_season = false;  // true: heating-mode HVAC, weakened solar
};

struct SyntheticCommunity {
  EnvironmentSeries env;
  std::vector<UserProfile> profiles;
};

/// Deterministic generator shaped after the reference scenario: solar is
/// a clipped midday sinusoid, wind a smoothed positive autoregression,
/// load a morning/evening double hump; battery capacities are drawn from
/// [6, 15] kWh and comfort preferences from [20, 27] degC. Panel sizes
/// stay within [0.2, 3.5] kW and wind shares within [0, 1.5] kW, so
/// renewable_cap never exceeds 3.5 + 1.6 * 1.5 kWh per slot. Identical
/// arguments give bitwise-identical output.
SyntheticCommunity generate_synthetic(std::uint64_t seed, int n_users, int days,
                                      const SyntheticParams& params = {});

/// Writes a ready-to-run bundle: config JSON (named `config_filename`)
/// plus temperature.csv, renewable.csv, and load.csv next to it.
void write_community_bundle(const SyntheticCommunity& community,
                            const GridTariff& tariff, const AdmmSettings& admm,
                            const TimeHorizon& horizon, int day_count,
                            std::uint64_t seed, Scenario scenario,
                            const std::filesystem::path& out_dir,
                            const std::string& config_filename);

// ---------------------------------------------------------------------------
// Simulation driver and result persistence
// ---------------------------------------------------------------------------

struct DayOutcome {
  std::vector<StandaloneResult> standalone;  // empty when scenario = trading
  std::optional<TradingResult> trading;      // empty when scenario = standalone
};

struct SimulationOutput {
  CommunityConfig config;
  std::vector<DayOutcome> days;
};

/// Runs the configured scenario day by day. Battery levels and indoor
/// temperatures chain across days (independently per scenario).
SimulationOutput run_simulation(const CommunityConfig& config,
                                const EnvironmentSeries& env);

/// Persists a simulation: per-user schedule CSVs (columns
/// g,r,h,c,d,b,tau), the trade tensor (u,v,t,e), the cost comparison
/// table (user,s1_cost,s2_cost,reduction_pct), per-scenario cost
/// breakdowns, the ADMM trace (iteration,primal_residual,dual_change,
/// total_objective; iteration restarts each day), per-quantity plot
/// matrices, and run_meta.json. Layouts are documented in
/// docs/data-formats.md. Returns the list of files written.
std::vector<std::filesystem::path> write_results(const SimulationOutput& output,
                                                 const std::filesystem::path& out_dir);

/// Reads a schedule CSV written by write_results; peak is recovered as
/// max grid.
Schedule load_schedule_csv(const std::filesystem::path& path);

/// Reads a trade tensor CSV written by write_results.
PairTensor load_trades_csv(const std::filesystem::path& path, int users, int slots);

/// Shortest round-trip decimal formatting used for every CSV value;
/// parsing the text recovers the double bitwise.
std::string format_double(double value);

}  // namespace peergrid
