#include "peergrid/data_io.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <system_error>

namespace peergrid {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

const char* to_string(Scenario scenario) {
  switch (scenario) {
    case Scenario::standalone: return "standalone";
    case Scenario::trading: return "trading";
    case Scenario::both: return "both";
  }
  return "unknown";
}

Scenario parse_scenario(const std::string& name) {
  if (name == "standalone") return Scenario::standalone;
  if (name == "trading") return Scenario::trading;
  if (name == "both") return Scenario::both;
  throw ConfigError("scenario must be standalone, trading, or both; got '" + name + "'");
}

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

namespace {

double parse_double(std::string_view text, const std::string& where) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  const auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw ConfigError(where + ": non-numeric cell '" + std::string(text) + "'");
  }
  if (!std::isfinite(value)) {
    throw ConfigError(where + ": non-finite value");
  }
  return value;
}

long parse_long(std::string_view text, const std::string& where) {
  long value = 0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc{} || res.ptr != text.data() + text.size()) {
    throw ConfigError(where + ": non-integer cell '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

const json& require_key(const json& j, const char* key, const std::string& context) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw ConfigError(context + ": missing key '" + key + "'");
  }
  return *it;
}

double require_number(const json& j, const char* key, const std::string& context) {
  const json& v = require_key(j, key, context);
  if (!v.is_number()) {
    throw ConfigError(context + ": key '" + key + "' must be a number");
  }
  return v.get<double>();
}

int require_int(const json& j, const char* key, const std::string& context) {
  const json& v = require_key(j, key, context);
  if (!v.is_number_integer()) {
    throw ConfigError(context + ": key '" + key + "' must be an integer");
  }
  return v.get<int>();
}

bool is_admm_key(const std::string& key) {
  return key == "rho" || key == "eps_primal" || key == "eps_dual" ||
         key == "max_iterations" || key == "record_trace" || key == "adaptive_rho" ||
         key == "infinity_norms";
}

void apply_override(json& doc, const std::string& dotted, const std::string& value) {
  json* node = &doc;
  std::string key;
  std::istringstream path(dotted);
  std::vector<std::string> parts;
  while (std::getline(path, key, '.')) parts.push_back(key);
  if (parts.empty()) throw ConfigError("override with empty key");
  // Bare solver keys are shorthand for the admm block: "--set rho=5".
  if (parts.size() == 1 && is_admm_key(parts[0])) parts.insert(parts.begin(), "admm");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (node->is_array()) {
      size_t index = 0;
      const auto& part = parts[i];
      const auto res = std::from_chars(part.data(), part.data() + part.size(), index);
      if (res.ec != std::errc{} || res.ptr != part.data() + part.size() ||
          index >= node->size()) {
        throw ConfigError("override '" + dotted + "': bad array index '" + part + "'");
      }
      node = &((*node)[index]);
    } else {
      node = &((*node)[parts[i]]);
    }
  }
  json parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) {
    (*node)[parts.back()] = value;
  } else {
    (*node)[parts.back()] = parsed;
  }
}

}  // namespace

CommunityConfig load_config(
    const fs::path& path,
    const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());

  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& err) {
    throw ConfigError(path.string() + ": " + err.what());
  }
  for (const auto& [key, value] : overrides) {
    apply_override(doc, key, value);
  }

  const std::string ctx = path.filename().string();
  CommunityConfig config;

  const json& horizon = require_key(doc, "horizon", ctx);
  config.horizon.slot_count = require_int(horizon, "slots_per_day", ctx + ".horizon");
  config.day_count = require_int(horizon, "days", ctx + ".horizon");
  if (config.horizon.slot_count < 1) {
    throw ConfigError(ctx + ": horizon.slots_per_day must be at least 1");
  }
  if (config.day_count < 1) throw ConfigError(ctx + ": horizon.days must be at least 1");

  const json& tariff = require_key(doc, "tariff", ctx);
  config.tariff.energy_price = require_number(tariff, "energy_price", ctx + ".tariff");
  config.tariff.peak_price = require_number(tariff, "peak_price", ctx + ".tariff");
  const json& p2p = require_key(tariff, "p2p_price", ctx + ".tariff");
  const int H = config.horizon.slot_count;
  if (p2p.is_number()) {
    config.tariff.p2p_price = Eigen::VectorXd::Constant(H, p2p.get<double>());
  } else if (p2p.is_array()) {
    if (static_cast<int>(p2p.size()) != H) {
      throw ConfigError(ctx + ".tariff: p2p_price array must have slots_per_day entries");
    }
    config.tariff.p2p_price.resize(H);
    for (int t = 0; t < H; ++t) config.tariff.p2p_price[t] = p2p[t].get<double>();
  } else {
    throw ConfigError(ctx + ".tariff: p2p_price must be a number or an array");
  }

  if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
  if (doc.contains("workers")) config.workers = doc["workers"].get<int>();
  if (doc.contains("scenario")) {
    config.scenario = parse_scenario(doc["scenario"].get<std::string>());
  }
  if (doc.contains("terminal_soc")) {
    const std::string t = doc["terminal_soc"].get<std::string>();
    if (t == "free") {
      config.terminal = TerminalSoc::free_end;
    } else if (t == "return_to_initial") {
      config.terminal = TerminalSoc::return_to_initial;
    } else {
      throw ConfigError(ctx + ": terminal_soc must be free or return_to_initial");
    }
  }

  if (doc.contains("admm")) {
    const json& admm = doc["admm"];
    const std::string actx = ctx + ".admm";
    if (admm.contains("rho")) config.admm.rho = admm["rho"].get<double>();
    if (admm.contains("eps_primal")) config.admm.eps_primal = admm["eps_primal"].get<double>();
    if (admm.contains("eps_dual")) config.admm.eps_dual = admm["eps_dual"].get<double>();
    if (admm.contains("max_iterations")) {
      config.admm.max_iterations = admm["max_iterations"].get<int>();
    }
    if (admm.contains("record_trace")) config.admm.record_trace = admm["record_trace"].get<bool>();
    if (admm.contains("adaptive_rho")) config.admm.adaptive_rho = admm["adaptive_rho"].get<bool>();
    if (admm.contains("infinity_norms")) {
      config.admm.infinity_norms = admm["infinity_norms"].get<bool>();
    }
    if (config.admm.rho <= 0.0) throw ConfigError(actx + ": rho must be positive");
    if (config.admm.eps_primal <= 0.0 || config.admm.eps_dual <= 0.0) {
      throw ConfigError(actx + ": convergence thresholds must be positive");
    }
    if (config.admm.max_iterations < 1) {
      throw ConfigError(actx + ": max_iterations must be at least 1");
    }
  }

  const json& series = require_key(doc, "series", ctx);
  const fs::path base = path.parent_path();
  const auto resolve = [&](const char* key) {
    const std::string rel = require_key(series, key, ctx + ".series").get<std::string>();
    fs::path p = rel;
    if (p.is_relative()) p = base / p;
    if (!fs::exists(p)) {
      throw ConfigError(ctx + ".series: referenced file does not exist: " + p.string());
    }
    return p;
  };
  config.temperature_csv = resolve("temperature");
  config.renewable_csv = resolve("renewable");
  config.load_csv = resolve("load");

  const json& users = require_key(doc, "users", ctx);
  if (!users.is_array() || users.empty()) {
    throw ConfigError(ctx + ": users must be a non-empty array");
  }
  for (size_t i = 0; i < users.size(); ++i) {
    const json& uj = users[i];
    const std::string uctx = ctx + ".users[" + std::to_string(i) + "]";
    UserProfile profile;
    profile.user_id = require_int(uj, "user_id", uctx);
    if (profile.user_id != static_cast<int>(i)) {
      throw ConfigError(uctx + ": user_id must equal the array position " +
                        std::to_string(i));
    }
    profile.grid_cap = require_number(uj, "grid_cap", uctx);

    const json& bj = require_key(uj, "battery", uctx);
    profile.battery.capacity = require_number(bj, "capacity", uctx + ".battery");
    profile.battery.max_charge = require_number(bj, "max_charge", uctx + ".battery");
    profile.battery.max_discharge = require_number(bj, "max_discharge", uctx + ".battery");
    profile.battery.degradation_cost =
        require_number(bj, "degradation_cost", uctx + ".battery");
    profile.battery.initial_level = require_number(bj, "initial_level", uctx + ".battery");

    const json& hj = require_key(uj, "hvac", uctx);
    profile.hvac.thermal_rc = require_number(hj, "thermal_rc", uctx + ".hvac");
    profile.hvac.efficiency = require_number(hj, "efficiency", uctx + ".hvac");
    profile.hvac.comfort_weight = require_number(hj, "comfort_weight", uctx + ".hvac");
    profile.hvac.preferred_temp = require_number(hj, "preferred_temp", uctx + ".hvac");
    profile.hvac.temp_min = require_number(hj, "temp_min", uctx + ".hvac");
    profile.hvac.temp_max = require_number(hj, "temp_max", uctx + ".hvac");
    profile.hvac.initial_temp = require_number(hj, "initial_temp", uctx + ".hvac");
    profile.hvac.hvac_max = require_number(hj, "hvac_max", uctx + ".hvac");

    const auto problems = validate_profile(profile);
    if (!problems.empty()) {
      std::string joined = uctx + " (user " + std::to_string(profile.user_id) + "):";
      for (const auto& msg : problems) joined += "\n  " + msg;
      throw ConfigError(joined);
    }
    config.users.push_back(profile);
  }

  const auto tariff_problems =
      validate_tariff(config.tariff, config.horizon.slot_count);
  if (!tariff_problems.empty()) {
    std::string joined = ctx + ".tariff:";
    for (const auto& msg : tariff_problems) joined += "\n  " + msg;
    throw ConfigError(joined);
  }

  return config;
}

Eigen::MatrixXd load_series_csv(const fs::path& path, int expected_columns,
                                int expected_rows, bool require_nonnegative) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open series file: " + path.string());
  const std::string name = path.filename().string();

  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") {
    throw ConfigError(name + ": first header column must be 't'");
  }
  if (static_cast<int>(header.size()) - 1 != expected_columns) {
    throw ConfigError(name + ": expected " + std::to_string(expected_columns) +
                      " value columns, found " + std::to_string(header.size() - 1));
  }
  const bool temperature_style = expected_columns == 1 && header[1] == "temp";
  if (!temperature_style) {
    for (int c = 0; c < expected_columns; ++c) {
      const std::string expected = "u" + std::to_string(c + 1);
      if (header[c + 1] != expected) {
        throw ConfigError(name + ": header column " + std::to_string(c + 2) +
                          " must be '" + expected + "', found '" + header[c + 1] + "'");
      }
    }
  }

  Eigen::MatrixXd values(expected_rows, expected_columns);
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (row >= expected_rows) {
      throw ConfigError(name + ": more than the expected " +
                        std::to_string(expected_rows) + " rows");
    }
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != expected_columns + 1) {
      throw ConfigError(name + " row " + std::to_string(row + 2) +
                        ": expected " + std::to_string(expected_columns + 1) +
                        " fields, found " + std::to_string(fields.size()));
    }
    const std::string where = name + " row " + std::to_string(row + 2);
    const long t = parse_long(fields[0], where + " column t");
    if (t != row) {
      throw ConfigError(where + ": slot index " + std::to_string(t) +
                        " out of order (expected " + std::to_string(row) + ")");
    }
    for (int c = 0; c < expected_columns; ++c) {
      const std::string cell_where =
          where + " column " + (temperature_style ? "temp" : header[c + 1]);
      const double v = parse_double(fields[c + 1], cell_where);
      if (require_nonnegative && v < 0.0) {
        throw ConfigError(cell_where + ": negative value " + format_double(v));
      }
      values(row, c) = v;
    }
    ++row;
  }
  if (row != expected_rows) {
    throw ConfigError(name + ": expected " + std::to_string(expected_rows) +
                      " rows, found " + std::to_string(row));
  }
  return values;
}

EnvironmentSeries load_environment(const CommunityConfig& config) {
  const int total = config.total_slots();
  const int n = static_cast<int>(config.users.size());

  EnvironmentSeries env;
  env.outdoor_temp = load_series_csv(config.temperature_csv, 1, total, false).col(0);
  env.renewable_cap = load_series_csv(config.renewable_csv, n, total, true);
  env.inflexible_load = load_series_csv(config.load_csv, n, total, true);

  const auto problems = validate_environment(env, total, n);
  if (!problems.empty()) {
    std::string joined = "environment series:";
    for (const auto& msg : problems) joined += "\n  " + msg;
    throw ConfigError(joined);
  }
  return env;
}

// ---------------------------------------------------------------------------
// Synthetic data
// ---------------------------------------------------------------------------

namespace {

/// Distributions are hand-rolled over the standardized mt19937_64 stream
/// so the byte-level output never depends on the standard library's
/// distribution implementations.
class SyntheticRng {
 public:
  explicit SyntheticRng(std::uint64_t seed) : engine_(seed) {}

  double u01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * u01(); }
  double normal() {
    const double u1 = std::max(u01(), 1e-300);
    const double u2 = u01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace

SyntheticCommunity generate_synthetic(std::uint64_t seed, int n_users, int days,
                                      const SyntheticParams& params) {
  if (n_users < 1 || days < 1) {
    throw std::invalid_argument("generate_synthetic: n_users and days must be positive");
  }
  SyntheticRng rng(seed);
  const int total = 24 * days;

  SyntheticCommunity out;
  std::vector<double> solar_kw(n_users), wind_kw(n_users), load_scale(n_users);

  for (int u = 0; u < n_users; ++u) {
    solar_kw[u] = rng.uniform(0.24, 4.2);
    wind_kw[u] = rng.uniform(0.0, 1.8);
    load_scale[u] = rng.uniform(0.7, 1.4);

    UserProfile p;
    p.user_id = u;
    p.grid_cap = 8.8;

    p.battery.capacity = rng.uniform(6.0, 15.0);
    p.battery.max_charge = 0.5 * p.battery.capacity;
    p.battery.max_discharge = 0.5 * p.battery.capacity;
    // Fleet-standard wear price: one battery line across the community.
    p.battery.degradation_cost = 0.02;
    p.battery.initial_level = 0.0;

    p.hvac.thermal_rc = rng.uniform(1.5, 3.5);
    const double strength = params.heating_season ? rng.uniform(2.0, 3.0)
                                                  : rng.uniform(1.5, 2.5);
    p.hvac.efficiency = params.heating_season ? strength : -strength;
    p.hvac.comfort_weight = rng.uniform(0.04, 0.12);
    p.hvac.preferred_temp = rng.uniform(20.0, 27.0);
    const double band = rng.uniform(1.5, 3.0);
    p.hvac.temp_min = p.hvac.preferred_temp - band;
    p.hvac.temp_max = p.hvac.preferred_temp + band;
    p.hvac.initial_temp = p.hvac.preferred_temp;
    p.hvac.hvac_max = p.grid_cap;

    out.profiles.push_back(p);
  }

  out.env.outdoor_temp.resize(total);
  for (int g = 0; g < total; ++g) {
    const int h = g % 24;
    out.env.outdoor_temp[g] = params.temp_mean +
                              params.temp_swing * std::sin(2.0 * M_PI * (h - 9) / 24.0) +
                              0.6 * rng.normal();
  }

  // A one-directional unit cannot push against its own sign: a cooler
  // cannot hold a floor above the coldest outdoor hour, nor a heater a
  // ceiling below the hottest. Widen the band so every draw is feasible.
  const double outdoor_min = out.env.outdoor_temp.minCoeff();
  const double outdoor_max = out.env.outdoor_temp.maxCoeff();
  for (auto& p : out.profiles) {
    if (p.hvac.efficiency < 0.0) {
      p.hvac.temp_min = std::min(p.hvac.temp_min, outdoor_min - 0.5);
    } else {
      p.hvac.temp_max = std::max(p.hvac.temp_max, outdoor_max + 0.5);
    }
  }

  out.env.renewable_cap.resize(total, n_users);
  const double solar_factor = params.heating_season ? 0.45 : 1.0;
  for (int u = 0; u < n_users; ++u) {
    double wind_level = 0.5 * wind_kw[u];
    for (int g = 0; g < total; ++g) {
      const int h = g % 24;
      const double shape = std::max(0.0, std::sin(M_PI * (h - 6) / 12.0));
      const double solar = solar_kw[u] * solar_factor * shape * rng.uniform(0.75, 1.1);
      const double target = wind_kw[u] * (0.3 + 1.0 * rng.u01());
      wind_level = 0.8 * wind_level + 0.2 * target;
      out.env.renewable_cap(g, u) = solar + wind_level;
    }
  }

  out.env.inflexible_load.resize(total, n_users);
  for (int u = 0; u < n_users; ++u) {
    for (int g = 0; g < total; ++g) {
      const int h = g % 24;
      const double morning = 0.9 * std::exp(-0.5 * (h - 7.5) * (h - 7.5) / 1.0);
      const double evening = 1.3 * std::exp(-0.5 * (h - 19.5) * (h - 19.5) / 2.25);
      const double base = 0.35 + morning + evening;
      out.env.inflexible_load(g, u) = load_scale[u] * base * rng.uniform(0.85, 1.15);
    }
  }

  return out;
}

// ---------------------------------------------------------------------------
// Persistence
// ---------------------------------------------------------------------------

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);  // binary: byte-stable newlines
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

void write_series_file(const fs::path& path, const Eigen::MatrixXd& values,
                       bool temperature_style) {
  auto out = open_out(path);
  out << "t";
  if (temperature_style) {
    out << ",temp";
  } else {
    for (int c = 0; c < values.cols(); ++c) out << ",u" << (c + 1);
  }
  out << "\n";
  for (int r = 0; r < values.rows(); ++r) {
    out << r;
    for (int c = 0; c < values.cols(); ++c) out << "," << format_double(values(r, c));
    out << "\n";
  }
}

}  // namespace

void write_community_bundle(const SyntheticCommunity& community,
                            const GridTariff& tariff, const AdmmSettings& admm,
                            const TimeHorizon& horizon, int day_count,
                            std::uint64_t seed, Scenario scenario,
                            const fs::path& out_dir,
                            const std::string& config_filename) {
  fs::create_directories(out_dir);
  const std::string stem = fs::path(config_filename).stem().string();
  const std::string temp_name = stem + "_temperature.csv";
  const std::string renew_name = stem + "_renewable.csv";
  const std::string load_name = stem + "_load.csv";

  write_series_file(out_dir / temp_name, community.env.outdoor_temp, true);
  write_series_file(out_dir / renew_name, community.env.renewable_cap, false);
  write_series_file(out_dir / load_name, community.env.inflexible_load, false);

  ordered_json doc;
  doc["horizon"] = {{"slots_per_day", horizon.slot_count}, {"days", day_count}};
  doc["seed"] = seed;
  doc["scenario"] = to_string(scenario);
  doc["terminal_soc"] = "free";
  doc["tariff"] = {{"energy_price", tariff.energy_price},
                   {"peak_price", tariff.peak_price},
                   {"p2p_price", tariff.p2p_price[0]}};
  doc["admm"] = {{"rho", admm.rho},
                 {"eps_primal", admm.eps_primal},
                 {"eps_dual", admm.eps_dual},
                 {"max_iterations", admm.max_iterations},
                 {"record_trace", admm.record_trace}};
  doc["series"] = {{"temperature", temp_name},
                   {"renewable", renew_name},
                   {"load", load_name}};
  doc["users"] = ordered_json::array();
  for (const auto& p : community.profiles) {
    ordered_json uj;
    uj["user_id"] = p.user_id;
    uj["grid_cap"] = p.grid_cap;
    uj["battery"] = {{"capacity", p.battery.capacity},
                     {"max_charge", p.battery.max_charge},
                     {"max_discharge", p.battery.max_discharge},
                     {"degradation_cost", p.battery.degradation_cost},
                     {"initial_level", p.battery.initial_level}};
    uj["hvac"] = {{"thermal_rc", p.hvac.thermal_rc},
                  {"efficiency", p.hvac.efficiency},
                  {"comfort_weight", p.hvac.comfort_weight},
                  {"preferred_temp", p.hvac.preferred_temp},
                  {"temp_min", p.hvac.temp_min},
                  {"temp_max", p.hvac.temp_max},
                  {"initial_temp", p.hvac.initial_temp},
                  {"hvac_max", p.hvac.hvac_max}};
    doc["users"].push_back(uj);
  }

  auto out = open_out(out_dir / config_filename);
  out << doc.dump(2) << "\n";
}

SimulationOutput run_simulation(const CommunityConfig& config,
                                const EnvironmentSeries& env) {
  const int n = static_cast<int>(config.users.size());
  const int H = config.horizon.slot_count;
  if (env.slots() != config.total_slots() || env.users() != n) {
    throw std::invalid_argument("run_simulation: environment shape mismatch");
  }

  SimulationOutput output;
  output.config = config;

  std::vector<UserProfile> s1_profiles = config.users;
  std::vector<UserProfile> s2_profiles = config.users;

  for (int d = 0; d < config.day_count; ++d) {
    const EnvironmentSeries day_env = env.slice(d * H, H);
    DayOutcome outcome;

    if (config.scenario != Scenario::trading) {
      outcome.standalone = solve_standalone_community(
          s1_profiles, day_env, config.tariff, config.horizon, config.terminal, {},
          config.workers);
      for (int u = 0; u < n; ++u) {
        const auto& res = outcome.standalone[u];
        if (res.solver_status != SolveStatus::optimal) {
          throw std::runtime_error("day " + std::to_string(d + 1) + " user " +
                                   std::to_string(u) + ": standalone solve returned " +
                                   to_string(res.solver_status));
        }
        s1_profiles[u].battery.initial_level = res.schedule.battery_level[H - 1];
        s1_profiles[u].hvac.initial_temp = res.schedule.indoor_temp[H - 1];
      }
    }

    if (config.scenario != Scenario::standalone) {
      try {
        outcome.trading = run_admm(s2_profiles, day_env, config.tariff, config.horizon,
                                   config.admm, config.terminal, config.workers);
      } catch (const std::exception& err) {
        throw std::runtime_error("day " + std::to_string(d + 1) + ": " + err.what());
      }
      for (int u = 0; u < n; ++u) {
        const auto& sched = outcome.trading->schedules[u];
        s2_profiles[u].battery.initial_level = sched.battery_level[H - 1];
        s2_profiles[u].hvac.initial_temp = sched.indoor_temp[H - 1];
      }
    }

    output.days.push_back(std::move(outcome));
  }
  return output;
}

namespace {

void write_schedule_file(const fs::path& path, const std::vector<const Schedule*>& days) {
  auto out = open_out(path);
  out << "g,r,h,c,d,b,tau\n";
  for (const Schedule* s : days) {
    for (int t = 0; t < s->grid.size(); ++t) {
      out << format_double(s->grid[t]) << ',' << format_double(s->renewable[t]) << ','
          << format_double(s->hvac[t]) << ',' << format_double(s->charge[t]) << ','
          << format_double(s->discharge[t]) << ',' << format_double(s->battery_level[t])
          << ',' << format_double(s->indoor_temp[t]) << "\n";
    }
  }
}

void write_breakdown_file(const fs::path& path, const std::vector<CostBreakdown>& totals) {
  auto out = open_out(path);
  out << "user,grid,battery,discomfort,p2p,total\n";
  for (size_t u = 0; u < totals.size(); ++u) {
    const auto& c = totals[u];
    out << u << ',' << format_double(c.grid_cost) << ',' << format_double(c.battery_cost)
        << ',' << format_double(c.discomfort_cost) << ',' << format_double(c.p2p_cost)
        << ',' << format_double(c.total) << "\n";
  }
}

void write_plot_file(const fs::path& path, const Eigen::MatrixXd& values) {
  write_series_file(path, values, false);
}

}  // namespace

std::vector<fs::path> write_results(const SimulationOutput& output,
                                    const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::vector<fs::path> written;
  const auto track = [&](fs::path p) {
    written.push_back(p);
    return written.back();
  };

  const CommunityConfig& config = output.config;
  const int n = static_cast<int>(config.users.size());
  const int H = config.horizon.slot_count;
  const int day_count = static_cast<int>(output.days.size());
  const int total = H * day_count;

  const bool have_s1 = config.scenario != Scenario::trading;
  const bool have_s2 = config.scenario != Scenario::standalone;

  // Per-user schedules, days concatenated.
  for (int u = 0; u < n; ++u) {
    if (have_s1) {
      std::vector<const Schedule*> days;
      for (const auto& day : output.days) days.push_back(&day.standalone[u].schedule);
      write_schedule_file(track(out_dir / ("s1_schedule_u" + std::to_string(u) + ".csv")),
                          days);
    }
    if (have_s2) {
      std::vector<const Schedule*> days;
      for (const auto& day : output.days) days.push_back(&day.trading->schedules[u]);
      write_schedule_file(track(out_dir / ("s2_schedule_u" + std::to_string(u) + ".csv")),
                          days);
    }
  }

  // Cost totals per user across the run.
  std::vector<CostBreakdown> s1_totals(n), s2_totals(n);
  for (const auto& day : output.days) {
    for (int u = 0; u < n; ++u) {
      if (have_s1) {
        const auto& c = day.standalone[u].costs;
        s1_totals[u] = make_cost_breakdown(s1_totals[u].grid_cost + c.grid_cost,
                                           s1_totals[u].battery_cost + c.battery_cost,
                                           s1_totals[u].discomfort_cost + c.discomfort_cost,
                                           s1_totals[u].p2p_cost + c.p2p_cost);
      }
      if (have_s2) {
        const auto& c = day.trading->costs[u];
        s2_totals[u] = make_cost_breakdown(s2_totals[u].grid_cost + c.grid_cost,
                                           s2_totals[u].battery_cost + c.battery_cost,
                                           s2_totals[u].discomfort_cost + c.discomfort_cost,
                                           s2_totals[u].p2p_cost + c.p2p_cost);
      }
    }
  }
  if (have_s1) write_breakdown_file(track(out_dir / "s1_breakdown.csv"), s1_totals);
  if (have_s2) write_breakdown_file(track(out_dir / "s2_breakdown.csv"), s2_totals);

  if (have_s1 && have_s2) {
    auto out = open_out(track(out_dir / "costs.csv"));
    out << "user,s1_cost,s2_cost,reduction_pct\n";
    for (int u = 0; u < n; ++u) {
      const double s1 = s1_totals[u].total;
      const double s2 = s2_totals[u].total;
      const double reduction = s1 != 0.0 ? (s1 - s2) / s1 * 100.0 : 0.0;
      out << u << ',' << format_double(s1) << ',' << format_double(s2) << ','
          << format_double(reduction) << "\n";
    }
  }

  if (have_s2) {
    // Trade tensor, all ordered pairs, slot indices global across days.
    auto out = open_out(track(out_dir / "trades.csv"));
    out << "u,v,t,e\n";
    for (int u = 0; u < n; ++u) {
      for (int v = 0; v < n; ++v) {
        for (int d = 0; d < day_count; ++d) {
          const PairTensor& trades = output.days[d].trading->trade_state.trades;
          for (int t = 0; t < H; ++t) {
            out << u << ',' << v << ',' << (d * H + t) << ','
                << format_double(trades.at(u, v, t)) << "\n";
          }
        }
      }
    }

    auto trace = open_out(track(out_dir / "trace.csv"));
    trace << "iteration,primal_residual,dual_change,total_objective\n";
    for (const auto& day : output.days) {
      for (const auto& entry : day.trading->trace) {
        trace << entry.iteration << ',' << format_double(entry.primal_residual) << ','
              << format_double(entry.dual_change) << ','
              << format_double(entry.total_objective) << "\n";
      }
    }
  }

  // Plot-ready per-slot matrices (one column per user).
  const auto collect = [&](bool s2, auto accessor) {
    Eigen::MatrixXd m(total, n);
    for (int d = 0; d < day_count; ++d) {
      for (int u = 0; u < n; ++u) {
        const Schedule& sched = s2 ? output.days[d].trading->schedules[u]
                                   : output.days[d].standalone[u].schedule;
        m.block(d * H, u, H, 1) = accessor(sched);
      }
    }
    return m;
  };
  const auto grid_of = [](const Schedule& s) { return s.grid; };
  const auto renewable_of = [](const Schedule& s) { return s.renewable; };
  const auto hvac_of = [](const Schedule& s) { return s.hvac; };
  const auto battery_of = [](const Schedule& s) { return s.battery_level; };
  if (have_s1) {
    write_plot_file(track(out_dir / "plot_grid_s1.csv"), collect(false, grid_of));
    write_plot_file(track(out_dir / "plot_renewable_s1.csv"), collect(false, renewable_of));
    write_plot_file(track(out_dir / "plot_hvac_s1.csv"), collect(false, hvac_of));
    write_plot_file(track(out_dir / "plot_battery_s1.csv"), collect(false, battery_of));
  }
  if (have_s2) {
    write_plot_file(track(out_dir / "plot_grid_s2.csv"), collect(true, grid_of));
    write_plot_file(track(out_dir / "plot_renewable_s2.csv"), collect(true, renewable_of));
    write_plot_file(track(out_dir / "plot_hvac_s2.csv"), collect(true, hvac_of));
    write_plot_file(track(out_dir / "plot_battery_s2.csv"), collect(true, battery_of));

    // Per-slot trade payments phi_t * net trade.
    Eigen::MatrixXd payments(total, n);
    for (int d = 0; d < day_count; ++d) {
      const PairTensor& trades = output.days[d].trading->trade_state.trades;
      for (int u = 0; u < n; ++u) {
        for (int t = 0; t < H; ++t) {
          double net = 0.0;
          for (int v = 0; v < n; ++v) net += trades.at(u, v, t);
          payments(d * H + t, u) = config.tariff.p2p_price[t] * net;
        }
      }
    }
    write_plot_file(track(out_dir / "plot_payments_s2.csv"), payments);
  }

  // Machine-readable run summary (no timestamps, no worker counts: the
  // file set must be bitwise reproducible).
  ordered_json meta;
  meta["scenario"] = to_string(config.scenario);
  meta["users"] = n;
  meta["slots_per_day"] = H;
  meta["days"] = day_count;
  meta["seed"] = config.seed;
  if (have_s2) {
    ordered_json days = ordered_json::array();
    bool all_converged = true;
    for (const auto& day : output.days) {
      ordered_json dj;
      dj["status"] = to_string(day.trading->status);
      dj["iterations"] = day.trading->iterations;
      if (!day.trading->trace.empty()) {
        dj["final_primal_residual"] =
            format_double(day.trading->trace.back().primal_residual);
        dj["final_dual_change"] = format_double(day.trading->trace.back().dual_change);
      }
      all_converged &= day.trading->status == TradingStatus::converged;
      days.push_back(dj);
    }
    meta["trading_days"] = days;
    meta["converged"] = all_converged;
  }
  {
    auto out = open_out(track(out_dir / "run_meta.json"));
    out << meta.dump(2) << "\n";
  }

  return written;
}

Schedule load_schedule_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schedule file: " + path.string());
  const std::string name = path.filename().string();

  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "g,r,h,c,d,b,tau") {
    throw ConfigError(name + ": expected header g,r,h,c,d,b,tau");
  }

  std::vector<std::array<double, 7>> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 7) {
      throw ConfigError(name + " row " + std::to_string(lineno) + ": expected 7 fields");
    }
    std::array<double, 7> row;
    for (int c = 0; c < 7; ++c) {
      row[c] = parse_double(fields[c], name + " row " + std::to_string(lineno));
    }
    rows.push_back(row);
  }

  const int H = static_cast<int>(rows.size());
  Schedule s;
  s.grid.resize(H);
  s.renewable.resize(H);
  s.hvac.resize(H);
  s.charge.resize(H);
  s.discharge.resize(H);
  s.battery_level.resize(H);
  s.indoor_temp.resize(H);
  for (int t = 0; t < H; ++t) {
    s.grid[t] = rows[t][0];
    s.renewable[t] = rows[t][1];
    s.hvac[t] = rows[t][2];
    s.charge[t] = rows[t][3];
    s.discharge[t] = rows[t][4];
    s.battery_level[t] = rows[t][5];
    s.indoor_temp[t] = rows[t][6];
  }
  s.peak = H > 0 ? s.grid.maxCoeff() : 0.0;
  return s;
}

PairTensor load_trades_csv(const fs::path& path, int users, int slots) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trades file: " + path.string());
  const std::string name = path.filename().string();

  std::string line;
  if (!std::getline(in, line)) throw ConfigError(name + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "u,v,t,e") throw ConfigError(name + ": expected header u,v,t,e");

  PairTensor tensor(users, slots);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != 4) {
      throw ConfigError(name + " row " + std::to_string(lineno) + ": expected 4 fields");
    }
    const std::string where = name + " row " + std::to_string(lineno);
    const long u = parse_long(fields[0], where);
    const long v = parse_long(fields[1], where);
    const long t = parse_long(fields[2], where);
    if (u < 0 || u >= users || v < 0 || v >= users || t < 0 || t >= slots) {
      throw ConfigError(where + ": index out of range");
    }
    tensor.at(static_cast<int>(u), static_cast<int>(v), static_cast<int>(t)) =
        parse_double(fields[3], where);
  }
  return tensor;
}

}  // namespace peergrid
