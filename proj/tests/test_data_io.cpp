#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "peergrid/data_io.hpp"
#include "peergrid/standalone.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

using namespace peergrid;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// Writes a small bundle and returns the config path.
fs::path small_bundle(const fs::path& dir, int users, int days,
                      std::uint64_t seed = 42) {
  const auto community = generate_synthetic(seed, users, days, {});
  GridTariff tariff;
  tariff.energy_price = 0.25;
  tariff.peak_price = 1.2;
  tariff.p2p_price = Eigen::VectorXd::Constant(24, 0.12);
  write_community_bundle(community, tariff, AdmmSettings{}, TimeHorizon{24}, days,
                         seed, Scenario::both, dir, "test.cfg");
  return dir / "test.cfg";
}

}  // namespace

TEST_CASE("format_double round-trips exactly") {
  for (const double v : {0.1, 1.0 / 3.0, -2.5e-7, 1e300, 0.0, 123456.789}) {
    const std::string s = format_double(v);
    double back = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), back);
    REQUIRE(res.ec == std::errc{});
    CHECK(back == v);
  }
}

TEST_CASE("synthetic communities are deterministic") {
  const auto a = generate_synthetic(9, 5, 2, {});
  const auto b = generate_synthetic(9, 5, 2, {});
  CHECK((a.env.outdoor_temp - b.env.outdoor_temp).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.env.renewable_cap - b.env.renewable_cap).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.env.inflexible_load - b.env.inflexible_load).lpNorm<Eigen::Infinity>() ==
        0.0);
  for (int u = 0; u < 5; ++u) {
    CHECK(a.profiles[u].battery.capacity == b.profiles[u].battery.capacity);
    CHECK(a.profiles[u].hvac.preferred_temp == b.profiles[u].hvac.preferred_temp);
  }

  const auto c = generate_synthetic(10, 5, 2, {});
  CHECK((a.env.outdoor_temp - c.env.outdoor_temp).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("every synthetic draw passes the feasibility precheck") {
  for (const bool winter : {false, true}) {
    SyntheticParams params;
    if (winter) {
      params.temp_mean = 6.0;
      params.temp_swing = 3.0;
      params.heating_season = true;
    }
    for (std::uint64_t seed = 1; seed <= 12; ++seed) {
      const auto community = generate_synthetic(seed, 6, 2, params);
      CAPTURE(seed);
      CAPTURE(winter);
      for (int u = 0; u < 6; ++u) {
        CHECK(validate_profile(community.profiles[u]).empty());
        for (int d = 0; d < 2; ++d) {
          const auto day = community.env.slice(24 * d, 24);
          const auto problems = precheck_feasibility(
              community.profiles[u], user_slice(day, u), TimeHorizon{24});
          for (const auto& msg : problems) CAPTURE(msg);
          CHECK(problems.empty());
        }
      }
    }
  }
}

TEST_CASE("bundle write and load round-trips every number") {
  const auto dir = fresh_dir("peergrid_roundtrip");
  const auto community = generate_synthetic(5, 3, 2, {});
  const auto config_path = small_bundle(dir, 3, 2, 5);

  const auto config = load_config(config_path);
  CHECK(config.horizon.slot_count == 24);
  CHECK(config.day_count == 2);
  CHECK(config.seed == 5);
  CHECK(config.users.size() == 3);
  for (int u = 0; u < 3; ++u) {
    CHECK(config.users[u].battery.capacity == community.profiles[u].battery.capacity);
    CHECK(config.users[u].hvac.comfort_weight ==
          community.profiles[u].hvac.comfort_weight);
    CHECK(config.users[u].hvac.temp_min == community.profiles[u].hvac.temp_min);
  }

  const auto env = load_environment(config);
  CHECK((env.outdoor_temp - community.env.outdoor_temp).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK((env.renewable_cap - community.env.renewable_cap).lpNorm<Eigen::Infinity>() ==
        0.0);
  CHECK((env.inflexible_load - community.env.inflexible_load)
            .lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("dotted-path overrides and bare admm aliases") {
  const auto dir = fresh_dir("peergrid_overrides");
  const auto config_path = small_bundle(dir, 2, 1);

  const auto config = load_config(config_path, {{"admm.rho", "2.5"},
                                                {"eps_primal", "1e-4"},
                                                {"seed", "7"},
                                                {"scenario", "standalone"},
                                                {"tariff.p2p_price", "0.05"}});
  CHECK(config.admm.rho == 2.5);
  CHECK(config.admm.eps_primal == 1e-4);
  CHECK(config.seed == 7);
  CHECK(config.scenario == Scenario::standalone);
  CHECK(config.tariff.p2p_price[0] == 0.05);

  CHECK_THROWS_AS(load_config(config_path, {{"admm.rho", "-1"}}), ConfigError);
}

TEST_CASE("config errors name the offending field") {
  const auto dir = fresh_dir("peergrid_badcfg");
  const auto config_path = small_bundle(dir, 2, 1);

  const auto message_of = [&](const std::vector<std::pair<std::string, std::string>>&
                                  overrides) {
    try {
      load_config(config_path, overrides);
      return std::string("(no error)");
    } catch (const ConfigError& err) {
      return std::string(err.what());
    }
  };

  CHECK(message_of({{"users.0.user_id", "5"}}).find("user_id") != std::string::npos);
  CHECK(message_of({{"tariff.p2p_price", "0.9"}}).find("undercut") !=
        std::string::npos);
  CHECK(message_of({{"series.load", "missing.csv"}}).find("does not exist") !=
        std::string::npos);
  CHECK(message_of({{"horizon.days", "0"}}).find("days") != std::string::npos);
  CHECK(message_of({{"users.0.battery.max_charge", "-2"}}).find("user 0") !=
        std::string::npos);
}

TEST_CASE("series loader reports shape and content problems by location") {
  const auto dir = fresh_dir("peergrid_badcsv");

  write_text(dir / "good.csv", "t,u1,u2\n0,1.5,2\n1,0,3.25\n");
  const auto values = load_series_csv(dir / "good.csv", 2, 2, true);
  CHECK(values(0, 0) == 1.5);
  CHECK(values(1, 1) == 3.25);

  const auto fails_with = [&](const std::string& body, const std::string& needle,
                              bool nonneg = true) {
    write_text(dir / "bad.csv", body);
    try {
      load_series_csv(dir / "bad.csv", 2, 2, nonneg);
      return false;
    } catch (const ConfigError& err) {
      return std::string(err.what()).find(needle) != std::string::npos;
    }
  };

  CHECK(fails_with("x,u1,u2\n0,1,2\n1,2,3\n", "'t'"));
  CHECK(fails_with("t,u1\n0,1\n1,2\n", "expected 2 value columns"));
  CHECK(fails_with("t,u1,u3\n0,1,2\n1,2,3\n", "u2"));
  CHECK(fails_with("t,u1,u2\n0,1,2\n", "expected 2 rows, found 1"));
  CHECK(fails_with("t,u1,u2\n0,1,2\n2,2,3\n", "out of order"));
  CHECK(fails_with("t,u1,u2\n0,1,2\n1,abc,3\n", "non-numeric"));
  CHECK(fails_with("t,u1,u2\n0,1,2\n1,-4,3\n", "negative"));
  CHECK(fails_with("t,u1,u2\n0,1,2\n1,2,3,9\n", "fields"));
}

TEST_CASE("simulation writes a complete, reproducible file set") {
  const auto dir = fresh_dir("peergrid_sim");
  const auto config_path = small_bundle(dir, 3, 2);

  auto config = load_config(config_path);
  const auto env = load_environment(config);

  const auto out_a = run_simulation(config, env);
  const auto files_a = write_results(out_a, dir / "a");
  config.workers = 2;
  const auto out_b = run_simulation(config, env);
  const auto files_b = write_results(out_b, dir / "b");

  REQUIRE(files_a.size() == files_b.size());
  for (size_t i = 0; i < files_a.size(); ++i) {
    CAPTURE(files_a[i].filename().string());
    CHECK(slurp(files_a[i]) == slurp(files_b[i]));
  }

  // The summary must not leak the worker count (or anything else that
  // varies between bitwise-identical runs).
  const std::string meta = slurp(dir / "a" / "run_meta.json");
  CHECK(meta.find("workers") == std::string::npos);
  CHECK(meta.find("converged") != std::string::npos);

  // Cost table recomputation.
  {
    std::ifstream costs(dir / "a" / "costs.csv");
    std::string line;
    std::getline(costs, line);
    CHECK(line == "user,s1_cost,s2_cost,reduction_pct");
    int users = 0;
    while (std::getline(costs, line)) {
      const auto c1 = line.find(','), c2 = line.find(',', c1 + 1),
                 c3 = line.find(',', c2 + 1);
      const double s1 = std::stod(line.substr(c1 + 1, c2 - c1 - 1));
      const double s2 = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
      const double red = std::stod(line.substr(c3 + 1));
      CHECK(red == doctest::Approx((s1 - s2) / s1 * 100.0).epsilon(1e-9));
      ++users;
    }
    CHECK(users == 3);
  }

  // Trade tensor zero sum, read back through the loader.
  const auto trades = load_trades_csv(dir / "a" / "trades.csv", 3, 48);
  for (int u = 0; u < 3; ++u) {
    for (int v = 0; v < 3; ++v) {
      for (int t = 0; t < 48; ++t) {
        CHECK(std::abs(trades.at(u, v, t) + trades.at(v, u, t)) <= 1e-9);
      }
    }
  }

  // Schedules chain across the day boundary: the recursions hold over the
  // full two-day span.
  for (int u = 0; u < 3; ++u) {
    const auto schedule =
        load_schedule_csv(dir / "a" / ("s2_schedule_u" + std::to_string(u) + ".csv"));
    REQUIRE(schedule.grid.size() == 48);
    const auto& profile = config.users[u];
    const double kappa = thermal_decay(profile.hvac);
    for (int t = 1; t < 48; ++t) {
      const double db = schedule.battery_level[t] - schedule.battery_level[t - 1] -
                        schedule.charge[t] + schedule.discharge[t];
      CHECK(std::abs(db) <= 1e-6);
      const double expect =
          kappa * schedule.indoor_temp[t - 1] +
          (1.0 - kappa) * env.outdoor_temp[t] +
          profile.hvac.efficiency * schedule.hvac[t];
      CHECK(schedule.indoor_temp[t] == doctest::Approx(expect).epsilon(1e-6));
    }
  }
}

TEST_CASE("scenario selection controls the file set") {
  const auto dir = fresh_dir("peergrid_scenes");
  const auto config_path = small_bundle(dir, 2, 1);

  auto config = load_config(config_path, {{"scenario", "standalone"}});
  const auto env = load_environment(config);
  write_results(run_simulation(config, env), dir / "s1");
  CHECK(fs::exists(dir / "s1" / "s1_breakdown.csv"));
  CHECK_FALSE(fs::exists(dir / "s1" / "trades.csv"));
  CHECK_FALSE(fs::exists(dir / "s1" / "costs.csv"));

  config = load_config(config_path, {{"scenario", "trading"}});
  write_results(run_simulation(config, env), dir / "s2");
  CHECK(fs::exists(dir / "s2" / "trades.csv"));
  CHECK(fs::exists(dir / "s2" / "trace.csv"));
  CHECK_FALSE(fs::exists(dir / "s2" / "s1_breakdown.csv"));
}

TEST_CASE("generated renewables are nonnegative and heterogeneous") {
  for (const std::uint64_t seed : {1, 7, 42, 99}) {
    const auto community = generate_synthetic(seed, 10, 1, {});
    CHECK(community.env.renewable_cap.minCoeff() >= 0.0);
    const Eigen::VectorXd totals = community.env.renewable_cap.colwise().sum();
    CHECK(totals.maxCoeff() >= 2.0 * totals.minCoeff());
  }
}

TEST_CASE("cost table reduction column is (s1 - s2) / s1") {
  const auto dir = fresh_dir("peergrid_table");

  SimulationOutput out;
  out.config.horizon = TimeHorizon{1};
  out.config.day_count = 1;
  out.config.scenario = Scenario::both;
  out.config.tariff.energy_price = 0.25;
  out.config.tariff.peak_price = 1.2;
  out.config.tariff.p2p_price = Eigen::VectorXd::Constant(1, 0.12);
  UserProfile p;
  p.user_id = 0;
  out.config.users.push_back(p);

  Schedule zero;
  zero.grid = zero.renewable = zero.hvac = zero.charge = zero.discharge =
      zero.battery_level = zero.indoor_temp = Eigen::VectorXd::Zero(1);

  DayOutcome day;
  StandaloneResult s1;
  s1.schedule = zero;
  s1.costs = make_cost_breakdown(21.1, 0.0, 0.0, 0.0);
  day.standalone.push_back(s1);
  TradingResult s2;
  s2.schedules = {zero};
  s2.costs = {make_cost_breakdown(3.5, 0.0, 0.0, 0.0)};
  s2.trade_state = TradeState(1, 1);
  s2.status = TradingStatus::converged;
  day.trading = s2;
  out.days.push_back(day);

  write_results(out, dir);
  const auto text = slurp(dir / "costs.csv");
  const auto row = text.substr(text.find('\n') + 1);
  CHECK(row.substr(0, row.find(',')) == "0");
  const auto last = row.rfind(',');
  const double reduction = std::stod(row.substr(last + 1));
  CHECK(reduction == doctest::Approx(100.0 * (21.1 - 3.5) / 21.1).epsilon(1e-9));
}
