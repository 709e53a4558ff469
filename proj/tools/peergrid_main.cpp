#include "peergrid/data_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitSolver = 3;
constexpr int kExitIterationLimit = 4;

struct RunOptions {
  std::string config;
  std::string scenario;
  std::string out = "out";
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
};

std::vector<std::pair<std::string, std::string>> parse_sets(
    const std::vector<std::string>& raw) {
  std::vector<std::pair<std::string, std::string>> pairs;
  for (const auto& item : raw) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw peergrid::ConfigError("--set expects KEY=VALUE, got '" + item + "'");
    }
    pairs.emplace_back(item.substr(0, eq), item.substr(eq + 1));
  }
  return pairs;
}

peergrid::CommunityConfig load_from_options(const RunOptions& opts) {
  auto config = peergrid::load_config(opts.config, parse_sets(opts.sets));
  if (!opts.scenario.empty()) config.scenario = peergrid::parse_scenario(opts.scenario);
  if (opts.seed) config.seed = *opts.seed;
  return config;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw peergrid::ConfigError("cannot open " + path.string());
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    rows.push_back(std::move(fields));
  }
  return rows;
}

void render_breakdown_table(std::ostream& out, const fs::path& file,
                            const std::string& title) {
  const auto rows = read_csv(file);
  out << title << "\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%6s %12s %12s %12s %12s %12s\n", "user", "grid",
                "battery", "discomfort", "p2p", "total");
  out << buf;
  double total = 0.0;
  for (size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    std::snprintf(buf, sizeof(buf), "%6s %12.4f %12.4f %12.4f %12.4f %12.4f\n",
                  row[0].c_str(), std::stod(row[1]), std::stod(row[2]),
                  std::stod(row[3]), std::stod(row[4]), std::stod(row[5]));
    out << buf;
    total += std::stod(row[5]);
  }
  std::snprintf(buf, sizeof(buf), "%6s %12s %12s %12s %12s %12.4f\n", "total", "", "",
                "", "", total);
  out << buf;
}

/// The whole report is a function of the persisted files alone, so
/// re-rendering a saved run reproduces it byte for byte.
std::string render_report(const fs::path& dir) {
  std::ostringstream out;

  std::ifstream meta_in(dir / "run_meta.json");
  if (!meta_in) {
    throw peergrid::ConfigError("no run_meta.json in " + dir.string() +
                                " (not a results directory?)");
  }
  const json meta = json::parse(meta_in);
  const std::string scenario = meta["scenario"].get<std::string>();

  out << "scenario " << scenario << ": " << meta["users"].get<int>() << " users, "
      << meta["days"].get<int>() << " day(s) x " << meta["slots_per_day"].get<int>()
      << " slots, seed " << meta["seed"].get<std::uint64_t>() << "\n";

  if (scenario == "both") {
    const auto rows = read_csv(dir / "costs.csv");
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%6s %14s %14s %14s\n", "user", "s1_cost",
                  "s2_cost", "reduction_pct");
    out << buf;
    double s1_total = 0.0, s2_total = 0.0;
    for (size_t r = 1; r < rows.size(); ++r) {
      const auto& row = rows[r];
      const double s1 = std::stod(row[1]);
      const double s2 = std::stod(row[2]);
      std::snprintf(buf, sizeof(buf), "%6s %14.4f %14.4f %14.2f\n", row[0].c_str(), s1,
                    s2, std::stod(row[3]));
      out << buf;
      s1_total += s1;
      s2_total += s2;
    }
    const double community =
        s1_total != 0.0 ? (s1_total - s2_total) / s1_total * 100.0 : 0.0;
    std::snprintf(buf, sizeof(buf), "%6s %14.4f %14.4f %14.2f\n", "total", s1_total,
                  s2_total, community);
    out << buf;
  } else if (scenario == "standalone") {
    render_breakdown_table(out, dir / "s1_breakdown.csv", "standalone costs");
  } else {
    render_breakdown_table(out, dir / "s2_breakdown.csv", "trading costs");
  }

  if (meta.contains("trading_days")) {
    int day = 0;
    for (const auto& dj : meta["trading_days"]) {
      ++day;
      out << "day " << day << ": " << dj["status"].get<std::string>() << " after "
          << dj["iterations"].get<int>() << " iterations";
      if (dj.contains("final_primal_residual")) {
        out << " (primal_residual=" << dj["final_primal_residual"].get<std::string>()
            << ", dual_change=" << dj["final_dual_change"].get<std::string>() << ")";
      }
      out << "\n";
    }
  }
  return out.str();
}

int exit_code_for(const peergrid::SimulationOutput& output) {
  for (const auto& day : output.days) {
    if (day.trading && day.trading->status == peergrid::TradingStatus::iteration_limit) {
      return kExitIterationLimit;
    }
  }
  return kExitOk;
}

int cmd_run(const RunOptions& opts) {
  const auto config = load_from_options(opts);
  const auto env = peergrid::load_environment(config);
  const auto output = peergrid::run_simulation(config, env);
  peergrid::write_results(output, opts.out);
  std::cout << render_report(opts.out);
  return exit_code_for(output);
}

int cmd_trace(RunOptions opts) {
  opts.scenario = "trading";
  const auto config = load_from_options(opts);
  const auto env = peergrid::load_environment(config);
  const auto output = peergrid::run_simulation(config, env);
  peergrid::write_results(output, opts.out);

  int day = 0;
  for (const auto& outcome : output.days) {
    ++day;
    const auto& trading = *outcome.trading;
    std::cout << "day " << day << ": " << peergrid::to_string(trading.status) << " after "
              << trading.iterations << " iterations";
    if (!trading.trace.empty()) {
      const auto& last = trading.trace.back();
      std::cout << ", primal_residual=" << peergrid::format_double(last.primal_residual)
                << ", dual_change=" << peergrid::format_double(last.dual_change);
    }
    std::cout << "\n";
  }
  std::cout << "trace written to " << (fs::path(opts.out) / "trace.csv").string() << "\n";
  return exit_code_for(output);
}

int cmd_validate(const RunOptions& opts) {
  int failures = 0;
  const auto report = [&](const std::string& check, const std::string& problem) {
    if (problem.empty()) {
      std::cout << "ok    " << check << "\n";
    } else {
      std::cout << "FAIL  " << check << ": " << problem << "\n";
      ++failures;
    }
  };

  std::optional<peergrid::CommunityConfig> config;
  try {
    config = load_from_options(opts);
    report("config " + opts.config, "");
  } catch (const std::exception& err) {
    report("config " + opts.config, err.what());
    return kExitValidation;
  }

  std::optional<peergrid::EnvironmentSeries> env;
  try {
    env = peergrid::load_environment(*config);
    report("series files", "");
  } catch (const std::exception& err) {
    report("series files", err.what());
    return kExitValidation;
  }

  const int H = config->horizon.slot_count;
  for (size_t u = 0; u < config->users.size(); ++u) {
    std::string joined;
    for (int d = 0; d * H < env->slots(); ++d) {
      const auto day_env = env->slice(d * H, H);
      const auto problems = peergrid::precheck_feasibility(
          config->users[u], peergrid::user_slice(day_env, static_cast<int>(u)),
          config->horizon);
      for (const auto& msg : problems) {
        if (!joined.empty()) joined += "; ";
        joined += "day " + std::to_string(d + 1) + ": " + msg;
      }
    }
    report("user " + std::to_string(u) + " feasibility", joined);
  }

  return failures == 0 ? kExitOk : kExitValidation;
}

struct GenOptions {
  int users = 10;
  int days = 1;
  std::uint64_t seed = 42;
  std::string out = ".";
  std::string name = "community.cfg";
  std::string season = "summer";
  double energy_price = 0.25;
  double peak_price = 1.2;
  double p2p_price = 0.12;
};

int cmd_gen(const GenOptions& opts) {
  peergrid::SyntheticParams params;
  if (opts.season == "winter") {
    params.temp_mean = 6.0;
    params.temp_swing = 3.0;
    params.heating_season = true;
  } else if (opts.season != "summer") {
    throw peergrid::ConfigError("--season must be summer or winter");
  }

  const auto community =
      peergrid::generate_synthetic(opts.seed, opts.users, opts.days, params);

  peergrid::GridTariff tariff;
  tariff.energy_price = opts.energy_price;
  tariff.peak_price = opts.peak_price;
  tariff.p2p_price = Eigen::VectorXd::Constant(24, opts.p2p_price);

  peergrid::write_community_bundle(community, tariff, peergrid::AdmmSettings{},
                                   peergrid::TimeHorizon{24}, opts.days, opts.seed,
                                   peergrid::Scenario::both, opts.out, opts.name);
  std::cout << "wrote " << (fs::path(opts.out) / opts.name).string() << " (+3 series files)\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Day-ahead energy scheduling for prosumer communities"};
  app.require_subcommand(1);

  RunOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Solve the configured scenario(s) and write results");
  run->add_option("--config", run_opts.config, "Config file")->required();
  run->add_option("--scenario", run_opts.scenario, "standalone, trading, or both");
  run->add_option("--out", run_opts.out, "Output directory");
  run->add_option("--set", run_opts.sets, "Dotted-path config override KEY=VALUE");
  run->add_option("--seed", run_opts.seed, "Seed recorded in run_meta.json");

  RunOptions trace_opts;
  CLI::App* trace = app.add_subcommand("trace", "Run the trading scenario and report convergence");
  trace->add_option("--config", trace_opts.config, "Config file")->required();
  trace->add_option("--out", trace_opts.out, "Output directory");
  trace->add_option("--set", trace_opts.sets, "Dotted-path config override KEY=VALUE");
  trace->add_option("--seed", trace_opts.seed, "Seed recorded in run_meta.json");

  RunOptions validate_opts;
  CLI::App* validate = app.add_subcommand("validate", "Check config and data files without solving");
  validate->add_option("--config", validate_opts.config, "Config file")->required();
  validate->add_option("--set", validate_opts.sets, "Dotted-path config override KEY=VALUE");

  GenOptions gen_opts;
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic community bundle");
  gen->add_option("--users", gen_opts.users, "Number of users");
  gen->add_option("--days", gen_opts.days, "Number of days");
  gen->add_option("--seed", gen_opts.seed, "Generator seed");
  gen->add_option("--out", gen_opts.out, "Output directory");
  gen->add_option("--name", gen_opts.name, "Config filename");
  gen->add_option("--season", gen_opts.season, "summer or winter");
  gen->add_option("--energy-price", gen_opts.energy_price, "Grid energy price");
  gen->add_option("--peak-price", gen_opts.peak_price, "Peak demand price");
  gen->add_option("--p2p-price", gen_opts.p2p_price, "Trading price (must undercut energy price)");

  std::string report_dir;
  CLI::App* report = app.add_subcommand("report", "Re-render the summary table from saved results");
  report->add_option("--results", report_dir, "Results directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand(run)) return cmd_run(run_opts);
    if (app.got_subcommand(trace)) return cmd_trace(trace_opts);
    if (app.got_subcommand(validate)) return cmd_validate(validate_opts);
    if (app.got_subcommand(gen)) return cmd_gen(gen_opts);
    if (app.got_subcommand(report)) {
      std::cout << render_report(report_dir);
      return kExitOk;
    }
  } catch (const peergrid::ConfigError& err) {
    std::cerr << "config error: " << err.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitSolver;
  }
  return kExitOk;
}
