#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string("\"") + PEERGRID_CLI + "\" " + args;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

const std::string quiet = " > /dev/null 2>&1";

/// Generates a 3-user bundle and returns the config path.
fs::path gen_bundle(const fs::path& dir, int days = 1, int seed = 7) {
  const int rc = run_cli("gen --users 3 --days " + std::to_string(days) + " --seed " +
                         std::to_string(seed) + " --out " + dir.string() +
                         " --name c.cfg" + quiet);
  REQUIRE(rc == 0);
  return dir / "c.cfg";
}

std::vector<fs::path> sorted_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  return files;
}

}  // namespace

TEST_CASE("gen, validate, run, report round-trip") {
  const auto dir = fresh_dir("peergrid_cli_happy");
  const auto cfg = gen_bundle(dir);

  CHECK(run_cli("validate --config " + cfg.string() + quiet) == 0);

  const fs::path out = dir / "out";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out.string() + quiet) ==
        0);
  CHECK(fs::exists(out / "run_meta.json"));
  CHECK(fs::exists(out / "costs.csv"));
  CHECK(fs::exists(out / "trades.csv"));
  CHECK(fs::exists(out / "s1_schedule_u0.csv"));
  CHECK(fs::exists(out / "s2_schedule_u2.csv"));

  // The report is a pure function of the saved files.
  CHECK(run_cli("report --results " + out.string() + " > " + (dir / "r1.txt").string()) ==
        0);
  CHECK(run_cli("report --results " + out.string() + " > " + (dir / "r2.txt").string()) ==
        0);
  const std::string report = slurp(dir / "r1.txt");
  CHECK(report == slurp(dir / "r2.txt"));
  CHECK(report.find("reduction_pct") != std::string::npos);
  CHECK(report.find("converged") != std::string::npos);
}

TEST_CASE("a full rerun reproduces every output byte") {
  const auto dir = fresh_dir("peergrid_cli_repro");
  const auto cfg = gen_bundle(dir);

  const fs::path out_a = dir / "a";
  const fs::path out_b = dir / "b";
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out_a.string() + quiet) ==
        0);
  CHECK(run_cli("run --config " + cfg.string() + " --out " + out_b.string() +
                " --set workers=2" + quiet) == 0);

  const auto files_a = sorted_files(out_a);
  const auto files_b = sorted_files(out_b);
  REQUIRE(files_a.size() == files_b.size());
  for (size_t i = 0; i < files_a.size(); ++i) {
    CAPTURE(files_a[i].filename().string());
    CHECK(files_a[i].filename() == files_b[i].filename());
    CHECK(slurp(files_a[i]) == slurp(files_b[i]));
  }
}

TEST_CASE("scenario flag restricts the artifact set") {
  const auto dir = fresh_dir("peergrid_cli_solo");
  const auto cfg = gen_bundle(dir);

  const fs::path out = dir / "solo";
  CHECK(run_cli("run --config " + cfg.string() + " --scenario standalone --out " +
                out.string() + quiet) == 0);
  CHECK(fs::exists(out / "s1_breakdown.csv"));
  CHECK_FALSE(fs::exists(out / "trades.csv"));
  CHECK_FALSE(fs::exists(out / "costs.csv"));
}

TEST_CASE("iteration limit surfaces as exit code 4") {
  const auto dir = fresh_dir("peergrid_cli_limit");
  const auto cfg = gen_bundle(dir);

  const fs::path out = dir / "lim";
  CHECK(run_cli("run --config " + cfg.string() + " --scenario trading --out " +
                out.string() + " --set max_iterations=2" + quiet) == 4);
  // Results are still written so the stall can be inspected.
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("validation problems exit with code 2") {
  const auto dir = fresh_dir("peergrid_cli_invalid");
  const auto cfg = gen_bundle(dir);

  CHECK(run_cli("run --config " + (dir / "nope.cfg").string() + quiet) == 2);
  CHECK(run_cli("validate --config " + cfg.string() + " --set admm.rho=0" + quiet) ==
        2);

  // Corrupt one series cell and re-validate.
  {
    std::ofstream out(dir / "c_load.csv", std::ios::binary | std::ios::app);
    out << "99,1,1,1\n";
  }
  CHECK(run_cli("validate --config " + cfg.string() + quiet) == 2);
}

TEST_CASE("trace subcommand reports convergence per day") {
  const auto dir = fresh_dir("peergrid_cli_trace");
  const auto cfg = gen_bundle(dir);

  const fs::path out = dir / "tr";
  CHECK(run_cli("trace --config " + cfg.string() + " --out " + out.string() + " > " +
                (dir / "t.txt").string()) == 0);
  const std::string text = slurp(dir / "t.txt");
  CHECK(text.find("day 1: converged") != std::string::npos);
  CHECK(text.find("trace written to") != std::string::npos);
  CHECK(fs::exists(out / "trace.csv"));
}

TEST_CASE("generator output is reproducible and seed-sensitive") {
  const auto dir = fresh_dir("peergrid_cli_gen");
  gen_bundle(dir / "g1", 1, 11);
  gen_bundle(dir / "g2", 1, 11);
  gen_bundle(dir / "g3", 1, 12);

  for (const char* name : {"c.cfg", "c_temperature.csv", "c_renewable.csv",
                           "c_load.csv"}) {
    CAPTURE(name);
    CHECK(slurp(dir / "g1" / name) == slurp(dir / "g2" / name));
  }
  CHECK(slurp(dir / "g1" / "c_load.csv") != slurp(dir / "g3" / "c_load.csv"));
}
