#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "commands.hpp"
#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace fs = std::filesystem;
using namespace refgov;

namespace {

const char* kToyConfig = R"(
seed = 3
plant = "toy"
v0 = 0.0

[governor]
j_star = 60
L = 12
solver = "explicit"
steady = "simulate"

[profiles.train]
kind = "random"
dt = 1.0
samples = 400
lo = -3.0
hi = 3.0
hold_min = 3
hold_max = 12
seed = 5

[profiles.steps]
kind = "step"
dt = 1.0
duration = 120
times = [0, 40, 80]
levels = [2.5, -2.0, 3.0]

[collect]
profile = "train"

[train]
hidden = [8]
trials = 2
max_epochs = 400
patience = 50

[tune]
method = "mbar"
profile = "steps"
delta = [0.1]
floor = [0.0]

[bench]
profile = "steps"
repeats = 2
governors = ["prg", "mnnrg"]
L_sweep = [2, 6]
sweep_repeats = 1
)";

struct Sandbox {
  fs::path dir;
  fs::path config;
  Sandbox() {
    dir = fs::temp_directory_path() / ("refgov_cli_" + std::to_string(std::rand()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = dir / "toy.toml";
    std::ofstream(config) << kToyConfig;
  }
  ~Sandbox() { fs::remove_all(dir); }

  int rgctl(const std::string& args) const {
    const std::string cmd = std::string(RGCTL_PATH) + " " + args + " > " +
                            (dir / "stdout.txt").string() + " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  }
  std::string with(const std::string& sub) const {
    return sub + " --config " + config.string() + " --out " + (dir / "out").string();
  }
  fs::path out(const std::string& name) const { return dir / "out" / name; }
  std::string read(const fs::path& p) const {
    std::ifstream f(p);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  }
};

}  // namespace

TEST_CASE("full toy pipeline through the binary") {
  const Sandbox sb;
  REQUIRE(sb.rgctl(sb.with("collect")) == 0);
  const CsvTable ds = read_csv(sb.out("dataset.csv"));
  CHECK(ds.rows.size() == 400);
  CHECK(ds.header == std::vector<std::string>{"x1", "v_prev", "r", "v"});
  CHECK(fs::exists(sb.out("manifest_collect.json")));

  REQUIRE(sb.rgctl(sb.with("train")) == 0);
  const CsvTable m = read_csv(sb.out("train_metrics.csv"));
  REQUIRE(m.rows.size() == 2);
  const int val = m.column("rmse_val"), sel = m.column("selected");
  const size_t best = m.rows[0][val] <= m.rows[1][val] ? 0 : 1;
  CHECK(m.rows[best][sel] == 1.0);
  CHECK(m.rows[1 - best][sel] == 0.0);
  // Held-out error within 5% of the target range (6).
  CHECK(m.rows[best][m.column("rmse_test")] <= 0.05 * 6.0);

  SUBCASE("training is deterministic for a fixed seed") {
    const std::string first = sb.read(sb.out("weights.json"));
    REQUIRE(sb.rgctl(sb.with("train")) == 0);
    CHECK(sb.read(sb.out("weights.json")) == first);
  }

  REQUIRE(sb.rgctl(sb.with("tune")) == 0);
  CHECK(fs::exists(sb.out("bound.json")));
  CHECK(fs::exists(sb.out("tuning_log.csv")));

  SUBCASE("simulate, violation report, and reproducibility") {
    CHECK(sb.rgctl(sb.with("simulate") + " --governor none --profile steps --assert-feasible") == 3);
    const CsvTable run = read_csv(sb.out("run_none_steps.csv"));
    std::istringstream viol(sb.read(sb.out("violations_none_steps.csv")));
    int lines = -1;  // header
    for (std::string line; std::getline(viol, line);) ++lines;
    int recount = 0;
    for (const auto& row : run.rows) recount += row[run.column("y1")] > 1e-12;
    CHECK(recount > 0);
    CHECK(lines == recount);

    CHECK(sb.rgctl(sb.with("simulate") + " --governor prg --profile steps --assert-feasible") == 0);
    const std::string prg_run = sb.read(sb.out("run_prg_steps.csv"));
    CHECK(sb.rgctl(sb.with("simulate") + " --governor prg --profile steps") == 0);
    CHECK(sb.read(sb.out("run_prg_steps.csv")) == prg_run);

    CHECK(sb.rgctl(sb.with("simulate") + " --governor mnnrg --profile steps --assert-feasible") == 0);
    CHECK(sb.rgctl("compare " + sb.out("run_prg_steps.csv").string() + " " +
                   sb.out("run_prg_steps.csv").string() + " --out " + (sb.dir / "cmp").string()) == 0);
    CHECK(sb.read(sb.dir / "stdout.txt").find("command RMSE: 0\n") != std::string::npos);
  }

  SUBCASE("bench") {
    REQUIRE(sb.rgctl(sb.with("bench")) == 0);
    std::istringstream table(sb.read(sb.out("bench_table.csv")));
    std::string line;
    std::getline(table, line);
    CHECK(line == "governor,L,mean_ms,max_ms");
    int rows = 0;
    while (std::getline(table, line)) {
      ++rows;
      std::istringstream f(line);
      std::string gov, L, mean, max;
      std::getline(f, gov, ',');
      std::getline(f, L, ',');
      std::getline(f, mean, ',');
      std::getline(f, max, ',');
      CHECK(std::stod(mean) <= std::stod(max));
    }
    CHECK(rows == 2);
    CHECK(read_csv(sb.out("bench_lsweep.csv")).rows.size() == 2);
  }
}

TEST_CASE("error exit codes") {
  const Sandbox sb;
  CHECK(sb.rgctl("") == 2);
  CHECK(sb.rgctl("simulate") == 2);
  CHECK(sb.rgctl(sb.with("simulate") + " --profile nope") == 2);
  CHECK(sb.rgctl(sb.with("simulate") + " --governor mnnrg --profile steps") == 2);  // no weights
  CHECK(sb.rgctl(sb.with("tune") + " --profile train") == 2);
  CHECK(sb.read(sb.dir / "stderr.txt").find("trained on") != std::string::npos);
  std::ofstream(sb.dir / "bad.toml") << "plant = \"toy\"\n[governor\n";
  CHECK(sb.rgctl("collect --config " + (sb.dir / "bad.toml").string()) == 2);
  std::ofstream(sb.dir / "range.toml")
      << "plant = \"toy\"\n[profiles.p]\nkind = \"step\"\ndt = 1.0\nduration = 5\n"
         "times = [0]\nlevels = [9.0]\n";
  CHECK(sb.rgctl("simulate --governor none --profile p --config " +
                 (sb.dir / "range.toml").string() + " --out " + (sb.dir / "o").string()) == 2);
}

TEST_CASE("logged PRG decisions replay bit-exactly") {
  const Config cfg = Config::parse(kToyConfig);
  const rgctl::Context ctx = rgctl::make_context(cfg, "inline", std::nullopt);
  const Profile p = rgctl::make_profile(cfg, "train", ctx.seed);
  const auto r = rgctl::collect(ctx, p);
  const RunLog log = to_run_log(r.log, p.dt);
  for (int t = 0; t < log.size(); ++t) {
    GovernorState s{log.v_prev[t]};
    CHECK(prg_step(*ctx.plant, log.x[t], s, log.r[t], ctx.gov).v == log.v[t]);
  }
}

TEST_CASE("config schema checks") {
  CHECK_THROWS_AS(rgctl::make_plant(Config::parse("plant = \"boat\"\n")), ConfigError);
  const Config bad = Config::parse("plant = \"toy\"\n[governor]\nsolver = \"guess\"\n");
  CHECK_THROWS_AS(rgctl::make_context(bad, "inline", std::nullopt), ConfigError);
  CHECK(rgctl::slope({1, 2, 3}, {2, 4, 6}) == doctest::Approx(2.0));
}
