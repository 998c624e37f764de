#pragma once

// Pipeline pieces behind the rgctl subcommands.  Everything here is driven by
// a Config; the acceptance binary reuses the same entry points.

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "refgov/closed_loop.hpp"
#include "refgov/config.hpp"
#include "refgov/manifest.hpp"
#include "refgov/tuning.hpp"

namespace rgctl {

namespace fs = std::filesystem;

enum ExitCode { kOk = 0, kConfigError = 2, kViolation = 3, kRuntimeError = 4 };

struct Options {
  fs::path config;
  std::optional<std::uint64_t> seed;
  fs::path out = ".";
  std::string governor;  // simulate override
  std::string profile;   // collect / tune / simulate / bench override
  bool assert_feasible = false;
  fs::path dataset;    // train input, default <out>/dataset.csv
  fs::path weights;    // default <out>/weights.json
  fs::path bound;      // default <out>/bound.json
  fs::path run_log;    // tune (rbar) input, default: fresh PRG run
  fs::path reference;  // simulate: run log to compare commands against
  std::vector<fs::path> compare;  // compare: two run logs
};

/// Loaded configuration plus the plant it describes.
struct Context {
  refgov::Config cfg;
  fs::path config_path;
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::unique_ptr<refgov::Plant> plant;
  refgov::GovernorConfig gov;
  double v0 = 0.0;
  refgov::Vec x0;  // plant settled at v0
};

Context load_context(const Options& opt);
Context make_context(refgov::Config cfg, const fs::path& config_path,
                     std::optional<std::uint64_t> seed);

std::unique_ptr<refgov::Plant> make_plant(const refgov::Config& cfg);
refgov::GovernorConfig governor_config(const refgov::Config& cfg, const refgov::Plant& plant);
refgov::Profile make_profile(const refgov::Config& cfg, const std::string& name,
                             std::uint64_t default_seed);
std::vector<bool> governed_mask(const refgov::Config& cfg, const refgov::Plant& plant);
int output_index(const refgov::Plant& plant, const std::string& name);

/// bound.json: {"kind", "values", "governed", "outputs"}.
void save_bound(const refgov::RemainderBound& b, const refgov::Plant& plant, const fs::path& path);
refgov::RemainderBound load_bound(const fs::path& path, const refgov::Plant& plant);

std::unique_ptr<refgov::Governor> make_governor(const std::string& kind, const Context& ctx,
                                                const refgov::NominalSource& source,
                                                const refgov::RemainderBound* bound,
                                                int L_override = 0);

struct CollectResult {
  refgov::ClosedLoopLog log;
  refgov::Dataset dataset;
};
CollectResult collect(const Context& ctx, const refgov::Profile& profile);

struct TrialMetrics {
  int trial = 0;
  std::uint64_t seed = 0;
  refgov::TrainMetrics metrics;
};
struct TrainOutcome {
  refgov::TrainResult best;
  std::vector<TrialMetrics> trials;
  int selected = 0;
};
TrainOutcome train_trials(const Context& ctx, const refgov::Dataset& data);

/// Refuses to tune on the profile the network was trained on.
void check_tuning_profile(const refgov::Config& cfg, const std::string& tune_profile);

struct TuneOutcome {
  refgov::RemainderBound bound;
  std::optional<refgov::TuningRun> mbar_run;
  std::optional<refgov::RbarResult> rbar;
};
TuneOutcome tune(const Context& ctx, const refgov::Profile& profile,
                 const refgov::NominalSource& source, const refgov::RunLog* prg_log = nullptr);

struct BenchRow {
  std::string governor;
  int L = 0;
  double mean_ms = 0.0;
  double max_ms = 0.0;
};
/// Per-step minimum over `repeats` runs, then mean and max over steps.
BenchRow bench_governor(const Context& ctx, const std::string& kind, const refgov::Profile& profile,
                        const refgov::NominalSource& source, const refgov::RemainderBound* bound,
                        int repeats, int L);

/// Least-squares slope of y against x.
double slope(const std::vector<double>& x, const std::vector<double>& y);

int cmd_collect(const Options& opt);
int cmd_train(const Options& opt);
int cmd_tune(const Options& opt);
int cmd_simulate(const Options& opt);
int cmd_bench(const Options& opt);
int cmd_compare(const Options& opt);

/// CLI entry; maps exceptions to exit codes.
int run(int argc, char** argv);

}  // namespace rgctl
