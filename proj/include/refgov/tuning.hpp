#pragma once

#include <functional>
#include <iosfwd>
#include <vector>

#include "refgov/closed_loop.hpp"

namespace refgov {

/// Result of one closed-loop run at a candidate per-output mbar vector.
struct ProbeOutcome {
  std::vector<bool> violated;  // per output: some sample with margin > 0
  bool kappa_saturated = false;
};

using MbarExperiment = std::function<ProbeOutcome(const std::vector<double>& mbar)>;

/// Closed-loop MNN-RG run on `profile` with a curvature bound built from the
/// candidate vector.  `model` and `truth` must outlive the returned callable.
MbarExperiment mnnrg_experiment(const Plant& model, const Plant& truth, Profile profile,
                                NominalSource source, GovernorConfig cfg, Vec x0, double v0,
                                std::vector<bool> governed = {});

struct TuningLogEntry {
  int iteration = 0;
  int output = 0;
  double mbar = 0.0;
  bool violated = false;
  bool kappa_saturated = false;
};

struct TuningOptions {
  int max_iterations = 10000;  // per while-loop
  int max_sweeps = 50;
  /// Per tuned output: the decrease loop stops before going below this.
  /// Empty means unbounded.
  std::vector<double> floor;
};

struct TuningRun {
  std::vector<double> mbar;
  std::vector<TuningLogEntry> log;
  int increase_iterations = 0;
  int decrease_iterations = 0;
  int sweeps = 0;
  int experiments = 0;  // distinct closed-loop runs
  bool converged = true;
};

/// Algorithm 2 applied to each listed output in turn (others held at their
/// current values), repeated until a sweep leaves every value unchanged.
/// `initial` has one entry per plant output; `delta[k]` is the step for
/// outputs[k].  Each output is judged on its own violations.
TuningRun calibrate_mbar(const MbarExperiment& experiment, const std::vector<int>& outputs,
                         const std::vector<double>& delta, std::vector<double> initial,
                         const TuningOptions& opts = {});

void write_tuning_log(std::ostream& os, const TuningRun& run);

struct RbarResult {
  std::vector<double> rbar;  // per output
  std::vector<int> t_arg;    // sample achieving the maximum
  std::vector<int> j_arg;    // horizon step achieving the maximum
};

/// Residual y(j; v(t)) - y_n(j) - S_y(j)(v(t) - v_n(t)) maximized over the
/// recorded samples t and horizon steps j, per output.
RbarResult compute_rbar(const RunLog& log, const NominalSource& source, const Plant& plant,
                        int j_star, bool parallel = true);

}  // namespace refgov
