#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "refgov/governor.hpp"
#include "refgov/mlp.hpp"
#include "refgov/profiles.hpp"

namespace refgov {

/// Common interface for the four command filters.  A governor owns its
/// GovernorState; `step` consumes the measured state and reference and
/// returns the diagnostics with the chosen command in `v`.
class Governor {
 public:
  virtual ~Governor() = default;
  virtual std::string kind() const = 0;
  virtual MnnrgDiagnostics step(const Vec& x, double r) = 0;

  void reset(double v0) { state_.v_prev = v0; }
  const GovernorState& state() const { return state_; }

 protected:
  GovernorState state_;
};

/// Passes r through unchanged.
class NoGovernor final : public Governor {
 public:
  std::string kind() const override { return "none"; }
  MnnrgDiagnostics step(const Vec& x, double r) override;
};

class PrgGovernor final : public Governor {
 public:
  PrgGovernor(const Plant& model, GovernorConfig cfg);
  std::string kind() const override { return "prg"; }
  MnnrgDiagnostics step(const Vec& x, double r) override;

 private:
  const Plant& model_;
  GovernorConfig cfg_;
};

/// Network command with dynamic saturation only.
class NnRgGovernor final : public Governor {
 public:
  explicit NnRgGovernor(NominalSource source);
  std::string kind() const override { return "nnrg"; }
  MnnrgDiagnostics step(const Vec& x, double r) override;

 private:
  NominalSource source_;
};

class MnnRgGovernor final : public Governor {
 public:
  MnnRgGovernor(const Plant& model, NominalSource source, RemainderBound bound, GovernorConfig cfg);
  std::string kind() const override { return "mnnrg"; }
  MnnrgDiagnostics step(const Vec& x, double r) override;

 private:
  const Plant& model_;
  NominalSource source_;
  RemainderBound bound_;
  GovernorConfig cfg_;
};

/// Network evaluated on features [x..., v_prev, r].
NominalSource network_source(std::shared_ptr<const MlpNetwork> net);

struct StepRecord {
  double t = 0.0;
  Vec x;  // true state at t
  Vec y;  // margins h(x(t), v(t))
  MnnrgDiagnostics diag;
  double seconds = 0.0;  // wall time of the governor step
};

struct RunOptions {
  /// Per-state standard deviation of additive Gaussian measurement noise;
  /// empty means exact state feedback.
  Vec noise_sigma;
  std::uint64_t noise_seed = 0;
  bool time_steps = false;
  /// A sample counts as a violation when some margin exceeds this.  The
  /// explicit solver places kappa on the constraint boundary, so active
  /// margins land within a few ulps of zero on either side.
  double violation_tol = 1e-12;
};

struct ClosedLoopLog {
  std::string governor;
  std::string profile;
  std::vector<StepRecord> steps;
  std::vector<int> violations;  // samples with margin > violation_tol, per output
  int violating_samples = 0;

  bool any_violation() const { return violating_samples > 0; }
  bool output_violated(int i) const { return violations[i] > 0; }
  /// True when kappa == 1 at every sample.
  bool kappa_saturated() const;
  std::vector<double> commands() const;
};

/// x(t) -> v(t) = governor(x(t), r(t)) -> y(t) = h(x(t), v(t)) -> x(t+1).
/// The governor is reset to v0 before the first sample.
ClosedLoopLog run_closed_loop(const Plant& truth, Governor& gov, const Profile& profile,
                              const Vec& x0, double v0, const RunOptions& opts = {});

/// `t,r,v_prev,v,x1..xn,y1..yny`
void write_run_log(std::ostream& os, const Plant& plant, const ClosedLoopLog& log, double dt);
void write_run_diagnostics(std::ostream& os, const ClosedLoopLog& log);

/// Recorded closed-loop run as consumed by R-bar tuning and replay.
struct RunLog {
  std::vector<double> t, r, v_prev, v;
  std::vector<Vec> x, y;

  int size() const { return static_cast<int>(t.size()); }
};

RunLog to_run_log(const ClosedLoopLog& log, double dt);
RunLog read_run_log(const std::filesystem::path& path, const Plant& plant);

/// Rows (x(t), v(t-1), r(t)) -> v(t).
Dataset dataset_from_run(const Plant& plant, const RunLog& log);

/// Root-mean-square difference of two equally long command sequences.
double command_rmse(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace refgov
