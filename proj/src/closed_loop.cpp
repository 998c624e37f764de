#include "refgov/closed_loop.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov {

MnnrgDiagnostics NoGovernor::step(const Vec&, double r) {
  MnnrgDiagnostics d;
  d.r = r;
  d.v_prev = state_.v_prev;
  d.v_nn_raw = d.v_n = r;
  d.kappa_nn = d.kappa = 1.0;
  d.v = state_.v_prev = r;
  return d;
}

PrgGovernor::PrgGovernor(const Plant& model, GovernorConfig cfg) : model_(model), cfg_(std::move(cfg)) {
  cfg_.validate();
}

MnnrgDiagnostics PrgGovernor::step(const Vec& x, double r) {
  MnnrgDiagnostics d;
  d.r = r;
  d.v_prev = state_.v_prev;
  const PrgResult res = prg_step(model_, x, state_, r, cfg_);
  d.v_nn_raw = d.v_n = res.v;
  d.kappa = d.kappa_nn = res.kappa;
  d.v = res.v;
  return d;
}

NnRgGovernor::NnRgGovernor(NominalSource source) : source_(std::move(source)) {}

MnnrgDiagnostics NnRgGovernor::step(const Vec& x, double r) {
  MnnrgDiagnostics d;
  d.r = r;
  d.v_prev = state_.v_prev;
  d.v_nn_raw = source_(x, state_.v_prev, r);
  const SaturationResult s = dynamic_saturation(d.v_nn_raw, state_, r);
  d.kappa_nn = d.kappa = s.kappa_nn;
  d.v_n = s.v_n;
  d.v = state_.v_prev = s.v_n;
  return d;
}

MnnRgGovernor::MnnRgGovernor(const Plant& model, NominalSource source, RemainderBound bound,
                             GovernorConfig cfg)
    : model_(model), source_(std::move(source)), bound_(std::move(bound)), cfg_(std::move(cfg)) {
  cfg_.validate();
  bound_.validate(model_.output_dim());
}

MnnrgDiagnostics MnnRgGovernor::step(const Vec& x, double r) {
  return mnnrg_step(model_, x, state_, r, source_, bound_, cfg_);
}

NominalSource network_source(std::shared_ptr<const MlpNetwork> net) {
  return [net](const Vec& x, double v_prev, double r) {
    double f[kMaxDim + 2];
    const int n = static_cast<int>(x.size());
    for (int i = 0; i < n; ++i) f[i] = x(i);
    f[n] = v_prev;
    f[n + 1] = r;
    return net->forward(std::span<const double>(f, n + 2));
  };
}

bool ClosedLoopLog::kappa_saturated() const {
  for (const auto& s : steps)
    if (s.diag.kappa != 1.0) return false;
  return true;
}

std::vector<double> ClosedLoopLog::commands() const {
  std::vector<double> v;
  v.reserve(steps.size());
  for (const auto& s : steps) v.push_back(s.diag.v);
  return v;
}

ClosedLoopLog run_closed_loop(const Plant& truth, Governor& gov, const Profile& profile,
                              const Vec& x0, double v0, const RunOptions& opts) {
  if (x0.size() != truth.state_dim()) throw ContractViolation("initial state dimension mismatch");
  const auto b = truth.input_bounds();
  for (double r : profile.r)
    if (!b.contains(r)) throw ConfigError("profile '" + profile.id + "' leaves the input bounds");
  const bool noisy = opts.noise_sigma.size() > 0;
  if (noisy && opts.noise_sigma.size() != truth.state_dim())
    throw ContractViolation("noise sigma dimension mismatch");

  ClosedLoopLog log;
  log.governor = gov.kind();
  log.profile = profile.id;
  log.violations.assign(truth.output_dim(), 0);
  log.steps.reserve(profile.size());

  std::mt19937_64 rng(opts.noise_seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  gov.reset(v0);
  Vec x = x0;
  for (int k = 0; k < profile.size(); ++k) {
    StepRecord rec;
    rec.t = profile.time(k);
    rec.x = x;
    Vec meas = x;
    if (noisy)
      for (int i = 0; i < meas.size(); ++i) meas(i) += opts.noise_sigma(i) * normal(rng);

    const auto t0 = std::chrono::steady_clock::now();
    rec.diag = gov.step(meas, profile.r[k]);
    if (opts.time_steps)
      rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    rec.y = truth.output(x, rec.diag.v);
    bool bad = false;
    for (int i = 0; i < rec.y.size(); ++i)
      if (rec.y(i) > opts.violation_tol) {
        ++log.violations[i];
        bad = true;
      }
    log.violating_samples += bad;
    x = truth.step(x, rec.diag.v);
    if (!x.allFinite()) throw DivergedTrajectory("closed-loop state diverged", k + 1);
    log.steps.push_back(std::move(rec));
  }
  return log;
}

void write_run_log(std::ostream& os, const Plant& plant, const ClosedLoopLog& log, double dt) {
  std::vector<std::string> names{"t", "r", "v_prev", "v"};
  for (int i = 0; i < plant.state_dim(); ++i) names.push_back(plant.state_name(i));
  for (int i = 0; i < plant.output_dim(); ++i) names.push_back(plant.output_name(i));
  write_csv_header(os, names);
  std::vector<double> row;
  for (size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    row = {k * dt, s.diag.r, s.diag.v_prev, s.diag.v};
    for (int i = 0; i < s.x.size(); ++i) row.push_back(s.x(i));
    for (int i = 0; i < s.y.size(); ++i) row.push_back(s.y(i));
    write_csv_row(os, row);
  }
}

void write_run_diagnostics(std::ostream& os, const ClosedLoopLog& log) {
  write_diagnostics_header(os);
  for (const auto& s : log.steps) write_diagnostics_row(os, s.t, s.diag);
}

RunLog to_run_log(const ClosedLoopLog& log, double dt) {
  RunLog out;
  for (size_t k = 0; k < log.steps.size(); ++k) {
    const auto& s = log.steps[k];
    out.t.push_back(k * dt);
    out.r.push_back(s.diag.r);
    out.v_prev.push_back(s.diag.v_prev);
    out.v.push_back(s.diag.v);
    out.x.push_back(s.x);
    out.y.push_back(s.y);
  }
  return out;
}

RunLog read_run_log(const std::filesystem::path& path, const Plant& plant) {
  const CsvTable t = read_csv(path);
  const int n = plant.state_dim(), ny = plant.output_dim();
  if (static_cast<int>(t.header.size()) != 4 + n + ny)
    throw SchemaError("run log " + path.string() + " has " + std::to_string(t.header.size()) +
                      " columns; plant " + plant.name() + " needs " + std::to_string(4 + n + ny));
  const int ct = t.column("t"), cr = t.column("r"), cp = t.column("v_prev"), cv = t.column("v");
  RunLog out;
  for (const auto& row : t.rows) {
    out.t.push_back(row[ct]);
    out.r.push_back(row[cr]);
    out.v_prev.push_back(row[cp]);
    out.v.push_back(row[cv]);
    Vec x(n), y(ny);
    for (int i = 0; i < n; ++i) x(i) = row[4 + i];
    for (int i = 0; i < ny; ++i) y(i) = row[4 + n + i];
    out.x.push_back(x);
    out.y.push_back(y);
  }
  return out;
}

Dataset dataset_from_run(const Plant& plant, const RunLog& log) {
  Dataset d;
  for (int i = 0; i < plant.state_dim(); ++i) d.feature_names.push_back(plant.state_name(i));
  d.feature_names.push_back("v_prev");
  d.feature_names.push_back("r");
  const int n = plant.state_dim();
  d.X.resize(log.size(), n + 2);
  d.y.resize(log.size());
  for (int k = 0; k < log.size(); ++k) {
    for (int i = 0; i < n; ++i) d.X(k, i) = log.x[k](i);
    d.X(k, n) = log.v_prev[k];
    d.X(k, n + 1) = log.r[k];
    d.y(k) = log.v[k];
  }
  return d;
}

double command_rmse(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw ContractViolation("command sequences differ in length");
  if (a.empty()) return 0.0;
  double acc = 0.0;
  for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(acc / a.size());
}

}  // namespace refgov
