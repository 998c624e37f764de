#include "refgov/tuning.hpp"

#include <algorithm>
#include <exception>
#include <map>
#include <ostream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"
#include "refgov/kernels.hpp"

namespace refgov {

MbarExperiment mnnrg_experiment(const Plant& model, const Plant& truth, Profile profile,
                                NominalSource source, GovernorConfig cfg, Vec x0, double v0,
                                std::vector<bool> governed) {
  return [&model, &truth, profile = std::move(profile), source = std::move(source),
          cfg = std::move(cfg), x0 = std::move(x0), v0,
          governed = std::move(governed)](const std::vector<double>& mbar) {
    RemainderBound bound = RemainderBound::curvature(mbar);
    bound.governed = governed;
    MnnRgGovernor gov(model, source, bound, cfg);
    const ClosedLoopLog log = run_closed_loop(truth, gov, profile, x0, v0);
    ProbeOutcome o;
    for (int i = 0; i < truth.output_dim(); ++i) o.violated.push_back(log.output_violated(i));
    o.kappa_saturated = log.kappa_saturated();
    return o;
  };
}

TuningRun calibrate_mbar(const MbarExperiment& experiment, const std::vector<int>& outputs,
                         const std::vector<double>& delta, std::vector<double> initial,
                         const TuningOptions& opts) {
  if (outputs.empty() || outputs.size() != delta.size())
    throw ContractViolation("one step size per tuned output is required");
  for (size_t k = 0; k < outputs.size(); ++k) {
    if (outputs[k] < 0 || outputs[k] >= static_cast<int>(initial.size()))
      throw ContractViolation("tuned output index out of range");
    if (!(delta[k] > 0.0)) throw ContractViolation("mbar step must be > 0");
  }
  if (!opts.floor.empty() && opts.floor.size() != outputs.size())
    throw ContractViolation("one mbar floor per tuned output is required");

  TuningRun run;
  run.mbar = std::move(initial);
  std::map<std::vector<double>, ProbeOutcome> cache;
  int iteration = 0;
  auto probe = [&](int out) {
    auto it = cache.find(run.mbar);
    if (it == cache.end()) {
      it = cache.emplace(run.mbar, experiment(run.mbar)).first;
      ++run.experiments;
    }
    const ProbeOutcome& o = it->second;
    run.log.push_back({iteration++, out, run.mbar[out], o.violated.at(out), o.kappa_saturated});
    return o;
  };
  auto cap = [&](int n) {
    if (n > opts.max_iterations)
      throw NonTermination("mbar calibration exceeded " + std::to_string(opts.max_iterations) +
                           " iterations; the curvature bound premise looks broken");
  };

  for (run.sweeps = 0; run.sweeps < opts.max_sweeps;) {
    bool changed = false;
    for (size_t k = 0; k < outputs.size(); ++k) {
      const int i = outputs[k];
      const double before = run.mbar[i];
      ProbeOutcome o = probe(i);
      if (o.violated[i]) {
        for (int n = 1; o.violated[i]; ++n) {
          cap(n);
          run.mbar[i] += delta[k];
          ++run.increase_iterations;
          o = probe(i);
        }
      } else if (!o.kappa_saturated) {
        for (int n = 1;; ++n) {
          cap(n);
          if (!opts.floor.empty() && run.mbar[i] - delta[k] < opts.floor[k]) break;
          run.mbar[i] -= delta[k];
          ++run.decrease_iterations;
          o = probe(i);
          if (o.violated[i]) {
            run.mbar[i] += delta[k];
            break;
          }
          if (o.kappa_saturated) break;
        }
      }
      changed = changed || run.mbar[i] != before;
    }
    ++run.sweeps;
    if (!changed) return run;
  }
  run.converged = false;
  return run;
}

void write_tuning_log(std::ostream& os, const TuningRun& run) {
  os << "iteration,output,mbar,violated,kappa_saturated\n";
  for (const auto& e : run.log)
    os << e.iteration << ',' << e.output << ',' << format_double(e.mbar) << ',' << e.violated << ','
       << e.kappa_saturated << '\n';
}

RbarResult compute_rbar(const RunLog& log, const NominalSource& source, const Plant& plant,
                        int j_star, bool parallel) {
  const int ny = plant.output_dim();
  const int T = log.size();
  if (T == 0) throw ContractViolation("empty run log");
  for (int t = 0; t < T; ++t)
    if (log.x[t].size() != plant.state_dim())
      throw SchemaError("run log state width does not match plant " + plant.name());

  std::vector<std::vector<int>> j_at(T, std::vector<int>(ny, -1));
  auto residual_row = [&](int t, std::vector<double>& out) {
    GovernorState st{log.v_prev[t]};
    const double raw = source(log.x[t], log.v_prev[t], log.r[t]);
    const SaturationResult sat = dynamic_saturation(raw, st, log.r[t]);
    const SensitivityTrajectory sens = propagate(plant, log.x[t], sat.v_n, j_star);
    const Trajectory actual = predict_constant(plant, log.x[t], log.v[t], j_star);
    const double dv = log.v[t] - sat.v_n;
    for (int i = 0; i < ny; ++i) out[i] = -std::numeric_limits<double>::infinity();
    for (int j = 0; j <= j_star; ++j)
      for (int i = 0; i < ny; ++i) {
        const double res = actual.outputs[j](i) - sens.base.outputs[j](i) - sens.sy[j](i) * dv;
        if (res > out[i]) {
          out[i] = res;
          j_at[t][i] = j;
        }
      }
  };
  std::exception_ptr failure;
  auto row = [&](int t, std::vector<double>& out) {
    try {
      residual_row(t, out);
    } catch (...) {
#pragma omp critical(refgov_rbar_failure)
      if (!failure) failure = std::current_exception();
      std::fill(out.begin(), out.end(), -std::numeric_limits<double>::infinity());
    }
  };
  const ColumnArgMax m =
      parallel ? column_argmax_parallel(T, ny, row) : column_argmax_serial(T, ny, row);
  if (failure) std::rethrow_exception(failure);
  RbarResult r;
  r.rbar = m.value;
  r.t_arg = m.row;
  for (int i = 0; i < ny; ++i) r.j_arg.push_back(m.row[i] >= 0 ? j_at[m.row[i]][i] : -1);
  return r;
}

}  // namespace refgov
