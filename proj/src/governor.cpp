#include "refgov/governor.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov {

void GovernorConfig::validate() const {
  adm.validate();
  if (L < 1) throw ContractViolation("L must be >= 1");
  if (steady == SteadyStateMode::precomputed_interval && !admissible_interval)
    throw ContractViolation("precomputed_interval mode needs an admissible interval");
}

namespace {

// Candidate command; clamped to the segment [v_prev, r] so rounding never
// leaves the input bounds.
double candidate(double v_prev, double r, double kappa) {
  if (kappa == 1.0) return r;
  const double v = v_prev + kappa * (r - v_prev);
  return std::clamp(v, std::min(v_prev, r), std::max(v_prev, r));
}

}  // namespace

double rg_update(GovernorState& state, double r, double kappa) {
  if (!(kappa >= 0.0 && kappa <= 1.0))
    throw ContractViolation("kappa " + format_double(kappa) + " outside [0, 1]");
  state.v_prev = candidate(state.v_prev, r, kappa);
  return state.v_prev;
}

PrgResult prg_step(const Plant& plant, const Vec& x, GovernorState& state, double r,
                   const GovernorConfig& cfg) {
  cfg.validate();
  const bool interval = cfg.steady == SteadyStateMode::precomputed_interval;
  auto admissible = [&](double v) {
    if (interval)
      return cfg.admissible_interval->contains(v) &&
             transient_admissible(plant, x, v, cfg.adm.j_star);
    return is_admissible(plant, x, v, cfg.adm);
  };

  PrgResult out;
  double lo = 0.0, hi = 1.0, kappa = 1.0, kappa_opt = 0.0;
  for (int i = 0; i < cfg.L; ++i) {
    ++out.evaluations;
    if (admissible(candidate(state.v_prev, r, kappa))) {
      kappa_opt = kappa;
      if (kappa == 1.0) break;
      lo = kappa;
    } else {
      hi = kappa;
    }
    kappa = 0.5 * (lo + hi);
  }
  out.kappa = kappa_opt;
  out.v = rg_update(state, r, kappa_opt);
  return out;
}

SaturationResult dynamic_saturation(double v_nn_raw, const GovernorState& state, double r) {
  const double d = r - state.v_prev;
  if (d == 0.0) return {0.0, state.v_prev};
  const double k = std::clamp((v_nn_raw - state.v_prev) / d, 0.0, 1.0);
  return {k, candidate(state.v_prev, r, k)};
}

MnnrgConstraintSet mnnrg_constraints(const SensitivityTrajectory& sens, const RemainderBound& bound,
                                     double v_prev, double r,
                                     const std::optional<InputInterval>& steady_interval) {
  const int ny = static_cast<int>(sens.base.outputs.front().size());
  bound.validate(ny);
  const int nj = static_cast<int>(sens.base.outputs.size());
  const bool curvature = bound.kind == RemainderBound::Kind::curvature;

  MnnrgConstraintSet set;
  set.rows.reserve(static_cast<size_t>(ny) * nj + 2);
  for (int i = 0; i < ny; ++i) {
    if (!bound.is_governed(i)) continue;
    const double mbar = curvature ? bound.values[i] : 0.0;
    const double offset = curvature ? 0.0 : bound.values[i];
    for (int j = 0; j < nj; ++j) {
      set.rows.push_back(taylor_constraint(sens.base.outputs[j](i), sens.sy[j](i), mbar, offset,
                                           v_prev, sens.v_n, r));
      set.row_output.push_back(i);
      set.row_step.push_back(j);
    }
  }
  if (steady_interval) {
    const double d = r - v_prev;
    set.rows.push_back({0.0, d, v_prev - steady_interval->hi});
    set.rows.push_back({0.0, -d, steady_interval->lo - v_prev});
    for (int k = 0; k < 2; ++k) {
      set.row_output.push_back(ny);
      set.row_step.push_back(-1);
    }
  }
  return set;
}

MnnrgDiagnostics mnnrg_step(const Plant& plant, const Vec& x, GovernorState& state, double r,
                            const NominalSource& nominal_source, const RemainderBound& bound,
                            const GovernorConfig& cfg) {
  MnnrgDiagnostics d;
  d.r = r;
  d.v_prev = state.v_prev;
  d.v = state.v_prev;
  try {
    cfg.validate();
    const int ny = plant.output_dim();
    d.v_nn_raw = nominal_source(x, state.v_prev, r);
    if (!std::isfinite(d.v_nn_raw)) throw DomainError("nominal source returned a non-finite value");
    const SaturationResult sat = dynamic_saturation(d.v_nn_raw, state, r);
    d.kappa_nn = sat.kappa_nn;
    d.v_n = sat.v_n;

    const SensitivityTrajectory sens = propagate(plant, x, sat.v_n, cfg.adm.j_star);
    const bool interval = cfg.steady == SteadyStateMode::precomputed_interval;
    MnnrgConstraintSet set = mnnrg_constraints(
        sens, bound, state.v_prev, r, interval ? cfg.admissible_interval : std::nullopt);

    const Vec& settle_from = sens.base.states.back();
    const double v_prev = state.v_prev;
    auto steady_ok = [&](double kappa) {
      return steady_admissible(plant, candidate(v_prev, r, kappa), cfg.adm, &settle_from);
    };

    KappaSolution sol;
    if (cfg.solver == SolverMode::explicit_roots) {
      if (!interval) {
        const KappaSolution ss = solve_kappa_bisection({}, cfg.L, steady_ok);
        set.rows.push_back({0.0, 1.0, -ss.kappa});
        set.row_output.push_back(ny);
        set.row_step.push_back(-1);
      }
      sol = solve_kappa_explicit(set.rows);
    } else {
      sol = interval ? solve_kappa_bisection(set.rows, cfg.L)
                     : solve_kappa_bisection(set.rows, cfg.L, steady_ok);
    }
    if (sol.active == KappaSolution::kExtraPredicate) {
      d.active_output = ny;
    } else if (sol.active >= 0) {
      d.active_output = set.row_output[sol.active];
      d.active_step = set.row_step[sol.active];
    }
    d.kappa = sol.kappa;
    d.v = rg_update(state, r, sol.kappa);
  } catch (const Error& e) {
    d.fallback = true;
    d.fallback_cause = e.what();
    d.kappa = 0.0;
    d.v = state.v_prev;
  }
  return d;
}

void write_diagnostics_header(std::ostream& os) {
  os << "t,r,v_prev,v_nn_raw,kappa_nn,v_n,kappa,v,active_constraint\n";
}

void write_diagnostics_row(std::ostream& os, double t, const MnnrgDiagnostics& d) {
  write_csv_row(os, {t, d.r, d.v_prev, d.v_nn_raw, d.kappa_nn, d.v_n, d.kappa, d.v,
                     static_cast<double>(d.active_output)});
}

}  // namespace refgov
