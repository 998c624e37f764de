#include "refgov/admissibility.hpp"

#include <cmath>
#include <limits>
#include <ostream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov {

void AdmissibilityConfig::validate() const {
  if (j_star < 1) throw ContractViolation("j_star must be >= 1");
  if (!(epsilon > 0.0)) throw ContractViolation("epsilon must be > 0");
  if (!(ss_tol > 0.0)) throw ContractViolation("ss_tol must be > 0");
  if (ss_max_steps < 1) throw ContractViolation("ss_max_steps must be >= 1");
}

namespace {

void require_in_bounds(const Plant& plant, double v) {
  const auto b = plant.input_bounds();
  if (!b.contains(v))
    throw ContractViolation("input " + format_double(v) + " outside [" + format_double(b.lo) +
                            ", " + format_double(b.hi) + "] for " + plant.name());
}

}  // namespace

Trajectory predict_constant(const Plant& plant, const Vec& x0, double v, int j_star) {
  require_in_bounds(plant, v);
  if (j_star < 1) throw ContractViolation("j_star must be >= 1");
  if (x0.size() != plant.state_dim()) throw ContractViolation("state dimension mismatch");

  Trajectory t;
  t.v = v;
  t.states.reserve(j_star + 1);
  t.outputs.reserve(j_star + 1);
  t.states.push_back(x0);
  for (int j = 0; j < j_star; ++j) {
    Vec next = plant.step(t.states.back(), v);
    if (!next.allFinite()) throw DivergedTrajectory("non-finite state in prediction", j + 1);
    t.states.push_back(std::move(next));
  }
  for (int j = 0; j <= j_star; ++j) {
    Vec y = plant.output(t.states[j], v);
    if (!y.allFinite()) throw DivergedTrajectory("non-finite output in prediction", j);
    t.outputs.push_back(std::move(y));
  }
  return t;
}

Equilibrium steady_state(const Plant& plant, double v, const AdmissibilityConfig& cfg) {
  return steady_state(plant, v, cfg, plant.equilibrium_guess(v));
}

Equilibrium steady_state(const Plant& plant, double v, const AdmissibilityConfig& cfg,
                         const Vec& start) {
  require_in_bounds(plant, v);
  Vec x = start;
  for (long k = 0; k < cfg.ss_max_steps; ++k) {
    Vec next = plant.step(x, v);
    if (!next.allFinite())
      throw DivergedTrajectory("non-finite state while settling", static_cast<int>(k + 1));
    const double change = (next - x).lpNorm<Eigen::Infinity>();
    x = std::move(next);
    if (change <= cfg.ss_tol) return {x, plant.output(x, v), k + 1};
  }
  throw NonConvergentEquilibrium("no steady state within " + std::to_string(cfg.ss_max_steps) +
                                 " steps at v = " + format_double(v));
}

Verdict check_admissible(const Plant& plant, const Vec& x0, double v,
                         const AdmissibilityConfig& cfg) {
  Verdict out;
  try {
    const Trajectory t = predict_constant(plant, x0, v, cfg.j_star);
    out.peak_output = -std::numeric_limits<double>::infinity();
    for (const auto& y : t.outputs) out.peak_output = std::max(out.peak_output, y.maxCoeff());
    if (out.peak_output > 0.0) {
      out.steady_margin = std::numeric_limits<double>::quiet_NaN();
      return out;
    }
    const Equilibrium eq = steady_state(plant, v, cfg, t.states.back());
    out.steady_margin = eq.y.maxCoeff() + cfg.epsilon;
    out.admissible = out.steady_margin <= 0.0;
  } catch (const Error& e) {
    out.admissible = false;
    out.cause = e.what();
  }
  return out;
}

bool is_admissible(const Plant& plant, const Vec& x0, double v, const AdmissibilityConfig& cfg) {
  return check_admissible(plant, x0, v, cfg).admissible;
}

bool transient_admissible(const Plant& plant, const Vec& x0, double v, int j_star) {
  try {
    require_in_bounds(plant, v);
    Vec x = x0;
    if (plant.output(x, v).maxCoeff() > 0.0) return false;
    for (int j = 0; j < j_star; ++j) {
      x = plant.step(x, v);
      if (!x.allFinite()) return false;
      if (!(plant.output(x, v).maxCoeff() <= 0.0)) return false;
    }
    return true;
  } catch (const Error&) {
    return false;
  }
}

bool steady_admissible(const Plant& plant, double v, const AdmissibilityConfig& cfg,
                       const Vec* start) {
  try {
    const Equilibrium eq = start ? steady_state(plant, v, cfg, *start) : steady_state(plant, v, cfg);
    return eq.y.maxCoeff() + cfg.epsilon <= 0.0;
  } catch (const Error&) {
    return false;
  }
}

InputInterval admissible_input_interval(const Plant& plant, const AdmissibilityConfig& cfg,
                                        int scan_points, int refine_iters) {
  if (scan_points < 2) throw ContractViolation("scan_points must be >= 2");
  const auto b = plant.input_bounds();
  std::vector<double> grid(scan_points);
  std::vector<char> ok(scan_points);
  int first = -1, last = -1;
  for (int i = 0; i < scan_points; ++i) {
    grid[i] = (i == scan_points - 1) ? b.hi : b.lo + b.width() * i / (scan_points - 1);
    ok[i] = steady_admissible(plant, grid[i], cfg);
    if (ok[i]) {
      if (first < 0) first = i;
      last = i;
    }
  }
  if (first < 0) throw DomainError("no steady-state admissible input in bounds for " + plant.name());
  for (int i = first; i <= last; ++i)
    if (!ok[i]) throw DomainError("steady-state admissible inputs are not an interval");

  auto refine = [&](double good, double bad) {
    for (int k = 0; k < refine_iters; ++k) {
      const double mid = 0.5 * (good + bad);
      if (mid == good || mid == bad) break;
      (steady_admissible(plant, mid, cfg) ? good : bad) = mid;
    }
    return good;
  };
  InputInterval out{grid[first], grid[last]};
  if (first > 0) out.lo = refine(grid[first], grid[first - 1]);
  if (last < scan_points - 1) out.hi = refine(grid[last], grid[last + 1]);
  return out;
}

void write_trajectory_csv(std::ostream& os, const Plant& plant, const Trajectory& traj) {
  std::vector<std::string> names{"j"};
  for (int i = 0; i < plant.state_dim(); ++i) names.push_back(plant.state_name(i));
  for (int i = 0; i < plant.output_dim(); ++i) names.push_back(plant.output_name(i));
  write_csv_header(os, names);
  std::vector<double> row;
  for (size_t j = 0; j < traj.states.size(); ++j) {
    row.assign(1, static_cast<double>(j));
    for (int i = 0; i < traj.states[j].size(); ++i) row.push_back(traj.states[j](i));
    for (int i = 0; i < traj.outputs[j].size(); ++i) row.push_back(traj.outputs[j](i));
    write_csv_row(os, row);
  }
}

}  // namespace refgov
