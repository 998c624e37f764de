#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "refgov/plant.hpp"

namespace refgov {

/// Prediction under a constant input: states[j] = x(j), outputs[j] = y(j),
/// j = 0..j_star.
struct Trajectory {
  std::vector<Vec> states;
  std::vector<Vec> outputs;
  double v = 0.0;

  int j_star() const { return static_cast<int>(states.size()) - 1; }
};

struct AdmissibilityConfig {
  int j_star = 500;
  double epsilon = 0.05;
  double ss_tol = 1e-9;
  long ss_max_steps = 1'000'000;

  void validate() const;
};

Trajectory predict_constant(const Plant& plant, const Vec& x0, double v, int j_star);

struct Equilibrium {
  Vec x;
  Vec y;
  long steps = 0;
};

/// Settles x+ = f(x, v) from `start` (or the plant's guess) until the update
/// is below ss_tol in the infinity norm.
Equilibrium steady_state(const Plant& plant, double v, const AdmissibilityConfig& cfg);
Equilibrium steady_state(const Plant& plant, double v, const AdmissibilityConfig& cfg,
                         const Vec& start);

struct Verdict {
  bool admissible = false;
  double peak_output = 0.0;    // max over j and components of y(j)
  double steady_margin = 0.0;  // max over components of y_bar + epsilon
  std::string cause;           // set when a prediction or settling error occurred
};

/// Membership of (x0, v) in the finitely determined set: y(j) <= 0 for
/// j = 0..j_star and y_bar <= -epsilon componentwise.
Verdict check_admissible(const Plant& plant, const Vec& x0, double v,
                         const AdmissibilityConfig& cfg);
bool is_admissible(const Plant& plant, const Vec& x0, double v, const AdmissibilityConfig& cfg);

/// Transient part only (no steady-state test); errors count as inadmissible.
bool transient_admissible(const Plant& plant, const Vec& x0, double v, int j_star);

/// Steady-state part only: y_bar(v) <= -epsilon.  Errors count as inadmissible.
bool steady_admissible(const Plant& plant, double v, const AdmissibilityConfig& cfg,
                       const Vec* start = nullptr);

/// Admissible sub-interval of the input bounds under a monotone steady map,
/// found by a coarse scan followed by bisection on each edge.
struct InputInterval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};
InputInterval admissible_input_interval(const Plant& plant, const AdmissibilityConfig& cfg,
                                        int scan_points = 64, int refine_iters = 60);

void write_trajectory_csv(std::ostream& os, const Plant& plant, const Trajectory& traj);

}  // namespace refgov
