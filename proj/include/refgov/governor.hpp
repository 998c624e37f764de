#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "refgov/admissibility.hpp"
#include "refgov/sensitivity.hpp"
#include "refgov/test_plants.hpp"

namespace refgov {

enum class SolverMode { explicit_roots, bisection };
enum class SteadyStateMode { simulate, precomputed_interval };

struct GovernorConfig {
  AdmissibilityConfig adm;  // j_star, epsilon, ss_tol, ss_max_steps
  int L = 15;
  SolverMode solver = SolverMode::bisection;
  SteadyStateMode steady = SteadyStateMode::simulate;
  /// Required when steady == precomputed_interval.
  std::optional<InputInterval> admissible_interval;

  void validate() const;
};

struct GovernorState {
  double v_prev = 0.0;
};

/// v = v_prev + kappa (r - v_prev); stores v as the new v_prev.
double rg_update(GovernorState& state, double r, double kappa);

/// a2 kappa^2 + a1 kappa + a0 <= 0.
struct QuadraticConstraint {
  double a2 = 0.0;
  double a1 = 0.0;
  double a0 = 0.0;

  double eval(double kappa) const { return (a2 * kappa + a1) * kappa + a0; }
};

/// Substitutes v = v_prev + kappa d, d = r - v_prev, into
///   y_n + s (v - v_n) + (mbar / 2)(v - v_n)^2 + offset <= 0.
QuadraticConstraint taylor_constraint(double y_n, double s, double mbar, double offset,
                                      double v_prev, double v_n, double r);

struct KappaSolution {
  double kappa = 0.0;
  /// Constraint that limits kappa: -1 when kappa = 1 is unconstrained,
  /// kExtraPredicate when the caller-supplied predicate limited it.
  int active = -1;
  static constexpr int kExtraPredicate = -2;
};

KappaSolution solve_kappa_explicit(std::span<const QuadraticConstraint> cs);
/// Tests kappa = 1, then L halvings of [0, 1]: result is the largest feasible
/// point of the 2^-L grid found by bisection.  `extra` (optional) is an
/// additional per-candidate feasibility test on kappa.
KappaSolution solve_kappa_bisection(std::span<const QuadraticConstraint> cs, int L,
                                    const std::function<bool(double)>& extra = {});
double solve_kappa(std::span<const QuadraticConstraint> cs, const GovernorConfig& cfg);

struct PrgResult {
  double kappa = 0.0;
  double v = 0.0;
  int evaluations = 0;
};

/// Algorithm 1: bisection on kappa with full nonlinear predictions.  The
/// first candidate is kappa = 1, so the final bracket is 2^-(L-1).
PrgResult prg_step(const Plant& plant, const Vec& x, GovernorState& state, double r,
                   const GovernorConfig& cfg);

struct SaturationResult {
  double kappa_nn = 0.0;
  double v_n = 0.0;
};

SaturationResult dynamic_saturation(double v_nn_raw, const GovernorState& state, double r);

/// Maps the network (or any policy) to a raw command from (x, v_prev, r).
using NominalSource = std::function<double(const Vec& x, double v_prev, double r)>;

struct MnnrgDiagnostics {
  double r = 0.0;
  double v_prev = 0.0;
  double v_nn_raw = 0.0;
  double kappa_nn = 0.0;
  double v_n = 0.0;
  double kappa = 0.0;
  double v = 0.0;
  /// Output index whose constraint limited kappa; -1 none; n_outputs for the
  /// steady-state constraint.
  int active_output = -1;
  int active_step = -1;
  bool fallback = false;
  std::string fallback_cause;
};

/// Builds the per-output, per-step constraint rows of the modified governor
/// plus the steady-state rows when the admissible interval is known.
/// Row order: governed outputs in index order, j = 0..j_star within each.
struct MnnrgConstraintSet {
  std::vector<QuadraticConstraint> rows;
  std::vector<int> row_output;  // output index per row, n_outputs for steady rows
  std::vector<int> row_step;    // j per row, -1 for steady rows
};

MnnrgConstraintSet mnnrg_constraints(const SensitivityTrajectory& sens, const RemainderBound& bound,
                                     double v_prev, double r,
                                     const std::optional<InputInterval>& steady_interval);

MnnrgDiagnostics mnnrg_step(const Plant& plant, const Vec& x, GovernorState& state, double r,
                            const NominalSource& nominal_source, const RemainderBound& bound,
                            const GovernorConfig& cfg);

/// H_v(j) = C (I - A)^-1 (I - A^j) B + D, or C sum_{i<j} A^i B + D when I - A
/// is singular.
Eigen::VectorXd linear_input_gain(const LinearSystem& sys, int j);

struct LinearRgResult {
  double kappa = 0.0;
  double v = 0.0;
};

/// Standard linear RG on affine-in-kappa constraints, including the steady
/// state tightening with G = C (I - A)^-1 B + D.
LinearRgResult linear_rg_step(const LinearSystem& sys, const Eigen::VectorXd& x,
                              GovernorState& state, double r, const GovernorConfig& cfg);

void write_diagnostics_header(std::ostream& os);
void write_diagnostics_row(std::ostream& os, double t, const MnnrgDiagnostics& d);

}  // namespace refgov
