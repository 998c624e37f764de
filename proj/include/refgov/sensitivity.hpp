#pragma once

#include <iosfwd>
#include <vector>

#include "refgov/admissibility.hpp"

namespace refgov {

/// Nominal prediction at v_n with first-order input sensitivities:
///   S_x(j+1) = f_x S_x(j) + f_v,  S_x(0) = 0,  S_y(j) = h_x S_x(j) + h_v.
struct SensitivityTrajectory {
  Trajectory base;
  std::vector<Vec> sx;
  std::vector<Vec> sy;
  double v_n = 0.0;

  int j_star() const { return base.j_star(); }
};

/// Per-output remainder bound.  `curvature` uses (mbar_i / 2)(v - v_n)^2; a
/// residual bound adds the constant rbar_i instead.  Outputs with
/// governed[i] == false are left out of the MNN-RG constraint set.
struct RemainderBound {
  enum class Kind { curvature, residual };
  Kind kind = Kind::curvature;
  std::vector<double> values;
  std::vector<bool> governed;

  static RemainderBound curvature(std::vector<double> mbar);
  static RemainderBound residual(std::vector<double> rbar);
  bool is_governed(int i) const { return governed.empty() || governed[i]; }
  void validate(int n_outputs) const;
};

SensitivityTrajectory propagate(const Plant& plant, const Vec& x0, double v_n, int j_star);

/// Upper bounds yhat_n(j) + S_y(j)(v - v_n) + remainder, indexed [j](i).
std::vector<Vec> taylor_bound_eval(const SensitivityTrajectory& sens, const RemainderBound& bound,
                                   double v);

/// Central differences (y(j; v_n + h) - y(j; v_n - h)) / 2h, indexed [j](i).
std::vector<Vec> finite_diff_sensitivity(const Plant& plant, const Vec& x0, double v_n,
                                         int j_star, double h_fd);

void write_sensitivity_csv(std::ostream& os, const SensitivityTrajectory& sens);

}  // namespace refgov
