#include "refgov/sensitivity.hpp"

#include <cmath>
#include <ostream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov {

RemainderBound RemainderBound::curvature(std::vector<double> mbar) {
  RemainderBound b;
  b.kind = Kind::curvature;
  b.values = std::move(mbar);
  return b;
}

RemainderBound RemainderBound::residual(std::vector<double> rbar) {
  RemainderBound b;
  b.kind = Kind::residual;
  b.values = std::move(rbar);
  return b;
}

void RemainderBound::validate(int n_outputs) const {
  if (static_cast<int>(values.size()) != n_outputs)
    throw ContractViolation("remainder bound has " + std::to_string(values.size()) +
                            " values for " + std::to_string(n_outputs) + " outputs");
  if (!governed.empty() && static_cast<int>(governed.size()) != n_outputs)
    throw ContractViolation("governed mask size mismatch");
  for (double m : values)
    if (!std::isfinite(m)) throw ContractViolation("remainder bound must be finite");
}

SensitivityTrajectory propagate(const Plant& plant, const Vec& x0, double v_n, int j_star) {
  const auto b = plant.input_bounds();
  if (!b.contains(v_n)) throw ContractViolation("nominal input outside bounds");
  if (j_star < 1) throw ContractViolation("j_star must be >= 1");
  if (x0.size() != plant.state_dim()) throw ContractViolation("state dimension mismatch");

  SensitivityTrajectory s;
  s.v_n = v_n;
  s.base.v = v_n;
  s.base.states.reserve(j_star + 1);
  s.base.outputs.reserve(j_star + 1);
  s.sx.reserve(j_star + 1);
  s.sy.reserve(j_star + 1);

  s.base.states.push_back(x0);
  s.sx.push_back(Vec::Zero(plant.state_dim()));
  Vec xn, sn;
  for (int j = 0; j < j_star; ++j) {
    plant.step_sensitivity(s.base.states[j], s.sx[j], v_n, xn, sn);
    if (!xn.allFinite()) throw DivergedTrajectory("non-finite state in prediction", j + 1);
    if (!sn.allFinite()) throw DivergedSensitivity("non-finite state sensitivity", j + 1);
    s.base.states.push_back(xn);
    s.sx.push_back(sn);
  }
  for (int j = 0; j <= j_star; ++j) {
    Vec y = plant.output(s.base.states[j], v_n);
    Vec sy = plant.output_sensitivity(s.base.states[j], s.sx[j], v_n);
    if (!y.allFinite()) throw DivergedTrajectory("non-finite output in prediction", j);
    if (!sy.allFinite()) throw DivergedSensitivity("non-finite output sensitivity", j);
    s.base.outputs.push_back(std::move(y));
    s.sy.push_back(std::move(sy));
  }
  return s;
}

std::vector<Vec> taylor_bound_eval(const SensitivityTrajectory& sens, const RemainderBound& bound,
                                   double v) {
  const int ny = static_cast<int>(sens.base.outputs.front().size());
  bound.validate(ny);
  const double dv = v - sens.v_n;
  std::vector<Vec> out;
  out.reserve(sens.base.outputs.size());
  for (size_t j = 0; j < sens.base.outputs.size(); ++j) {
    Vec u = sens.base.outputs[j] + sens.sy[j] * dv;
    for (int i = 0; i < ny; ++i)
      u(i) += bound.kind == RemainderBound::Kind::curvature ? 0.5 * bound.values[i] * dv * dv
                                                            : bound.values[i];
    out.push_back(std::move(u));
  }
  return out;
}

std::vector<Vec> finite_diff_sensitivity(const Plant& plant, const Vec& x0, double v_n,
                                         int j_star, double h_fd) {
  const auto b = plant.input_bounds();
  if (!(h_fd > 0.0)) throw ContractViolation("h_fd must be > 0");
  if (!b.contains(v_n - h_fd) || !b.contains(v_n + h_fd))
    throw ContractViolation("v_n +- h_fd outside input bounds");
  const Trajectory up = predict_constant(plant, x0, v_n + h_fd, j_star);
  const Trajectory dn = predict_constant(plant, x0, v_n - h_fd, j_star);
  std::vector<Vec> out;
  out.reserve(j_star + 1);
  for (int j = 0; j <= j_star; ++j) out.push_back((up.outputs[j] - dn.outputs[j]) / (2.0 * h_fd));
  return out;
}

void write_sensitivity_csv(std::ostream& os, const SensitivityTrajectory& sens) {
  const int ny = static_cast<int>(sens.base.outputs.front().size());
  std::vector<std::string> names{"j"};
  for (int i = 0; i < ny; ++i) names.push_back("yhat_" + std::to_string(i + 1));
  for (int i = 0; i < ny; ++i) names.push_back("Sy_" + std::to_string(i + 1));
  write_csv_header(os, names);
  std::vector<double> row;
  for (size_t j = 0; j < sens.sy.size(); ++j) {
    row.assign(1, static_cast<double>(j));
    for (int i = 0; i < ny; ++i) row.push_back(sens.base.outputs[j](i));
    for (int i = 0; i < ny; ++i) row.push_back(sens.sy[j](i));
    write_csv_row(os, row);
  }
}

}  // namespace refgov
