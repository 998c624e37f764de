#include "refgov/plant.hpp"

#include <cmath>

namespace refgov {

double fd_step(double value) { return 1e-6 * std::max(1.0, std::abs(value)); }

void Plant::state_jacobian(const Vec& x, double v, Mat& fx, Vec& fv) const {
  const int n = state_dim();
  fx.resize(n, n);
  for (int i = 0; i < n; ++i) {
    const double h = fd_step(x(i));
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    fx.col(i) = (step(xp, v) - step(xm, v)) / (2.0 * h);
  }
  const double h = fd_step(v);
  fv = (step(x, v + h) - step(x, v - h)) / (2.0 * h);
}

void Plant::output_jacobian(const Vec& x, double v, Mat& hx, Vec& hv) const {
  const int n = state_dim();
  hx.resize(output_dim(), n);
  for (int i = 0; i < n; ++i) {
    const double h = fd_step(x(i));
    Vec xp = x, xm = x;
    xp(i) += h;
    xm(i) -= h;
    hx.col(i) = (output(xp, v) - output(xm, v)) / (2.0 * h);
  }
  const double h = fd_step(v);
  hv = (output(x, v + h) - output(x, v - h)) / (2.0 * h);
}

void Plant::step_sensitivity(const Vec& x, const Vec& sx, double v, Vec& x_next,
                             Vec& sx_next) const {
  Mat fx;
  Vec fv;
  state_jacobian(x, v, fx, fv);
  x_next = step(x, v);
  sx_next = fx * sx + fv;
}

Vec Plant::output_sensitivity(const Vec& x, const Vec& sx, double v) const {
  Mat hx;
  Vec hv;
  output_jacobian(x, v, hx, hv);
  return hx * sx + hv;
}

Vec Plant::equilibrium_guess(double) const { return Vec::Zero(state_dim()); }

std::string Plant::state_name(int i) const { return "x" + std::to_string(i + 1); }
std::string Plant::output_name(int i) const { return "y" + std::to_string(i + 1); }

}  // namespace refgov
