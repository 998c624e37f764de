#pragma once

#include <Eigen/Dense>
#include <string>

namespace refgov {

inline constexpr int kMaxDim = 8;

// Small vectors and matrices with a fixed capacity so per-step work never
// touches the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

struct InputBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
  double width() const { return hi - lo; }
};

/// Discrete-time plant x+ = f(x, v), y = h(x, v).  Every output component is
/// a margin: the sample is feasible iff all components are <= 0.
///
/// Implementations must be immutable after construction; all members are
/// const and may be called concurrently.
class Plant {
 public:
  virtual ~Plant() = default;

  virtual std::string name() const = 0;
  virtual int state_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual InputBounds input_bounds() const = 0;

  virtual Vec step(const Vec& x, double v) const = 0;
  virtual Vec output(const Vec& x, double v) const = 0;

  /// df/dx and df/dv.  Default: central differences, h = 1e-6 max(1, |value|).
  virtual void state_jacobian(const Vec& x, double v, Mat& fx, Vec& fv) const;
  /// dh/dx and dh/dv.  Default: central differences as above.
  virtual void output_jacobian(const Vec& x, double v, Mat& hx, Vec& hv) const;

  /// One step of the nominal state together with its input sensitivity
  /// S_x+ = fx S_x + fv.  Plants that integrate a variational equation
  /// alongside the state override this.
  virtual void step_sensitivity(const Vec& x, const Vec& sx, double v, Vec& x_next,
                                Vec& sx_next) const;
  /// S_y = hx S_x + hv.
  virtual Vec output_sensitivity(const Vec& x, const Vec& sx, double v) const;

  /// Starting point for settling simulations.
  virtual Vec equilibrium_guess(double v) const;

  /// Names used for CSV headers.
  virtual std::string state_name(int i) const;
  virtual std::string output_name(int i) const;
};

/// Relative central-difference step used by the default Jacobians.
double fd_step(double value);

}  // namespace refgov
