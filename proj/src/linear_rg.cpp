#include <Eigen/LU>

#include "refgov/error.hpp"
#include "refgov/governor.hpp"

namespace refgov {

Eigen::VectorXd linear_input_gain(const LinearSystem& sys, int j) {
  if (j < 0) throw ContractViolation("j must be >= 0");
  const auto n = sys.A.rows();
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd Aj = I;
  for (int i = 0; i < j; ++i) Aj = Aj * sys.A;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(I - sys.A);
  if (lu.isInvertible()) return sys.C * lu.solve((I - Aj) * sys.B) + sys.D;

  Eigen::VectorXd acc = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd Ai = I;
  for (int i = 0; i < j; ++i) {
    acc += Ai * sys.B;
    Ai = Ai * sys.A;
  }
  return sys.C * acc + sys.D;
}

LinearRgResult linear_rg_step(const LinearSystem& sys, const Eigen::VectorXd& x,
                              GovernorState& state, double r, const GovernorConfig& cfg) {
  cfg.validate();
  const auto n = sys.A.rows();
  const auto ny = sys.C.rows();
  if (x.size() != n) throw ContractViolation("state dimension mismatch");
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu(I - sys.A);
  const bool invertible = lu.isInvertible();
  if (!invertible) throw DomainError("I - A is singular: no steady-state gain");

  const double d = r - state.v_prev;
  std::vector<QuadraticConstraint> rows;
  rows.reserve(static_cast<size_t>(ny) * (cfg.adm.j_star + 1) + ny);

  Eigen::MatrixXd Aj = I;
  for (int j = 0; j <= cfg.adm.j_star; ++j) {
    const Eigen::VectorXd hx = sys.C * (Aj * x);
    const Eigen::VectorXd hv = sys.C * lu.solve((I - Aj) * sys.B) + sys.D;
    for (Eigen::Index i = 0; i < ny; ++i)
      rows.push_back({0.0, hv(i) * d, hx(i) + hv(i) * state.v_prev + sys.e(i)});
    Aj = Aj * sys.A;
  }
  const Eigen::VectorXd G = sys.C * lu.solve(sys.B) + sys.D;
  for (Eigen::Index i = 0; i < ny; ++i)
    rows.push_back({0.0, G(i) * d, G(i) * state.v_prev + sys.e(i) + cfg.adm.epsilon});

  LinearRgResult out;
  out.kappa = solve_kappa_explicit(rows).kappa;
  out.v = rg_update(state, r, out.kappa);
  return out;
}

}  // namespace refgov
