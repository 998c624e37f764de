#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "refgov/governor.hpp"
#include "refgov/plant.hpp"
#include "refgov/sensitivity.hpp"

namespace refgov::fc {

/// Physical constants of the reduced air-path model (SI units).
struct Primitives {
  double R_u, T_st, T_atm, V_ca, V_sm, n_cell, F, M_O2, M_N2, M_a;
  double k_ca, x_O2, omega_atm, p_atm, p_sat;
  double eta_cm, eta_cp, k_t, k_v, J_cp, R_cm, C_p, gamma;
  double C_D, A_t, chi, lambda_des;
};

struct Gains {
  double kp = 100.0, ki = 500.0, g1 = 0.6814, g2 = 33.8741;
};

/// c[1..17] and mu[1..4]; index 0 unused.
struct Derived {
  std::array<double, 18> c{};
  std::array<double, 5> mu{};
};

Derived derive_constants(const Primitives& p);

/// Polynomial surrogate W = a0 + a1 s + a2 s^2 + b1 (P - 1) + b2 (P - 1)^2
/// with s = omega / speed_scale and P = p_sm / p_atm.
struct CompressorMap {
  double speed_scale = 1000.0;
  double a0 = 0, a1 = 0, a2 = 0, b1 = 0, b2 = 0;
  double fd_speed = 1.0;      // rad/s
  double fd_pressure = 10.0;  // Pa

  double flow(double omega, double p_sm, double p_atm) const;
  /// Central-difference partials dW/domega and dW/dp_sm.
  void partials(double omega, double p_sm, double p_atm, double& dw_domega,
                double& dw_dpsm) const;
};

/// Rectangle in (omega [rad/s], Pi = p_sm / p_atm).
struct MapBox {
  double omega_min, omega_max, pi_min, pi_max;
  bool contains(double omega, double pi) const {
    return omega >= omega_min && omega <= omega_max && pi >= pi_min && pi <= pi_max;
  }
};

struct Params {
  Primitives prim{};
  Gains gains;
  Derived derived;  // values used by the model (loaded or recomputed)
  CompressorMap map;
  MapBox domain{};         // map evaluation domain; outside -> MapDomainError
  MapBox operating_box{};  // region where the map is declared positive
  InputBounds current{};   // admissible stack-current range [A]
  double dt = 0.01;
  int n_sub = 10;
};

Params params_from_json(const std::string& text);
Params load_params(const std::filesystem::path& path);
/// The parameter set shipped in data/fc_params.json.
Params default_params();

struct ConstantAudit {
  double max_rel_error = 0.0;
  std::string worst;
};
/// Recomputes c and mu from the primitives and compares with params.derived.
ConstantAudit audit_constants(const Params& p);

using State = std::array<double, 4>;  // p_ca, omega_cp, p_sm, integrator

State derivatives(const State& x, double I_st, const Params& p);
State sensitivity_derivatives(const State& x, const State& s, double I_st, const Params& p);

struct Outputs {
  double lambda_o2, W_cp, p_sm;
};
Outputs outputs(const State& x, double I_st, const Params& p);

/// [surge, choke, OER] margins, each <= 0 when feasible.
std::array<double, 3> constraints(const Outputs& y, const Params& p);

/// Sensitivities of (lambda, W_cp, p_sm) with respect to the current.
std::array<double, 3> output_sensitivities(const State& x, const State& s, double v_n,
                                           const Params& p);

/// Governed plant: 4-state controller-augmented model sampled at dt with
/// RK4 substeps; input is I_st, outputs are the three margins.
class FcPlant final : public Plant {
 public:
  explicit FcPlant(Params params);

  std::string name() const override { return "fuelcell"; }
  int state_dim() const override { return 4; }
  int output_dim() const override { return 3; }
  InputBounds input_bounds() const override { return p_.current; }
  Vec step(const Vec& x, double v) const override;
  Vec output(const Vec& x, double v) const override;
  void step_sensitivity(const Vec& x, const Vec& sx, double v, Vec& x_next,
                        Vec& sx_next) const override;
  Vec output_sensitivity(const Vec& x, const Vec& sx, double v) const override;
  Vec equilibrium_guess(double v) const override;
  std::string state_name(int i) const override;
  std::string output_name(int i) const override;

  const Params& params() const { return p_; }

  static constexpr int kSurge = 0, kChoke = 1, kOer = 2;

 private:
  Params p_;
};

State to_state(const Vec& x);
Vec to_vec(const State& s);

/// OER and surge rows in physical units (surge scaled by p_atm), mapped to
/// kappa coefficients.  OER rows first, then surge rows.
std::vector<QuadraticConstraint> mnnrg_constraints(const SensitivityTrajectory& sens,
                                                   double mbar_lambda, double mbar_surge_pa,
                                                   double v_prev, double r, const Params& p);

/// CSV header `t,I_d,I_st,p_ca,w_cp,p_sm,x4,lambda_o2,W_cp,surge,choke,oer`.
void write_run_header(std::ostream& os);
void write_run_row(std::ostream& os, double t, double I_d, double I_st, const Vec& x,
                   const Params& p);

}  // namespace refgov::fc
