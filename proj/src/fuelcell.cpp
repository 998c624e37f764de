#include "refgov/fuelcell.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <ostream>
#include <sstream>

#include "refgov/csv.hpp"
#include "refgov/error.hpp"

namespace refgov::fc {

using nlohmann::json;

Derived derive_constants(const Primitives& p) {
  Derived d;
  auto& c = d.c;
  const double RT = p.R_u * p.T_st;
  c[1] = RT * p.k_ca * p.x_O2 / (p.M_O2 * p.V_ca * (1.0 + p.omega_atm));
  c[2] = p.p_sat;
  c[3] = RT / p.V_ca;
  c[4] = p.n_cell * RT / (4.0 * p.V_ca * p.F);
  c[5] = RT * p.k_ca * (1.0 - p.x_O2) / (p.M_N2 * p.V_ca * (1.0 + p.omega_atm));
  c[6] = p.eta_cm * p.k_t * p.k_v / (p.J_cp * p.R_cm);
  c[7] = p.C_p * p.T_atm / (p.J_cp * p.eta_cp);
  c[8] = p.p_atm;
  c[9] = (p.gamma - 1.0) / p.gamma;
  c[10] = p.eta_cm * p.k_t / (p.J_cp * p.R_cm);
  c[11] = p.R_u * p.T_atm / (p.M_a * p.V_sm);
  c[12] = 1.0 / p.eta_cp;
  c[13] = p.C_D * p.A_t / std::sqrt(RT) * std::sqrt(p.gamma) *
          std::pow(2.0 / (p.gamma + 1.0), (p.gamma + 1.0) / (2.0 * (p.gamma - 1.0)));
  c[14] = p.k_ca;
  c[16] = p.n_cell * p.M_O2 / (4.0 * p.F);
  c[15] = c[16] * p.lambda_des * (1.0 + p.omega_atm) / p.x_O2;
  c[17] = p.k_ca * p.x_O2 / (1.0 + p.omega_atm);
  auto& mu = d.mu;
  mu[1] = 0.88 * (c[1] + c[5] + c[3] * c[13] / p.chi);
  mu[2] = c[1] + c[5];
  mu[3] = 0.88 * c[2] * c[3] * c[13] / p.chi;
  mu[4] = c[4];
  return d;
}

double CompressorMap::flow(double omega, double p_sm, double p_atm) const {
  const double s = omega / speed_scale;
  const double q = p_sm / p_atm - 1.0;
  return a0 + (a1 + a2 * s) * s + (b1 + b2 * q) * q;
}

void CompressorMap::partials(double omega, double p_sm, double p_atm, double& dw_domega,
                             double& dw_dpsm) const {
  dw_domega = (flow(omega + fd_speed, p_sm, p_atm) - flow(omega - fd_speed, p_sm, p_atm)) /
              (2.0 * fd_speed);
  dw_dpsm = (flow(omega, p_sm + fd_pressure, p_atm) - flow(omega, p_sm - fd_pressure, p_atm)) /
            (2.0 * fd_pressure);
}

namespace {

double get(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("FC parameter file: missing '") + key + "'");
  return j.at(key).get<double>();
}

MapBox box_from(const json& j) {
  return {get(j, "omega_min"), get(j, "omega_max"), get(j, "pi_min"), get(j, "pi_max")};
}

}  // namespace

Params params_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw CorruptFile(std::string("FC parameter file does not parse: ") + e.what());
  }
  try {
    Params p;
    const json& q = j.at("primitives");
    auto& P = p.prim;
    P = {get(q, "R_u"),    get(q, "T_st"),    get(q, "T_atm"),     get(q, "V_ca"),
         get(q, "V_sm"),   get(q, "n_cell"),  get(q, "F"),         get(q, "M_O2"),
         get(q, "M_N2"),   get(q, "M_a"),     get(q, "k_ca"),      get(q, "x_O2"),
         get(q, "omega_atm"), get(q, "p_atm"), get(q, "p_sat"),    get(q, "eta_cm"),
         get(q, "eta_cp"), get(q, "k_t"),     get(q, "k_v"),       get(q, "J_cp"),
         get(q, "R_cm"),   get(q, "C_p"),     get(q, "gamma"),     get(q, "C_D"),
         get(q, "A_t"),    get(q, "chi"),     get(q, "lambda_des")};
    const json& g = j.at("gains");
    p.gains = {get(g, "kp"), get(g, "ki"), get(g, "g1"), get(g, "g2")};

    p.derived = derive_constants(P);
    if (j.contains("derived")) {
      const json& dj = j.at("derived");
      for (int i = 1; i <= 17; ++i) {
        const std::string k = "c" + std::to_string(i);
        if (dj.contains(k)) p.derived.c[i] = dj.at(k).get<double>();
      }
      for (int i = 1; i <= 4; ++i) {
        const std::string k = "mu" + std::to_string(i);
        if (dj.contains(k)) p.derived.mu[i] = dj.at(k).get<double>();
      }
    }

    const json& m = j.at("compressor_map");
    const std::string kind = m.value("kind", "");
    if (kind != "polynomial")
      throw ConfigError("unsupported compressor map kind '" + kind + "' (only 'polynomial')");
    p.map.speed_scale = get(m, "speed_scale");
    p.map.a0 = get(m, "a0");
    p.map.a1 = get(m, "a1");
    p.map.a2 = get(m, "a2");
    p.map.b1 = get(m, "b1");
    p.map.b2 = get(m, "b2");
    p.map.fd_speed = m.value("fd_speed", 1.0);
    p.map.fd_pressure = m.value("fd_pressure", 10.0);

    p.domain = box_from(j.at("map_domain"));
    p.operating_box = box_from(j.at("operating_box"));
    const json& cr = j.at("current_range");
    p.current = {get(cr, "min"), get(cr, "max")};
    if (!(p.current.lo > 0.0 && p.current.hi > p.current.lo))
      throw ConfigError("current range must satisfy 0 < min < max");
    if (j.contains("sampling")) {
      p.dt = j["sampling"].value("dt", 0.01);
      p.n_sub = j["sampling"].value("n_sub", 10);
    }
    if (!(p.dt > 0.0) || p.n_sub < 1) throw ConfigError("invalid sampling settings");
    if (!(p.derived.c[16] > 0.0)) throw ConfigError("c16 must be positive");
    return p;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("FC parameter file: ") + e.what());
  }
}

Params load_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open FC parameter file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return params_from_json(ss.str());
}

Params default_params() { return load_params(std::filesystem::path(REFGOV_DATA_DIR) / "fc_params.json"); }

ConstantAudit audit_constants(const Params& p) {
  const Derived d = derive_constants(p.prim);
  ConstantAudit a;
  auto check = [&](double stored, double fresh, const std::string& name) {
    const double rel = std::abs(stored - fresh) / std::max(std::abs(fresh), 1e-300);
    if (a.worst.empty() || rel > a.max_rel_error) {
      a.max_rel_error = rel;
      a.worst = name;
    }
  };
  for (int i = 1; i <= 17; ++i) check(p.derived.c[i], d.c[i], "c" + std::to_string(i));
  for (int i = 1; i <= 4; ++i) check(p.derived.mu[i], d.mu[i], "mu" + std::to_string(i));
  return a;
}

namespace {

void require_domain(const State& x, const Params& p) {
  const double pi = x[2] / p.prim.p_atm;
  if (!p.domain.contains(x[1], pi) || !(x[0] > 0.0) || !std::isfinite(x[3]))
    throw MapDomainError("FC state outside map domain: omega=" + format_double(x[1]) +
                         " rad/s, p_sm/p_atm=" + format_double(pi) +
                         ", p_ca=" + format_double(x[0]));
}

}  // namespace

State derivatives(const State& x, double v, const Params& p) {
  require_domain(x, p);
  const auto& c = p.derived.c;
  const auto& mu = p.derived.mu;
  const auto& g = p.gains;
  const double W = p.map.flow(x[1], x[2], p.prim.p_atm);
  const double pr = std::pow(x[2] / c[8], c[9]) - 1.0;
  return {
      -mu[1] * x[0] + mu[2] * x[2] + mu[3] - mu[4] * v,
      c[10] * (g.g1 * v + g.g2 + g.kp * (c[15] * v - W) + g.ki * x[3]) - c[6] * x[1] -
          c[7] / x[1] * pr * W,
      c[11] * (1.0 + c[12] * pr) * (W - c[14] * (x[2] - x[0])),
      c[15] * v - W,
  };
}

namespace {

// Right-hand sides of the state and its input sensitivity, sharing the map
// evaluation and the pressure-ratio power between the two.
void joint_derivatives(const State& x, const State& s, double v, const Params& p, State& dx,
                       State& ds) {
  require_domain(x, p);
  const auto& c = p.derived.c;
  const auto& mu = p.derived.mu;
  const auto& g = p.gains;
  const double W = p.map.flow(x[1], x[2], p.prim.p_atm);
  double Wx2, Wx3;
  p.map.partials(x[1], x[2], p.prim.p_atm, Wx2, Wx3);
  const double ratio = std::pow(x[2] / c[8], c[9]);
  const double pr = ratio - 1.0;
  const double dpr = c[9] * ratio / x[2];  // d/dx3 of (x3/c8)^c9
  const double boost = 1.0 + c[12] * pr;
  const double c7x2 = c[7] / x[1];
  const double inflow = W - c[14] * (x[2] - x[0]);
  dx = {
      -mu[1] * x[0] + mu[2] * x[2] + mu[3] - mu[4] * v,
      c[10] * (g.g1 * v + g.g2 + g.kp * (c[15] * v - W) + g.ki * x[3]) - c[6] * x[1] -
          c7x2 * pr * W,
      c[11] * boost * inflow,
      c[15] * v - W,
  };
  ds = {
      -mu[1] * s[0] + mu[2] * s[2] - mu[4],
      s[1] * (-c[10] * g.kp * Wx2 - c[6] + c7x2 / x[1] * pr * W - c7x2 * pr * Wx2) +
          s[2] * (-c[10] * g.kp * Wx3 - c7x2 * dpr * W - c7x2 * pr * Wx3) + c[10] * g.ki * s[3] +
          c[10] * (g.g1 + g.kp * c[15]),
      s[0] * c[11] * c[14] * boost + s[1] * c[11] * boost * Wx2 +
          s[2] * (c[11] * c[12] * dpr * inflow + c[11] * boost * (Wx3 - c[14])),
      -Wx2 * s[1] - Wx3 * s[2] + c[15],
  };
}

}  // namespace

State sensitivity_derivatives(const State& x, const State& s, double v, const Params& p) {
  State dx, ds;
  joint_derivatives(x, s, v, p, dx, ds);
  return ds;
}

Outputs outputs(const State& x, double v, const Params& p) {
  if (!(v > 0.0)) throw DomainError("stack current must be positive");
  require_domain(x, p);
  const auto& c = p.derived.c;
  return {c[17] * (x[2] - x[0]) / (c[16] * v), p.map.flow(x[1], x[2], p.prim.p_atm), x[2]};
}

std::array<double, 3> constraints(const Outputs& y, const Params& p) {
  const double pi = y.p_sm / p.prim.p_atm;
  return {pi - 50.0 * y.W_cp + 0.1, 15.27 * y.W_cp + 0.6 - pi, 1.9 - y.lambda_o2};
}

std::array<double, 3> output_sensitivities(const State& x, const State& s, double v_n,
                                           const Params& p) {
  if (!(v_n > 0.0)) throw DomainError("nominal current must be positive");
  const auto& c = p.derived.c;
  double Wx2, Wx3;
  p.map.partials(x[1], x[2], p.prim.p_atm, Wx2, Wx3);
  const double k = c[17] / (c[16] * v_n);
  return {-k * s[0] + k * s[2] - c[17] * (x[2] - x[0]) / (c[16] * v_n * v_n),
          Wx2 * s[1] + Wx3 * s[2], s[2]};
}

State to_state(const Vec& x) { return {x(0), x(1), x(2), x(3)}; }

Vec to_vec(const State& s) {
  Vec v(4);
  v << s[0], s[1], s[2], s[3];
  return v;
}

FcPlant::FcPlant(Params params) : p_(std::move(params)) {}

namespace {

State axpy(const State& x, double h, const State& k) {
  return {x[0] + h * k[0], x[1] + h * k[1], x[2] + h * k[2], x[3] + h * k[3]};
}

State rk4_combine(const State& x, double h, const State& k1, const State& k2, const State& k3,
                  const State& k4) {
  State out;
  for (int i = 0; i < 4; ++i) out[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  return out;
}

}  // namespace

Vec FcPlant::step(const Vec& xv, double v) const {
  State x = to_state(xv);
  const double h = p_.dt / p_.n_sub;
  for (int i = 0; i < p_.n_sub; ++i) {
    const State k1 = derivatives(x, v, p_);
    const State k2 = derivatives(axpy(x, 0.5 * h, k1), v, p_);
    const State k3 = derivatives(axpy(x, 0.5 * h, k2), v, p_);
    const State k4 = derivatives(axpy(x, h, k3), v, p_);
    x = rk4_combine(x, h, k1, k2, k3, k4);
  }
  return to_vec(x);
}

void FcPlant::step_sensitivity(const Vec& xv, const Vec& sv, double v, Vec& x_next,
                               Vec& sx_next) const {
  State x = to_state(xv), s = to_state(sv);
  const double h = p_.dt / p_.n_sub;
  for (int i = 0; i < p_.n_sub; ++i) {
    State k1, l1, k2, l2, k3, l3, k4, l4;
    joint_derivatives(x, s, v, p_, k1, l1);
    joint_derivatives(axpy(x, 0.5 * h, k1), axpy(s, 0.5 * h, l1), v, p_, k2, l2);
    joint_derivatives(axpy(x, 0.5 * h, k2), axpy(s, 0.5 * h, l2), v, p_, k3, l3);
    joint_derivatives(axpy(x, h, k3), axpy(s, h, l3), v, p_, k4, l4);
    x = rk4_combine(x, h, k1, k2, k3, k4);
    s = rk4_combine(s, h, l1, l2, l3, l4);
  }
  x_next = to_vec(x);
  sx_next = to_vec(s);
}

Vec FcPlant::output(const Vec& x, double v) const {
  const auto m = constraints(outputs(to_state(x), v, p_), p_);
  Vec y(3);
  y << m[0], m[1], m[2];
  return y;
}

Vec FcPlant::output_sensitivity(const Vec& x, const Vec& sx, double v) const {
  const auto s = output_sensitivities(to_state(x), to_state(sx), v, p_);
  const double pa = p_.prim.p_atm;
  Vec y(3);
  y << s[2] / pa - 50.0 * s[1], 15.27 * s[1] - s[2] / pa, -s[0];
  return y;
}

Vec FcPlant::equilibrium_guess(double v) const {
  const auto& c = p_.derived.c;
  const auto& mu = p_.derived.mu;
  const auto& g = p_.gains;
  const double W = c[15] * v;
  const double D = W / c[14];
  const double x1 = (mu[2] * D - mu[4] * v + mu[3]) / (mu[1] - mu[2]);
  const double x3 = x1 + D;
  const auto& m = p_.map;
  const double q = x3 / p_.prim.p_atm - 1.0;
  const double k0 = m.a0 + (m.b1 + m.b2 * q) * q - W;
  double s = m.a2 != 0.0 ? (-m.a1 + std::sqrt(std::max(0.0, m.a1 * m.a1 - 4.0 * m.a2 * k0))) /
                               (2.0 * m.a2)
                         : -k0 / m.a1;
  const double omega = s * m.speed_scale;
  const double pr = std::pow(x3 / c[8], c[9]) - 1.0;
  const double x4 = ((c[6] * omega + c[7] / omega * pr * W) / c[10] - g.g1 * v - g.g2) / g.ki;
  Vec x(4);
  x << x1, omega, x3, x4;
  return x;
}

std::string FcPlant::state_name(int i) const {
  static const char* names[] = {"p_ca", "w_cp", "p_sm", "x4"};
  return names[i];
}

std::string FcPlant::output_name(int i) const {
  static const char* names[] = {"surge", "choke", "oer"};
  return names[i];
}

std::vector<QuadraticConstraint> mnnrg_constraints(const SensitivityTrajectory& sens,
                                                   double mbar_lambda, double mbar_surge_pa,
                                                   double v_prev, double r, const Params& p) {
  const double pa = p.prim.p_atm;
  const size_t n = sens.base.states.size();
  std::vector<QuadraticConstraint> rows;
  rows.reserve(2 * n);
  std::vector<Outputs> y(n);
  std::vector<std::array<double, 3>> s(n);
  for (size_t j = 0; j < n; ++j) {
    const State x = to_state(sens.base.states[j]);
    y[j] = outputs(x, sens.v_n, p);
    s[j] = output_sensitivities(x, to_state(sens.sx[j]), sens.v_n, p);
  }
  for (size_t j = 0; j < n; ++j)
    rows.push_back(taylor_constraint(1.9 - y[j].lambda_o2, -s[j][0], mbar_lambda, 0.0, v_prev,
                                     sens.v_n, r));
  for (size_t j = 0; j < n; ++j)
    rows.push_back(taylor_constraint(y[j].p_sm - 50.0 * pa * y[j].W_cp + 0.1 * pa,
                                     s[j][2] - 50.0 * pa * s[j][1], mbar_surge_pa, 0.0, v_prev,
                                     sens.v_n, r));
  return rows;
}

void write_run_header(std::ostream& os) {
  os << "t,I_d,I_st,p_ca,w_cp,p_sm,x4,lambda_o2,W_cp,surge,choke,oer\n";
}

void write_run_row(std::ostream& os, double t, double I_d, double I_st, const Vec& x,
                   const Params& p) {
  const Outputs y = outputs(to_state(x), I_st, p);
  const auto m = constraints(y, p);
  write_csv_row(os, {t, I_d, I_st, x(0), x(1), x(2), x(3), y.lambda_o2, y.W_cp, m[0], m[1], m[2]});
}

}  // namespace refgov::fc
