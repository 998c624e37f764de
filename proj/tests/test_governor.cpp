#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracles.hpp"
#include "refgov/error.hpp"
#include "refgov/governor.hpp"
#include "refgov/test_plants.hpp"

using namespace refgov;

namespace {

Vec scalar(double x) { return Vec::Constant(1, x); }

// Largest kappa in [0, 1] with c(kappa') <= 0 on [0, kappa], for a single
// convex constraint with c(0) <= 0, by plain bisection on the sign.
double convex_limit(const QuadraticConstraint& c) {
  if (c.eval(1.0) <= 0.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (c.eval(mid) <= 0.0 ? lo : hi) = mid;
  }
  return lo;
}

}  // namespace

TEST_CASE("rg_update") {
  GovernorState s{0.0};
  CHECK(rg_update(s, 2.0, 0.5) == 1.0);
  CHECK(s.v_prev == 1.0);
  CHECK(rg_update(s, 0.1 + 0.2, 1.0) == 0.1 + 0.2);  // kappa = 1 returns r exactly
  CHECK(rg_update(s, -4.0, 0.0) == 0.1 + 0.2);
  CHECK_THROWS_AS(rg_update(s, 1.0, 1.5), ContractViolation);
  CHECK_THROWS_AS(rg_update(s, 1.0, -0.1), ContractViolation);
  CHECK_THROWS_AS(rg_update(s, 1.0, std::nan("")), ContractViolation);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-10.0, 10.0), K(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    GovernorState t{U(rng)};
    const double v0 = t.v_prev, r = U(rng);
    const double v = rg_update(t, r, K(rng));
    CHECK(v >= std::min(v0, r));
    CHECK(v <= std::max(v0, r));
  }
}

TEST_CASE("dynamic_saturation") {
  const GovernorState s{1.0};
  auto check = [&](double raw, double r, double k, double vn) {
    const auto out = dynamic_saturation(raw, s, r);
    CHECK(out.kappa_nn == doctest::Approx(k).epsilon(1e-15));
    CHECK(out.v_n == doctest::Approx(vn).epsilon(1e-15));
  };
  check(2.0, 3.0, 0.5, 2.0);
  check(5.0, 3.0, 1.0, 3.0);
  check(-1.0, 3.0, 0.0, 1.0);
  check(0.0, -1.0, 0.5, 0.0);
  check(7.0, 1.0, 0.0, 1.0);  // r == v_prev
}

TEST_CASE("taylor_constraint matches direct evaluation of the quadratic bound") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(-2.0, 2.0), M(0.0, 3.0), K(0.0, 1.0);
  for (int i = 0; i < 500; ++i) {
    const double yn = U(rng), s = U(rng), mbar = M(rng), off = M(rng);
    const double vp = U(rng), vn = U(rng), r = U(rng), k = K(rng);
    const auto c = taylor_constraint(yn, s, mbar, off, vp, vn, r);
    const double v = vp + k * (r - vp);
    const double direct = yn + s * (v - vn) + 0.5 * mbar * (v - vn) * (v - vn) + off;
    CHECK(std::abs(c.eval(k) - direct) < 1e-12 * (1.0 + std::abs(direct)) + 1e-12);
  }
}

TEST_CASE("solve_kappa_explicit against per-constraint bisection") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> A2(0.0, 5.0), A1(-5.0, 5.0), A0(-2.0, 0.0);
  std::uniform_int_distribution<int> N(1, 20);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<QuadraticConstraint> cs(N(rng));
    for (auto& c : cs) c = {trial % 3 == 0 ? 0.0 : A2(rng), A1(rng), A0(rng)};
    double expect = 1.0;
    for (const auto& c : cs) expect = std::min(expect, convex_limit(c));
    const KappaSolution got = solve_kappa_explicit(cs);
    CHECK(std::abs(got.kappa - expect) < 1e-12);
    if (got.kappa < 1.0) {
      REQUIRE(got.active >= 0);
      CHECK(convex_limit(cs[got.active]) == doctest::Approx(got.kappa).epsilon(1e-12));
    } else {
      CHECK(got.active == -1);
    }
  }
}

TEST_CASE("solve_kappa_explicit hand cases") {
  using QC = QuadraticConstraint;
  SUBCASE("kappa = 1 feasible") {
    const std::vector<QC> cs{{1.0, 0.0, -2.0}, {0.0, 0.5, -1.0}};
    CHECK(solve_kappa_explicit(cs).kappa == 1.0);
  }
  SUBCASE("linear row") {
    const std::vector<QC> cs{{0.0, 2.0, -1.0}};
    CHECK(solve_kappa_explicit(cs).kappa == 0.5);
  }
  SUBCASE("quadratic row kappa^2 - 0.25") {
    const std::vector<QC> cs{{1.0, 0.0, -0.25}};
    CHECK(solve_kappa_explicit(cs).kappa == 0.5);
  }
  SUBCASE("infeasible at zero") {
    const std::vector<QC> cs{{0.0, 0.0, 1.0}};
    CHECK(solve_kappa_explicit(cs).kappa == 0.0);
  }
  SUBCASE("negative curvature splits the feasible set") {
    // -k^2 + 0.5 k <= 0 holds on (-inf, 0] and [0.5, inf).
    std::vector<QC> cs{{-1.0, 0.5, 0.0}, {0.0, 1.0, -0.7}};
    CHECK(solve_kappa_explicit(cs).kappa == doctest::Approx(0.7).epsilon(1e-15));
    cs.push_back({0.0, 1.0, -0.3});
    CHECK(solve_kappa_explicit(cs).kappa == 0.0);
  }
  SUBCASE("negative curvature with no real roots is always feasible") {
    const std::vector<QC> cs{{-1.0, 0.0, -1.0}, {0.0, 1.0, -0.4}};
    CHECK(solve_kappa_explicit(cs).kappa == doctest::Approx(0.4).epsilon(1e-15));
  }
  SUBCASE("empty input") {
    CHECK_THROWS_AS(solve_kappa_explicit({}), ContractViolation);
  }
}

TEST_CASE("solve_kappa_bisection lands on the 2^-L grid below the explicit root") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> A2(0.0, 5.0), A1(-5.0, 5.0), A0(-2.0, 0.0);
  for (int L : {1, 4, 10, 15, 20}) {
    for (int trial = 0; trial < 300; ++trial) {
      std::vector<QuadraticConstraint> cs(5);
      for (auto& c : cs) c = {A2(rng), A1(rng), A0(rng)};
      const double exact = solve_kappa_explicit(cs).kappa;
      const KappaSolution b = solve_kappa_bisection(cs, L);
      if (exact == 1.0) {
        CHECK(b.kappa == 1.0);
        continue;
      }
      const double h = std::ldexp(1.0, -L);
      CHECK(b.kappa <= exact);
      CHECK(exact - b.kappa < h * (1.0 + 1e-12));
      CHECK(std::fmod(b.kappa, h) == 0.0);
    }
  }
  CHECK_THROWS_AS(solve_kappa_bisection({}, 10), ContractViolation);
}

TEST_CASE("solve_kappa_bisection honours the extra predicate") {
  const std::vector<QuadraticConstraint> cs{{0.0, 1.0, -0.9}};
  const KappaSolution s = solve_kappa_bisection(cs, 10, [](double k) { return k <= 0.25; });
  CHECK(s.kappa == 0.25);
  CHECK(s.active == KappaSolution::kExtraPredicate);
}

TEST_CASE("prg_step on the toy plant") {
  ToyTanhPlant toy;
  GovernorConfig cfg;
  cfg.L = 16;

  SUBCASE("reachable reference passes with one evaluation") {
    GovernorState s{0.0};
    const PrgResult r = prg_step(toy, scalar(0.0), s, 0.5, cfg);
    CHECK(r.kappa == 1.0);
    CHECK(r.v == 0.5);
    CHECK(r.evaluations == 1);
  }
  SUBCASE("matches the exhaustive grid oracle") {
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> X(-0.8, 0.6), V(-3.0, 0.9), R(-3.0, 3.0);
    for (int trial = 0; trial < 40; ++trial) {
      const double x0 = X(rng);
      const double v_prev = V(rng);
      if (!oracle::toy_admissible(x0, v_prev, cfg.adm.j_star, cfg.adm.epsilon)) continue;
      const double r = R(rng);
      GovernorState s{v_prev};
      const PrgResult got = prg_step(toy, scalar(x0), s, r, cfg);
      const double expect = oracle::grid_kappa(cfg.L - 1, [&](double k) {
        return oracle::toy_admissible(x0, k == 1.0 ? r : v_prev + k * (r - v_prev),
                                      cfg.adm.j_star, cfg.adm.epsilon);
      });
      CHECK(got.kappa == expect);
      CHECK(got.evaluations <= cfg.L);
    }
  }
}

TEST_CASE("linear input gain") {
  const LinearPlant lin = make_linear_test_plant();
  const LinearSystem& sys = lin.system();
  CHECK(linear_input_gain(sys, 0)(0) == 0.0);
  CHECK(std::abs(linear_input_gain(sys, 1)(0)) < 1e-15);
  // Summation oracle: C sum_{i<j} A^i B.
  Eigen::Vector2d acc = Eigen::Vector2d::Zero(), AiB = sys.B;
  for (int j = 1; j <= 60; ++j) {
    acc += AiB;
    AiB = sys.A * AiB;
    CHECK(std::abs(linear_input_gain(sys, j)(0) - acc(0)) < 1e-12);
  }

  LinearSystem integ{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 0.5),
                     Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1),
                     Eigen::VectorXd::Zero(1)};
  CHECK(linear_input_gain(integ, 4)(0) == 2.0);
}

TEST_CASE("linear_rg_step") {
  const LinearPlant lin = make_linear_test_plant();
  GovernorConfig cfg;
  GovernorState s{0.0};
  const auto out = linear_rg_step(lin.system(), Eigen::VectorXd::Zero(2), s, 3.0, cfg);
  // Steady row 0.5 v - 1 + 0.05 <= 0 binds: v = 1.9.
  CHECK(out.v == doctest::Approx(1.9).epsilon(1e-13));
  CHECK(out.kappa == doctest::Approx(1.9 / 3.0).epsilon(1e-13));

  LinearSystem integ{Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Constant(1, 0.5),
                     Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1),
                     Eigen::VectorXd::Zero(1)};
  GovernorState t{0.0};
  CHECK_THROWS_AS(linear_rg_step(integ, Eigen::VectorXd::Zero(1), t, 1.0, cfg), DomainError);
}

TEST_CASE("MNN-RG with zero curvature reproduces the linear RG on a linear plant") {
  const LinearPlant lin = make_linear_test_plant();
  GovernorConfig cfg;
  cfg.solver = SolverMode::explicit_roots;
  cfg.steady = SteadyStateMode::precomputed_interval;
  cfg.admissible_interval = InputInterval{0.0, 1.9};
  const auto bound = RemainderBound::curvature({0.0});
  const NominalSource source = [](const Vec&, double vp, double r) { return vp + 0.3 * (r - vp); };

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> R(0.0, 3.0);
  Vec x = Vec::Zero(2);
  GovernorState a{0.0}, b{0.0};
  double r = 0.0;
  for (int t = 0; t < 200; ++t) {
    if (t % 20 == 0) r = R(rng);
    const auto m = mnnrg_step(lin, x, a, r, source, bound, cfg);
    const auto l = linear_rg_step(lin.system(), Eigen::VectorXd(x), b, r, cfg);
    REQUIRE_FALSE(m.fallback);
    CHECK(std::abs(m.kappa - l.kappa) < 1e-9);
    CHECK(std::abs(m.v - l.v) < 1e-9);
    b.v_prev = a.v_prev;
    x = lin.step(x, m.v);
  }
}

TEST_CASE("constant reference: the command moves monotonically toward r") {
  ToyTanhPlant toy;
  GovernorConfig cfg;
  cfg.adm.j_star = 100;
  const double r = 2.5;

  SUBCASE("PRG") {
    Vec x = scalar(0.0);
    GovernorState s{0.0};
    double gap = r;
    for (int t = 0; t < 60; ++t) {
      const auto out = prg_step(toy, x, s, r, cfg);
      CHECK(std::abs(r - out.v) <= gap);
      gap = std::abs(r - out.v);
      x = toy.step(x, out.v);
    }
  }
  SUBCASE("MNN-RG") {
    const auto bound = RemainderBound::curvature({ToyTanhPlant::curvature_bound()});
    const NominalSource source = [](const Vec&, double vp, double) { return vp; };
    Vec x = scalar(0.0);
    GovernorState s{0.0};
    double gap = r;
    for (int t = 0; t < 60; ++t) {
      const auto d = mnnrg_step(toy, x, s, r, source, bound, cfg);
      REQUIRE_FALSE(d.fallback);
      CHECK(std::abs(r - d.v) <= gap);
      gap = std::abs(r - d.v);
      x = toy.step(x, d.v);
      CHECK(x(0) - 0.8 <= 0.0);
    }
  }
}

TEST_CASE("MNN-RG with a valid curvature bound keeps the toy plant admissible") {
  ToyTanhPlant toy;
  GovernorConfig cfg;
  cfg.adm.j_star = 80;
  const auto bound = RemainderBound::curvature({ToyTanhPlant::curvature_bound()});
  // Deliberately optimistic nominal command: always asks for the reference.
  const NominalSource source = [](const Vec&, double, double r) { return r; };
  for (SolverMode mode : {SolverMode::explicit_roots, SolverMode::bisection}) {
    cfg.solver = mode;
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> R(-3.0, 3.0);
    Vec x = scalar(0.0);
    GovernorState s{0.0};
    double r = 0.0;
    for (int t = 0; t < 150; ++t) {
      if (t % 10 == 0) r = R(rng);
      const auto d = mnnrg_step(toy, x, s, r, source, bound, cfg);
      REQUIRE_FALSE(d.fallback);
      CHECK(oracle::toy_admissible(x(0), d.v, cfg.adm.j_star, cfg.adm.epsilon));
      x = toy.step(x, d.v);
    }
  }
}

TEST_CASE("MNN-RG falls back to the previous command on a bad nominal source") {
  ToyTanhPlant toy;
  GovernorConfig cfg;
  GovernorState s{0.2};
  const auto d = mnnrg_step(toy, scalar(0.0), s, 1.0,
                            [](const Vec&, double, double) { return std::nan(""); },
                            RemainderBound::curvature({1.0}), cfg);
  CHECK(d.fallback);
  CHECK(d.kappa == 0.0);
  CHECK(d.v == 0.2);
  CHECK(s.v_prev == 0.2);
  CHECK_FALSE(d.fallback_cause.empty());
}

TEST_CASE("constraint set layout") {
  ToyTanhPlant toy;
  const auto sens = propagate(toy, scalar(0.0), 0.5, 10);
  const auto set = mnnrg_constraints(sens, RemainderBound::curvature({1.0}), 0.0, 1.0,
                                     InputInterval{-3.0, 1.0});
  REQUIRE(set.rows.size() == 13);
  CHECK(set.row_output[0] == 0);
  CHECK(set.row_step[10] == 10);
  CHECK(set.row_output[11] == 1);
  CHECK(set.row_step[12] == -1);
  // v = kappa: kappa <= 1 and -kappa <= 3.
  CHECK(set.rows[11].eval(1.0) == 0.0);
  CHECK(set.rows[12].eval(0.0) == -3.0);
}
