#include <algorithm>
#include <cmath>
#include <utility>

#include "refgov/error.hpp"
#include "refgov/governor.hpp"
#include "refgov/kernels.hpp"

namespace refgov {

QuadraticConstraint taylor_constraint(double y_n, double s, double mbar, double offset,
                                      double v_prev, double v_n, double r) {
  const double d = r - v_prev;
  const double delta = v_prev - v_n;
  return {0.5 * mbar * d * d, s * d + mbar * d * delta,
          y_n + s * delta + 0.5 * mbar * delta * delta + offset};
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Real roots of a2 k^2 + a1 k + a0 (a2 != 0), ascending.  Returns false for
// a negative discriminant.  Uses the cancellation-free form q = -(a1 +
// sign(a1) sqrt(disc)) / 2, roots q / a2 and a0 / q.
bool real_roots(const QuadraticConstraint& c, double& lo, double& hi) {
  const double disc = c.a1 * c.a1 - 4.0 * c.a2 * c.a0;
  if (disc < 0.0) return false;
  const double q = -0.5 * (c.a1 + std::copysign(std::sqrt(disc), c.a1));
  const double r1 = q / c.a2;
  const double r2 = q != 0.0 ? c.a0 / q : r1;
  lo = std::min(r1, r2);
  hi = std::max(r1, r2);
  return true;
}

using Interval = std::pair<double, double>;

// Feasible set of one constraint on the real line as a union of at most two
// closed intervals.
std::vector<Interval> feasible_set(const QuadraticConstraint& c) {
  if (c.a2 > 0.0) {
    double lo, hi;
    if (!real_roots(c, lo, hi)) return {};
    return {{lo, hi}};
  }
  if (c.a2 < 0.0) {
    double lo, hi;
    if (!real_roots(c, lo, hi) || lo == hi) return {{-kInf, kInf}};
    return {{-kInf, lo}, {hi, kInf}};
  }
  if (c.a1 > 0.0) return {{-kInf, -c.a0 / c.a1}};
  if (c.a1 < 0.0) return {{-c.a0 / c.a1, kInf}};
  if (c.a0 <= 0.0) return {{-kInf, kInf}};
  return {};
}

// General case (some a2 < 0): intersect unions of intervals with [0, 1].
KappaSolution solve_interval_sets(std::span<const QuadraticConstraint> cs) {
  std::vector<Interval> set{{0.0, 1.0}}, next;
  int active = -1;
  for (size_t k = 0; k < cs.size(); ++k) {
    const auto f = feasible_set(cs[k]);
    next.clear();
    for (const auto& a : set)
      for (const auto& b : f) {
        const double lo = std::max(a.first, b.first), hi = std::min(a.second, b.second);
        if (lo <= hi) next.emplace_back(lo, hi);
      }
    std::sort(next.begin(), next.end());
    if (next.empty()) return {0.0, static_cast<int>(k)};
    if (next.back().second < set.back().second) active = static_cast<int>(k);
    std::swap(set, next);
  }
  return {set.back().second, active};
}

}  // namespace

KappaSolution solve_kappa_explicit(std::span<const QuadraticConstraint> cs) {
  if (cs.empty()) throw ContractViolation("solve_kappa needs at least one constraint");
  for (const auto& c : cs)
    if (c.a2 < 0.0) return solve_interval_sets(cs);

  double k_lo = 0.0, k_hi = 1.0;
  int hi_row = -1, lo_row = -1;
  for (size_t k = 0; k < cs.size(); ++k) {
    const auto& c = cs[k];
    const int row = static_cast<int>(k);
    double lo = -kInf, hi = kInf;
    if (c.a2 > 0.0) {
      if (!real_roots(c, lo, hi)) return {0.0, row};
    } else if (c.a1 > 0.0) {
      hi = -c.a0 / c.a1;
    } else if (c.a1 < 0.0) {
      lo = -c.a0 / c.a1;
    } else if (c.a0 > 0.0) {
      return {0.0, row};
    }
    if (hi < k_hi) {
      k_hi = hi;
      hi_row = row;
    }
    if (lo > k_lo) {
      k_lo = lo;
      lo_row = row;
    }
  }
  if (k_lo <= k_hi) return {k_hi, hi_row};
  return {0.0, hi_row >= 0 ? hi_row : lo_row};
}

KappaSolution solve_kappa_bisection(std::span<const QuadraticConstraint> cs, int L,
                                    const std::function<bool(double)>& extra) {
  if (cs.empty() && !extra) throw ContractViolation("solve_kappa needs at least one constraint");
  if (L < 1) throw ContractViolation("L must be >= 1");
  int blocking = -1;
  auto feasible = [&](double kappa) {
    if (!cs.empty()) {
      const ArgMax m = max_constraint(cs, kappa);
      if (!(m.value <= 0.0)) {
        blocking = m.index;
        return false;
      }
    }
    if (extra && !extra(kappa)) {
      blocking = KappaSolution::kExtraPredicate;
      return false;
    }
    return true;
  };
  if (feasible(1.0)) return {1.0, -1};
  int active = blocking;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < L; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (feasible(mid)) {
      lo = mid;
    } else {
      hi = mid;
      active = blocking;
    }
  }
  return {lo, active};
}

double solve_kappa(std::span<const QuadraticConstraint> cs, const GovernorConfig& cfg) {
  if (cs.empty()) throw ContractViolation("solve_kappa needs at least one constraint");
  return cfg.solver == SolverMode::explicit_roots ? solve_kappa_explicit(cs).kappa
                                                  : solve_kappa_bisection(cs, cfg.L).kappa;
}

}  // namespace refgov
