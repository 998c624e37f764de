#include "refgov/kernels.hpp"

#include "refgov/governor.hpp"

namespace refgov {

ArgMax max_constraint_serial(std::span<const QuadraticConstraint> cs, double kappa) {
  ArgMax best;
  for (size_t k = 0; k < cs.size(); ++k) {
    const double g = cs[k].eval(kappa);
    if (g > best.value || best.index < 0) {
      best.value = g;
      best.index = static_cast<int>(k);
    }
  }
  return best;
}

ArgMax max_constraint_parallel(std::span<const QuadraticConstraint> cs, double kappa) {
  ArgMax best;
  const long n = static_cast<long>(cs.size());
#pragma omp parallel
  {
    ArgMax local;
#pragma omp for schedule(static) nowait
    for (long k = 0; k < n; ++k) {
      const double g = cs[k].eval(kappa);
      if (g > local.value || local.index < 0) {
        local.value = g;
        local.index = static_cast<int>(k);
      }
    }
#pragma omp critical(refgov_max_constraint)
    if (local.index >= 0 &&
        (best.index < 0 || local.value > best.value ||
         (local.value == best.value && local.index < best.index)))
      best = local;
  }
  return best;
}

ArgMax max_constraint(std::span<const QuadraticConstraint> cs, double kappa) {
  return cs.size() >= kParallelConstraintThreshold ? max_constraint_parallel(cs, kappa)
                                                   : max_constraint_serial(cs, kappa);
}

}  // namespace refgov
