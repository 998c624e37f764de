#pragma once

// Data-parallel kernels.  Every kernel has a serial reference and an OpenMP
// version that must return identical results; tests compare the two.

#include <algorithm>
#include <limits>
#include <span>
#include <vector>

namespace refgov {

struct QuadraticConstraint;

struct ArgMax {
  double value = -std::numeric_limits<double>::infinity();
  int index = -1;
};

/// max_k c_k(kappa) with the lowest index winning ties.
ArgMax max_constraint_serial(std::span<const QuadraticConstraint> cs, double kappa);
ArgMax max_constraint_parallel(std::span<const QuadraticConstraint> cs, double kappa);

/// Parallel kernel above this size, serial below (thread start-up dominates
/// short lists).
inline constexpr size_t kParallelConstraintThreshold = 4096;
ArgMax max_constraint(std::span<const QuadraticConstraint> cs, double kappa);

/// Per-column maximum of a table produced row by row: `row(t, out)` fills
/// `out` (size n_cols) for t in [0, n_rows).  Ties keep the lowest row.
struct ColumnArgMax {
  std::vector<double> value;
  std::vector<int> row;
};

template <class RowFn>
ColumnArgMax column_argmax_serial(int n_rows, int n_cols, RowFn&& row) {
  ColumnArgMax r{std::vector<double>(n_cols, -std::numeric_limits<double>::infinity()),
                 std::vector<int>(n_cols, -1)};
  std::vector<double> buf(n_cols);
  for (int t = 0; t < n_rows; ++t) {
    row(t, buf);
    for (int c = 0; c < n_cols; ++c)
      if (buf[c] > r.value[c]) {
        r.value[c] = buf[c];
        r.row[c] = t;
      }
  }
  return r;
}

template <class RowFn>
ColumnArgMax column_argmax_parallel(int n_rows, int n_cols, RowFn&& row) {
  ColumnArgMax r{std::vector<double>(n_cols, -std::numeric_limits<double>::infinity()),
                 std::vector<int>(n_cols, -1)};
#pragma omp parallel
  {
    ColumnArgMax local{std::vector<double>(n_cols, -std::numeric_limits<double>::infinity()),
                       std::vector<int>(n_cols, -1)};
    std::vector<double> buf(n_cols);
#pragma omp for schedule(dynamic, 4) nowait
    for (int t = 0; t < n_rows; ++t) {
      row(t, buf);
      for (int c = 0; c < n_cols; ++c)
        if (buf[c] > local.value[c]) {
          local.value[c] = buf[c];
          local.row[c] = t;
        }
    }
#pragma omp critical(refgov_column_argmax)
    for (int c = 0; c < n_cols; ++c) {
      const bool better = local.value[c] > r.value[c] ||
                          (local.value[c] == r.value[c] && local.row[c] >= 0 &&
                           (r.row[c] < 0 || local.row[c] < r.row[c]));
      if (better) {
        r.value[c] = local.value[c];
        r.row[c] = local.row[c];
      }
    }
  }
  return r;
}

/// Independent jobs 0..n-1 (closed-loop episodes, tuning probes).
template <class Fn>
void for_each_serial(int n, Fn&& fn) {
  for (int i = 0; i < n; ++i) fn(i);
}

template <class Fn>
void for_each_parallel(int n, Fn&& fn) {
#pragma omp parallel for schedule(dynamic, 1)
  for (int i = 0; i < n; ++i) fn(i);
}

}  // namespace refgov
