#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace refgov {

/// Sampled reference r(k), k = 0..size-1, at spacing dt.
struct Profile {
  std::string id;
  double dt = 0.01;
  std::vector<double> r;

  int size() const { return static_cast<int>(r.size()); }
  double time(int k) const { return k * dt; }
  double min() const;
  double max() const;
};

/// Piecewise-constant: level[i] holds from times[i] until times[i+1].
Profile step_profile(std::string id, double dt, double duration, const std::vector<double>& times,
                     const std::vector<double>& levels);

/// Piecewise-linear through (times[i], levels[i]); flat after the last knot.
Profile ramp_profile(std::string id, double dt, double duration, const std::vector<double>& times,
                     const std::vector<double>& levels);

/// Random steps uniform in [lo, hi] with hold times uniform in [hold_min, hold_max].
Profile random_step_profile(std::string id, double dt, int samples, double lo, double hi,
                            double hold_min, double hold_max, std::uint64_t seed);

}  // namespace refgov
