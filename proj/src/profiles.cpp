#include "refgov/profiles.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "refgov/error.hpp"

namespace refgov {

double Profile::min() const { return *std::min_element(r.begin(), r.end()); }
double Profile::max() const { return *std::max_element(r.begin(), r.end()); }

namespace {

int sample_count(double dt, double duration) {
  if (!(dt > 0.0) || !(duration > 0.0)) throw ConfigError("profile needs dt > 0 and duration > 0");
  return static_cast<int>(std::lround(duration / dt));
}

void check_knots(const std::vector<double>& times, const std::vector<double>& levels) {
  if (times.empty() || times.size() != levels.size())
    throw ConfigError("profile times and levels must be non-empty and equally long");
  if (!std::is_sorted(times.begin(), times.end()))
    throw ConfigError("profile times must be increasing");
}

}  // namespace

Profile step_profile(std::string id, double dt, double duration, const std::vector<double>& times,
                     const std::vector<double>& levels) {
  check_knots(times, levels);
  Profile p{std::move(id), dt, std::vector<double>(sample_count(dt, duration))};
  size_t i = 0;
  for (int k = 0; k < p.size(); ++k) {
    // Compare on the sample grid so knots at multiples of dt land exactly.
    while (i + 1 < times.size() && k >= std::lround(times[i + 1] / dt)) ++i;
    p.r[k] = levels[i];
  }
  return p;
}

Profile ramp_profile(std::string id, double dt, double duration, const std::vector<double>& times,
                     const std::vector<double>& levels) {
  check_knots(times, levels);
  Profile p{std::move(id), dt, std::vector<double>(sample_count(dt, duration))};
  size_t i = 0;
  for (int k = 0; k < p.size(); ++k) {
    const double t = k * dt;
    while (i + 1 < times.size() && t >= times[i + 1]) ++i;
    if (i + 1 == times.size() || t <= times[0]) {
      p.r[k] = t <= times[0] ? levels[0] : levels.back();
    } else {
      const double w = (t - times[i]) / (times[i + 1] - times[i]);
      p.r[k] = levels[i] + w * (levels[i + 1] - levels[i]);
    }
  }
  return p;
}

Profile random_step_profile(std::string id, double dt, int samples, double lo, double hi,
                            double hold_min, double hold_max, std::uint64_t seed) {
  if (samples < 1 || !(hi >= lo) || !(hold_max >= hold_min) || !(hold_min > 0.0))
    throw ConfigError("invalid random step profile settings");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> level(lo, hi), hold(hold_min, hold_max);
  Profile p{std::move(id), dt, std::vector<double>(samples)};
  int k = 0;
  while (k < samples) {
    const double value = level(rng);
    const int n = std::max(1, static_cast<int>(std::lround(hold(rng) / dt)));
    for (int i = 0; i < n && k < samples; ++i) p.r[k++] = value;
  }
  return p;
}

}  // namespace refgov
