#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "lanechange/behavior.hpp"

namespace lanechange {

inline constexpr double kNoLeaderGap = std::numeric_limits<double>::infinity();

/// IDM desired gap g*(v, dv); never below the jam distance.
inline double desired_gap(const BehaviorParams& theta, double speed, double approach_rate) {
  const double dynamic =
      theta.time_gap * speed +
      speed * approach_rate / (2.0 * std::sqrt(theta.max_accel * theta.comfort_decel));
  return theta.jam_distance + std::max(0.0, dynamic);
}

/// IDM acceleration before the physical braking clamp. `gap` is bumper to
/// bumper; pass kNoLeaderGap (and approach_rate 0) on a free road.
inline double idm_acceleration_raw(const BehaviorParams& theta, double speed,
                                   double approach_rate, double gap) {
  const double r = speed / theta.desired_speed;
  const double free_term = theta.exponent == 4.0 ? (r * r) * (r * r) : std::pow(r, theta.exponent);
  double interaction = 0.0;
  if (std::isfinite(gap)) {
    if (gap <= 0.0) return -std::numeric_limits<double>::infinity();
    const double ratio = desired_gap(theta, speed, approach_rate) / gap;
    interaction = ratio * ratio;
  }
  return theta.max_accel * (1.0 - free_term - interaction);
}

/// IDM acceleration clamped to [-b_max, a].
inline double idm_acceleration(const BehaviorParams& theta, double speed,
                               double approach_rate, double gap, double b_max) {
  return std::clamp(idm_acceleration_raw(theta, speed, approach_rate, gap), -b_max,
                    theta.max_accel);
}

}  // namespace lanechange
