#pragma once

// Reference evaluations written straight from the model equations, kept
// apart from the library code paths on purpose.

#include <algorithm>
#include <cmath>
#include <limits>

#include "lanechange/behavior.hpp"

namespace oracle {

inline double desired_gap(const lanechange::BehaviorParams& th, double v, double dv) {
  const double s = th.jam_distance + v * th.time_gap + v * dv / (2.0 * std::sqrt(th.max_accel * th.comfort_decel));
  return std::max(th.jam_distance, s);
}

inline double idm_raw(const lanechange::BehaviorParams& th, double v, double dv, double gap) {
  const double free_part = std::pow(v / th.desired_speed, th.exponent);
  const double inter = std::isinf(gap) ? 0.0 : std::pow(oracle::desired_gap(th, v, dv) / gap, 2.0);
  return th.max_accel * (1.0 - free_part - inter);
}

struct Car {
  double x, v;
};

/// One step of constant-acceleration motion with the stop-in-step rule.
inline Car move(Car c, double a, double dt) {
  if (c.v + a * dt < 0.0) return {c.x + c.v * c.v / (-2.0 * a), 0.0};
  return {c.x + c.v * dt + 0.5 * a * dt * dt, c.v + a * dt};
}

/// Whether a follower applying `a` for one step, then braking at b_max,
/// stays behind a leader braking at b_max from the start.
inline bool stays_behind(Car follower, double a, Car leader, double b_max, double dt, double len) {
  for (int k = 0; k < 100000; ++k) {
    follower = move(follower, k == 0 ? a : -b_max, dt);
    leader = move(leader, -b_max, dt);
    if (leader.x - follower.x - len < -1e-9) return false;
    if (follower.v == 0.0 && leader.v == 0.0) return true;
  }
  return true;
}

/// Largest acceleration on a fine grid of [-b_max, cap] that stays behind.
inline double brute_force_max_accel(Car ego, Car leader, double b_max, double cap, double dt,
                                    double len, double resolution = 1e-4) {
  const int n = static_cast<int>(std::round((cap + b_max) / resolution));
  for (int i = n; i >= 0; --i) {
    const double a = -b_max + i * resolution;
    if (stays_behind(ego, a, leader, b_max, dt, len)) return a;
  }
  return -b_max;
}

}  // namespace oracle
