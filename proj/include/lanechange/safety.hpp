#pragma once

#include <algorithm>
#include <cmath>

#include "lanechange/config.hpp"
#include "lanechange/scene.hpp"

namespace lanechange {

/// One constant-acceleration step; speed is floored at zero and a vehicle
/// that stops mid-step stays where it stopped. A lateral command moves the
/// vehicle towards the next lane center and snaps onto it when crossed.
inline PhysicalState step_kinematics(const PhysicalState& q, double accel, double ydot_cmd,
                                     double dt) {
  PhysicalState n = q;
  const double v_end = q.xdot + accel * dt;
  if (v_end >= 0.0) {
    n.x = q.x + q.xdot * dt + 0.5 * accel * dt * dt;
    n.xdot = v_end;
  } else {
    n.x = q.x + q.xdot * q.xdot / (2.0 * -accel);
    n.xdot = 0.0;
  }
  if (ydot_cmd != 0.0) {
    const int target = geometry::lane_change_target(q.y, ydot_cmd);
    const double y = q.y + ydot_cmd * dt;
    const bool crossed = ydot_cmd > 0 ? y >= target - geometry::kEps : y <= target + geometry::kEps;
    if (crossed) {
      n.y = target;
      n.ydot = 0.0;
    } else {
      n.y = y;
      n.ydot = ydot_cmd;
    }
  } else {
    n.ydot = 0.0;
  }
  return n;
}

/// True if a follower applying `accel` now and braking at b_max afterwards
/// stays behind a leader that brakes at b_max from this step on.
/// `follower_delay` extra steps pass before the follower starts braking, with
/// `accel` held during them.
inline bool stops_behind(const PhysicalState& follower, double accel, const PhysicalState& leader,
                         const SimConfig& cfg, double leader_accel, int follower_delay = 0) {
  PhysicalState f = follower;
  PhysicalState l = leader;
  f.ydot = l.ydot = 0.0;
  const double lead_a = std::max(leader_accel, -cfg.b_max);
  for (int step = 0; step < 10000; ++step) {
    const double fa = step <= follower_delay ? accel : -cfg.b_max;
    const double la = step == 0 ? lead_a : -cfg.b_max;
    f = step_kinematics(f, fa, 0.0, cfg.dt);
    l = step_kinematics(l, la, 0.0, cfg.dt);
    if (geometry::gap(l.x, f.x, cfg.car_length) < -geometry::kEps) return false;
    if (f.xdot <= 0.0 && l.xdot <= 0.0 && step >= follower_delay) return true;
  }
  return true;
}

/// Largest acceleration in [-b_max, a_inc] for which the ego can still stop
/// behind `leader` if the leader brakes at b_max. Bisection against the
/// discrete stopping simulation. Returns -b_max when nothing is feasible.
inline double max_safe_accel_behind(const PhysicalState& ego, const PhysicalState& leader,
                                    const SimConfig& cfg) {
  const double hi_cap = cfg.accel_increment;
  const double lo_cap = -cfg.b_max;
  auto ok = [&](double a) { return stops_behind(ego, a, leader, cfg, -cfg.b_max); };
  if (ok(hi_cap)) return hi_cap;
  if (!ok(lo_cap)) return lo_cap;
  double lo = lo_cap;
  double hi = hi_cap;
  while (hi - lo > cfg.safe_accel_tolerance) {
    const double mid = 0.5 * (lo + hi);
    (ok(mid) ? lo : hi) = mid;
  }
  return lo;
}

/// Maximum permitted ego acceleration given the lateral motion `lateral`
/// (-1, 0, +1) the ego will have this step: the nearest leader overlapping
/// either the current or the next lateral position constrains it.
inline double max_safe_accel(const Scene& s, int lateral, const SimConfig& cfg) {
  const auto& ego = s.ego();
  double result = cfg.accel_increment;
  auto constrain = [&](double y) {
    const int j = find_leader(s, ego.x, y, 0);
    if (j >= 0) result = std::min(result, max_safe_accel_behind(ego, s.vehicles[j].q, cfg));
  };
  constrain(ego.y);
  if (lateral != 0) {
    const auto next = step_kinematics(ego, 0.0, lateral * cfg.lane_change_rate, cfg.dt);
    if (next.y != ego.y) constrain(next.y);
  }
  return result;
}

/// Permitted acceleration for the ego's current lateral motion.
inline double max_safe_accel(const Scene& s, const SimConfig& cfg) {
  const double ydot = s.ego().ydot;
  return max_safe_accel(s, ydot > 0 ? 1 : (ydot < 0 ? -1 : 0), cfg);
}

}  // namespace lanechange
