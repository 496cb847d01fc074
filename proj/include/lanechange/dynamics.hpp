#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/idm.hpp"
#include "lanechange/random.hpp"
#include "lanechange/safety.hpp"
#include "lanechange/scene.hpp"

namespace lanechange {

enum class LaneIntent : int { Right = -1, Stay = 0, Left = 1 };

constexpr int direction(LaneIntent i) noexcept { return static_cast<int>(i); }

/// IDM acceleration of vehicle `i` behind vehicle `leader` (-1: free road).
inline double accel_behind(const Scene& s, int i, int leader, const SimConfig& cfg) {
  const auto& v = s.vehicles[i];
  if (leader < 0) return idm_acceleration(v.theta, v.q.xdot, 0.0, kNoLeaderGap, cfg.b_max);
  const auto& l = s.vehicles[leader].q;
  return idm_acceleration(v.theta, v.q.xdot, v.q.xdot - l.xdot,
                          geometry::gap(l.x, v.q.x, cfg.car_length), cfg.b_max);
}

/// IDM acceleration of vehicle `i` with its actual leader, optionally
/// pretending vehicle `skip` is absent.
inline double idm_for(const Scene& s, int i, const SimConfig& cfg, int skip = -1) {
  const auto& q = s.vehicles[i].q;
  return accel_behind(s, i, find_leader(s, q.x, q.y, i, skip), cfg);
}

struct MobilEvaluation {
  bool admissible = false;  ///< gaps positive and safety criterion met
  double incentive = -std::numeric_limits<double>::infinity();
  double new_follower_accel = std::numeric_limits<double>::infinity();
};

/// MOBIL evaluation of vehicle `i` moving one lane in direction `dir`.
inline MobilEvaluation mobil_evaluate(const Scene& s, int i, int dir, const SimConfig& cfg) {
  MobilEvaluation out;
  const auto& c = s.vehicles[i];
  const int lane = geometry::lane_of(c.q.y) + dir;
  if (lane < 1 || lane > s.n_lanes) return out;

  // Nobody may sit alongside in the target lane.
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    if (j == i) continue;
    const auto& q = s.vehicles[j].q;
    if (geometry::lateral_overlap(q.y, lane) && std::abs(q.x - c.q.x) < cfg.car_length)
      return out;
  }

  const int new_leader = find_leader(s, c.q.x, lane, i);
  const int new_follower = find_follower(s, c.q.x, lane, i);

  const double acc_c = idm_for(s, i, cfg);
  const double acc_c_new = accel_behind(s, i, new_leader, cfg);

  double gain_n = 0.0;
  if (new_follower >= 0) {
    const auto& nq = s.vehicles[new_follower].q;
    const double acc_n = idm_for(s, new_follower, cfg);
    // With c inserted, the new follower's leader is whichever is nearer.
    const int actual = find_leader(s, nq.x, nq.y, new_follower);
    const int lead_after =
        (actual >= 0 && s.vehicles[actual].q.x < c.q.x) ? actual : i;
    const double acc_n_new = accel_behind(s, new_follower, lead_after, cfg);
    out.new_follower_accel = acc_n_new;
    if (acc_n_new < -c.theta.safe_decel) return out;
    gain_n = acc_n_new - acc_n;
  }

  double gain_o = 0.0;
  const int old_follower = find_follower(s, c.q.x, c.q.y, i);
  if (old_follower >= 0) {
    const double acc_o = idm_for(s, old_follower, cfg);
    const double acc_o_new = idm_for(s, old_follower, cfg, i);
    gain_o = acc_o_new - acc_o;
  }

  out.admissible = true;
  out.incentive = (acc_c_new - acc_c) + c.theta.politeness * (gain_n + gain_o);
  return out;
}

/// MOBIL lane-change decision for vehicle index `i` (not mid-change).
/// Both sides qualifying: larger incentive wins, exact ties go left.
inline LaneIntent mobil_decision(const Scene& s, int i, const SimConfig& cfg) {
  const auto& c = s.vehicles[i];
  if (c.q.ydot != 0.0) return LaneIntent::Stay;
  const auto left = mobil_evaluate(s, i, +1, cfg);
  const auto right = mobil_evaluate(s, i, -1, cfg);
  const double thr = c.theta.accel_threshold;
  const bool left_ok = left.admissible && left.incentive > thr;
  const bool right_ok = right.admissible && right.incentive > thr;
  if (left_ok && right_ok) return right.incentive > left.incentive ? LaneIntent::Right : LaneIntent::Left;
  if (left_ok) return LaneIntent::Left;
  if (right_ok) return LaneIntent::Right;
  return LaneIntent::Stay;
}

inline LaneIntent mobil_decision_by_id(const Scene& s, VehicleId id, const SimConfig& cfg) {
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (s.vehicles[i].id == id) return mobil_decision(s, i, cfg);
  return LaneIntent::Stay;
}

/// Cancels the rear of any two simultaneous onsets into the same lane when
/// the front one lies within the rear one's desired gap. `intents` is indexed
/// like s.vehicles; entries for vehicles already mid-change are ignored.
inline std::vector<LaneIntent> resolve_lane_coordination(std::vector<LaneIntent> intents,
                                                         const Scene& s, const SimConfig& cfg) {
  std::vector<int> starters;
  for (int i = 0; i < static_cast<int>(s.size()); ++i)
    if (intents[i] != LaneIntent::Stay && s.vehicles[i].q.ydot == 0.0) starters.push_back(i);
  std::stable_sort(starters.begin(), starters.end(), [&](int a, int b) {
    return s.vehicles[a].q.x > s.vehicles[b].q.x;
  });
  std::vector<int> kept;
  for (int r : starters) {
    const auto& rv = s.vehicles[r];
    const int target = geometry::lane_of(rv.q.y) + direction(intents[r]);
    bool cancel = false;
    for (int f : kept) {
      const auto& fv = s.vehicles[f];
      if (geometry::lane_of(fv.q.y) + direction(intents[f]) != target) continue;
      const double g = geometry::gap(fv.q.x, rv.q.x, cfg.car_length);
      if (g < desired_gap(rv.theta, rv.q.xdot, rv.q.xdot - fv.q.xdot)) {
        cancel = true;
        break;
      }
    }
    if (cancel) {
      intents[r] = LaneIntent::Stay;
    } else {
      kept.push_back(r);
    }
  }
  return intents;
}

/// Ego control for one step: longitudinal acceleration and lateral direction.
struct EgoCommand {
  double accel = 0.0;
  int lateral = 0;
};

struct StepStats {
  int noise_clamps = 0;          ///< vehicles whose noise was scaled down
  int canceled_lane_changes = 0;  ///< onsets canceled to avoid overlap
  int braking_overrides = 0;      ///< vehicles forced to b_max to avoid overlap
  int forced_separations = 0;     ///< last-resort position corrections
  int coordination_cancels = 0;

  StepStats& operator+=(const StepStats& o) {
    noise_clamps += o.noise_clamps;
    canceled_lane_changes += o.canceled_lane_changes;
    braking_overrides += o.braking_overrides;
    forced_separations += o.forced_separations;
    coordination_cancels += o.coordination_cancels;
    return *this;
  }
};

namespace detail {

struct Plan {
  double idm = 0.0;
  double noise = 0.0;        ///< w
  double noise_scale = 1.0;  ///< shrink factor applied to w
  bool max_braking = false;
  bool started = false;      ///< lane change begins this step
  double ydot = 0.0;
};

inline double planned_accel(const Plan& p, const SimConfig& cfg, bool is_ego, double ego_accel) {
  if (is_ego) return ego_accel;
  if (p.max_braking) return -cfg.b_max;
  return std::max(-cfg.b_max, p.idm + cfg.sigma_vel / cfg.dt * p.noise * p.noise_scale);
}

}  // namespace detail

/// Deterministic part of the transition: driver decisions, coordination,
/// noisy accelerations with overlap prevention, kinematics, and removal of
/// vehicles outside the modeled road (unless `remove_out_of_range` is false,
/// which keeps vehicle order aligned with `s`). No spawning.
///
/// `noise` holds one standard-normal draw per non-ego vehicle, in scene order.
inline Scene advance(const Scene& s, EgoCommand ego, std::span<const double> noise,
                     const SimConfig& cfg, StepStats* stats = nullptr,
                     bool remove_out_of_range = true) {
  const int n = static_cast<int>(s.size());
  StepStats local;
  std::vector<detail::Plan> plan(n);
  std::vector<LaneIntent> intents(n, LaneIntent::Stay);

  const double lc = cfg.lane_change_rate;
  for (int i = 0; i < n; ++i) {
    const auto& q = s.vehicles[i].q;
    if (i == 0) {
      intents[0] = q.ydot == 0.0 ? static_cast<LaneIntent>(ego.lateral) : LaneIntent::Stay;
      continue;
    }
    plan[i].idm = idm_for(s, i, cfg);
    plan[i].noise = noise[i - 1];
    if (q.ydot == 0.0) intents[i] = mobil_decision(s, i, cfg);
  }
  const auto resolved = resolve_lane_coordination(intents, s, cfg);
  for (int i = 0; i < n; ++i) {
    const auto& q = s.vehicles[i].q;
    if (resolved[i] != intents[i]) ++local.coordination_cancels;
    if (q.ydot != 0.0) {
      plan[i].ydot = q.ydot;
    } else if (resolved[i] != LaneIntent::Stay) {
      plan[i].started = true;
      plan[i].ydot = direction(resolved[i]) * lc;
    }
  }

  auto propagate = [&](int i) {
    return step_kinematics(s.vehicles[i].q, detail::planned_accel(plan[i], cfg, i == 0, ego.accel),
                           plan[i].ydot, cfg.dt);
  };
  std::vector<PhysicalState> next(n);
  for (int i = 0; i < n; ++i) next[i] = propagate(i);

  auto conflict = [&](int i, int j) {
    if (!geometry::lateral_overlap(next[i].y, next[j].y)) return false;
    if (std::abs(next[i].x - next[j].x) < cfg.car_length - geometry::kEps) return true;
    const auto& a = s.vehicles[i].q;
    const auto& b = s.vehicles[j].q;
    // Passing through each other within one step while sharing a lane.
    return geometry::lateral_overlap(a.y, b.y) && ((a.x - b.x) * (next[i].x - next[j].x) < 0.0);
  };

  std::vector<bool> clamped(n, false);
  const int max_rounds = 8 * n * n + 16;
  for (int round = 0; round < max_rounds; ++round) {
    int ci = -1, cj = -1;
    for (int i = 0; i < n && ci < 0; ++i)
      for (int j = i + 1; j < n; ++j)
        if (conflict(i, j)) {
          ci = i;
          cj = j;
          break;
        }
    if (ci < 0) break;

    const auto& qi = s.vehicles[ci].q;
    const auto& qj = s.vehicles[cj].q;
    const bool i_rear = qi.x < qj.x || (qi.x == qj.x && next[ci].x <= next[cj].x);
    const int rear = i_rear ? ci : cj;
    const int front = i_rear ? cj : ci;
    auto& rp = plan[rear];

    // 1. Shrink the rear car's noise towards zero, keeping its sign.
    if (rear != 0 && !rp.max_braking && rp.noise > 0.0 && rp.noise_scale > 0.0) {
      auto gap_at = [&](double scale) {
        detail::Plan trial = rp;
        trial.noise_scale = scale;
        const auto q = step_kinematics(s.vehicles[rear].q, detail::planned_accel(trial, cfg, false, 0.0),
                                       rp.ydot, cfg.dt);
        return geometry::gap(next[front].x, q.x, cfg.car_length);
      };
      double lo = 0.0, hi = rp.noise_scale;
      if (gap_at(lo) >= 0.0) {
        for (int it = 0; it < cfg.noise_clamp_iterations; ++it) {
          const double mid = 0.5 * (lo + hi);
          (gap_at(mid) >= 0.0 ? lo : hi) = mid;
        }
      }
      rp.noise_scale = lo;
      if (!clamped[rear]) ++local.noise_clamps;
      clamped[rear] = true;
      next[rear] = propagate(rear);
      continue;
    }
    // 2. Cancel a lane change that began this step (non-ego first).
    int cancel = -1;
    if (plan[rear].started && rear != 0) cancel = rear;
    else if (plan[front].started && front != 0) cancel = front;
    if (cancel >= 0) {
      plan[cancel].started = false;
      plan[cancel].ydot = 0.0;
      next[cancel] = propagate(cancel);
      ++local.canceled_lane_changes;
      continue;
    }
    // 3. Full braking for the rear car.
    if (rear != 0 && !rp.max_braking) {
      rp.max_braking = true;
      next[rear] = propagate(rear);
      ++local.braking_overrides;
      continue;
    }
    // 4. The ego's own onset.
    if (plan[0].started && (rear == 0 || front == 0)) {
      plan[0].started = false;
      plan[0].ydot = 0.0;
      next[0] = propagate(0);
      ++local.canceled_lane_changes;
      continue;
    }
    // 5. Last resort: put the non-ego car of the pair just clear of the other.
    if (rear != 0) {
      next[rear].x = std::min(next[rear].x, next[front].x - cfg.car_length);
      next[rear].xdot = std::min(next[rear].xdot, next[front].xdot);
    } else {
      next[front].x = std::max(next[front].x, next[rear].x + cfg.car_length);
    }
    ++local.forced_separations;
  }

  Scene out;
  out.n_lanes = s.n_lanes;
  out.next_id = s.next_id;
  out.vehicles.clear();
  out.vehicles.reserve(cfg.max_vehicles);
  const double ego_x = next[0].x;
  for (int i = 0; i < n; ++i) {
    if (remove_out_of_range && i > 0 && std::abs(next[i].x - ego_x) > cfg.road_half_length)
      continue;
    Vehicle v = s.vehicles[i];
    v.q = next[i];
    if (v.q.ydot != 0.0) {
      v.lc_target = geometry::lane_change_target(v.q.y, v.q.ydot);
    } else {
      v.lc_target.reset();
    }
    out.vehicles.push_back(v);
  }
  if (stats) *stats += local;
  return out;
}

/// Vehicle entry at the edge of the modeled road section.
inline void spawn_vehicle(Scene& s, const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg) {
  if (s.size() >= cfg.max_vehicles) return;
  const BehaviorParams theta = prior.sample(rng);
  const double speed = std::max(0.0, theta.desired_speed + cfg.sigma_vel * standard_normal(rng));
  const auto& ego = s.ego();
  const bool at_rear = speed > ego.xdot;
  const double x_new = at_rear ? ego.x - cfg.road_half_length : ego.x + cfg.road_half_length;

  int best_lane = -1;
  double best_clearance = -std::numeric_limits<double>::infinity();
  double best_required = 0.0;
  for (int lane = 1; lane <= s.n_lanes; ++lane) {
    double clearance = std::numeric_limits<double>::infinity();
    double required = 0.0;
    const int near = at_rear ? find_leader(s, x_new - geometry::kEps, lane, -1)
                             : find_follower(s, x_new + geometry::kEps, lane, -1);
    if (near >= 0) {
      const auto& nv = s.vehicles[near];
      if (at_rear) {
        clearance = geometry::gap(nv.q.x, x_new, cfg.car_length);
        required = desired_gap(theta, speed, speed - nv.q.xdot);
      } else {
        clearance = geometry::gap(x_new, nv.q.x, cfg.car_length);
        required = desired_gap(nv.theta, nv.q.xdot, nv.q.xdot - speed);
      }
    }
    if (clearance > best_clearance) {
      best_clearance = clearance;
      best_lane = lane;
      best_required = required;
    }
  }
  if (best_lane < 0 || !(best_clearance > best_required)) return;
  s.add(PhysicalState{x_new, static_cast<double>(best_lane), speed, 0.0}, theta);
}

inline std::vector<double> draw_noise(const Scene& s, Rng& rng) {
  std::vector<double> w(s.size() - 1);
  for (auto& x : w) x = standard_normal(rng);
  return w;
}

/// Starting scene: the ego alone in lane 1 at the Normal desired speed, then
/// `cfg.initial_steps` steps of traffic while the ego keeps its lane under
/// IDM with Normal parameters (capped by its safe acceleration).
inline Scene initial_scene(const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg,
                           StepStats* stats = nullptr) {
  Scene s;
  s.n_lanes = cfg.n_lanes;
  s.ego() = PhysicalState{0.0, 1.0, driver_types::kNormal.desired_speed, 0.0};
  for (int step = 0; step < cfg.initial_steps; ++step) {
    const double a = std::clamp(std::min(idm_for(s, 0, cfg), max_safe_accel(s, 0, cfg)),
                                -cfg.b_max, driver_types::kNormal.max_accel);
    const auto w = draw_noise(s, rng);
    s = advance(s, EgoCommand{a, 0}, w, cfg, stats);
    spawn_vehicle(s, prior, rng, cfg);
  }
  return s;
}

}  // namespace lanechange
