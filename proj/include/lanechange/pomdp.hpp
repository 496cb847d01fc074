#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/dynamics.hpp"
#include "lanechange/random.hpp"
#include "lanechange/safety.hpp"
#include "lanechange/scene.hpp"

namespace lanechange {

/// Ego action: longitudinal acceleration and lateral direction (the lateral
/// velocity is lateral * lane_change_rate).
struct Action {
  double accel = 0.0;
  int lateral = 0;
  bool braking = false;

  [[nodiscard]] double lateral_velocity(const SimConfig& cfg) const {
    return lateral * cfg.lane_change_rate;
  }
  friend bool operator==(const Action&, const Action&) = default;
};

/// Position of an action in the fixed enumeration: slots 0..8 are the
/// {-a_inc, 0, +a_inc} x {right, stay, left} grid (acceleration-major), slot 9
/// the dynamic braking action. Planners search over slots because the braking
/// acceleration depends on the state.
using ActionSlot = std::uint8_t;
inline constexpr ActionSlot kBrakingSlot = 9;
inline constexpr std::size_t kNumSlots = 10;

constexpr int slot_accel_sign(ActionSlot s) { return static_cast<int>(s / 3) - 1; }
constexpr int slot_lateral(ActionSlot s) { return static_cast<int>(s % 3) - 1; }
constexpr ActionSlot grid_slot(int accel_sign, int lateral) {
  return static_cast<ActionSlot>((accel_sign + 1) * 3 + (lateral + 1));
}

/// Physical-only view of a scene.
struct Observation {
  PhysicalState ego;
  std::vector<std::pair<VehicleId, PhysicalState>> others;
  int n_lanes = 4;

  [[nodiscard]] const PhysicalState* find(VehicleId id) const {
    for (const auto& [vid, q] : others)
      if (vid == id) return &q;
    return nullptr;
  }
  friend bool operator==(const Observation&, const Observation&) = default;
};

inline Observation observe(const Scene& s) {
  Observation o;
  o.ego = s.ego();
  o.n_lanes = s.n_lanes;
  o.others.reserve(s.size() - 1);
  for (const auto& v : s.others()) o.others.emplace_back(v.id, v.q);
  return o;
}

/// Rebuilds a scene from physical states plus hypothesized parameters;
/// `theta_of(id)` supplies each car's parameters.
template <typename ThetaFn>
Scene scene_from_observation(const Observation& o, ThetaFn&& theta_of) {
  Scene s;
  s.n_lanes = o.n_lanes;
  s.ego() = o.ego;
  if (o.ego.ydot != 0.0) s.vehicles[0].lc_target = geometry::lane_change_target(o.ego.y, o.ego.ydot);
  VehicleId max_id = 0;
  for (const auto& [id, q] : o.others) {
    Vehicle v{id, q, theta_of(id), std::nullopt};
    if (q.ydot != 0.0) v.lc_target = geometry::lane_change_target(q.y, q.ydot);
    s.vehicles.push_back(v);
    max_id = std::max(max_id, id);
  }
  s.next_id = max_id + 1;
  return s;
}

/// Available actions of one scene, indexed by slot.
struct ActionSet {
  std::array<Action, kNumSlots> actions{};
  std::array<bool, kNumSlots> available{};

  [[nodiscard]] std::vector<ActionSlot> slots() const {
    std::vector<ActionSlot> out;
    for (ActionSlot i = 0; i < kNumSlots; ++i)
      if (available[i]) out.push_back(i);
    return out;
  }
  [[nodiscard]] std::vector<Action> list() const {
    std::vector<Action> out;
    for (std::size_t i = 0; i < kNumSlots; ++i)
      if (available[i]) out.push_back(actions[i]);
    return out;
  }
  [[nodiscard]] bool contains(const Action& a) const {
    for (std::size_t i = 0; i < kNumSlots; ++i)
      if (available[i] && actions[i].lateral == a.lateral &&
          std::abs(actions[i].accel - a.accel) < 1e-12)
        return true;
    return false;
  }
  /// The action for `slot`, or the braking action if that slot is pruned here.
  [[nodiscard]] const Action& resolve(ActionSlot slot) const {
    return available[slot] ? actions[slot] : actions[kBrakingSlot];
  }
};

namespace detail {

/// Whether starting a lane change in direction `dir` is geometrically
/// possible and every car that becomes a new follower can still stop behind
/// the ego if it applies `accel` then brakes.
inline bool lane_change_clear(const Scene& s, int dir, double accel, const SimConfig& cfg) {
  const auto& ego = s.ego();
  const int lane = geometry::lane_of(ego.y) + dir;
  if (lane < 1 || lane > s.n_lanes) return false;
  const auto next = step_kinematics(ego, accel, dir * cfg.lane_change_rate, cfg.dt);
  for (std::size_t j = 1; j < s.size(); ++j) {
    const auto& q = s.vehicles[j].q;
    const bool overlaps_next = geometry::lateral_overlap(q.y, next.y) ||
                               geometry::lateral_overlap(q.y, lane);
    if (!overlaps_next) continue;
    if (std::abs(q.x - ego.x) < cfg.car_length) return false;
    if (q.x < ego.x && !stops_behind(q, cfg.follower_worst_accel, ego, cfg, accel)) return false;
  }
  return true;
}

}  // namespace detail

/// Ego action space at `s` after crash-free pruning. The braking action is
/// always present, so the set is never empty.
inline ActionSet available_action_set(const Scene& s, const SimConfig& cfg) {
  ActionSet set;
  const auto& ego = s.ego();
  const int in_progress = ego.ydot > 0 ? 1 : (ego.ydot < 0 ? -1 : 0);
  std::array<double, 3> amax{};
  for (int lat = -1; lat <= 1; ++lat) {
    const bool allowed_dir = in_progress != 0 ? lat == in_progress : true;
    if (!allowed_dir) continue;
    amax[lat + 1] = max_safe_accel(s, lat, cfg);
    for (int sign = -1; sign <= 1; ++sign) {
      const double a = sign * cfg.accel_increment;
      const ActionSlot slot = grid_slot(sign, lat);
      set.actions[slot] = Action{a, lat, false};
      if (a > amax[lat + 1] + 1e-12) continue;
      if (lat != 0 && in_progress == 0 && !detail::lane_change_clear(s, lat, a, cfg)) continue;
      set.available[slot] = true;
    }
  }
  const int brake_lat = in_progress;
  set.actions[kBrakingSlot] =
      Action{std::min(amax[brake_lat + 1], -cfg.b_nominal), brake_lat, true};
  set.available[kBrakingSlot] = true;
  return set;
}

inline std::vector<Action> available_actions(const Scene& s, const SimConfig& cfg) {
  return available_action_set(s, cfg).list();
}

/// Unchecked generative step F(s, u, w) followed by vehicle entry.
inline Scene transition_unchecked(const Scene& s, const Action& u, std::span<const double> noise,
                                  const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg,
                                  StepStats* stats = nullptr) {
  Scene next = advance(s, EgoCommand{u.accel, u.lateral}, noise, cfg, stats);
  spawn_vehicle(next, prior, rng, cfg);
  return next;
}

/// Generative transition. Throws std::invalid_argument when `u` is not an
/// available action of `s`.
inline Scene transition(const Scene& s, const Action& u, std::span<const double> noise,
                        const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg,
                        StepStats* stats = nullptr) {
  if (!available_action_set(s, cfg).contains(u))
    throw std::invalid_argument("action not available in this scene");
  if (noise.size() + 1 != s.size()) throw std::invalid_argument("noise vector size mismatch");
  return transition_unchecked(s, u, noise, prior, rng, cfg, stats);
}

/// Draws the noise vector from `rng`, then transitions.
inline Scene transition(const Scene& s, const Action& u, const BehaviorPrior& prior, Rng& rng,
                        const SimConfig& cfg, StepStats* stats = nullptr) {
  const auto w = draw_noise(s, rng);
  return transition(s, u, w, prior, rng, cfg, stats);
}

inline bool ego_in_target_lane(const Scene& s, const SimConfig& cfg) {
  const auto& e = s.ego();
  return e.ydot == 0.0 && geometry::at_lane_center(e.y) &&
         geometry::lane_of(e.y) == cfg.target_lane();
}

/// Non-ego vehicles present in both scenes whose speed dropped by more than
/// b_hard * dt.
inline int count_hard_brakes(const Scene& s, const Scene& next, const SimConfig& cfg) {
  const double limit = -cfg.b_hard * cfg.dt;
  int n = 0;
  for (const auto& v : next.others()) {
    for (const auto& u : s.others()) {
      if (u.id != v.id) continue;
      if (v.q.xdot - u.q.xdot < limit) ++n;
      break;
    }
  }
  return n;
}

inline double reward(const Scene& s, const Scene& next, double lambda, const SimConfig& cfg) {
  return (ego_in_target_lane(next, cfg) ? 1.0 : 0.0) - lambda * count_hard_brakes(s, next, cfg);
}

inline bool is_terminal(const Scene& s, int step, const SimConfig& cfg) {
  return ego_in_target_lane(s, cfg) || step >= cfg.step_cap;
}

}  // namespace lanechange
