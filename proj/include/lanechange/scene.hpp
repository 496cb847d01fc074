#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lanechange/behavior.hpp"
#include "lanechange/config.hpp"

namespace lanechange {

using VehicleId = std::uint32_t;
inline constexpr VehicleId kEgoId = 0;

/// Longitudinal/lateral position and velocity. x is the front bumper (m),
/// y is in lane units with lane centers at 1..n_lanes.
struct PhysicalState {
  double x = 0.0;
  double y = 1.0;
  double xdot = 0.0;
  double ydot = 0.0;

  friend bool operator==(const PhysicalState&, const PhysicalState&) = default;
};

struct Vehicle {
  VehicleId id = kEgoId;
  PhysicalState q;
  BehaviorParams theta;
  std::optional<int> lc_target;  ///< target lane of an in-progress lane change

  friend bool operator==(const Vehicle&, const Vehicle&) = default;
};

/// Full state: vehicles[0] is the ego, the rest are the other cars.
///
/// The ego slot carries Normal-driver parameters. The ego's own motion never
/// reads them; they stand in for the ego when another driver's MOBIL or
/// spawn rule needs a follower's IDM response.
struct Scene {
  std::vector<Vehicle> vehicles;
  int n_lanes = 4;
  VehicleId next_id = 1;

  Scene() { vehicles.push_back(Vehicle{kEgoId, {}, driver_types::kNormal, std::nullopt}); }

  [[nodiscard]] const PhysicalState& ego() const { return vehicles.front().q; }
  PhysicalState& ego() { return vehicles.front().q; }
  [[nodiscard]] std::span<const Vehicle> others() const {
    return std::span<const Vehicle>(vehicles).subspan(1);
  }
  [[nodiscard]] std::size_t size() const noexcept { return vehicles.size(); }

  [[nodiscard]] const Vehicle* find(VehicleId id) const {
    for (const auto& v : vehicles)
      if (v.id == id) return &v;
    return nullptr;
  }

  Vehicle& add(const PhysicalState& q, const BehaviorParams& theta) {
    vehicles.push_back(Vehicle{next_id++, q, theta, std::nullopt});
    return vehicles.back();
  }

  friend bool operator==(const Scene&, const Scene&) = default;
};

namespace geometry {

inline constexpr double kEps = 1e-9;

inline bool lateral_overlap(double y1, double y2) { return std::abs(y1 - y2) < 1.0 - kEps; }

/// Bumper-to-bumper gap from a follower at x_rear to a leader at x_front.
inline double gap(double x_front, double x_rear, double car_length) {
  return x_front - x_rear - car_length;
}

inline bool overlapping(const PhysicalState& a, const PhysicalState& b, double car_length) {
  return lateral_overlap(a.y, b.y) && std::abs(a.x - b.x) < car_length - kEps;
}

inline bool at_lane_center(double y) { return std::abs(y - std::round(y)) < kEps; }

inline int lane_of(double y) { return static_cast<int>(std::lround(y)); }

/// Lane a vehicle is moving towards, given its lateral velocity sign.
inline int lane_change_target(double y, double ydot) {
  if (ydot > 0) return static_cast<int>(std::floor(y + kEps)) + 1;
  if (ydot < 0) return static_cast<int>(std::ceil(y - kEps)) - 1;
  return lane_of(y);
}

}  // namespace geometry

/// Index of the nearest vehicle ahead of longitudinal position x that overlaps
/// lateral position y, ignoring index `skip` (and `skip2`); -1 if none.
inline int find_leader(const Scene& s, double x, double y, int skip, int skip2 = -1) {
  int best = -1;
  double best_x = 0.0;
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    if (j == skip || j == skip2) continue;
    const auto& q = s.vehicles[j].q;
    if (q.x <= x || !geometry::lateral_overlap(q.y, y)) continue;
    if (best < 0 || q.x < best_x) {
      best = j;
      best_x = q.x;
    }
  }
  return best;
}

inline int find_follower(const Scene& s, double x, double y, int skip, int skip2 = -1) {
  int best = -1;
  double best_x = 0.0;
  for (int j = 0; j < static_cast<int>(s.size()); ++j) {
    if (j == skip || j == skip2) continue;
    const auto& q = s.vehicles[j].q;
    if (q.x >= x || !geometry::lateral_overlap(q.y, y)) continue;
    if (best < 0 || q.x > best_x) {
      best = j;
      best_x = q.x;
    }
  }
  return best;
}

/// Number of vehicle pairs that overlap laterally and longitudinally.
inline int count_overlaps(const Scene& s, double car_length) {
  int n = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = i + 1; j < s.size(); ++j)
      if (geometry::overlapping(s.vehicles[i].q, s.vehicles[j].q, car_length)) ++n;
  return n;
}

/// Checks every scene invariant; returns false on the first violation.
inline bool scene_invariants_hold(const Scene& s, const SimConfig& cfg) {
  if (s.vehicles.empty() || s.vehicles.front().id != kEgoId) return false;
  if (s.size() > cfg.max_vehicles) return false;
  const double ex = s.ego().x;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto& v = s.vehicles[i];
    const auto& q = v.q;
    if (q.y < 1.0 - geometry::kEps || q.y > s.n_lanes + geometry::kEps) return false;
    if (q.xdot < 0.0) return false;
    if (q.ydot != 0.0 && std::abs(std::abs(q.ydot) - cfg.lane_change_rate) > geometry::kEps)
      return false;
    if (v.lc_target.has_value() != (q.ydot != 0.0)) return false;
    if (v.lc_target && std::abs(*v.lc_target - q.y) >= 1.0) return false;
    if (q.ydot == 0.0 && !geometry::at_lane_center(q.y)) return false;
    if (i > 0 && std::abs(q.x - ex) > cfg.road_half_length + geometry::kEps) return false;
  }
  return count_overlaps(s, cfg.car_length) == 0;
}

}  // namespace lanechange
