#pragma once

#include "lanechange/scene.hpp"

namespace testing_support {

using lanechange::BehaviorParams;
using lanechange::PhysicalState;
using lanechange::Scene;

/// Scene with the ego at (x, lane, speed) and no other cars.
inline Scene ego_only(double x = 0.0, double lane = 1.0, double speed = 30.0, int n_lanes = 4) {
  Scene s;
  s.n_lanes = n_lanes;
  s.ego() = PhysicalState{x, lane, speed, 0.0};
  return s;
}

inline int add_car(Scene& s, double x, double lane, double speed, const BehaviorParams& theta) {
  s.add(PhysicalState{x, lane, speed, 0.0}, theta);
  return static_cast<int>(s.size()) - 1;
}

}  // namespace testing_support
