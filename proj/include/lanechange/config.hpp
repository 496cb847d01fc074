#pragma once

#include <cstddef>

namespace lanechange {

/// Physical and simulation constants of the freeway model.
///
/// Defaults reproduce the published simulation table; the few values the
/// model needs but the table leaves open (car length, speed increment,
/// nominal braking, step cap) are configurable here.
struct SimConfig {
  double dt = 0.75;                ///< simulation step (s)
  int n_lanes = 4;                 ///< lane 1 is rightmost, lane n_lanes the target
  std::size_t max_vehicles = 10;   ///< including the ego
  double lane_change_rate = 0.67;  ///< lanes/s
  double sigma_vel = 0.5;          ///< velocity noise std (m/s)
  double b_max = 8.0;              ///< physical braking limit (m/s^2)
  double b_hard = 4.0;             ///< penalized hard-braking limit (m/s^2)
  double car_length = 4.0;         ///< m
  double road_half_length = 50.0;  ///< modeled road ahead of and behind the ego (m)
  double accel_increment = 1.0;    ///< ego speed-adjustment magnitude a_inc (m/s^2)
  double b_nominal = 4.0;          ///< nominal ego braking (m/s^2)
  int step_cap = 100;              ///< episode length cap (steps)
  int initial_steps = 200;         ///< warm-up steps for initial scenes
  int noise_clamp_iterations = 20;
  double safe_accel_tolerance = 1e-3;
  /// Worst-case acceleration a new follower may apply during the step in
  /// which the ego cuts in (largest max-acceleration among driver types).
  double follower_worst_accel = 2.0;

  [[nodiscard]] int target_lane() const noexcept { return n_lanes; }
  [[nodiscard]] double lateral_step() const noexcept {
    return lane_change_rate * dt;
  }
};

/// Tree-search settings shared by MCTS-DPW and POMCP-DPW.
struct SearchConfig {
  double exploration = 5.0;  ///< UCT constant c
  double k = 4.0;            ///< DPW linear parameter
  double alpha = 0.125;      ///< DPW exponent
  int depth = 20;
  int iterations = 500;
  double discount = 1.0;
  /// POMCP-DPW only: when an existing history child is reused, also append
  /// the freshly simulated state to its particle collection.
  bool insert_on_reuse = false;
};

struct FilterConfig {
  double gamma_lane = 0.2;
  double sigma_vel = 0.5;
  double regularization_fraction = 0.10;
  double regularization_scale = 0.5;  ///< jitter std as a multiple of the sample std
  std::size_t particles_joint = 1000;
  std::size_t particles_aggressiveness = 500;
};

}  // namespace lanechange
