#pragma once

// Exact Bayes filter on a 101-point aggressiveness grid for a single car on
// a free road. The particle filter propagates every particle with its own
// velocity noise draw, so its expected weight is the Gaussian likelihood
// convolved with that noise: the grid uses variance 2·sigma² to match.

#include <array>
#include <cmath>

#include "lanechange/behavior.hpp"
#include "oracles/idm_reference.hpp"

namespace oracle {

class GridBayes {
 public:
  static constexpr int kPoints = 101;

  GridBayes(double sigma_vel, double dt, double b_max) : sigma_(sigma_vel), dt_(dt), b_max_(b_max) {
    post_.fill(1.0 / kPoints);
  }

  static double grid_value(int i) { return i / 100.0; }

  /// Free-road speed after one noise-free step for aggressiveness `agg`.
  [[nodiscard]] double predicted_speed(double agg, double v) const {
    const auto th = lanechange::params_from_aggressiveness(lanechange::Aggressiveness(agg));
    const double a = std::clamp(idm_raw(th, v, 0.0, std::numeric_limits<double>::infinity()), -b_max_, th.max_accel);
    return std::max(0.0, v + a * dt_);
  }

  void update(double v_prev, double v_obs) {
    double total = 0.0;
    for (int i = 0; i < kPoints; ++i) {
      const double d = v_obs - predicted_speed(grid_value(i), v_prev);
      post_[i] *= std::exp(-d * d / (4.0 * sigma_ * sigma_));
      total += post_[i];
    }
    for (auto& p : post_) p /= total;
  }

  [[nodiscard]] double mean() const {
    double m = 0.0;
    for (int i = 0; i < kPoints; ++i) m += post_[i] * grid_value(i);
    return m;
  }

  [[nodiscard]] const std::array<double, kPoints>& posterior() const { return post_; }

 private:
  double sigma_, dt_, b_max_;
  std::array<double, kPoints> post_{};
};

}  // namespace oracle
