#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <stdexcept>

namespace lanechange {

/// Latent IDM + MOBIL parameters of one driver.
struct BehaviorParams {
  double desired_speed = 0.0;    ///< m/s
  double time_gap = 0.0;         ///< s
  double jam_distance = 0.0;     ///< m
  double max_accel = 0.0;        ///< m/s^2
  double comfort_decel = 0.0;    ///< m/s^2
  double politeness = 0.0;       ///< [0, 1]
  double safe_decel = 0.0;       ///< m/s^2
  double accel_threshold = 0.0;  ///< m/s^2
  double exponent = 4.0;         ///< IDM delta; never sampled or filtered

  friend bool operator==(const BehaviorParams&, const BehaviorParams&) = default;
};

/// Number of parameters that vary between drivers (everything but delta).
inline constexpr std::size_t kVaryingParams = 8;

constexpr double& param_ref(BehaviorParams& p, std::size_t i) {
  switch (i) {
    case 0: return p.desired_speed;
    case 1: return p.time_gap;
    case 2: return p.jam_distance;
    case 3: return p.max_accel;
    case 4: return p.comfort_decel;
    case 5: return p.politeness;
    case 6: return p.safe_decel;
    case 7: return p.accel_threshold;
    default: throw std::out_of_range("BehaviorParams index");
  }
}

constexpr double param_at(const BehaviorParams& p, std::size_t i) {
  switch (i) {
    case 0: return p.desired_speed;
    case 1: return p.time_gap;
    case 2: return p.jam_distance;
    case 3: return p.max_accel;
    case 4: return p.comfort_decel;
    case 5: return p.politeness;
    case 6: return p.safe_decel;
    case 7: return p.accel_threshold;
    default: throw std::out_of_range("BehaviorParams index");
  }
}

inline constexpr std::array<const char*, kVaryingParams> kParamNames = {
    "desired_speed", "time_gap",   "jam_distance", "max_accel",
    "comfort_decel", "politeness", "safe_decel",   "accel_threshold"};

/// Aggressiveness in [0, 1]: 0 is the timid driver, 1 the aggressive one.
class Aggressiveness {
 public:
  constexpr Aggressiveness() = default;
  constexpr explicit Aggressiveness(double v) : value_(v) {
    if (!(v >= 0.0 && v <= 1.0)) throw std::domain_error("aggressiveness outside [0, 1]");
  }
  static constexpr Aggressiveness clamped(double v) {
    return Aggressiveness(std::clamp(v, 0.0, 1.0));
  }
  [[nodiscard]] constexpr double value() const noexcept { return value_; }
  friend constexpr bool operator==(Aggressiveness, Aggressiveness) = default;

 private:
  double value_ = 0.5;
};

namespace driver_types {

// Desired speeds are 140 and 100 km/h; the other values are as tabulated.
inline constexpr BehaviorParams kAggressive{140.0 / 3.6, 1.0, 0.0, 2.0, 3.0,
                                            0.0,         3.0, 0.0, 4.0};
inline constexpr BehaviorParams kTimid{100.0 / 3.6, 2.0, 4.0, 0.8, 1.0,
                                       1.0,         1.0, 0.2, 4.0};

}  // namespace driver_types

/// Linear map from aggressiveness onto the timid-to-aggressive segment.
constexpr BehaviorParams params_from_aggressiveness(Aggressiveness agg) {
  const double u = agg.value();
  BehaviorParams out;
  for (std::size_t i = 0; i < kVaryingParams; ++i) {
    const double lo = param_at(driver_types::kTimid, i);
    const double hi = param_at(driver_types::kAggressive, i);
    param_ref(out, i) = lo + u * (hi - lo);
  }
  out.exponent = 4.0;
  return out;
}

/// Parameter value at fraction u of its timid-to-aggressive span.
constexpr double param_on_span(std::size_t i, double u) {
  const double lo = param_at(driver_types::kTimid, i);
  const double hi = param_at(driver_types::kAggressive, i);
  return lo + u * (hi - lo);
}

/// Inverse of param_on_span; meaningful only on the span.
constexpr double span_fraction(std::size_t i, double value) {
  const double lo = param_at(driver_types::kTimid, i);
  const double hi = param_at(driver_types::kAggressive, i);
  return (value - lo) / (hi - lo);
}

constexpr double param_min(std::size_t i) {
  return std::min(param_at(driver_types::kTimid, i), param_at(driver_types::kAggressive, i));
}
constexpr double param_max(std::size_t i) {
  return std::max(param_at(driver_types::kTimid, i), param_at(driver_types::kAggressive, i));
}

namespace driver_types {
inline constexpr BehaviorParams kNormal = params_from_aggressiveness(Aggressiveness(0.5));
}  // namespace driver_types

inline bool within_table_ranges(const BehaviorParams& p) {
  for (std::size_t i = 0; i < kVaryingParams; ++i) {
    const double v = param_at(p, i);
    if (v < param_min(i) || v > param_max(i)) return false;
  }
  return p.max_accel > 0 && p.comfort_decel > 0 && p.time_gap > 0 && p.jam_distance >= 0 &&
         p.politeness >= 0 && p.politeness <= 1 && p.safe_decel > 0 && p.accel_threshold >= 0;
}

inline BehaviorParams clip_to_table_ranges(BehaviorParams p) {
  for (std::size_t i = 0; i < kVaryingParams; ++i) {
    param_ref(p, i) = std::clamp(param_at(p, i), param_min(i), param_max(i));
  }
  return p;
}

}  // namespace lanechange
