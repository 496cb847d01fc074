#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "lanechange/behavior.hpp"
#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/dynamics.hpp"
#include "lanechange/pomdp.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

/// Particle payload traits. Joint particles carry every parameter; the
/// aggressiveness particle carries one scalar that fixes all of them.
template <typename P>
struct ParticleTraits;

template <>
struct ParticleTraits<BehaviorParams> {
  static BehaviorParams params(const BehaviorParams& p) { return p; }
  static BehaviorParams sample_prior(const BehaviorPrior& prior, Rng& rng) {
    return prior.sample(rng);
  }
  static constexpr std::size_t dims = kVaryingParams;
  static double coord(const BehaviorParams& p, std::size_t i) { return param_at(p, i); }
  static void set_coord(BehaviorParams& p, std::size_t i, double v) {
    param_ref(p, i) = std::clamp(v, param_min(i), param_max(i));
  }
};

template <>
struct ParticleTraits<Aggressiveness> {
  static BehaviorParams params(const Aggressiveness& a) { return params_from_aggressiveness(a); }
  static Aggressiveness sample_prior(const BehaviorPrior&, Rng& rng) {
    return Aggressiveness(uniform01(rng));
  }
  static constexpr std::size_t dims = 1;
  static double coord(const Aggressiveness& a, std::size_t) { return a.value(); }
  static void set_coord(Aggressiveness& a, std::size_t, double v) { a = Aggressiveness::clamped(v); }
};

template <typename P>
struct VehicleBelief {
  VehicleId id = 0;
  std::vector<P> particles;
  std::vector<double> weights;
  std::vector<double> cumulative;  ///< running sum of weights, for sampling

  void refresh_cumulative() {
    cumulative.resize(weights.size());
    std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  }

  /// Weighted draw of one particle index.
  std::size_t draw(Rng& rng) const {
    const double total = cumulative.back();
    const double u = uniform01(rng) * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()),
                                 particles.size() - 1);
  }

  /// Lowest-index particle of maximal weight.
  [[nodiscard]] std::size_t argmax() const {
    return static_cast<std::size_t>(std::max_element(weights.begin(), weights.end()) -
                                    weights.begin());
  }

  [[nodiscard]] double weighted_mean(std::size_t coord = 0) const {
    double sw = 0.0, s = 0.0;
    for (std::size_t k = 0; k < particles.size(); ++k) {
      sw += weights[k];
      s += weights[k] * ParticleTraits<P>::coord(particles[k], coord);
    }
    return s / sw;
  }
};

/// Exactly-known physical state plus per-vehicle particle sets.
template <typename P>
struct ParticleBelief {
  Observation physical;
  std::vector<VehicleBelief<P>> cars;

  [[nodiscard]] const VehicleBelief<P>* find(VehicleId id) const {
    for (const auto& c : cars)
      if (c.id == id) return &c;
    return nullptr;
  }
};

using JointBelief = ParticleBelief<BehaviorParams>;
using AggressivenessBelief = ParticleBelief<Aggressiveness>;

template <typename P>
VehicleBelief<P> prior_vehicle_belief(VehicleId id, const BehaviorPrior& prior, std::size_t m,
                                      Rng& rng) {
  VehicleBelief<P> vb;
  vb.id = id;
  vb.particles.reserve(m);
  for (std::size_t k = 0; k < m; ++k) vb.particles.push_back(ParticleTraits<P>::sample_prior(prior, rng));
  vb.weights.assign(m, 1.0);
  vb.refresh_cumulative();
  return vb;
}

template <typename P>
ParticleBelief<P> belief_init(const BehaviorPrior& prior, const Observation& o, std::size_t m,
                              Rng& rng) {
  if (m == 0) throw std::invalid_argument("particle count must be positive");
  ParticleBelief<P> b;
  b.physical = o;
  for (const auto& [id, q] : o.others) b.cars.push_back(prior_vehicle_belief<P>(id, prior, m, rng));
  return b;
}

/// Adds zero-mean Gaussian noise to floor(fraction * M) distinct particles,
/// per coordinate with std = scale * the set's sample std, clipping to valid
/// ranges. Returns the indices touched.
template <typename P>
std::vector<std::size_t> regularize(std::span<P> particles, double fraction, double scale,
                                    Rng& rng) {
  using T = ParticleTraits<P>;
  const std::size_t m = particles.size();
  const auto count = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m)));
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) std::swap(idx[i], idx[i + uniform_index(rng, m - i)]);
  idx.resize(count);
  if (count == 0 || m < 2) return idx;

  std::array<double, T::dims> sd{};
  for (std::size_t d = 0; d < T::dims; ++d) {
    double mean = 0.0;
    for (const auto& p : particles) mean += T::coord(p, d);
    mean /= static_cast<double>(m);
    double ss = 0.0;
    for (const auto& p : particles) ss += (T::coord(p, d) - mean) * (T::coord(p, d) - mean);
    sd[d] = scale * std::sqrt(ss / static_cast<double>(m - 1));
  }
  for (std::size_t k : idx)
    for (std::size_t d = 0; d < T::dims; ++d)
      T::set_coord(particles[k], d, T::coord(particles[k], d) + sd[d] * standard_normal(rng));
  return idx;
}

/// Likelihood weight of a predicted state against the observed one.
inline double particle_weight(const PhysicalState& observed, const PhysicalState& predicted,
                              const FilterConfig& fcfg) {
  const double dv = observed.xdot - predicted.xdot;
  double w = std::exp(-dv * dv / (2.0 * fcfg.sigma_vel * fcfg.sigma_vel));
  if (geometry::lane_of(observed.y) != geometry::lane_of(predicted.y)) w *= fcfg.gamma_lane;
  return w;
}

/// Most likely parameters of every tracked vehicle.
template <typename P>
std::vector<std::pair<VehicleId, BehaviorParams>> most_likely_particle(const ParticleBelief<P>& b) {
  std::vector<std::pair<VehicleId, BehaviorParams>> out;
  out.reserve(b.cars.size());
  for (const auto& c : b.cars) out.emplace_back(c.id, ParticleTraits<P>::params(c.particles[c.argmax()]));
  return out;
}

template <typename P>
Scene most_likely_scene(const ParticleBelief<P>& b) {
  const auto ml = most_likely_particle(b);
  return scene_from_observation(b.physical, [&](VehicleId id) {
    for (const auto& [vid, th] : ml)
      if (vid == id) return th;
    return driver_types::kNormal;
  });
}

/// Draws a full scene: exact physical state, parameters drawn per vehicle
/// from its weighted particles.
template <typename P>
Scene sample_scene(const ParticleBelief<P>& b, Rng& rng) {
  Scene s = scene_from_observation(b.physical, [](VehicleId) { return driver_types::kNormal; });
  for (std::size_t i = 1; i < s.size(); ++i) {
    const auto* vb = b.find(s.vehicles[i].id);
    if (vb) s.vehicles[i].theta = ParticleTraits<P>::params(vb->particles[vb->draw(rng)]);
  }
  return s;
}

/// One belief update after the ego applied `u` and `o` was observed.
/// Each vehicle is filtered independently; the other vehicles of the
/// hypothetical scene take their current most likely parameters.
template <typename P>
ParticleBelief<P> filter_update(const ParticleBelief<P>& belief, const Action& u, const Observation& o,
                                const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg,
                                const FilterConfig& fcfg) {
  using T = ParticleTraits<P>;
  ParticleBelief<P> out;
  out.physical = o;
  Scene base = most_likely_scene(belief);
  const EgoCommand ego{u.accel, u.lateral};
  std::vector<double> noise(base.size() - 1);

  for (const auto& [id, q_obs] : o.others) {
    const auto* prev = belief.find(id);
    if (prev == nullptr) {
      const std::size_t m = belief.cars.empty() ? (T::dims == 1 ? fcfg.particles_aggressiveness
                                                                : fcfg.particles_joint)
                                                : belief.cars.front().particles.size();
      out.cars.push_back(prior_vehicle_belief<P>(id, prior, m, rng));
      continue;
    }
    int index = -1;
    for (std::size_t i = 1; i < base.size(); ++i)
      if (base.vehicles[i].id == id) index = static_cast<int>(i);
    if (index < 0) {
      out.cars.push_back(*prev);
      continue;
    }

    const std::size_t m = prev->particles.size();
    VehicleBelief<P> next;
    next.id = id;
    next.particles.reserve(m);
    for (std::size_t k = 0; k < m; ++k) next.particles.push_back(prev->particles[prev->draw(rng)]);
    regularize<P>(next.particles, fcfg.regularization_fraction, fcfg.regularization_scale, rng);

    next.weights.resize(m);
    Scene hyp = base;
    for (std::size_t k = 0; k < m; ++k) {
      hyp.vehicles[index].theta = T::params(next.particles[k]);
      for (auto& w : noise) w = standard_normal(rng);
      const Scene pred = advance(hyp, ego, noise, cfg, nullptr, false);
      next.weights[k] = particle_weight(q_obs, pred.vehicles[index].q, fcfg);
    }
    const double total = std::accumulate(next.weights.begin(), next.weights.end(), 0.0);
    if (!(total > 0.0) || !std::isfinite(total)) std::fill(next.weights.begin(), next.weights.end(), 1.0);
    next.refresh_cumulative();
    out.cars.push_back(std::move(next));
  }
  return out;
}

}  // namespace lanechange
