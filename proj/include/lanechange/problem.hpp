#pragma once

#include <utility>
#include <vector>

#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/pomcp.hpp"
#include "lanechange/pomdp.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

/// Heuristic default policy: hold speed and move left whenever possible.
inline Action rollout_action(const ActionSet& set, const Scene& s) {
  const auto& ego = s.ego();
  const int in_progress = ego.ydot > 0 ? 1 : (ego.ydot < 0 ? -1 : 0);
  const int preferred = in_progress != 0 ? in_progress : 1;
  if (set.available[grid_slot(0, preferred)]) return set.actions[grid_slot(0, preferred)];
  if (in_progress == 0 && set.available[grid_slot(0, 0)]) return set.actions[grid_slot(0, 0)];
  return set.actions[kBrakingSlot];
}

/// Discounted return of the heuristic policy over `depth` steps.
inline double rollout(const Scene& start, int depth, double discount, double lambda,
                      const BehaviorPrior& prior, Rng& rng, const SimConfig& cfg) {
  double total = 0.0;
  double factor = 1.0;
  Scene s = start;
  for (int d = 0; d < depth; ++d) {
    const auto set = available_action_set(s, cfg);
    const Action u = rollout_action(set, s);
    const auto w = draw_noise(s, rng);
    Scene next = transition_unchecked(s, u, w, prior, rng, cfg);
    total += factor * reward(s, next, lambda, cfg);
    factor *= discount;
    s = std::move(next);
  }
  return total;
}

/// Lane-change MDP with every car's parameters part of the state. Used by the
/// omniscient, static-behavior, and most-likely planners.
///
/// The search never treats reaching the target lane as terminal: the reward
/// keeps accruing per step spent there, which is what makes earlier arrival
/// worth more inside the horizon.
class TrafficMdp {
 public:
  using State = Scene;
  using Action = lanechange::Action;

  TrafficMdp(SimConfig cfg, BehaviorPrior prior, double lambda)
      : cfg_(cfg), prior_(std::move(prior)), lambda_(lambda) {}

  [[nodiscard]] std::vector<Action> actions(const Scene& s) const {
    return available_actions(s, cfg_);
  }
  std::pair<Scene, double> step(const Scene& s, const Action& u, Rng& rng) const {
    const auto w = draw_noise(s, rng);
    Scene next = transition_unchecked(s, u, w, prior_, rng, cfg_);
    const double r = reward(s, next, lambda_, cfg_);
    return {std::move(next), r};
  }
  double rollout(const Scene& s, int depth, double discount, Rng& rng) const {
    return lanechange::rollout(s, depth, discount, lambda_, prior_, rng, cfg_);
  }
  [[nodiscard]] bool is_terminal(const Scene&) const { return false; }

  [[nodiscard]] const SimConfig& sim() const { return cfg_; }
  [[nodiscard]] double lambda() const { return lambda_; }

 private:
  SimConfig cfg_;
  BehaviorPrior prior_;
  double lambda_;
};

/// The same problem with hidden parameters, searched by POMCP-DPW. Actions
/// are slots so that one history node can serve states whose braking
/// acceleration differs; a slot pruned in some state falls back to braking.
class TrafficPomdp {
 public:
  using State = Scene;
  using Action = ActionSlot;
  using Observation = lanechange::Observation;

  TrafficPomdp(SimConfig cfg, BehaviorPrior prior, double lambda)
      : cfg_(cfg), prior_(std::move(prior)), lambda_(lambda) {}

  [[nodiscard]] std::vector<ActionSlot> actions(const Scene& s) const {
    return available_action_set(s, cfg_).slots();
  }
  PomdpStep<Scene, Observation> step(const Scene& s, ActionSlot slot, Rng& rng) const {
    const lanechange::Action u = available_action_set(s, cfg_).resolve(slot);
    const auto w = draw_noise(s, rng);
    Scene next = transition_unchecked(s, u, w, prior_, rng, cfg_);
    const double r = lanechange::reward(s, next, lambda_, cfg_);
    Observation o = observe(next);
    return {std::move(next), std::move(o), r};
  }
  [[nodiscard]] double reward(const Scene& s, ActionSlot, const Scene& next) const {
    return lanechange::reward(s, next, lambda_, cfg_);
  }
  double rollout(const Scene& s, int depth, double discount, Rng& rng) const {
    return lanechange::rollout(s, depth, discount, lambda_, prior_, rng, cfg_);
  }
  [[nodiscard]] bool is_terminal(const Scene&) const { return false; }

  [[nodiscard]] const SimConfig& sim() const { return cfg_; }

 private:
  SimConfig cfg_;
  BehaviorPrior prior_;
  double lambda_;
};

static_assert(GenerativeMdp<TrafficMdp>);
static_assert(GenerativePomdp<TrafficPomdp>);

}  // namespace lanechange
