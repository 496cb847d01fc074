#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

#include "lanechange/behavior_gen.hpp"
#include "lanechange/config.hpp"
#include "lanechange/filter.hpp"
#include "lanechange/mcts.hpp"
#include "lanechange/pomcp.hpp"
#include "lanechange/problem.hpp"

namespace lanechange {

enum class PlannerKind { Omniscient, Sab, Mlmpc, Pomcp };

inline std::string_view planner_name(PlannerKind k) {
  switch (k) {
    case PlannerKind::Omniscient: return "omniscient";
    case PlannerKind::Sab: return "sab";
    case PlannerKind::Mlmpc: return "mlmpc";
    case PlannerKind::Pomcp: return "pomcp";
  }
  return "?";
}

inline PlannerKind parse_planner(std::string_view s) {
  if (s == "omniscient") return PlannerKind::Omniscient;
  if (s == "sab") return PlannerKind::Sab;
  if (s == "mlmpc") return PlannerKind::Mlmpc;
  if (s == "pomcp") return PlannerKind::Pomcp;
  throw std::invalid_argument("unknown planner: " + std::string(s));
}

struct PlannerSettings {
  SimConfig sim;
  SearchConfig mcts;
  SearchConfig pomcp = [] {
    SearchConfig c;
    c.iterations = 2500;
    return c;
  }();
  FilterConfig filter;
  ScenarioSpec scenario;
  double lambda = 1.0;
};

/// Per-episode decision maker. Only the omniscient planner is handed the
/// true scene; everything else sees observations.
class Planner {
 public:
  virtual ~Planner() = default;
  [[nodiscard]] virtual PlannerKind kind() const = 0;
  [[nodiscard]] bool needs_truth() const { return kind() == PlannerKind::Omniscient; }
  virtual void reset(const Observation& /*first*/, Rng& /*rng*/) {}
  virtual Action act(const Scene* truth, const Observation& o, Rng& rng) = 0;
  /// Called after the environment moved under action `u` and produced `o`.
  virtual void update(const Action& /*u*/, const Observation& /*o*/, Rng& /*rng*/) {}
};

class OmniscientPlanner final : public Planner {
 public:
  explicit OmniscientPlanner(const PlannerSettings& s)
      : settings_(s), model_(s.sim, BehaviorPrior(s.scenario), s.lambda) {}
  [[nodiscard]] PlannerKind kind() const override { return PlannerKind::Omniscient; }
  Action act(const Scene* truth, const Observation&, Rng& rng) override {
    if (truth == nullptr) throw std::logic_error("omniscient planner needs the true scene");
    return mcts_dpw_plan(model_, *truth, settings_.mcts, rng);
  }

 private:
  PlannerSettings settings_;
  TrafficMdp model_;
};

/// Static assumed behavior: every car, present or future, is the Normal driver.
class SabPlanner final : public Planner {
 public:
  explicit SabPlanner(const PlannerSettings& s)
      : settings_(s), model_(s.sim, BehaviorPrior::fixed(driver_types::kNormal), s.lambda) {}
  [[nodiscard]] PlannerKind kind() const override { return PlannerKind::Sab; }
  Action act(const Scene*, const Observation& o, Rng& rng) override {
    const Scene s = scene_from_observation(o, [](VehicleId) { return driver_types::kNormal; });
    return mcts_dpw_plan(model_, s, settings_.mcts, rng);
  }

 private:
  PlannerSettings settings_;
  TrafficMdp model_;
};

/// Shared particle-filter bookkeeping of the belief-based planners.
template <typename P>
class BeliefTracker {
 public:
  explicit BeliefTracker(const PlannerSettings& s) : settings_(s), prior_(s.scenario) {}

  [[nodiscard]] std::size_t particle_count() const {
    return ParticleTraits<P>::dims == 1 ? settings_.filter.particles_aggressiveness
                                        : settings_.filter.particles_joint;
  }
  void reset(const Observation& o, Rng& rng) {
    belief_ = belief_init<P>(prior_, o, particle_count(), rng);
  }
  void update(const Action& u, const Observation& o, Rng& rng) {
    FilterConfig f = settings_.filter;
    f.sigma_vel = settings_.sim.sigma_vel;
    belief_ = filter_update(belief_, u, o, prior_, rng, settings_.sim, f);
  }
  [[nodiscard]] const ParticleBelief<P>& belief() const { return belief_; }
  [[nodiscard]] const BehaviorPrior& prior() const { return prior_; }

 private:
  PlannerSettings settings_;
  BehaviorPrior prior_;
  ParticleBelief<P> belief_;
};

/// Most-likely model predictive control: plan on the MDP given by the
/// highest-weight particle of every car.
template <typename P>
class MlmpcPlanner final : public Planner {
 public:
  explicit MlmpcPlanner(const PlannerSettings& s)
      : settings_(s), tracker_(s), model_(s.sim, BehaviorPrior(s.scenario), s.lambda) {}
  [[nodiscard]] PlannerKind kind() const override { return PlannerKind::Mlmpc; }
  void reset(const Observation& o, Rng& rng) override { tracker_.reset(o, rng); }
  void update(const Action& u, const Observation& o, Rng& rng) override { tracker_.update(u, o, rng); }
  Action act(const Scene*, const Observation&, Rng& rng) override {
    return mcts_dpw_plan(model_, most_likely_scene(tracker_.belief()), settings_.mcts, rng);
  }
  [[nodiscard]] const BeliefTracker<P>& tracker() const { return tracker_; }

 private:
  PlannerSettings settings_;
  BeliefTracker<P> tracker_;
  TrafficMdp model_;
};

template <typename P>
class PomcpPlanner final : public Planner {
 public:
  explicit PomcpPlanner(const PlannerSettings& s)
      : settings_(s), tracker_(s), model_(s.sim, BehaviorPrior(s.scenario), s.lambda) {}
  [[nodiscard]] PlannerKind kind() const override { return PlannerKind::Pomcp; }
  void reset(const Observation& o, Rng& rng) override { tracker_.reset(o, rng); }
  void update(const Action& u, const Observation& o, Rng& rng) override { tracker_.update(u, o, rng); }
  Action act(const Scene*, const Observation& o, Rng& rng) override {
    const auto& belief = tracker_.belief();
    const ActionSlot slot = pomcp_dpw_plan(
        model_, [&belief](Rng& r) { return sample_scene(belief, r); }, settings_.pomcp, rng);
    const Scene physical = scene_from_observation(o, [](VehicleId) { return driver_types::kNormal; });
    return available_action_set(physical, settings_.sim).resolve(slot);
  }
  [[nodiscard]] const BeliefTracker<P>& tracker() const { return tracker_; }

 private:
  PlannerSettings settings_;
  BeliefTracker<P> tracker_;
  TrafficPomdp model_;
};

/// Scenario 1 filters every parameter jointly; the correlated scenarios
/// filter a single aggressiveness value per car.
inline bool uses_joint_filter(const ScenarioSpec& s) { return s.kind == ScenarioKind::Independent; }

inline std::unique_ptr<Planner> make_planner(PlannerKind kind, const PlannerSettings& s) {
  switch (kind) {
    case PlannerKind::Omniscient: return std::make_unique<OmniscientPlanner>(s);
    case PlannerKind::Sab: return std::make_unique<SabPlanner>(s);
    case PlannerKind::Mlmpc:
      if (uses_joint_filter(s.scenario)) return std::make_unique<MlmpcPlanner<BehaviorParams>>(s);
      return std::make_unique<MlmpcPlanner<Aggressiveness>>(s);
    case PlannerKind::Pomcp:
      if (uses_joint_filter(s.scenario)) return std::make_unique<PomcpPlanner<BehaviorParams>>(s);
      return std::make_unique<PomcpPlanner<Aggressiveness>>(s);
  }
  throw std::invalid_argument("unknown planner kind");
}

}  // namespace lanechange
