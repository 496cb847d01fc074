#pragma once

#include <concepts>
#include <span>
#include <utility>
#include <vector>

#include "lanechange/config.hpp"
#include "lanechange/mcts.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

template <typename State, typename Observation>
struct PomdpStep {
  State next;
  Observation observation;
  double reward = 0.0;
};

/// Generative POMDP as seen by POMCP-DPW. `reward(s, a, s')` scores a
/// transition whose successor was drawn from a history node's particles.
template <typename M>
concept GenerativePomdp = requires(const M& m, const typename M::State& s,
                                   const typename M::Action& a, Rng& rng) {
  typename M::Observation;
  { m.actions(s) } -> std::convertible_to<std::vector<typename M::Action>>;
  { m.step(s, a, rng) }
      -> std::convertible_to<PomdpStep<typename M::State, typename M::Observation>>;
  { m.reward(s, a, s) } -> std::convertible_to<double>;
  { m.rollout(s, 1, 1.0, rng) } -> std::convertible_to<double>;
  { m.is_terminal(s) } -> std::convertible_to<bool>;
};

/// POMCP over action/observation histories with progressive widening on
/// observation children. Each history node keeps an unweighted particle
/// collection of the states that reached it.
///
/// Models whose observations are discrete can define
/// `bool same_observation(const Observation&, const Observation&) const` so a
/// repeated observation reuses its history node instead of adding one.
template <GenerativePomdp M>
class PomcpDpw {
 public:
  using State = typename M::State;
  using Action = typename M::Action;
  using Observation = typename M::Observation;

  struct ActionNode : ActionStats {
    Action action;
    std::vector<int> children;  ///< history nodes
    std::vector<int> child_counts;  ///< generated samples that landed in each child
    std::vector<Observation> child_observations;
  };
  struct HistoryNode {
    std::vector<State> particles;
    int first_action = 0;
    int num_actions = 0;
    bool expanded = false;
  };

  PomcpDpw(const M& model, SearchConfig cfg) : model_(model), cfg_(cfg) {}
  PomcpDpw(M&&, SearchConfig) = delete;  // the model is held by reference

  /// Runs cfg.iterations simulations, each from a root state drawn by
  /// `sample_root(rng)`, and returns the root action of highest value.
  template <typename RootSampler>
  Action plan(RootSampler&& sample_root, Rng& rng) {
    histories_.clear();
    action_nodes_.clear();
    simulations_ = 0;
    histories_.push_back(HistoryNode{});
    for (int it = 0; it < cfg_.iterations; ++it) {
      const State s = sample_root(rng);
      simulate(0, s, cfg_.depth, rng);
      ++simulations_;
    }
    const auto stats = node_actions(0);
    return stats[best_by_value<ActionNode>(stats)].action;
  }

  [[nodiscard]] const std::vector<HistoryNode>& history_nodes() const { return histories_; }
  [[nodiscard]] const std::vector<ActionNode>& action_nodes() const { return action_nodes_; }
  [[nodiscard]] int simulations() const { return simulations_; }
  [[nodiscard]] std::span<const ActionNode> node_actions(int node) const {
    return std::span<const ActionNode>(action_nodes_)
        .subspan(histories_[node].first_action, histories_[node].num_actions);
  }
  [[nodiscard]] std::span<const ActionNode> root_actions() const { return node_actions(0); }

  [[nodiscard]] bool dpw_bound_holds() const {
    for (const auto& an : action_nodes_)
      if (an.children.size() > dpw_child_bound(an.n, cfg_)) return false;
    return true;
  }

 private:
  static constexpr bool kMatchObservations =
      requires(const M& m, const Observation& o) { { m.same_observation(o, o) } -> std::convertible_to<bool>; };

  void expand(int node, const State& s) {
    if (histories_[node].expanded) return;
    const auto acts = model_.actions(s);
    histories_[node].first_action = static_cast<int>(action_nodes_.size());
    histories_[node].num_actions = static_cast<int>(acts.size());
    for (const auto& a : acts) {
      ActionNode an;
      an.action = a;
      action_nodes_.push_back(std::move(an));
    }
    histories_[node].expanded = true;
  }

  static std::size_t pick_by_count(const std::vector<int>& counts, Rng& rng) {
    int total = 0;
    for (int c : counts) total += c;
    auto u = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(total)));
    for (std::size_t i = 0; i < counts.size(); ++i) {
      if (u < counts[i]) return i;
      u -= counts[i];
    }
    return counts.size() - 1;
  }

  int add_history() {
    histories_.push_back(HistoryNode{});
    return static_cast<int>(histories_.size()) - 1;
  }

  double simulate(int node, const State& s, int depth, Rng& rng) {
    if (depth <= 0 || model_.is_terminal(s)) return 0.0;
    expand(node, s);
    if (histories_[node].num_actions == 0) return 0.0;
    const int ai = histories_[node].first_action +
                   static_cast<int>(ucb_select<ActionNode>(node_actions(node), cfg_.exploration));

    double ret = 0.0;
    if (dpw_allows_new_child(action_nodes_[ai].children.size(), action_nodes_[ai].n, cfg_)) {
      auto out = model_.step(s, action_nodes_[ai].action, rng);
      auto& an = action_nodes_[ai];
      std::size_t slot = an.children.size();
      if constexpr (kMatchObservations) {
        for (std::size_t c = 0; c < an.child_observations.size(); ++c)
          if (model_.same_observation(an.child_observations[c], out.observation)) slot = c;
      }
      const bool fresh = slot == an.children.size();
      if (fresh) {
        an.children.push_back(add_history());
        an.child_counts.push_back(0);
        if constexpr (kMatchObservations) an.child_observations.push_back(out.observation);
      }
      ++an.child_counts[slot];
      const int child = an.children[slot];
      histories_[child].particles.push_back(out.next);
      const double tail = fresh ? model_.rollout(out.next, depth - 1, cfg_.discount, rng)
                                : simulate(child, out.next, depth - 1, rng);
      ret = out.reward + cfg_.discount * tail;
    } else {
      const int child = action_nodes_[ai].children[pick_by_count(action_nodes_[ai].child_counts, rng)];
      State next;
      double r = 0.0;
      if (cfg_.insert_on_reuse) {
        auto out = model_.step(s, action_nodes_[ai].action, rng);
        histories_[child].particles.push_back(out.next);
        next = std::move(out.next);
        r = out.reward;
      } else {
        const auto& parts = histories_[child].particles;
        next = parts[uniform_index(rng, parts.size())];
        r = model_.reward(s, action_nodes_[ai].action, next);
      }
      ret = r + cfg_.discount * simulate(child, next, depth - 1, rng);
    }
    action_nodes_[ai].record(ret);
    return ret;
  }

  const M& model_;
  SearchConfig cfg_;
  std::vector<HistoryNode> histories_;
  std::vector<ActionNode> action_nodes_;
  int simulations_ = 0;
};

template <GenerativePomdp M, typename RootSampler>
typename M::Action pomcp_dpw_plan(const M& model, RootSampler&& sample_root, const SearchConfig& cfg,
                                  Rng& rng) {
  PomcpDpw<M> search(model, cfg);
  return search.plan(std::forward<RootSampler>(sample_root), rng);
}

}  // namespace lanechange
