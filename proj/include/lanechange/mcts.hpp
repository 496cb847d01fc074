#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "lanechange/config.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

/// Generative MDP as seen by MCTS-DPW.
template <typename M>
concept GenerativeMdp = requires(const M& m, const typename M::State& s,
                                 const typename M::Action& a, Rng& rng) {
  { m.actions(s) } -> std::convertible_to<std::vector<typename M::Action>>;
  { m.step(s, a, rng) } -> std::convertible_to<std::pair<typename M::State, double>>;
  { m.rollout(s, 1, 1.0, rng) } -> std::convertible_to<double>;
  { m.is_terminal(s) } -> std::convertible_to<bool>;
};

/// Models opt into merging identical successor states by defining
/// `static constexpr bool kCheckRepeatState = true`.
template <typename M>
constexpr bool checks_repeat_state() {
  if constexpr (requires { M::kCheckRepeatState; }) {
    return M::kCheckRepeatState;
  } else {
    return false;
  }
}

/// Visit count and running-mean value of one action at one node.
struct ActionStats {
  int n = 0;
  double q = 0.0;
  double sum = 0.0;  ///< total of backed-up returns, kept for auditing q

  void record(double ret) {
    ++n;
    sum += ret;
    q += (ret - q) / n;
  }
};

/// UCB1 selection: argmax of q + c sqrt(ln N / n). Untried actions score
/// +inf; ties resolve to the earliest index.
template <typename Stats>
std::size_t ucb_select(std::span<const Stats> stats, double c) {
  int total = 0;
  for (const auto& s : stats) total += s.n;
  const double log_total = total > 0 ? std::log(static_cast<double>(total)) : 0.0;
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < stats.size(); ++i) {
    const auto& s = stats[i];
    const double score = s.n == 0 ? std::numeric_limits<double>::infinity()
                                  : s.q + c * std::sqrt(log_total / s.n);
    if (score > best_score) {
      best_score = score;
      best = i;
    }
  }
  return best;
}

/// Whether an action node with `children` children and `n` visits may add
/// another child.
inline bool dpw_allows_new_child(std::size_t children, int n, const SearchConfig& cfg) {
  return children == 0 ||
         static_cast<double>(children) < cfg.k * std::pow(static_cast<double>(n), cfg.alpha);
}

/// Largest child count an action node with n visits can have reached.
inline std::size_t dpw_child_bound(int n, const SearchConfig& cfg) {
  const double b = std::ceil(cfg.k * std::pow(static_cast<double>(n), cfg.alpha));
  return std::max<std::size_t>(1, static_cast<std::size_t>(b));
}

/// Returns the index of the best visited entry by q (earliest on ties).
template <typename Stats>
std::size_t best_by_value(std::span<const Stats> stats) {
  std::size_t best = 0;
  bool found = false;
  for (std::size_t i = 0; i < stats.size(); ++i) {
    if (stats[i].n == 0) continue;
    if (!found || stats[i].q > stats[best].q) {
      best = i;
      found = true;
    }
  }
  return best;
}

/// Monte Carlo tree search with double progressive widening on states.
template <GenerativeMdp M>
class MctsDpw {
 public:
  using State = typename M::State;
  using Action = typename M::Action;

  struct ActionNode : ActionStats {
    Action action;
    std::vector<std::pair<int, double>> transitions;  ///< (state node, reward), one per generated sample
    std::vector<int> children;                        ///< distinct state nodes
  };
  struct StateNode {
    State state;
    int first_action = 0;  ///< action nodes of a state are contiguous
    int num_actions = 0;
    bool expanded = false;
  };

  MctsDpw(const M& model, SearchConfig cfg) : model_(model), cfg_(cfg) {}
  MctsDpw(M&&, SearchConfig) = delete;  // the model is held by reference

  Action plan(const State& root, Rng& rng) {
    states_.clear();
    action_nodes_.clear();
    simulations_ = 0;
    add_state(root);
    expand(0);
    for (int it = 0; it < cfg_.iterations; ++it) {
      simulate(0, cfg_.depth, rng);
      ++simulations_;
    }
    const auto stats = node_actions(0);
    return stats[best_by_value<ActionNode>(stats)].action;
  }

  [[nodiscard]] const std::vector<StateNode>& state_nodes() const { return states_; }
  [[nodiscard]] const std::vector<ActionNode>& action_nodes() const { return action_nodes_; }
  [[nodiscard]] int simulations() const { return simulations_; }

  [[nodiscard]] std::span<const ActionNode> node_actions(int node) const {
    return std::span<const ActionNode>(action_nodes_)
        .subspan(states_[node].first_action, states_[node].num_actions);
  }
  [[nodiscard]] std::span<const ActionNode> root_actions() const { return node_actions(0); }

  /// Every action node respects the widening bound.
  [[nodiscard]] bool dpw_bound_holds() const {
    for (const auto& an : action_nodes_)
      if (an.children.size() > dpw_child_bound(an.n, cfg_)) return false;
    return true;
  }

 private:
  int add_state(State s) {
    states_.push_back(StateNode{std::move(s), 0, 0, false});
    return static_cast<int>(states_.size()) - 1;
  }

  void expand(int node) {
    if (states_[node].expanded) return;
    const auto acts = model_.actions(states_[node].state);
    states_[node].first_action = static_cast<int>(action_nodes_.size());
    states_[node].num_actions = static_cast<int>(acts.size());
    for (const auto& a : acts) {
      ActionNode an;
      an.action = a;
      action_nodes_.push_back(std::move(an));
    }
    states_[node].expanded = true;
  }

  double simulate(int node, int depth, Rng& rng) {
    if (depth <= 0 || model_.is_terminal(states_[node].state)) return 0.0;
    expand(node);
    if (states_[node].num_actions == 0) return 0.0;

    const int ai = states_[node].first_action +
                   static_cast<int>(ucb_select<ActionNode>(node_actions(node), cfg_.exploration));

    double ret = 0.0;
    if (dpw_allows_new_child(action_nodes_[ai].children.size(), action_nodes_[ai].n, cfg_)) {
      auto [next, r] = model_.step(states_[node].state, action_nodes_[ai].action, rng);
      int child = -1;
      if constexpr (checks_repeat_state<M>()) {
        for (int c : action_nodes_[ai].children)
          if (states_[c].state == next) child = c;
      }
      const bool fresh = child < 0;
      if (fresh) {
        child = add_state(std::move(next));
        action_nodes_[ai].children.push_back(child);
      }
      action_nodes_[ai].transitions.emplace_back(child, r);
      const double tail = fresh ? model_.rollout(states_[child].state, depth - 1, cfg_.discount, rng)
                                : simulate(child, depth - 1, rng);
      ret = r + cfg_.discount * tail;
    } else {
      const auto& tr = action_nodes_[ai].transitions;
      const auto [child, r] = tr[uniform_index(rng, tr.size())];
      ret = r + cfg_.discount * simulate(child, depth - 1, rng);
    }
    action_nodes_[ai].record(ret);
    return ret;
  }

  const M& model_;
  SearchConfig cfg_;
  std::vector<StateNode> states_;
  std::vector<ActionNode> action_nodes_;
  int simulations_ = 0;
};

template <GenerativeMdp M>
typename M::Action mcts_dpw_plan(const M& model, const typename M::State& root,
                                 const SearchConfig& cfg, Rng& rng) {
  MctsDpw<M> search(model, cfg);
  return search.plan(root, rng);
}

}  // namespace lanechange
