#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "filter_support.hpp"
#include "lanechange/mcts.hpp"
#include "lanechange/planners.hpp"
#include "lanechange/pomcp.hpp"
#include "lanechange/problem.hpp"
#include "oracles/tiger.hpp"
#include "oracles/toy_mdp.hpp"
#include "support.hpp"

using namespace lanechange;
using testing_support::ego_only;

namespace {

std::vector<ActionStats> stats_of(std::initializer_list<std::pair<int, double>> v) {
  std::vector<ActionStats> out;
  for (auto [n, q] : v) {
    ActionStats s;
    s.n = n;
    s.q = q;
    out.push_back(s);
  }
  return out;
}

/// One action, one step, reward 3.
struct SingleAction {
  using State = int;
  using Action = int;
  std::vector<int> actions(const int&) const { return {7}; }
  std::pair<int, double> step(const int& s, int, Rng&) const { return {s + 1, 3.0}; }
  double rollout(const int&, int, double, Rng&) const { return 0.0; }
  bool is_terminal(const int& s) const { return s >= 1; }
};

SearchConfig toy_search(int iterations, int depth) {
  SearchConfig c;
  c.iterations = iterations;
  c.depth = depth;
  return c;
}

}  // namespace

TEST(Ucb, VisitBonusFavorsLessTriedAction) {
  const auto s = stats_of({{1, 0.0}, {2, 0.0}});
  EXPECT_NEAR(5.0 * std::sqrt(std::log(3.0)), 5.24, 0.01);
  EXPECT_NEAR(5.0 * std::sqrt(std::log(3.0) / 2.0), 3.71, 0.01);
  EXPECT_EQ(ucb_select<ActionStats>(s, 5.0), 0u);
}

TEST(Ucb, UntriedFirst) {
  const auto s = stats_of({{10, 100.0}, {0, 0.0}, {5, 50.0}});
  EXPECT_EQ(ucb_select<ActionStats>(s, 5.0), 1u);
}

TEST(Ucb, ZeroExplorationIsGreedy) {
  const auto s = stats_of({{10, 1.0}, {1, 3.0}, {5, 2.0}});
  EXPECT_EQ(ucb_select<ActionStats>(s, 0.0), 1u);
}

TEST(Ucb, ShiftInvariantWithEqualCounts) {
  const auto a = stats_of({{4, 1.0}, {4, 1.5}, {4, 0.2}});
  const auto b = stats_of({{4, 101.0}, {4, 101.5}, {4, 100.2}});
  EXPECT_EQ(ucb_select<ActionStats>(a, 5.0), ucb_select<ActionStats>(b, 5.0));
}

TEST(Dpw, BoundValues) {
  SearchConfig c;
  EXPECT_EQ(dpw_child_bound(256, c), 8u);
  EXPECT_EQ(dpw_child_bound(1, c), 4u);
  EXPECT_TRUE(dpw_allows_new_child(0, 0, c));
  EXPECT_FALSE(dpw_allows_new_child(8, 256, c));
  EXPECT_TRUE(dpw_allows_new_child(7, 256, c));
}

TEST(Mcts, SingleActionDepthOne) {
  SingleAction m;
  Rng rng(1);
  EXPECT_EQ(mcts_dpw_plan(m, 0, toy_search(10, 1), rng), 7);
}

TEST(Mcts, ToyMdpMatchesExpectimax) {
  oracle::ToyMdp m;
  const auto q = oracle::expectimax_q(m, oracle::ToyState{}, 2);
  ASSERT_DOUBLE_EQ(q[0], 1.5);
  ASSERT_DOUBLE_EQ(q[1], 2.5);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng(seed);
    MctsDpw<oracle::ToyMdp> search(m, toy_search(2000, 2));
    EXPECT_EQ(search.plan(oracle::ToyState{}, rng), 1);
    EXPECT_TRUE(search.dpw_bound_holds());
    EXPECT_NEAR(search.root_actions()[1].q, 2.5, 0.3);
  }
}

TEST(Mcts, BookkeepingIsConsistent) {
  oracle::ToyMdp m;
  Rng rng(3);
  MctsDpw<oracle::ToyMdp> search(m, toy_search(500, 2));
  search.plan(oracle::ToyState{}, rng);
  EXPECT_EQ(search.simulations(), 500);
  int root_total = 0;
  for (const auto& a : search.root_actions()) root_total += a.n;
  EXPECT_EQ(root_total, 500);
  for (const auto& a : search.action_nodes())
    if (a.n > 0) {
      EXPECT_NEAR(a.q, a.sum / a.n, 1e-9);
    }
}

TEST(Mcts, DpwBoundOnTrafficProblem) {
  const SimConfig cfg;
  Rng rng(4);
  const BehaviorPrior prior(ScenarioSpec::independent());
  const Scene s = initial_scene(prior, rng, cfg);
  TrafficMdp m(cfg, prior, 4.0);
  MctsDpw<TrafficMdp> search(m, SearchConfig{});
  const Scene copy = s;
  search.plan(s, rng);
  EXPECT_TRUE(search.dpw_bound_holds());
  EXPECT_EQ(s, copy);
  EXPECT_EQ(search.simulations(), 500);
}

TEST(Pomcp, TigerListensUnderUncertainty) {
  oracle::Tiger m;
  const auto q = oracle::tiger_q(0.5, 2, 1.0);
  ASSERT_GT(q[oracle::kListen], q[oracle::kOpenLeft]);
  ASSERT_GT(q[oracle::kListen], q[oracle::kOpenRight]);
  SearchConfig c = toy_search(20000, 2);
  c.exploration = 100.0;
  Rng rng(5);
  PomcpDpw<oracle::Tiger> search(m, c);
  const int a = search.plan([](Rng& r) { return uniform01(r) < 0.5 ? 0 : 1; }, rng);
  EXPECT_EQ(a, oracle::kListen);
  EXPECT_TRUE(search.dpw_bound_holds());
}

TEST(Pomcp, TigerOpensWhenConfident) {
  oracle::Tiger m;
  // Undiscounted, one more listen still pays off at this belief; a discount
  // of 0.5 makes opening now the better move.
  const double b = 0.97;
  ASSERT_GT(oracle::tiger_q(b, 2, 1.0)[oracle::kListen], oracle::tiger_q(b, 2, 1.0)[oracle::kOpenRight]);
  const auto q = oracle::tiger_q(b, 2, 0.5);
  ASSERT_GT(q[oracle::kOpenRight], q[oracle::kListen]);
  SearchConfig c = toy_search(20000, 2);
  c.exploration = 100.0;
  c.discount = 0.5;
  Rng rng(6);
  const int a = pomcp_dpw_plan(m, [b](Rng& r) { return uniform01(r) < b ? 0 : 1; }, c, rng);
  EXPECT_EQ(a, oracle::kOpenRight);
}

TEST(Pomcp, BoundAndBudgetOnTrafficProblem) {
  const SimConfig cfg;
  Rng rng(7);
  const BehaviorPrior prior(ScenarioSpec::fully_correlated());
  const Scene s = initial_scene(prior, rng, cfg);
  const auto belief = belief_init<Aggressiveness>(prior, observe(s), 100, rng);
  TrafficPomdp m(cfg, prior, 4.0);
  SearchConfig c;
  c.iterations = 300;
  PomcpDpw<TrafficPomdp> search(m, c);
  search.plan([&](Rng& r) { return sample_scene(belief, r); }, rng);
  EXPECT_EQ(search.simulations(), 300);
  EXPECT_TRUE(search.dpw_bound_holds());
  for (const auto& h : search.history_nodes()) {
    if (h.expanded && &h != &search.history_nodes().front()) {
      EXPECT_FALSE(h.particles.empty());
    }
  }
}

TEST(Pomcp, InsertOnReuseSwitchAddsParticles) {
  oracle::Tiger m;
  SearchConfig c = toy_search(2000, 3);
  c.k = 1.0;
  c.alpha = 0.01;
  c.insert_on_reuse = true;
  Rng rng(8);
  PomcpDpw<oracle::Tiger> with(m, c);
  with.plan([](Rng& r) { return uniform01(r) < 0.5 ? 0 : 1; }, rng);
  c.insert_on_reuse = false;
  PomcpDpw<oracle::Tiger> without(m, c);
  without.plan([](Rng& r) { return uniform01(r) < 0.5 ? 0 : 1; }, rng);
  auto count = [](const auto& nodes) {
    std::size_t n = 0;
    for (const auto& h : nodes) n += h.particles.size();
    return n;
  };
  EXPECT_GT(count(with.history_nodes()), count(without.history_nodes()));
}

TEST(Rollout, GeometricSumInTargetLane) {
  SimConfig cfg;
  cfg.max_vehicles = 1;
  const BehaviorPrior prior(ScenarioSpec::independent());
  const Scene s = ego_only(0, 4, 30);
  Rng rng(9);
  EXPECT_NEAR(rollout(s, 20, 1.0, 4.0, prior, rng, cfg), 20.0, 1e-12);
  EXPECT_NEAR(rollout(s, 5, 0.9, 4.0, prior, rng, cfg), (1 - std::pow(0.9, 5)) / 0.1, 1e-12);
  EXPECT_EQ(rollout(s, 0, 0.9, 4.0, prior, rng, cfg), 0.0);
}

TEST(Rollout, DeterministicForSeed) {
  const SimConfig cfg;
  const BehaviorPrior prior(ScenarioSpec::independent());
  Rng a(10), b(10);
  const Scene s = initial_scene(prior, a, cfg);
  initial_scene(prior, b, cfg);
  EXPECT_EQ(rollout(s, 20, 1.0, 4.0, prior, a, cfg), rollout(s, 20, 1.0, 4.0, prior, b, cfg));
}

TEST(Rollout, HeadsLeft) {
  const Scene s = ego_only(0, 1, 30);
  const auto set = available_action_set(s, SimConfig{});
  const Action a = rollout_action(set, s);
  EXPECT_EQ(a.lateral, 1);
  EXPECT_EQ(a.accel, 0.0);
}

TEST(Planners, SabMatchesOmniscientWhenEveryoneIsNormal) {
  PlannerSettings ps;
  Rng rng(11);
  Scene truth = initial_scene(BehaviorPrior::fixed(driver_types::kNormal), rng, ps.sim);
  SabPlanner sab(ps);
  Rng r1(12), r2(12);
  const Action a = sab.act(nullptr, observe(truth), r1);
  const Action b = mcts_dpw_plan(TrafficMdp(ps.sim, BehaviorPrior::fixed(driver_types::kNormal), ps.lambda), truth,
                                 ps.mcts, r2);
  EXPECT_EQ(a, b);
}

TEST(Planners, OmniscientNeedsTruth) {
  OmniscientPlanner p{PlannerSettings{}};
  Rng rng(13);
  EXPECT_TRUE(p.needs_truth());
  EXPECT_THROW(p.act(nullptr, observe(ego_only()), rng), std::logic_error);
}

TEST(Planners, ConcentratedBeliefAgreesWithMdpPlanner) {
  PlannerSettings ps;
  ps.pomcp.iterations = 1000;
  const Scene s = ego_only(0, 1, 30);
  Rng r1(14), r2(14);
  const Action mdp = mcts_dpw_plan(TrafficMdp(ps.sim, BehaviorPrior(ps.scenario), ps.lambda), s, ps.mcts, r1);
  PomcpPlanner<BehaviorParams> pomcp(ps);
  pomcp.reset(observe(s), r2);
  const Action pom = pomcp.act(nullptr, observe(s), r2);
  EXPECT_EQ(mdp.lateral, 1);
  EXPECT_EQ(pom.lateral, mdp.lateral);
}

TEST(Planners, MlmpcAssumptionApproachesTruth) {
  PlannerSettings ps;
  ps.scenario = ScenarioSpec::fully_correlated();
  MlmpcPlanner<Aggressiveness> p(ps);
  Rng world(15), prng(16);
  Scene s = testing_support::tracking_scene(0.8);
  p.reset(observe(s), prng);
  for (int k = 0; k < 50; ++k) {
    s = advance(s, {}, draw_noise(s, world), ps.sim, nullptr, false);
    p.update(Action{}, observe(s), prng);
  }
  const Scene assumed = most_likely_scene(p.tracker().belief());
  EXPECT_NEAR(assumed.vehicles[1].theta.desired_speed, s.vehicles[1].theta.desired_speed, 1.2);
}

TEST(Planners, FactoryPicksFilterVariant) {
  PlannerSettings ps;
  ps.scenario = ScenarioSpec::independent();
  EXPECT_NE(dynamic_cast<PomcpPlanner<BehaviorParams>*>(make_planner(PlannerKind::Pomcp, ps).get()), nullptr);
  ps.scenario = ScenarioSpec::correlated(0.75);
  EXPECT_NE(dynamic_cast<MlmpcPlanner<Aggressiveness>*>(make_planner(PlannerKind::Mlmpc, ps).get()), nullptr);
  EXPECT_THROW(parse_planner("greedy"), std::invalid_argument);
}
