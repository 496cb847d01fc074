// Command-line front end: `run` sweeps planners and lambdas and writes the
// two CSV files; `validate` runs quick invariant checks of the models.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lanechange/lanechange.hpp"

using namespace lanechange;
using nlohmann::json;

namespace {

/// Every option that can come from the config file or the command line.
struct Settings {
  std::optional<std::string> scenario;
  std::optional<double> rho;
  std::optional<std::string> planner;
  std::optional<std::vector<double>> lambdas;
  std::optional<int> episodes;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> workers;
  // Simulation and planner parameters.
  std::optional<double> dt, lane_change_rate, sigma_vel, b_max, b_hard, exploration, dpw_k, dpw_alpha, discount,
      gamma_lane;
  std::optional<std::size_t> max_vehicles, particles_joint, particles_aggressiveness;
  std::optional<int> depth, mcts_iterations, pomcp_iterations, step_cap;
};

template <typename F>
void for_each_field(Settings& s, F&& f) {
  f("scenario", s.scenario, "independent, correlated or full");
  f("rho", s.rho, "copula correlation of the correlated scenario");
  f("planner", s.planner, "omniscient, sab, mlmpc, pomcp or all");
  f("lambdas", s.lambdas, "hard-brake penalties, comma separated");
  f("episodes", s.episodes, "episodes per planner and lambda");
  f("seed", s.seed, "master seed");
  f("out", s.out, "output directory");
  f("workers", s.workers, "worker threads (0: one per core)");
  f("dt", s.dt, "simulation time step (s)");
  f("max-vehicles", s.max_vehicles, "vehicles on the road including the ego");
  f("lane-change-rate", s.lane_change_rate, "lateral speed (lanes/s)");
  f("sigma-vel", s.sigma_vel, "velocity noise std (m/s)");
  f("b-max", s.b_max, "physical braking limit (m/s^2)");
  f("b-hard", s.b_hard, "penalized braking limit (m/s^2)");
  f("exploration", s.exploration, "UCT exploration constant");
  f("dpw-k", s.dpw_k, "progressive widening linear parameter");
  f("dpw-alpha", s.dpw_alpha, "progressive widening exponent");
  f("depth", s.depth, "search depth");
  f("discount", s.discount, "search discount factor");
  f("mcts-iterations", s.mcts_iterations, "MCTS-DPW iterations per step");
  f("pomcp-iterations", s.pomcp_iterations, "POMCP-DPW iterations per step");
  f("gamma-lane", s.gamma_lane, "filter wrong-lane factor");
  f("particles-joint", s.particles_joint, "particles per car, joint filter");
  f("particles-aggressiveness", s.particles_aggressiveness, "particles per car, aggressiveness filter");
  f("step-cap", s.step_cap, "episode step limit");
}

std::string json_key(std::string flag) {
  for (char& c : flag)
    if (c == '-') c = '_';
  return flag;
}

/// Fills fields left unset on the command line from the config file.
void merge_file(Settings& s, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  const json j = json::parse(in);
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for_each_field(s, [&](const char* name, auto&, const char*) { known = known || json_key(name) == key; });
    if (!known) throw std::runtime_error("unknown key in " + path + ": " + key);
  }
  for_each_field(s, [&](const char* name, auto& field, const char*) {
    const auto key = json_key(name);
    if (!field && j.contains(key)) field = j.at(key).get<typename std::decay_t<decltype(field)>::value_type>();
  });
}

ExperimentConfig to_config(const Settings& s) {
  ExperimentConfig cfg;
  const auto kind = parse_scenario(s.scenario.value_or("independent"));
  if (kind == ScenarioKind::Correlated) cfg.scenario = ScenarioSpec::correlated(s.rho.value_or(0.75));
  else if (kind == ScenarioKind::FullyCorrelated) cfg.scenario = ScenarioSpec::fully_correlated();
  else cfg.scenario = ScenarioSpec::independent();
  const std::string planner = s.planner.value_or("all");
  if (planner != "all") cfg.planners = {parse_planner(planner)};
  if (s.lambdas) cfg.lambdas = *s.lambdas;
  if (s.episodes) cfg.episodes = *s.episodes;
  if (s.seed) cfg.seed = *s.seed;
  if (s.out) cfg.output_dir = *s.out;
  if (s.workers) cfg.workers = *s.workers;
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(cfg.sim.dt, s.dt);
  set(cfg.sim.max_vehicles, s.max_vehicles);
  set(cfg.sim.lane_change_rate, s.lane_change_rate);
  set(cfg.sim.sigma_vel, s.sigma_vel);
  set(cfg.filter.sigma_vel, s.sigma_vel);
  set(cfg.sim.b_max, s.b_max);
  set(cfg.sim.b_hard, s.b_hard);
  set(cfg.sim.step_cap, s.step_cap);
  for (SearchConfig* c : {&cfg.mcts, &cfg.pomcp}) {
    set(c->exploration, s.exploration);
    set(c->k, s.dpw_k);
    set(c->alpha, s.dpw_alpha);
    set(c->depth, s.depth);
    set(c->discount, s.discount);
  }
  set(cfg.mcts.iterations, s.mcts_iterations);
  set(cfg.pomcp.iterations, s.pomcp_iterations);
  set(cfg.filter.gamma_lane, s.gamma_lane);
  set(cfg.filter.particles_joint, s.particles_joint);
  set(cfg.filter.particles_aggressiveness, s.particles_aggressiveness);
  if (cfg.sim.max_vehicles < 1) throw std::invalid_argument("max-vehicles must be at least 1");
  if (!(cfg.sim.dt > 0.0)) throw std::invalid_argument("dt must be positive");
  cfg.validate();
  return cfg;
}

int run(const Settings& s, bool quiet) {
  const auto cfg = to_config(s);
  const auto table = run_experiment(cfg, [quiet](const EpisodeResult& e, std::size_t done, std::size_t total) {
    if (!quiet)
      std::fprintf(stderr, "\r%zu/%zu episodes (%s, lambda %g)   ", done, total,
                   std::string(planner_name(e.planner)).c_str(), e.lambda);
  });
  if (!quiet) std::fprintf(stderr, "\n");
  const auto files = emit_results(table, cfg.output_dir);
  for (const auto& p : table.summary)
    std::printf("%-10s lambda %-4g time %7.2f +- %5.2f s  brakes %5.2f +- %4.2f\n",
                std::string(planner_name(p.planner)).c_str(), p.lambda, p.mean_time_s, p.sem_time_s, p.mean_brakes,
                p.sem_brakes);
  std::printf("wrote %s and %s\n", files.episodes.string().c_str(), files.summary.string().c_str());
  return 0;
}

struct Check {
  std::string name;
  std::function<std::string(Rng&)> body;  ///< empty string on success
};

int validate(std::uint64_t seed, int steps) {
  const SimConfig sim;
  const std::vector<Check> checks = {
      {"idm equilibria",
       [](Rng& rng) -> std::string {
         for (int k = 0; k < 1000; ++k) {
           const auto th = sample_behavior(ScenarioSpec::independent(), rng);
           if (std::abs(idm_acceleration_raw(th, th.desired_speed, 0.0, kNoLeaderGap)) > 1e-9)
             return "free-flow residual";
           if (std::abs(idm_acceleration_raw(th, 0.0, 0.0, th.jam_distance)) > 1e-9) return "jam residual";
         }
         return {};
       }},
      {"behavior ranges",
       [](Rng& rng) -> std::string {
         for (auto spec : {ScenarioSpec::independent(), ScenarioSpec::correlated(0.75), ScenarioSpec::fully_correlated()})
           for (int k = 0; k < 10000; ++k)
             if (!within_table_ranges(sample_behavior(spec, rng))) return "sample outside Table I span";
         return {};
       }},
      {"traffic invariants",
       [&](Rng& rng) -> std::string {
         const BehaviorPrior prior(ScenarioSpec::independent());
         Scene s = initial_scene(prior, rng, sim);
         StepStats total;
         for (int k = 0; k < steps; ++k) {
           const auto set = available_action_set(s, sim);
           const auto slots = set.slots();
           const auto& u = set.actions[slots[uniform_index(rng, slots.size())]];
           StepStats st;
           s = transition(s, u, prior, rng, sim, &st);
           total += st;
           if (count_overlaps(s, sim.car_length) != 0) return "overlap at step " + std::to_string(k);
           if (!scene_invariants_hold(s, sim)) return "invariant broken at step " + std::to_string(k);
           if (ego_in_target_lane(s, sim)) s = initial_scene(prior, rng, sim);
         }
         if (total.forced_separations != 0) return std::to_string(total.forced_separations) + " forced separations";
         return {};
       }},
      {"filter weights",
       [&](Rng& rng) -> std::string {
         const BehaviorPrior prior(ScenarioSpec::fully_correlated());
         Scene s = initial_scene(prior, rng, sim);
         auto belief = belief_init<Aggressiveness>(prior, observe(s), 200, rng);
         FilterConfig f;
         const Action u{0.0, 0, false};
         for (int k = 0; k < 20; ++k) {
           if (!available_action_set(s, sim).contains(u)) break;
           s = transition(s, u, prior, rng, sim);
           belief = filter_update(belief, u, observe(s), prior, rng, sim, f);
           if (belief.cars.size() + 1 != s.size()) return "belief does not track the observed cars";
         }
         return {};
       }},
      {"search widening bound",
       [&](Rng& rng) -> std::string {
         const BehaviorPrior prior(ScenarioSpec::correlated(0.75));
         const Scene s = initial_scene(prior, rng, sim);
         const TrafficMdp mdp(sim, prior, 4.0);
         MctsDpw<TrafficMdp> m(mdp, SearchConfig{});
         m.plan(s, rng);
         if (!m.dpw_bound_holds()) return "MCTS-DPW bound violated";
         const auto belief = belief_init<Aggressiveness>(prior, observe(s), 100, rng);
         SearchConfig c;
         c.iterations = 1000;
         const TrafficPomdp pomdp(sim, prior, 4.0);
         PomcpDpw<TrafficPomdp> p(pomdp, c);
         p.plan([&](Rng& r) { return sample_scene(belief, r); }, rng);
         if (!p.dpw_bound_holds()) return "POMCP-DPW bound violated";
         return {};
       }},
  };
  int failures = 0;
  for (const auto& c : checks) {
    Rng rng(derive_seed(seed, c.name));
    std::string problem;
    try {
      problem = c.body(rng);
    } catch (const std::exception& e) {
      problem = e.what();
    }
    std::printf("%-24s %s%s\n", c.name.c_str(), problem.empty() ? "ok" : "FAILED: ", problem.c_str());
    if (!problem.empty()) ++failures;
  }
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freeway lane-change simulator and planning benchmark"};
  app.require_subcommand(1);

  Settings settings;
  std::string config_path;
  bool quiet = false;
  auto* run_cmd = app.add_subcommand("run", "run episodes and write episodes.csv and summary.csv");
  run_cmd->add_option("--config", config_path, "JSON file with any of the options below; flags win");
  run_cmd->add_flag("--quiet", quiet, "no progress output");
  for_each_field(settings, [&](const char* name, auto& field, const char* help) {
    using T = typename std::decay_t<decltype(field)>::value_type;
    auto* opt = run_cmd->add_option_function<T>(std::string("--") + name, [&field](const T& v) { field = v; }, help);
    if constexpr (std::is_same_v<T, std::vector<double>>) opt->delimiter(',');
  });

  std::uint64_t validate_seed = 1;
  int validate_steps = 2000;
  auto* validate_cmd = app.add_subcommand("validate", "run invariant checks of the models and planners");
  validate_cmd->add_option("--seed", validate_seed, "seed of the checks");
  validate_cmd->add_option("--steps", validate_steps, "random traffic steps to check");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) {
      if (!config_path.empty()) merge_file(settings, config_path);
      return run(settings, quiet);
    }
    return validate(validate_seed, validate_steps);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
