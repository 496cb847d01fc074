#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "lanechange/behavior_gen.hpp"
#include "lanechange/planners.hpp"
#include "lanechange/pomdp.hpp"
#include "lanechange/random.hpp"

namespace lanechange {

struct ExperimentConfig {
  ScenarioSpec scenario;
  std::vector<PlannerKind> planners{PlannerKind::Omniscient, PlannerKind::Sab, PlannerKind::Mlmpc,
                                    PlannerKind::Pomcp};
  std::vector<double> lambdas{1, 2, 4, 8, 16, 32};
  int episodes = 500;
  std::uint64_t seed = 1;
  SimConfig sim;
  SearchConfig mcts;
  SearchConfig pomcp = PlannerSettings{}.pomcp;
  FilterConfig filter;
  std::string output_dir = "results";
  unsigned workers = 0;  ///< 0: one per hardware thread

  void validate() const {
    if (episodes < 1) throw std::invalid_argument("episodes must be at least 1");
    if (planners.empty()) throw std::invalid_argument("no planner selected");
    if (lambdas.empty()) throw std::invalid_argument("no lambda values");
    for (double l : lambdas)
      if (!(l > 0.0)) throw std::invalid_argument("lambda values must be positive");
  }

  [[nodiscard]] PlannerSettings planner_settings(double lambda) const {
    PlannerSettings s;
    s.sim = sim;
    s.mcts = mcts;
    s.pomcp = pomcp;
    s.filter = filter;
    s.scenario = scenario;
    s.lambda = lambda;
    return s;
  }
};

struct EpisodeResult {
  ScenarioKind scenario = ScenarioKind::Independent;
  PlannerKind planner = PlannerKind::Omniscient;
  double lambda = 0.0;
  std::uint64_t seed = 0;
  int steps = 0;
  double time_s = 0.0;
  int hard_brakes = 0;
  bool capped = false;
  // Diagnostics, not written to the per-episode file.
  double wall_s = 0.0;
  int overlaps = 0;
  StepStats stats;
  int vehicle_steps = 0;  ///< non-ego vehicle updates, denominator for stats rates
};

struct SummaryPoint {
  ScenarioKind scenario = ScenarioKind::Independent;
  PlannerKind planner = PlannerKind::Omniscient;
  double lambda = 0.0;
  int n = 0;
  double mean_time_s = 0.0;
  double sem_time_s = 0.0;
  double mean_brakes = 0.0;
  double sem_brakes = 0.0;
};

struct ResultTable {
  std::vector<EpisodeResult> episodes;  ///< ordered by (planner, lambda, episode index)
  std::vector<SummaryPoint> summary;
};

/// Seed of one episode. It deliberately leaves out the planner so every
/// planner faces the same traffic at a given (lambda, index).
inline std::uint64_t episode_seed(std::uint64_t master, double lambda, int index) {
  return derive_seed(master, "episode", lambda, index);
}

/// Runs one episode from `seed`. Traffic and the planner draw from separate
/// streams derived from it, so the traffic does not depend on how many
/// random numbers the planner consumes.
inline EpisodeResult run_episode(const ExperimentConfig& cfg, PlannerKind kind, double lambda,
                                 std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  const SimConfig& sim = cfg.sim;
  const BehaviorPrior prior(cfg.scenario);
  Rng world(derive_seed(seed, "world"));
  Rng planner_rng(derive_seed(seed, planner_name(kind)));

  EpisodeResult r;
  r.scenario = cfg.scenario.kind;
  r.planner = kind;
  r.lambda = lambda;
  r.seed = seed;

  Scene s = initial_scene(prior, world, sim);
  auto planner = make_planner(kind, cfg.planner_settings(lambda));
  Observation o = observe(s);
  planner->reset(o, planner_rng);

  int step = 0;
  while (!is_terminal(s, step, sim)) {
    const Action u = planner->act(planner->needs_truth() ? &s : nullptr, o, planner_rng);
    StepStats st;
    Scene next = transition(s, u, prior, world, sim, &st);
    r.stats += st;
    r.vehicle_steps += static_cast<int>(s.size()) - 1;
    r.hard_brakes += count_hard_brakes(s, next, sim);
    r.overlaps += count_overlaps(next, sim.car_length);
    s = std::move(next);
    o = observe(s);
    ++step;
    if (!is_terminal(s, step, sim)) planner->update(u, o, planner_rng);
  }
  r.steps = step;
  r.time_s = step * sim.dt;
  r.capped = !ego_in_target_lane(s, sim);
  r.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return r;
}

/// Mean and standard error (unbiased sample std / sqrt(n)); the error of a
/// single sample is reported as zero.
inline std::pair<double, double> mean_and_sem(const std::vector<double>& xs) {
  const auto n = static_cast<double>(xs.size());
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

inline std::vector<SummaryPoint> summarize(const std::vector<EpisodeResult>& episodes) {
  std::vector<SummaryPoint> out;
  std::size_t i = 0;
  while (i < episodes.size()) {
    std::size_t j = i;
    std::vector<double> times, brakes;
    while (j < episodes.size() && episodes[j].planner == episodes[i].planner &&
           episodes[j].lambda == episodes[i].lambda) {
      times.push_back(episodes[j].time_s);
      brakes.push_back(episodes[j].hard_brakes);
      ++j;
    }
    SummaryPoint p;
    p.scenario = episodes[i].scenario;
    p.planner = episodes[i].planner;
    p.lambda = episodes[i].lambda;
    p.n = static_cast<int>(times.size());
    std::tie(p.mean_time_s, p.sem_time_s) = mean_and_sem(times);
    std::tie(p.mean_brakes, p.sem_brakes) = mean_and_sem(brakes);
    out.push_back(p);
    i = j;
  }
  return out;
}

/// Runs every (planner, lambda, episode) job on `cfg.workers` threads.
/// Results land in fixed slots, so the table does not depend on scheduling.
/// Throws std::runtime_error if any episode records a vehicle overlap.
template <typename Progress>
ResultTable run_experiment(const ExperimentConfig& cfg, Progress&& progress) {
  cfg.validate();
  struct Job {
    PlannerKind planner;
    double lambda;
    int index;
  };
  std::vector<Job> jobs;
  for (auto p : cfg.planners)
    for (double l : cfg.lambdas)
      for (int e = 0; e < cfg.episodes; ++e) jobs.push_back({p, l, e});

  ResultTable table;
  table.episodes.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr failure;
  std::size_t done = 0;

  auto worker = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= jobs.size()) return;
      try {
        const auto& j = jobs[k];
        table.episodes[k] = run_episode(cfg, j.planner, j.lambda, episode_seed(cfg.seed, j.lambda, j.index));
        std::lock_guard lock(mu);
        progress(table.episodes[k], ++done, jobs.size());
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
        return;
      }
    }
  };

  unsigned n_workers = cfg.workers != 0 ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  n_workers = static_cast<unsigned>(std::min<std::size_t>(n_workers, jobs.size()));
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    for (unsigned w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (const auto& e : table.episodes)
    if (e.overlaps != 0)
      throw std::runtime_error("vehicle overlap recorded in episode with seed " + std::to_string(e.seed));
  table.summary = summarize(table.episodes);
  return table;
}

inline ResultTable run_experiment(const ExperimentConfig& cfg) {
  return run_experiment(cfg, [](const EpisodeResult&, std::size_t, std::size_t) {});
}

namespace csv {

inline constexpr const char* kEpisodeHeader =
    "scenario,planner,lambda,seed,steps,time_s,hard_brakes,capped";
inline constexpr const char* kSummaryHeader =
    "scenario,planner,lambda,n,mean_time_s,sem_time_s,mean_brakes,sem_brakes";

/// Shortest-round-trip-safe decimal text of a double.
inline std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string episode_row(const EpisodeResult& e) {
  return std::string(scenario_name(e.scenario)) + ',' + std::string(planner_name(e.planner)) + ',' +
         number(e.lambda) + ',' + std::to_string(e.seed) + ',' + std::to_string(e.steps) + ',' +
         number(e.time_s) + ',' + std::to_string(e.hard_brakes) + ',' + (e.capped ? "1" : "0");
}

inline std::string summary_row(const SummaryPoint& p) {
  return std::string(scenario_name(p.scenario)) + ',' + std::string(planner_name(p.planner)) + ',' +
         number(p.lambda) + ',' + std::to_string(p.n) + ',' + number(p.mean_time_s) + ',' +
         number(p.sem_time_s) + ',' + number(p.mean_brakes) + ',' + number(p.sem_brakes);
}

inline std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

/// Parses one per-episode row (diagnostic fields stay default).
inline EpisodeResult parse_episode_row(const std::string& line) {
  const auto f = split(line);
  if (f.size() != 8) throw std::invalid_argument("malformed episode row: " + line);
  EpisodeResult e;
  e.scenario = parse_scenario(f[0]);
  e.planner = parse_planner(f[1]);
  e.lambda = std::stod(f[2]);
  e.seed = std::stoull(f[3]);
  e.steps = std::stoi(f[4]);
  e.time_s = std::stod(f[5]);
  e.hard_brakes = std::stoi(f[6]);
  e.capped = f[7] == "1";
  return e;
}

inline std::vector<EpisodeResult> read_episodes(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != kEpisodeHeader) throw std::runtime_error("unexpected header in " + path.string());
  std::vector<EpisodeResult> out;
  while (std::getline(in, line))
    if (!line.empty()) out.push_back(parse_episode_row(line));
  return out;
}

}  // namespace csv

struct OutputFiles {
  std::filesystem::path episodes;
  std::filesystem::path summary;
};

/// Writes episodes.csv and summary.csv into `dir`, creating it if needed.
inline OutputFiles emit_results(const ResultTable& table, const std::filesystem::path& dir) {
  if (table.episodes.empty()) throw std::invalid_argument("empty result table");
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  OutputFiles files{dir / "episodes.csv", dir / "summary.csv"};

  auto write = [](const std::filesystem::path& path, const char* header, const auto& rows, auto fmt) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << header << '\n';
    for (const auto& r : rows) out << fmt(r) << '\n';
    out.flush();
    if (!out) throw std::runtime_error("cannot write " + path.string());
  };
  write(files.episodes, csv::kEpisodeHeader, table.episodes, csv::episode_row);
  write(files.summary, csv::kSummaryHeader, table.summary, csv::summary_row);
  return files;
}

}  // namespace lanechange
