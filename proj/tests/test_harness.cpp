#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lanechange/harness.hpp"

using namespace lanechange;
namespace fs = std::filesystem;

namespace {

ExperimentConfig empty_road() {
  ExperimentConfig cfg;
  cfg.sim.max_vehicles = 1;
  cfg.episodes = 2;
  cfg.lambdas = {4};
  cfg.workers = 1;
  return cfg;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("lanechange_test_" + name);
  fs::remove_all(dir);
  return dir;
}

bool same_record(const EpisodeResult& a, const EpisodeResult& b) {
  return a.scenario == b.scenario && a.planner == b.planner && a.lambda == b.lambda && a.seed == b.seed &&
         a.steps == b.steps && a.time_s == b.time_s && a.hard_brakes == b.hard_brakes && a.capped == b.capped;
}

}  // namespace

TEST(RunEpisode, EmptyRoadTakesSixSteps) {
  const auto cfg = empty_road();
  for (auto kind : {PlannerKind::Omniscient, PlannerKind::Sab, PlannerKind::Mlmpc, PlannerKind::Pomcp}) {
    const auto r = run_episode(cfg, kind, 4.0, 99);
    EXPECT_EQ(r.steps, 6) << planner_name(kind);
    EXPECT_EQ(r.hard_brakes, 0);
    EXPECT_FALSE(r.capped);
    EXPECT_DOUBLE_EQ(r.time_s, 6 * cfg.sim.dt);
  }
}

TEST(RunEpisode, Deterministic) {
  ExperimentConfig cfg;
  cfg.scenario = ScenarioSpec::correlated(0.75);
  const auto a = run_episode(cfg, PlannerKind::Mlmpc, 2.0, 1234);
  const auto b = run_episode(cfg, PlannerKind::Mlmpc, 2.0, 1234);
  EXPECT_TRUE(same_record(a, b));
  EXPECT_EQ(a.overlaps, 0);
  EXPECT_EQ(a.stats.forced_separations, b.stats.forced_separations);
}

TEST(RunEpisode, StepCapIsRecorded) {
  auto cfg = empty_road();
  cfg.sim.step_cap = 3;
  const auto r = run_episode(cfg, PlannerKind::Sab, 1.0, 1);
  EXPECT_EQ(r.steps, 3);
  EXPECT_TRUE(r.capped);
}

TEST(RunEpisode, HigherLambdaBrakesLessForSab) {
  ExperimentConfig cfg;
  cfg.scenario = ScenarioSpec::fully_correlated();
  cfg.planners = {PlannerKind::Sab};
  cfg.lambdas = {1, 32};
  cfg.episodes = 200;
  cfg.workers = 1;
  const auto t = run_experiment(cfg);
  ASSERT_EQ(t.summary.size(), 2u);
  EXPECT_GE(t.summary[0].mean_brakes, t.summary[1].mean_brakes);
  EXPECT_LE(t.summary[0].mean_time_s, t.summary[1].mean_time_s);
}

TEST(Statistics, MeanAndSem) {
  const auto [m, s] = mean_and_sem({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(m, 2.5);
  EXPECT_NEAR(s, std::sqrt(5.0 / 3.0) / 2.0, 1e-15);
  const auto [m1, s1] = mean_and_sem({7.0});
  EXPECT_EQ(m1, 7.0);
  EXPECT_EQ(s1, 0.0);
}

TEST(RunExperiment, SingleEpisodeHasZeroSem) {
  auto cfg = empty_road();
  cfg.episodes = 1;
  cfg.planners = {PlannerKind::Sab};
  const auto t = run_experiment(cfg);
  ASSERT_EQ(t.summary.size(), 1u);
  EXPECT_EQ(t.summary[0].n, 1);
  EXPECT_EQ(t.summary[0].sem_time_s, 0.0);
  EXPECT_EQ(t.summary[0].sem_brakes, 0.0);
}

TEST(RunExperiment, OnePointPerPlannerAndLambda) {
  auto cfg = empty_road();
  cfg.episodes = 1;
  cfg.lambdas = {1, 2, 4, 8, 16, 32};
  const auto t = run_experiment(cfg);
  EXPECT_EQ(t.summary.size(), 24u);
  EXPECT_EQ(t.episodes.size(), 24u);
}

TEST(RunExperiment, RejectsBadConfig) {
  auto cfg = empty_road();
  cfg.episodes = 0;
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
  cfg.episodes = 1;
  cfg.lambdas = {0.0};
  EXPECT_THROW(run_experiment(cfg), std::invalid_argument);
}

TEST(RunExperiment, ReproducibleAndScheduleIndependent) {
  ExperimentConfig cfg;
  cfg.scenario = ScenarioSpec::fully_correlated();
  cfg.planners = {PlannerKind::Sab, PlannerKind::Mlmpc};
  cfg.lambdas = {1, 8};
  cfg.episodes = 3;
  cfg.workers = 1;
  const auto a = run_experiment(cfg);
  cfg.workers = 3;
  const auto b = run_experiment(cfg);
  const auto da = scratch("sched_a"), db = scratch("sched_b");
  emit_results(a, da);
  emit_results(b, db);
  EXPECT_EQ(slurp(da / "episodes.csv"), slurp(db / "episodes.csv"));
  EXPECT_EQ(slurp(da / "summary.csv"), slurp(db / "summary.csv"));
}

TEST(RunExperiment, PlannersShareTraffic) {
  EXPECT_EQ(episode_seed(5, 4.0, 2), episode_seed(5, 4, 2));
  EXPECT_NE(episode_seed(5, 4.0, 2), episode_seed(5, 4.0, 3));
  EXPECT_NE(episode_seed(5, 4.0, 2), episode_seed(5, 8.0, 2));
  EXPECT_NE(episode_seed(5, 4.0, 2), episode_seed(6, 4.0, 2));
}

TEST(EmitResults, HeadersAndRows) {
  auto cfg = empty_road();
  cfg.episodes = 1;
  cfg.planners = {PlannerKind::Sab};
  const auto t = run_experiment(cfg);
  const auto dir = scratch("rows");
  const auto files = emit_results(t, dir);
  std::ifstream ep(files.episodes), su(files.summary);
  std::string line;
  std::vector<std::string> ep_lines, su_lines;
  while (std::getline(ep, line)) ep_lines.push_back(line);
  while (std::getline(su, line)) su_lines.push_back(line);
  ASSERT_EQ(ep_lines.size(), 2u);
  ASSERT_EQ(su_lines.size(), 2u);
  EXPECT_EQ(ep_lines[0], "scenario,planner,lambda,seed,steps,time_s,hard_brakes,capped");
  EXPECT_EQ(su_lines[0], "scenario,planner,lambda,n,mean_time_s,sem_time_s,mean_brakes,sem_brakes");
  EXPECT_EQ(ep_lines[1].rfind("independent,sab,4,", 0), 0u);
}

TEST(EmitResults, RoundTripAndSummaryConsistency) {
  ExperimentConfig cfg;
  cfg.scenario = ScenarioSpec::fully_correlated();
  cfg.planners = {PlannerKind::Sab};
  cfg.lambdas = {0.3, 4};
  cfg.episodes = 4;
  cfg.workers = 1;
  const auto t = run_experiment(cfg);
  const auto files = emit_results(t, scratch("roundtrip"));
  const auto parsed = csv::read_episodes(files.episodes);
  ASSERT_EQ(parsed.size(), t.episodes.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) EXPECT_TRUE(same_record(parsed[i], t.episodes[i]));

  const auto again = summarize(parsed);
  std::ifstream su(files.summary);
  std::string line;
  std::getline(su, line);
  for (const auto& p : again) {
    ASSERT_TRUE(std::getline(su, line));
    const auto f = csv::split(line);
    ASSERT_EQ(f.size(), 8u);
    EXPECT_EQ(std::stoi(f[3]), p.n);
    EXPECT_NEAR(std::stod(f[4]), p.mean_time_s, 1e-9 * std::max(1.0, p.mean_time_s));
    EXPECT_NEAR(std::stod(f[5]), p.sem_time_s, 1e-9 * std::max(1.0, p.sem_time_s));
    EXPECT_NEAR(std::stod(f[6]), p.mean_brakes, 1e-9 * std::max(1.0, p.mean_brakes));
    EXPECT_NEAR(std::stod(f[7]), p.sem_brakes, 1e-9 * std::max(1.0, p.sem_brakes));
  }
}

TEST(EmitResults, UnwritablePathNamesFile) {
  auto cfg = empty_road();
  cfg.episodes = 1;
  cfg.planners = {PlannerKind::Sab};
  const auto t = run_experiment(cfg);
  const auto dir = scratch("blocked");
  fs::create_directories(dir);
  fs::create_directories(dir / "episodes.csv");  // a directory where the file should go
  try {
    emit_results(t, dir);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("episodes.csv"), std::string::npos);
  }
}

TEST(EmitResults, EmptyTableRejected) {
  EXPECT_THROW(emit_results(ResultTable{}, scratch("empty")), std::invalid_argument);
}
