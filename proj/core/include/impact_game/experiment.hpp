#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "impact_game/analytics.hpp"
#include "impact_game/ddql.hpp"
#include "impact_game/market.hpp"

namespace impact {

inline constexpr std::uint64_t kDefaultSeed = 20240611ULL;

// Named volatility levels: zero (1e-9), moderate (1e-3), large (1e-2).
double scenario_sigma(const std::string& label);
bool is_known_scenario(const std::string& label);

struct ExperimentConfig {
  MarketParams market;  // market.sigma is ignored; the phases use sigma_train / sigma_test
  int train_iters = 5000;
  int test_iters = 2500;
  int runs = 20;
  std::uint64_t seed = kDefaultSeed;
  std::string scenario = "zero";
  double sigma_train = 1e-9;
  double sigma_test = 1e-9;
  IntraStepMode mode = IntraStepMode::kSequential;
  DdqlConfig ddql;
  int front_points = 101;
  double front_margin = 0.2;
  int threads = 0;  // 0 = hardware concurrency
  int log_every = 100;

  bool misspecified() const { return sigma_train != sigma_test; }
  MarketParams train_market() const;
  MarketParams test_market() const;
  // Scenario label, or "train_<s>_test_<s>" when the sigmas differ.
  std::string label() const;
  void validate() const;

  bool operator==(const ExperimentConfig&) const = default;
};

// Full-size run: 20 runs, 5000 training and 2500 testing iterations.
ExperimentConfig paper_scale_config();

struct TrainLog {
  std::vector<PerAgent> episode_reward;  // sum of exec*v per iteration
  std::vector<PerAgent> episode_is;
  std::uint64_t first_mover_one = 0;  // steps where agent 1 moved first
  std::uint64_t steps = 0;
  std::uint64_t clamp_events = 0;
  double max_terminal_inventory = 0.0;  // max |q_N| over all episodes and agents
};

struct TrainedPair {
  int run_id = 0;
  std::array<AgentState, 2> agents;
  TrainLog log;
};

struct RunResult {
  int run_id = 0;
  std::vector<PerAgent> is_pairs;
  std::vector<std::vector<AgentId>> orders;  // first movers per test iteration
  std::array<std::vector<double>, 2> avg_schedule;
  std::array<std::vector<double>, 2> last_schedule;
  PerAgent centroid{};
  EquilibriumRegion region = EquilibriumRegion::kBothWorse;
  double max_terminal_inventory = 0.0;
  std::vector<PerAgent> train_reward_log;  // mean episode reward per log window
};

struct References {
  PerAgent nash_is{};
  PerAgent pareto_is{};
  SchedulePair nash;
  std::vector<ParetoFrontPoint> front;
};

// Nash and TWAP expected shortfalls (lambda = 0) plus the weighted-sum front.
References compute_references(const ExperimentConfig& config);

struct ScenarioReport {
  std::string label;
  ExperimentConfig config;
  std::vector<RunResult> runs;
  References refs;
  std::array<int, 5> region_counts{};  // indexed like kAllRegions
};

TrainedPair train_run(const ExperimentConfig& config, int run_id);

// Greedy play of trained agents; epsilon is ignored.
RunResult test_run(const std::array<AgentState, 2>& agents, const ExperimentConfig& config,
                   int run_id, const References& refs);

ScenarioReport run_scenario(const ExperimentConfig& config);

// Same pipeline; requires both sigmas set and labels the report with the pair.
ScenarioReport run_misspecified(const ExperimentConfig& config);

// Mean joint shortfall of two always-exploring agents over `episodes` test-market episodes.
double random_policy_baseline(const ExperimentConfig& config, int episodes, std::uint64_t seed);

// Runs fn(i) for i in [0, count) on up to `threads` workers; exceptions are rethrown.
void parallel_for(int count, int threads, const std::function<void(int)>& fn);

}  // namespace impact
