#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "impact_game/market.hpp"
#include "impact_game/mlp.hpp"

namespace impact {

// What an agent sees before choosing: step index, own inventory, mid.
struct Observation {
  int t = 0;
  double inventory = 0.0;
  double mid = 0.0;

  bool operator==(const Observation&) const = default;
};

struct Transition {
  Observation g;
  double v = 0.0;
  double r = 0.0;
  Observation next;
  bool terminal = false;  // next.t == N

  bool operator==(const Transition&) const = default;
};

// FIFO buffer that drops its oldest half whenever it fills up.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t max_len = 15000);

  void push(const Transition& tr);
  std::size_t size() const { return buffer_.size(); }
  std::size_t max_len() const { return max_len_; }
  std::size_t halvings() const { return halvings_; }
  const Transition& operator[](std::size_t i) const { return buffer_[i]; }
  std::span<const Transition> contents() const { return buffer_; }

  // `count` distinct transitions, uniformly without replacement.
  std::vector<Transition> sample(std::size_t count, std::mt19937_64& rng) const;

 private:
  std::vector<Transition> buffer_;
  std::size_t max_len_;
  std::size_t halvings_ = 0;
};

// Affine map of (q, t, S, v) onto [-1, 1]. Values outside the ranges are
// clamped and counted.
struct FeatureScaler {
  double q_abs = 100.0;  // q and v span [-q_abs, q_abs]
  int n_steps = 10;
  double s_min = 0.0;
  double s_max = 10.0;
  mutable std::uint64_t clamp_events = 0;

  // Price band [S0 - 3*(kappa*2*q0 + 3*sigma*sqrt(N)), S0].
  static FeatureScaler from(const MarketParams& params);

  Eigen::Vector4d normalize(const Observation& g, double v) const;
  // Writes the features into row `row` of `x` (x must have 4 columns).
  void fill(const Observation& g, double v, Eigen::MatrixXd& x, Eigen::Index row) const;
};

enum class RewardShaping : std::uint8_t {
  kRaw,   // exec * v
  kCost,  // exec * v - S0 * v; same greedy policy since every episode sells q0
};
std::string_view to_string(RewardShaping s);
RewardShaping parse_reward_shaping(std::string_view text);

enum class EpsilonCounting : std::uint8_t { kPerAgent, kGlobal };
std::string_view to_string(EpsilonCounting c);
EpsilonCounting parse_epsilon_counting(std::string_view text);

struct DdqlConfig {
  int batch_size = 64;
  int memory_len = 15000;
  int reset_rate = 75;  // m
  double decay = 0.995;  // c
  double gamma = 1.0;
  double lr = 1e-4;
  int grid_size = 101;
  int hidden_layers = 5;
  int width = 30;
  double leaky_slope = 0.01;
  double epsilon0 = 1.0;
  RewardShaping shaping = RewardShaping::kCost;
  EpsilonCounting epsilon_counting = EpsilonCounting::kPerAgent;

  void validate() const;
  bool operator==(const DdqlConfig&) const = default;
};

struct AgentState {
  DdqlConfig cfg;
  MarketParams params;
  FeatureScaler scaler;
  Mlp q_main;
  Mlp q_tgt;
  AdamState adam;
  ReplayMemory memory;
  double epsilon = 1.0;
  int decay_events = 0;
  int action_counter = 0;
  std::uint64_t train_steps = 0;
};

// Fresh agent: q_tgt starts as a copy of q_main.
AgentState make_agent(const DdqlConfig& cfg, const MarketParams& params, std::uint64_t init_seed);

// `count` points evenly spaced on [0, q], endpoints exact.
std::vector<double> action_grid(double q, int count);

// Index of the largest Q over the grid at `g`; ties go to the smallest index.
std::size_t greedy_index(const Mlp& net, const FeatureScaler& scaler, const Observation& g,
                         std::span<const double> grid);

enum class Policy : std::uint8_t { kTrain, kGreedy };

// Last step sells the remaining inventory; otherwise epsilon-greedy (kTrain)
// or pure exploitation (kGreedy). Throws EpisodeCompleteError at t = N.
double select_action(const AgentState& agent, const Observation& g, std::mt19937_64& rng,
                     Policy policy = Policy::kTrain);

// Reward the learner stores for a trade of v at execution price `exec`.
double learning_reward(const AgentState& agent, double exec_price, double v);

// y = r when terminal, else r + gamma * Q_tgt(next, v*) with v* the Q_main
// argmax at `next` (the remaining inventory when next is the last step).
Eigen::VectorXd compute_targets(const AgentState& agent, std::span<const Transition> batch);

// Backprop + Adam on q_main for the given transitions; returns the pre-update loss.
double train_on_batch(AgentState& agent, std::span<const Transition> batch);

// Samples a batch and trains; nullopt while memory holds fewer than b entries.
std::optional<double> train_step(AgentState& agent, std::mt19937_64& rng);

// Counts `actions`; every m of them decays epsilon and syncs q_tgt.
void maintenance(AgentState& agent, int actions = 1);

}  // namespace impact
