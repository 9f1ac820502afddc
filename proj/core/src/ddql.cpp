#include "impact_game/ddql.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "impact_game/errors.hpp"

namespace impact {
namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double scale_to_unit(double x, double lo, double hi, std::uint64_t& clamps) {
  if (x < lo) {
    ++clamps;
    x = lo;
  } else if (x > hi) {
    ++clamps;
    x = hi;
  }
  return hi == lo ? 0.0 : 2.0 * (x - lo) / (hi - lo) - 1.0;
}

}  // namespace

ReplayMemory::ReplayMemory(std::size_t max_len) : max_len_(max_len) {
  if (max_len < 2) throw ConfigError("replay memory length must be >= 2");
  buffer_.reserve(max_len);
}

void ReplayMemory::push(const Transition& tr) {
  buffer_.push_back(tr);
  if (buffer_.size() >= max_len_) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(max_len_ / 2));
    ++halvings_;
  }
}

std::vector<Transition> ReplayMemory::sample(std::size_t count, std::mt19937_64& rng) const {
  if (count > buffer_.size()) {
    throw ShapeError("replay sample of " + std::to_string(count) + " from " +
                     std::to_string(buffer_.size()) + " transitions");
  }
  // Floyd's algorithm: exactly `count` draws.
  std::vector<std::size_t> picked;
  picked.reserve(count);
  std::unordered_set<std::size_t> seen;
  const std::size_t n = buffer_.size();
  for (std::size_t j = n - count; j < n; ++j) {
    const std::size_t r = std::uniform_int_distribution<std::size_t>(0, j)(rng);
    const std::size_t choice = seen.contains(r) ? j : r;
    seen.insert(choice);
    picked.push_back(choice);
  }
  std::vector<Transition> out;
  out.reserve(count);
  for (const auto i : picked) out.push_back(buffer_[i]);
  return out;
}

FeatureScaler FeatureScaler::from(const MarketParams& p) {
  FeatureScaler s;
  s.q_abs = p.q0;
  s.n_steps = p.n_steps;
  s.s_max = p.s0;
  s.s_min = p.s0 - 3.0 * (p.kappa * 2.0 * p.q0 + 3.0 * p.sigma * std::sqrt(p.n_steps));
  return s;
}

Eigen::Vector4d FeatureScaler::normalize(const Observation& g, double v) const {
  Eigen::MatrixXd x(1, 4);
  fill(g, v, x, 0);
  return x.row(0).transpose();
}

void FeatureScaler::fill(const Observation& g, double v, Eigen::MatrixXd& x, Eigen::Index row) const {
  x(row, 0) = scale_to_unit(g.inventory, -q_abs, q_abs, clamp_events);
  x(row, 1) = scale_to_unit(static_cast<double>(g.t), 0.0, static_cast<double>(n_steps), clamp_events);
  x(row, 2) = scale_to_unit(g.mid, s_min, s_max, clamp_events);
  x(row, 3) = scale_to_unit(v, -q_abs, q_abs, clamp_events);
}

std::string_view to_string(RewardShaping s) { return s == RewardShaping::kRaw ? "raw" : "cost"; }

RewardShaping parse_reward_shaping(std::string_view text) {
  if (text == "raw") return RewardShaping::kRaw;
  if (text == "cost") return RewardShaping::kCost;
  throw ConfigError("unknown reward_shaping '" + std::string(text) + "' (expected raw or cost)");
}

std::string_view to_string(EpsilonCounting c) {
  return c == EpsilonCounting::kPerAgent ? "per_agent" : "global";
}

EpsilonCounting parse_epsilon_counting(std::string_view text) {
  if (text == "per_agent") return EpsilonCounting::kPerAgent;
  if (text == "global") return EpsilonCounting::kGlobal;
  throw ConfigError("unknown epsilon_counting '" + std::string(text) +
                    "' (expected per_agent or global)");
}

void DdqlConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("ddql: " + what); };
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (memory_len < 2 || memory_len / 2 < batch_size) fail("memory_len must be >= 2*batch_size");
  if (reset_rate < 1) fail("reset_rate must be >= 1");
  if (!(decay > 0.0 && decay <= 1.0)) fail("decay must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma <= 1.0)) fail("gamma must lie in [0, 1]");
  if (!(lr > 0.0) || !std::isfinite(lr)) fail("lr must be > 0");
  if (grid_size < 2) fail("grid_size must be >= 2");
  if (hidden_layers < 0) fail("hidden_layers must be >= 0");
  if (width < 1) fail("width must be >= 1");
  if (!(leaky_slope >= 0.0 && leaky_slope < 1.0)) fail("leaky_slope must lie in [0, 1)");
  if (!(epsilon0 > 0.0 && epsilon0 <= 1.0)) fail("epsilon0 must lie in (0, 1]");
}

AgentState make_agent(const DdqlConfig& cfg, const MarketParams& params, std::uint64_t init_seed) {
  cfg.validate();
  params.validate();
  const auto dims = q_net_dims(cfg.hidden_layers, cfg.width);
  AgentState a{cfg,
               params,
               FeatureScaler::from(params),
               Mlp::create(dims, cfg.leaky_slope, init_seed),
               Mlp{},
               AdamState{},
               ReplayMemory(static_cast<std::size_t>(cfg.memory_len)),
               cfg.epsilon0};
  a.q_tgt = a.q_main;
  a.adam = AdamState::for_net(a.q_main, cfg.lr);
  return a;
}

std::vector<double> action_grid(double q, int count) {
  if (count < 2) throw ConfigError("action grid needs at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) grid[static_cast<std::size_t>(k)] = q * k / (count - 1);
  grid.back() = q;
  return grid;
}

std::size_t greedy_index(const Mlp& net, const FeatureScaler& scaler, const Observation& g,
                         std::span<const double> grid) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(grid.size()), 4);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    scaler.fill(g, grid[k], x, static_cast<Eigen::Index>(k));
  }
  const Eigen::VectorXd q = forward_batch(net, x);
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    if (q(static_cast<Eigen::Index>(k)) > q(static_cast<Eigen::Index>(best))) best = k;
  }
  return best;
}

double select_action(const AgentState& agent, const Observation& g, std::mt19937_64& rng,
                     Policy policy) {
  const int n = agent.params.n_steps;
  if (g.t >= n) throw EpisodeCompleteError("select_action at t = N");
  if (g.t == n - 1) return g.inventory;

  if (policy == Policy::kTrain && unit_uniform(rng) < agent.epsilon) {
    const double mean = g.inventory / (n - g.t);
    const double sd = std::abs(mean);
    const double draw = sd > 0.0 ? std::normal_distribution<double>(mean, sd)(rng) : mean;
    return std::clamp(draw, -agent.params.q0, agent.params.q0);
  }
  const auto grid = action_grid(g.inventory, agent.cfg.grid_size);
  return grid[greedy_index(agent.q_main, agent.scaler, g, grid)];
}

double learning_reward(const AgentState& agent, double exec_price, double v) {
  const double r = exec_price * v;
  return agent.cfg.shaping == RewardShaping::kCost ? r - agent.params.s0 * v : r;
}

Eigen::VectorXd compute_targets(const AgentState& agent, std::span<const Transition> batch) {
  if (batch.empty()) throw EmptyInputError("compute_targets: empty batch");
  const int n = agent.params.n_steps;
  const auto k = static_cast<Eigen::Index>(agent.cfg.grid_size);
  Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));

  // Transitions whose next action must be chosen by the argmax.
  std::vector<std::size_t> free_idx;
  std::vector<std::vector<double>> grids;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    y(static_cast<Eigen::Index>(i)) = batch[i].r;
    if (!batch[i].terminal && agent.cfg.gamma != 0.0 && batch[i].next.t < n - 1) {
      free_idx.push_back(i);
      grids.push_back(action_grid(batch[i].next.inventory, agent.cfg.grid_size));
    }
  }

  std::vector<double> v_star(batch.size(), 0.0);
  if (!free_idx.empty()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(free_idx.size()) * k, 4);
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
      const auto& g = batch[free_idx[j]].next;
      for (Eigen::Index a = 0; a < k; ++a) {
        agent.scaler.fill(g, grids[j][static_cast<std::size_t>(a)], x,
                          static_cast<Eigen::Index>(j) * k + a);
      }
    }
    const Eigen::VectorXd q = forward_batch(agent.q_main, x);
    for (std::size_t j = 0; j < free_idx.size(); ++j) {
      const auto base = static_cast<Eigen::Index>(j) * k;
      Eigen::Index best = 0;
      for (Eigen::Index a = 1; a < k; ++a) {
        if (q(base + a) > q(base + best)) best = a;
      }
      v_star[free_idx[j]] = grids[j][static_cast<std::size_t>(best)];
    }
  }

  std::vector<std::size_t> eval_idx;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].terminal || agent.cfg.gamma == 0.0) continue;
    if (batch[i].next.t >= n - 1) v_star[i] = batch[i].next.inventory;
    eval_idx.push_back(i);
  }
  if (!eval_idx.empty()) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(eval_idx.size()), 4);
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      agent.scaler.fill(batch[eval_idx[j]].next, v_star[eval_idx[j]], x,
                        static_cast<Eigen::Index>(j));
    }
    const Eigen::VectorXd q = forward_batch(agent.q_tgt, x);
    for (std::size_t j = 0; j < eval_idx.size(); ++j) {
      y(static_cast<Eigen::Index>(eval_idx[j])) += agent.cfg.gamma * q(static_cast<Eigen::Index>(j));
    }
  }
  return y;
}

double train_on_batch(AgentState& agent, std::span<const Transition> batch) {
  TrainBatch tb;
  tb.targets = compute_targets(agent, batch);
  tb.inputs.resize(static_cast<Eigen::Index>(batch.size()), 4);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    agent.scaler.fill(batch[i].g, batch[i].v, tb.inputs, static_cast<Eigen::Index>(i));
  }
  auto res = backward(agent.q_main, tb);
  adam_update(agent.adam, agent.q_main, res.grads);
  ++agent.train_steps;
  return res.loss;
}

std::optional<double> train_step(AgentState& agent, std::mt19937_64& rng) {
  const auto b = static_cast<std::size_t>(agent.cfg.batch_size);
  if (agent.memory.size() < b) return std::nullopt;
  const auto batch = agent.memory.sample(b, rng);
  return train_on_batch(agent, batch);
}

void maintenance(AgentState& agent, int actions) {
  agent.action_counter += actions;
  while (agent.action_counter >= agent.cfg.reset_rate) {
    agent.action_counter -= agent.cfg.reset_rate;
    ++agent.decay_events;
    agent.epsilon = agent.cfg.epsilon0 * std::pow(agent.cfg.decay, agent.decay_events);
    copy_weights(agent.q_main, agent.q_tgt);
  }
}

}  // namespace impact
