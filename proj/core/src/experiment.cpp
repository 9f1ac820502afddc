#include "impact_game/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "impact_game/errors.hpp"
#include "impact_game/rng.hpp"

namespace impact {
namespace {

// Stream ids inside one run.
enum Stream : std::uint64_t {
  kCoin = 1,
  kNoise,
  kAgent1,
  kAgent2,
  kInit1,
  kInit2,
  kTestCoin,
  kTestNoise,
};

std::mt19937_64 stream(std::uint64_t run_seed, Stream s) {
  return std::mt19937_64(stream_seed(run_seed, s));
}

struct EpisodeTrace {
  PerAgent is{};
  PerAgent reward_sum{};
  std::array<std::vector<double>, 2> v;
  std::vector<AgentId> order;
  double terminal_inventory = 0.0;  // max |q_N| of the two agents
};

struct StepView {
  int t;
  std::array<Observation, 2> obs;
  PerAgent v;
  StepOutcome out;
  MarketState next;
};

// One episode under the coin-toss ordering. `on_step` runs after each
// committed step (learning hooks in here).
template <typename OnStep>
EpisodeTrace play_episode(const std::array<const AgentState*, 2>& agents, const MarketParams& p,
                          IntraStepMode mode, Policy policy, std::mt19937_64& coin,
                          std::mt19937_64& noise, std::array<std::mt19937_64*, 2> agent_rng,
                          OnStep&& on_step) {
  EpisodeTrace trace;
  trace.v[0].reserve(static_cast<std::size_t>(p.n_steps));
  trace.v[1].reserve(static_cast<std::size_t>(p.n_steps));
  MarketState state = init_episode(p);
  for (int t = 0; t < p.n_steps; ++t) {
    const AgentId first =
        static_cast<double>(coin() >> 11) * 0x1.0p-53 < 0.5 ? AgentId::kOne : AgentId::kTwo;
    const std::size_t a = index_of(first);
    const std::size_t b = index_of(other(first));

    StepView sv{};
    sv.t = t;
    sv.obs[a] = {t, state.inventory[a], state.mid};
    sv.v[a] = select_action(*agents[a], sv.obs[a], *agent_rng[a], policy);
    sv.obs[b] = {t, state.inventory[b], second_mover_mid(p, state.mid, sv.v[a], mode)};
    sv.v[b] = select_action(*agents[b], sv.obs[b], *agent_rng[b], policy);

    const double xi = std::normal_distribution<double>(0.0, 1.0)(noise);
    auto [next, out] = step(p, state, sv.v, first, xi, mode);
    sv.out = out;
    sv.next = next;
    for (std::size_t k = 0; k < 2; ++k) {
      trace.v[k].push_back(sv.v[k]);
      trace.reward_sum[k] += out.reward[k];
    }
    trace.order.push_back(first);
    on_step(sv);
    state = next;
  }
  trace.terminal_inventory = std::max(std::abs(state.inventory[0]), std::abs(state.inventory[1]));
  trace.is = {implementation_shortfall(p, state, AgentId::kOne),
              implementation_shortfall(p, state, AgentId::kTwo)};
  return trace;
}

std::string sigma_text(double s) {
  std::ostringstream os;
  os << s;
  return os.str();
}

}  // namespace

double scenario_sigma(const std::string& label) {
  if (label == "zero") return 1e-9;
  if (label == "moderate") return 1e-3;
  if (label == "large") return 1e-2;
  throw ConfigError("unknown scenario '" + label + "' (expected zero, moderate or large)");
}

bool is_known_scenario(const std::string& label) {
  return label == "zero" || label == "moderate" || label == "large";
}

MarketParams ExperimentConfig::train_market() const {
  MarketParams p = market;
  p.sigma = sigma_train;
  return p;
}

MarketParams ExperimentConfig::test_market() const {
  MarketParams p = market;
  p.sigma = sigma_test;
  return p;
}

std::string ExperimentConfig::label() const {
  if (!misspecified()) return scenario;
  return "train_" + sigma_text(sigma_train) + "_test_" + sigma_text(sigma_test);
}

void ExperimentConfig::validate() const {
  train_market().validate();
  test_market().validate();
  ddql.validate();
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (train_iters < 1) fail("train_iters must be >= 1");
  if (test_iters < 1) fail("test_iters must be >= 1");
  if (test_iters >= train_iters) fail("test_iters must be < train_iters");
  if (runs < 1) fail("runs must be >= 1");
  if (!is_known_scenario(scenario)) fail("unknown scenario '" + scenario + "'");
  if (front_points < 1) fail("front_points must be >= 1");
  if (!(front_margin > 0.0 && front_margin < 1.0)) fail("front_margin must lie in (0, 1)");
  if (threads < 0) fail("threads must be >= 0");
  if (log_every < 1) fail("log_every must be >= 1");
}

ExperimentConfig paper_scale_config() {
  ExperimentConfig c;
  c.runs = 20;
  c.train_iters = 5000;
  c.test_iters = 2500;
  return c;
}

References compute_references(const ExperimentConfig& config) {
  const MarketParams p = config.test_market();
  const auto model = QuadraticCostModel::from(p, config.mode);
  References refs;
  refs.nash = nash_schedule(NashInputs::symmetric(p, 0.0));
  refs.nash_is = expected_is(model, refs.nash.first, refs.nash.second);
  const Schedule twap = twap_schedule(p.q0, p.n_steps);
  refs.pareto_is = expected_is(model, twap, twap);
  const auto weights =
      front_weight_grid(model, p.n_steps, config.front_points, config.front_margin);
  refs.front = pareto_front(model, p.q0, p.n_steps, weights);
  return refs;
}

TrainedPair train_run(const ExperimentConfig& config, int run_id) {
  config.validate();
  const std::uint64_t seed = child_seed(config.seed, static_cast<std::uint64_t>(run_id));
  const MarketParams p = config.train_market();

  TrainedPair tp{run_id,
                 {make_agent(config.ddql, p, stream_seed(seed, kInit1)),
                  make_agent(config.ddql, p, stream_seed(seed, kInit2))},
                 {}};
  auto coin = stream(seed, kCoin);
  auto noise = stream(seed, kNoise);
  std::array<std::mt19937_64, 2> rng{stream(seed, kAgent1), stream(seed, kAgent2)};
  const int per_step = config.ddql.epsilon_counting == EpsilonCounting::kGlobal ? 2 : 1;

  tp.log.episode_reward.reserve(static_cast<std::size_t>(config.train_iters));
  tp.log.episode_is.reserve(static_cast<std::size_t>(config.train_iters));
  for (int it = 0; it < config.train_iters; ++it) {
    auto& agents = tp.agents;
    const auto trace = play_episode(
        {&agents[0], &agents[1]}, p, config.mode, Policy::kTrain, coin, noise,
        {&rng[0], &rng[1]}, [&](const StepView& sv) {
          const bool terminal = sv.t + 1 == p.n_steps;
          for (std::size_t k = 0; k < 2; ++k) {
            Transition tr;
            tr.g = sv.obs[k];
            tr.v = sv.v[k];
            tr.r = learning_reward(agents[k], sv.out.exec_price[k], sv.v[k]);
            tr.next = {sv.t + 1, sv.next.inventory[k], sv.next.mid};
            tr.terminal = terminal;
            agents[k].memory.push(tr);
          }
          for (std::size_t k = 0; k < 2; ++k) train_step(agents[k], rng[k]);
          for (std::size_t k = 0; k < 2; ++k) maintenance(agents[k], per_step);
          tp.log.first_mover_one += sv.out.first == AgentId::kOne ? 1 : 0;
          ++tp.log.steps;
        });
    tp.log.episode_reward.push_back(trace.reward_sum);
    tp.log.episode_is.push_back(trace.is);
    tp.log.max_terminal_inventory = std::max(tp.log.max_terminal_inventory, trace.terminal_inventory);
  }
  tp.log.clamp_events = tp.agents[0].scaler.clamp_events + tp.agents[1].scaler.clamp_events;
  return tp;
}

RunResult test_run(const std::array<AgentState, 2>& agents, const ExperimentConfig& config,
                   int run_id, const References& refs) {
  config.validate();
  const std::uint64_t seed = child_seed(config.seed, static_cast<std::uint64_t>(run_id));
  const MarketParams p = config.test_market();
  auto coin = stream(seed, kTestCoin);
  auto noise = stream(seed, kTestNoise);
  std::mt19937_64 unused(0);

  RunResult rr;
  rr.run_id = run_id;
  rr.is_pairs.reserve(static_cast<std::size_t>(config.test_iters));
  for (auto& s : rr.avg_schedule) s.assign(static_cast<std::size_t>(p.n_steps), 0.0);
  for (int it = 0; it < config.test_iters; ++it) {
    auto trace = play_episode({&agents[0], &agents[1]}, p, config.mode, Policy::kGreedy, coin, noise,
                              {&unused, &unused}, [](const StepView&) {});
    for (std::size_t k = 0; k < 2; ++k) {
      for (std::size_t t = 0; t < trace.v[k].size(); ++t) rr.avg_schedule[k][t] += trace.v[k][t];
    }
    rr.is_pairs.push_back(trace.is);
    rr.max_terminal_inventory = std::max(rr.max_terminal_inventory, trace.terminal_inventory);
    rr.orders.push_back(std::move(trace.order));
    if (it + 1 == config.test_iters) rr.last_schedule = std::move(trace.v);
  }
  for (auto& s : rr.avg_schedule) {
    for (auto& x : s) x /= config.test_iters;
  }
  rr.centroid = centroid(rr.is_pairs);
  rr.region = classify_point(rr.centroid, refs.nash_is, refs.pareto_is);
  return rr;
}

ScenarioReport run_scenario(const ExperimentConfig& config) {
  config.validate();
  ScenarioReport rep;
  rep.label = config.label();
  rep.config = config;
  rep.refs = compute_references(config);
  rep.runs.resize(static_cast<std::size_t>(config.runs));

  parallel_for(config.runs, config.threads, [&](int r) {
    TrainedPair tp = train_run(config, r);
    RunResult rr = test_run(tp.agents, config, r, rep.refs);
    const auto& rewards = tp.log.episode_reward;
    for (std::size_t start = 0; start < rewards.size();
         start += static_cast<std::size_t>(config.log_every)) {
      const std::size_t end =
          std::min(rewards.size(), start + static_cast<std::size_t>(config.log_every));
      PerAgent mean{0.0, 0.0};
      for (std::size_t i = start; i < end; ++i) {
        mean[0] += rewards[i][0];
        mean[1] += rewards[i][1];
      }
      const auto n = static_cast<double>(end - start);
      rr.train_reward_log.push_back({mean[0] / n, mean[1] / n});
    }
    rep.runs[static_cast<std::size_t>(r)] = std::move(rr);
  });

  for (const auto& rr : rep.runs) {
    for (std::size_t i = 0; i < kAllRegions.size(); ++i) {
      if (kAllRegions[i] == rr.region) ++rep.region_counts[i];
    }
  }
  return rep;
}

ScenarioReport run_misspecified(const ExperimentConfig& config) {
  if (!(config.sigma_train >= 0.0) || !(config.sigma_test >= 0.0)) {
    throw ConfigError("misspecified run needs sigma_train and sigma_test");
  }
  return run_scenario(config);
}

double random_policy_baseline(const ExperimentConfig& config, int episodes, std::uint64_t seed) {
  config.validate();
  if (episodes < 1) throw ConfigError("random baseline needs at least one episode");
  const MarketParams p = config.test_market();
  DdqlConfig cfg = config.ddql;
  cfg.epsilon0 = 1.0;
  cfg.hidden_layers = 0;  // the net is never consulted when epsilon = 1
  cfg.width = 1;
  const AgentState agent = make_agent(cfg, p, 0);
  std::mt19937_64 coin(stream_seed(seed, kCoin));
  std::mt19937_64 noise(stream_seed(seed, kNoise));
  std::array<std::mt19937_64, 2> rng{std::mt19937_64(stream_seed(seed, kAgent1)),
                                     std::mt19937_64(stream_seed(seed, kAgent2))};
  double total = 0.0;
  for (int e = 0; e < episodes; ++e) {
    const auto trace = play_episode({&agent, &agent}, p, config.mode, Policy::kTrain, coin, noise,
                                    {&rng[0], &rng[1]}, [](const StepView&) {});
    total += trace.is[0] + trace.is[1];
  }
  return total / episodes;
}

void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
  int workers = threads > 0 ? threads : static_cast<int>(std::thread::hardware_concurrency());
  workers = std::clamp(workers, 1, std::max(count, 1));
  if (workers == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace impact
