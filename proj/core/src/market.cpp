#include "impact_game/market.hpp"

#include <cmath>
#include <string>

#include "impact_game/errors.hpp"

namespace impact {

std::string_view to_string(IntraStepMode mode) {
  return mode == IntraStepMode::kSequential ? "sequential" : "simultaneous";
}

IntraStepMode parse_mode(std::string_view text) {
  if (text == "sequential") return IntraStepMode::kSequential;
  if (text == "simultaneous") return IntraStepMode::kSimultaneous;
  throw ConfigError("unknown intra-step mode '" + std::string(text) +
                    "' (expected sequential or simultaneous)");
}

void MarketParams::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("market: " + what); };
  if (!std::isfinite(s0)) fail("s0 must be finite");
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) fail("sigma must be >= 0");
  if (!(kappa >= 0.0) || !std::isfinite(kappa)) fail("kappa must be >= 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) fail("alpha must be >= 0");
  if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau must be > 0");
  if (n_steps < 1) fail("n_steps must be >= 1");
  if (!(q0 > 0.0) || !std::isfinite(q0)) fail("q0 must be > 0");
}

MarketState init_episode(const MarketParams& params) {
  params.validate();
  MarketState state;
  state.t = 0;
  state.mid = params.s0;
  state.inventory = {params.q0, params.q0};
  state.cash = {0.0, 0.0};
  return state;
}

double second_mover_mid(const MarketParams& params, double mid, double first_trade,
                        IntraStepMode mode) {
  return mode == IntraStepMode::kSequential ? mid - params.kappa * first_trade : mid;
}

std::pair<MarketState, StepOutcome> step(const MarketParams& params, const MarketState& state,
                                         PerAgent trade, AgentId first, double xi,
                                         IntraStepMode mode) {
  if (state.t >= params.n_steps) {
    throw EpisodeCompleteError("step() called after t = N (" + std::to_string(params.n_steps) +
                               ")");
  }
  if (!std::isfinite(xi) || !std::isfinite(trade[0]) || !std::isfinite(trade[1])) {
    throw NumericError("step() received a non-finite trade or noise draw");
  }

  const std::size_t a = index_of(first);
  const std::size_t b = index_of(other(first));

  StepOutcome out;
  out.first = first;
  out.observed_mid[a] = state.mid;
  out.observed_mid[b] = second_mover_mid(params, state.mid, trade[a], mode);

  MarketState next = state;
  for (std::size_t k = 0; k < 2; ++k) {
    out.exec_price[k] = out.observed_mid[k] - params.alpha * trade[k];
    out.reward[k] = out.exec_price[k] * trade[k];
    next.cash[k] += out.reward[k];
    next.inventory[k] -= trade[k];
  }
  // Same expression in both modes so the mid path does not depend on the mode.
  next.mid = state.mid - params.kappa * (trade[0] + trade[1]) +
             params.sigma * std::sqrt(params.tau) * xi;
  next.t = state.t + 1;
  return {next, out};
}

EpisodeRecord simulate_episode(const MarketParams& params, const SchedulePair& schedules,
                               std::span<const AgentId> order, std::span<const double> xi,
                               IntraStepMode mode) {
  const auto n = static_cast<std::size_t>(params.n_steps);
  if (schedules.first.size() != n || schedules.second.size() != n || order.size() != n ||
      xi.size() != n) {
    throw ShapeError("simulate_episode: schedules, order and noise need one entry per step");
  }
  EpisodeRecord rec;
  rec.params = params;
  rec.mode = mode;
  rec.schedules = schedules;
  rec.order.assign(order.begin(), order.end());
  rec.price_path.reserve(n + 1);

  MarketState state = init_episode(params);
  rec.price_path.push_back(state.mid);
  for (std::size_t t = 0; t < n; ++t) {
    auto [next, out] =
        step(params, state, {schedules.first[t], schedules.second[t]}, order[t], xi[t], mode);
    for (std::size_t k = 0; k < 2; ++k) {
      rec.exec_prices[k].push_back(out.exec_price[k]);
      rec.rewards[k].push_back(out.reward[k]);
    }
    state = next;
    rec.price_path.push_back(state.mid);
  }
  rec.final_state = state;
  for (std::size_t k = 0; k < 2; ++k) {
    rec.shortfall[k] = params.s0 * params.q0 - state.cash[k];
  }
  return rec;
}

double implementation_shortfall(const MarketParams& params, const MarketState& final_state,
                                AgentId agent) {
  const std::size_t k = index_of(agent);
  if (final_state.t != params.n_steps) {
    throw IncompleteEpisodeError("implementation shortfall requested at t = " +
                                 std::to_string(final_state.t) + " < N");
  }
  // Replayed schedules may leave rounding residue; anything above this is a
  // genuinely unliquidated position.
  if (std::abs(final_state.inventory[k]) > 1e-9 * params.q0) {
    throw IncompleteEpisodeError("agent " + std::to_string(k + 1) + " holds " +
                                 std::to_string(final_state.inventory[k]) +
                                 " shares at t = N");
  }
  return params.s0 * params.q0 - final_state.cash[k];
}

double implementation_shortfall(const EpisodeRecord& record, AgentId agent) {
  return implementation_shortfall(record.params, record.final_state, agent);
}

}  // namespace impact
