#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace impact {

// Per-agent quantity, index 0 is agent 1 and index 1 is agent 2.
using PerAgent = std::array<double, 2>;

// Traded quantities per step; positive sells, negative buys.
using Schedule = std::vector<double>;

struct SchedulePair {
  Schedule first;
  Schedule second;

  const Schedule& operator[](std::size_t agent) const { return agent == 0 ? first : second; }
  Schedule& operator[](std::size_t agent) { return agent == 0 ? first : second; }
  bool operator==(const SchedulePair&) const = default;
};

enum class AgentId : std::uint8_t { kOne = 0, kTwo = 1 };

constexpr std::size_t index_of(AgentId id) { return static_cast<std::size_t>(id); }
constexpr AgentId other(AgentId id) { return id == AgentId::kOne ? AgentId::kTwo : AgentId::kOne; }

// How two trades submitted in the same step hit the mid-price.
//  kSequential:   the second trader executes against the mid already moved by
//                 the first trader's permanent impact.
//  kSimultaneous: both execute against the pre-step mid.
// The end-of-step mid is the same in both modes.
enum class IntraStepMode : std::uint8_t { kSequential, kSimultaneous };

std::string_view to_string(IntraStepMode mode);
IntraStepMode parse_mode(std::string_view text);

// Linear-impact market constants. `alpha` is already per step (alpha-tilde/tau).
struct MarketParams {
  double s0 = 10.0;
  double sigma = 0.0;
  double kappa = 0.001;
  double alpha = 0.002;
  double tau = 1.0;
  int n_steps = 10;
  double q0 = 100.0;

  // Throws ConfigError on violated invariants.
  void validate() const;

  bool operator==(const MarketParams&) const = default;
};

struct MarketState {
  int t = 0;
  double mid = 0.0;
  PerAgent inventory{};
  PerAgent cash{};

  bool operator==(const MarketState&) const = default;
};

struct StepOutcome {
  PerAgent exec_price{};
  PerAgent reward{};
  // Mid each agent traded against (differs from the pre-step mid only for the
  // second mover in sequential mode).
  PerAgent observed_mid{};
  AgentId first = AgentId::kOne;
};

MarketState init_episode(const MarketParams& params);

// Mid the second mover sees before trading, given the first mover's trade.
double second_mover_mid(const MarketParams& params, double mid, double first_trade,
                        IntraStepMode mode);

// Advances one step. `xi` is a standard normal draw applied once after both
// trades. Throws EpisodeCompleteError when state.t == N.
std::pair<MarketState, StepOutcome> step(const MarketParams& params, const MarketState& state,
                                         PerAgent trade, AgentId first, double xi,
                                         IntraStepMode mode);

struct EpisodeRecord {
  MarketParams params;
  IntraStepMode mode = IntraStepMode::kSequential;
  SchedulePair schedules;
  std::vector<AgentId> order;
  std::vector<double> price_path;  // S_0 .. S_N
  std::array<std::vector<double>, 2> exec_prices;
  std::array<std::vector<double>, 2> rewards;
  MarketState final_state;
  PerAgent shortfall{};
};

// Replays fixed schedules. `order` and `xi` must have one entry per step.
EpisodeRecord simulate_episode(const MarketParams& params, const SchedulePair& schedules,
                               std::span<const AgentId> order, std::span<const double> xi,
                               IntraStepMode mode);

// S0*q0 - cash. Throws IncompleteEpisodeError unless t = N and inventory is 0.
double implementation_shortfall(const EpisodeRecord& record, AgentId agent);
double implementation_shortfall(const MarketParams& params, const MarketState& final_state,
                                AgentId agent);

}  // namespace impact
