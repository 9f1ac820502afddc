#pragma once

#include <span>
#include <string_view>
#include <vector>

#include "impact_game/market.hpp"

namespace impact {

// Inputs to the two-player closed-form open-loop equilibrium.
struct NashInputs {
  MarketParams params;
  double lambda = 0.0;           // risk aversion, >= 0
  double total_inventory = 0.0;  // q1(0) + q2(0)
  double inventory_gap = 0.0;    // q1(0) - q2(0)

  // Both agents start with params.q0.
  static NashInputs symmetric(const MarketParams& params, double lambda = 0.0);
};

// Remaining inventory q[0..N]; q[0] is the endowment and q[N] = 0.
struct InventoryPath {
  std::vector<double> q;

  Schedule to_schedule() const;
};

// Equilibrium inventories (q1, q2) remaining at step t in [0, N].
// Throws SingularParameterError when alpha = 0.
PerAgent nash_inventory(const NashInputs& inputs, int t);
std::array<InventoryPath, 2> nash_inventory_paths(const NashInputs& inputs);
SchedulePair nash_schedule(const NashInputs& inputs);

Schedule twap_schedule(double q0, int n_steps);

// Sets the last entry to `target` minus the sum of the others, so the total
// matches up to one rounding. No-op when the sum is already exact.
void close_schedule(Schedule& v, double target);

// Expected implementation shortfall as a bilinear form in the two schedules.
// Positive values are costs.
struct QuadraticCostModel {
  double kappa = 0.0;
  double alpha = 0.0;
  IntraStepMode mode = IntraStepMode::kSequential;

  static QuadraticCostModel from(const MarketParams& params, IntraStepMode mode) {
    return {params.kappa, params.alpha, mode};
  }
};

// In sequential mode the second mover's extra cost kappa*v1*v2 is averaged
// over the fair coin toss.
PerAgent expected_is(const QuadraticCostModel& model, std::span<const double> v1,
                     std::span<const double> v2);

// Zero-noise shortfall for a realized sequence of first movers. Identical to
// expected_is in simultaneous mode.
PerAgent realized_is(const QuadraticCostModel& model, std::span<const double> v1,
                     std::span<const double> v2, std::span<const AgentId> first_movers);

double joint_cost(const QuadraticCostModel& model, const SchedulePair& pair);

// Schedule selling `q0` that minimizes the responder's expected IS against a
// fixed opponent. Throws SingularParameterError unless 2*alpha > kappa.
Schedule best_response(const QuadraticCostModel& model, std::span<const double> opponent,
                       double q0);

// Equilibrium of the discrete game under `model` (both first-order systems
// solved jointly). Both agents hold q0.
SchedulePair discrete_nash_schedule(const QuadraticCostModel& model, double q0, int n_steps);

struct ParetoFrontPoint {
  double weight = 0.0;
  SchedulePair schedules;
  PerAgent eis{};
};

// True when w*EIS1 + (1-w)*EIS2 is strictly convex on the admissible set.
bool scalarization_is_convex(const QuadraticCostModel& model, int n_steps, double w);

// Smallest w in (0, 0.5] above which the scalarization stays convex.
double critical_weight(const QuadraticCostModel& model, int n_steps);

// `count` weights, uniform on [w_lo, 1 - w_lo] with w_lo = w_c + margin*(0.5 - w_c).
// Symmetric about 0.5; contains 0.5 when count is odd.
std::vector<double> front_weight_grid(const QuadraticCostModel& model, int n_steps,
                                      int count = 101, double margin = 0.2);

// Minimizes w*EIS1 + (1-w)*EIS2 subject to both sum constraints for every w,
// then drops dominated points. Throws SingularParameterError when a weight
// falls outside the convex band.
std::vector<ParetoFrontPoint> pareto_front(const QuadraticCostModel& model, double q0,
                                           int n_steps, std::span<const double> weights);

// Gram determinant of the Fritz-John matrix with unit-normalized columns
// [grad EIS1, grad EIS2, grad g1, grad g2]; lies in [0, 1] and vanishes at
// stationary points of some scalarization.
double fritz_john_residual(const QuadraticCostModel& model, const SchedulePair& pair,
                           double q0);

// Position of an IS pair relative to the Nash and Pareto reference points.
// Boundaries go to the better region.
enum class EquilibriumRegion {
  kCollusive,        // inside [pareto, nash] on both axes
  kBothBetter,       // Q3 outside the collusive rectangle
  kPredatoryAgent1,  // Q2: agent 1 better, agent 2 worse
  kPredatoryAgent2,  // Q4: agent 2 better, agent 1 worse
  kBothWorse,        // Q1
};

inline constexpr std::array<EquilibriumRegion, 5> kAllRegions = {
    EquilibriumRegion::kCollusive, EquilibriumRegion::kBothBetter,
    EquilibriumRegion::kPredatoryAgent1, EquilibriumRegion::kPredatoryAgent2,
    EquilibriumRegion::kBothWorse};

std::string_view to_string(EquilibriumRegion region);
EquilibriumRegion parse_region(std::string_view text);

EquilibriumRegion classify_point(PerAgent is, PerAgent nash_is, PerAgent pareto_is);

PerAgent centroid(std::span<const PerAgent> points);

}  // namespace impact
