#pragma once

// Shared oracles and generators for the unit, property and acceptance tests.

#include <algorithm>
#include <boost/multiprecision/cpp_dec_float.hpp>
#include <cmath>
#include <random>
#include <vector>

#include "impact_game/analytics.hpp"
#include "impact_game/experiment.hpp"
#include "impact_game/market.hpp"
#include "impact_game/mlp.hpp"

namespace oracle {

using impact::AgentId;
using impact::IntraStepMode;
using impact::MarketParams;
using impact::PerAgent;
using impact::Schedule;
using impact::SchedulePair;

// Frozen reference values, computed once with 50-digit arithmetic.
inline constexpr double kNashQ5 = 30.294071603459273;       // q*(5), default market, lambda 0
inline constexpr double kTwapSimultaneous = 11.0;          // per-agent E[IS], both TWAP
inline constexpr double kTwapSequential = 11.5;
inline constexpr double kNashIsSequential = 11.827911975062597;  // closed-form schedule
inline constexpr double kNashIsSimultaneous = 11.218607983375065;
inline constexpr double kSellAllAtOnce = 20.0;              // both sell q0 in the first step

// Closed-form equilibrium inventory with 50 decimal digits, written directly
// from the sinh formula (no overflow guards).
inline double nash_inventory_hp(const MarketParams& p, double lambda, double total, double gap,
                                int t, int agent) {
  using R = boost::multiprecision::cpp_dec_float_50;
  const R k(p.kappa), a(p.alpha), s(p.sigma), lam(lambda), n(p.n_steps), tt(t);
  const R a_sum = sqrt(k * k + 12 * a * lam * s * s);
  const R a_gap = sqrt(k * k + 4 * a * lam * s * s);
  const R sum_t = R(total) * exp(-k * tt / (6 * a)) * sinh((n - tt) * a_sum / (6 * a)) /
                  sinh(n * a_sum / (6 * a));
  const R gap_t = gap == 0.0 ? R(0)
                             : R(R(gap) * exp(k * tt / (2 * a)) * sinh((n - tt) * a_gap / (2 * a)) /
                                   sinh(n * a_gap / (2 * a)));
  const R q = agent == 0 ? R((sum_t + gap_t) / 2) : R((sum_t - gap_t) / 2);
  return q.convert_to<double>();
}

// Admissible schedule with entries spread around q0/N; may include buys.
inline Schedule random_schedule(std::mt19937_64& rng, double q0, int n, double spread = 1.0) {
  std::normal_distribution<double> d(q0 / n, spread * q0 / n);
  Schedule v(static_cast<std::size_t>(n));
  for (auto& x : v) x = d(rng);
  impact::close_schedule(v, q0);
  return v;
}

inline SchedulePair random_pair(std::mt19937_64& rng, double q0, int n, double spread = 1.0) {
  return {random_schedule(rng, q0, n, spread), random_schedule(rng, q0, n, spread)};
}

// Zero-noise replay with every step ordered the same way.
inline PerAgent simulate_fixed_order(const MarketParams& p, const SchedulePair& pair,
                                     AgentId first, IntraStepMode mode) {
  const std::vector<AgentId> order(static_cast<std::size_t>(p.n_steps), first);
  const std::vector<double> xi(static_cast<std::size_t>(p.n_steps), 0.0);
  const auto rec = impact::simulate_episode(p, pair, order, xi, mode);
  return rec.shortfall;
}

// Expected zero-noise IS: average over the two orderings (the cost is linear
// in each step's coin, so this equals the expectation over all 2^N orderings).
inline PerAgent simulated_expected_is(const MarketParams& p, const SchedulePair& pair,
                                      IntraStepMode mode) {
  const auto a = simulate_fixed_order(p, pair, AgentId::kOne, mode);
  const auto b = simulate_fixed_order(p, pair, AgentId::kTwo, mode);
  return {0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])};
}

// Central finite differences against backward(); returns the max scaled
// relative error |g - fd| / max(|g|, |fd|, floor) over every parameter.
inline double gradient_check(const impact::Mlp& net, const impact::TrainBatch& batch,
                             double h = 1e-5, double floor = 1e-6) {
  auto loss_of = [&](const impact::Mlp& m) {
    const Eigen::VectorXd pred = impact::forward_batch(m, batch.inputs);
    return (pred - batch.targets).squaredNorm() / static_cast<double>(pred.size());
  };
  const auto analytic = impact::backward(net, batch).grads;
  impact::Mlp probe = net;
  double worst = 0.0;
  auto visit = [&](double& param, double g) {
    const double keep = param;
    param = keep + h;
    const double up = loss_of(probe);
    param = keep - h;
    const double dn = loss_of(probe);
    param = keep;
    const double fd = (up - dn) / (2.0 * h);
    worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), floor}));
  };
  for (std::size_t l = 0; l < probe.layers.size(); ++l) {
    auto& layer = probe.layers[l];
    for (Eigen::Index i = 0; i < layer.w.size(); ++i) {
      visit(layer.w.data()[i], analytic.layers[l].w.data()[i]);
    }
    for (Eigen::Index i = 0; i < layer.b.size(); ++i) visit(layer.b(i), analytic.layers[l].b(i));
  }
  return worst;
}

inline impact::TrainBatch random_batch(std::mt19937_64& rng, int rows, int cols) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  impact::TrainBatch b;
  b.inputs.resize(rows, cols);
  b.targets.resize(rows);
  for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = u(rng);
  for (Eigen::Index i = 0; i < b.targets.size(); ++i) b.targets(i) = u(rng);
  return b;
}

// Small nets and short runs for pipeline plumbing tests.
inline impact::ExperimentConfig tiny_config(int runs = 2, int train = 30, int test = 12) {
  impact::ExperimentConfig c;
  c.runs = runs;
  c.train_iters = train;
  c.test_iters = test;
  c.ddql.hidden_layers = 1;
  c.ddql.width = 6;
  c.ddql.batch_size = 8;
  c.ddql.memory_len = 64;
  c.ddql.grid_size = 11;
  c.ddql.reset_rate = 5;
  c.front_points = 11;
  c.log_every = 10;
  c.threads = 1;
  return c;
}

inline double rel_err(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

}  // namespace oracle
