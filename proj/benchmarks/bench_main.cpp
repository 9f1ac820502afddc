#include <benchmark/benchmark.h>

#include <random>

#include "impact_game/analytics.hpp"
#include "impact_game/ddql.hpp"
#include "impact_game/mlp.hpp"

using namespace impact;

static void BM_ForwardBatch(benchmark::State& state) {
  const auto net = Mlp::create(q_net_dims(), 0.01, 1);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(state.range(0), 4);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ForwardBatch)->Arg(101)->Arg(64 * 101);

static void BM_TrainStep(benchmark::State& state) {
  auto agent = make_agent(DdqlConfig{}, MarketParams{}, 1);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 2000; ++i) {
    const int t = i % 10;
    const double inv = 100.0 - 10.0 * t;
    const double v = t == 9 ? inv : u(rng);
    agent.memory.push({{t, inv, 10.0}, v, -0.01 * v, {t + 1, inv - v, 10.0 - 0.001 * v}, t == 9});
  }
  for (auto _ : state) benchmark::DoNotOptimize(train_step(agent, rng));
}
BENCHMARK(BM_TrainStep)->Unit(benchmark::kMillisecond);

static void BM_ExpectedIs(benchmark::State& state) {
  const auto model = QuadraticCostModel::from(MarketParams{}, IntraStepMode::kSequential);
  const auto nash = nash_schedule(NashInputs::symmetric(MarketParams{}));
  for (auto _ : state) benchmark::DoNotOptimize(expected_is(model, nash.first, nash.second));
}
BENCHMARK(BM_ExpectedIs);

static void BM_ParetoFront(benchmark::State& state) {
  const auto model = QuadraticCostModel::from(MarketParams{}, IntraStepMode::kSequential);
  const auto w = front_weight_grid(model, 10, 101, 0.2);
  for (auto _ : state) benchmark::DoNotOptimize(pareto_front(model, 100.0, 10, w));
}
BENCHMARK(BM_ParetoFront)->Unit(benchmark::kMillisecond);
