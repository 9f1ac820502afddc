#include <doctest.h>

#include <cmath>

#include "impact_game/errors.hpp"
#include "impact_game/experiment.hpp"
#include "impact_game/rng.hpp"
#include "support.hpp"

using namespace impact;

TEST_SUITE("experiment") {
  TEST_CASE("scenarios, labels and validation") {
    CHECK(scenario_sigma("zero") == 1e-9);
    CHECK(scenario_sigma("moderate") == 1e-3);
    CHECK(scenario_sigma("large") == 1e-2);
    CHECK_THROWS_AS(scenario_sigma("huge"), ConfigError);

    ExperimentConfig c;
    CHECK(c.train_iters == 5000);
    CHECK(c.test_iters == 2500);
    CHECK(c.runs == 20);
    CHECK(c.label() == "zero");
    CHECK(paper_scale_config() == ExperimentConfig{});
    c.sigma_test = 1e-2;
    CHECK(c.misspecified());
    CHECK(c.label() == "train_1e-09_test_0.01");
    CHECK(c.test_market().sigma == 1e-2);
    CHECK(c.train_market().sigma == 1e-9);

    c = {};
    c.test_iters = c.train_iters;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.runs = 0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }

  TEST_CASE("seed derivation") {
    CHECK(child_seed(1, 0) == child_seed(1, 0));
    CHECK(child_seed(1, 0) != child_seed(1, 1));
    CHECK(child_seed(1, 0) != child_seed(2, 0));
    CHECK(stream_seed(5, 1) != stream_seed(5, 2));
  }

  TEST_CASE("references") {
    const auto refs = compute_references(ExperimentConfig{});
    CHECK(refs.nash_is[0] == doctest::Approx(oracle::kNashIsSequential).epsilon(1e-12));
    CHECK(refs.pareto_is[1] == doctest::Approx(oracle::kTwapSequential).epsilon(1e-12));
    CHECK(refs.front.size() == 101);
  }

  TEST_CASE("training liquidates, counts and logs") {
    const auto c = oracle::tiny_config(1, 40, 10);
    const auto tp = train_run(c, 0);
    CHECK(tp.log.episode_is.size() == 40);
    CHECK(tp.log.steps == 400);
    CHECK(tp.log.max_terminal_inventory == 0.0);
    CHECK(tp.agents[0].memory.size() < 64);
    CHECK(tp.agents[0].memory.halvings() > 0);
    CHECK(tp.agents[0].decay_events == 400 / 5);
    CHECK(tp.agents[0].epsilon == std::pow(0.995, 80));
    CHECK(tp.agents[1].train_steps == 400 - 7);  // from the 8th stored transition on
  }

  TEST_CASE("global epsilon counting doubles the decay rate") {
    auto c = oracle::tiny_config(1, 20, 5);
    c.ddql.epsilon_counting = EpsilonCounting::kGlobal;
    const auto tp = train_run(c, 0);
    CHECK(tp.agents[0].decay_events == 2 * 200 / 5);
  }

  TEST_CASE("property: first mover is a fair coin") {
    const auto tp = train_run(oracle::tiny_config(1, 400, 10), 3);
    const double n = static_cast<double>(tp.log.steps);
    const double freq = static_cast<double>(tp.log.first_mover_one) / n;
    CHECK(std::abs(freq - 0.5) <= 3.0 * std::sqrt(0.25 / n));
  }

  TEST_CASE("property: run results depend only on run id") {
    auto c = oracle::tiny_config(3, 30, 10);
    const auto a = run_scenario(c);
    c.threads = 3;
    const auto b = run_scenario(c);
    auto c1 = c;
    c1.runs = 1;
    const auto refs = compute_references(c);
    const auto tp = train_run(c, 2);
    const auto solo = test_run(tp.agents, c, 2, refs);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(a.runs[r].is_pairs == b.runs[r].is_pairs);
      CHECK(a.runs[r].train_reward_log == b.runs[r].train_reward_log);
    }
    CHECK(solo.is_pairs == a.runs[2].is_pairs);
    int total = 0;
    for (int n : a.region_counts) total += n;
    CHECK(total == 3);
  }

  TEST_CASE("property: zero-noise test IS equals the analytic cost of the played schedules") {
    auto c = oracle::tiny_config(1, 60, 20);
    c.sigma_test = 0.0;
    const auto refs = compute_references(c);
    const auto tp = train_run(c, 0);
    const auto rr = test_run(tp.agents, c, 0, refs);
    REQUIRE(rr.is_pairs.size() == 20);
    CHECK(rr.max_terminal_inventory == 0.0);
    const auto model = QuadraticCostModel::from(c.test_market(), c.mode);
    const auto r = realized_is(model, rr.last_schedule[0], rr.last_schedule[1], rr.orders.back());
    CHECK(oracle::rel_err(r[0], rr.is_pairs.back()[0]) <= 1e-9);
    CHECK(oracle::rel_err(r[1], rr.is_pairs.back()[1]) <= 1e-9);
    CHECK(r[0] + r[1] == doctest::Approx(rr.is_pairs.back()[0] + rr.is_pairs.back()[1]).epsilon(1e-9));
    for (std::size_t k = 0; k < 2; ++k) {
      double sum = 0.0;
      for (double v : rr.last_schedule[k]) sum += v;
      CHECK(sum == doctest::Approx(100.0).epsilon(1e-12));
    }
  }

  TEST_CASE("random baseline") {
    const auto c = oracle::tiny_config();
    const double a = random_policy_baseline(c, 200, 4);
    CHECK(a == random_policy_baseline(c, 200, 4));
    CHECK(a > 2 * oracle::kTwapSequential);
    CHECK_THROWS_AS(random_policy_baseline(c, 0, 4), ConfigError);
  }

  TEST_CASE("parallel_for rethrows") {
    CHECK_THROWS_AS(parallel_for(8, 4, [](int i) { if (i == 5) throw NumericError("x"); }),
                    NumericError);
    std::vector<int> seen(50, 0);
    parallel_for(50, 4, [&](int i) { seen[static_cast<std::size_t>(i)] += 1; });
    for (int s : seen) CHECK(s == 1);
  }

  TEST_CASE("misspecified pipeline labels") {
    auto c = oracle::tiny_config(2, 20, 5);
    c.sigma_test = 1e-2;
    const auto rep = run_misspecified(c);
    CHECK(rep.label == "train_1e-09_test_0.01");
    CHECK(rep.runs.size() == 2);
  }
}
