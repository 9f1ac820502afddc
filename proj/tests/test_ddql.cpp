#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "impact_game/ddql.hpp"
#include "impact_game/errors.hpp"

using namespace impact;

namespace {

AgentState small_agent(std::uint64_t seed = 1) {
  DdqlConfig cfg;
  cfg.hidden_layers = 2;
  cfg.width = 8;
  cfg.batch_size = 4;
  cfg.memory_len = 40;
  return make_agent(cfg, MarketParams{}, seed);
}

Transition tr(int t, double inv, double v, double r, bool terminal = false) {
  return {{t, inv, 10.0}, v, r, {t + 1, inv - v, 10.0 - 0.001 * v}, terminal};
}

}  // namespace

TEST_SUITE("ddql") {
  TEST_CASE("replay memory halves and keeps the newest") {
    ReplayMemory mem(10);
    for (int i = 0; i < 9; ++i) mem.push(tr(0, 100, i, i));
    CHECK(mem.size() == 9);
    CHECK(mem.halvings() == 0);
    mem.push(tr(0, 100, 9, 9));
    CHECK(mem.size() == 5);
    CHECK(mem.halvings() == 1);
    for (std::size_t i = 0; i < mem.size(); ++i) CHECK(mem[i].v == 5.0 + static_cast<double>(i));
    CHECK_THROWS_AS(ReplayMemory(1), ConfigError);
  }

  TEST_CASE("property: memory never exceeds L") {
    for (std::size_t len : {2u, 3u, 17u, 64u}) {
      ReplayMemory mem(len);
      for (int i = 0; i < 1000; ++i) {
        mem.push(tr(0, 100, i, 0));
        CHECK(mem.size() < len);
        CHECK(mem.contents().back().v == i);
        for (std::size_t j = 1; j < mem.size(); ++j) CHECK(mem[j].v == mem[j - 1].v + 1);
      }
    }
  }

  TEST_CASE("sampling is without replacement and seeded") {
    ReplayMemory mem(200);
    for (int i = 0; i < 150; ++i) mem.push(tr(0, 100, i, 0));
    std::mt19937_64 a(5), b(5);
    const auto s1 = mem.sample(64, a);
    const auto s2 = mem.sample(64, b);
    CHECK(s1 == s2);
    std::vector<double> vs;
    for (const auto& t : s1) vs.push_back(t.v);
    std::sort(vs.begin(), vs.end());
    CHECK(std::adjacent_find(vs.begin(), vs.end()) == vs.end());
    CHECK(mem.sample(150, a).size() == 150);
    CHECK_THROWS_AS(mem.sample(151, a), ShapeError);

    // roughly uniform coverage
    std::vector<int> hits(150, 0);
    std::mt19937_64 r(9);
    for (int k = 0; k < 2000; ++k) {
      for (const auto& t : mem.sample(10, r)) ++hits[static_cast<std::size_t>(t.v)];
    }
    const auto [lo, hi] = std::minmax_element(hits.begin(), hits.end());
    CHECK(*lo > 80);
    CHECK(*hi < 200);
  }

  TEST_CASE("feature scaler") {
    const MarketParams p;
    const auto s = FeatureScaler::from(p);
    CHECK(s.s_max == 10.0);
    CHECK(s.s_min == doctest::Approx(10.0 - 3.0 * 0.2));
    const auto x = s.normalize({0, 100.0, 10.0}, -100.0);
    CHECK(x(0) == 1.0);
    CHECK(x(1) == -1.0);
    CHECK(x(2) == 1.0);
    CHECK(x(3) == -1.0);
    CHECK(s.clamp_events == 0);
    const auto y = s.normalize({10, 0.0, 9.7}, 0.0);
    CHECK(y(0) == 0.0);
    CHECK(y(1) == 1.0);
    CHECK(y(2) == doctest::Approx(0.0).epsilon(1e-12));
    s.normalize({5, 250.0, 20.0}, 0.0);
    CHECK(s.clamp_events == 2);

    // affine and invertible on range
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-100, 100);
    for (int i = 0; i < 100; ++i) {
      const double q = u(rng);
      const auto z = s.normalize({3, q, 9.9}, 0.0);
      CHECK((z(0) + 1.0) / 2.0 * 200.0 - 100.0 == doctest::Approx(q).epsilon(1e-12));
    }
  }

  TEST_CASE("action grid") {
    const auto g = action_grid(100.0, 101);
    CHECK(g.size() == 101);
    CHECK(g.front() == 0.0);
    CHECK(g.back() == 100.0);
    CHECK(g[37] == 37.0);
    const auto neg = action_grid(-3.0, 4);
    CHECK(neg.back() == -3.0);
    CHECK_THROWS_AS(action_grid(1.0, 1), ConfigError);
  }

  TEST_CASE("greedy ties go to the smallest index; argmax invariant to positive scaling") {
    auto a = small_agent();
    Mlp flat = Mlp::zeros(q_net_dims(2, 8), 0.01);
    flat.layers.back().b(0) = 3.0;
    const Observation g{2, 50.0, 9.9};
    const auto grid = action_grid(50.0, 101);
    CHECK(greedy_index(flat, a.scaler, g, grid) == 0);

    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
      Mlp net = Mlp::create(q_net_dims(2, 8), 0.01, 50 + trial);
      const auto base = greedy_index(net, a.scaler, g, grid);
      net.layers.back().w *= 7.5;
      net.layers.back().b *= 7.5;
      CHECK(greedy_index(net, a.scaler, g, grid) == base);
    }
  }

  TEST_CASE("select action") {
    auto a = small_agent();
    std::mt19937_64 rng(1);
    CHECK(select_action(a, {9, 37.25, 9.9}, rng) == 37.25);
    CHECK(select_action(a, {9, -4.5, 9.9}, rng, Policy::kGreedy) == -4.5);
    CHECK_THROWS_AS(select_action(a, {10, 0.0, 9.9}, rng), EpisodeCompleteError);

    a.epsilon = 1.0;
    double mean = 0.0;
    for (int i = 0; i < 4000; ++i) {
      const double v = select_action(a, {5, 50.0, 9.9}, rng);
      CHECK(std::abs(v) <= 100.0);
      mean += v / 4000;
    }
    CHECK(mean == doctest::Approx(10.0).epsilon(0.05));
    CHECK(select_action(a, {5, 0.0, 9.9}, rng) == 0.0);

    a.epsilon = 0.0;
    const double v = select_action(a, {3, 80.0, 9.9}, rng);
    const auto grid = action_grid(80.0, 101);
    CHECK(std::find(grid.begin(), grid.end(), v) != grid.end());
    CHECK(select_action(a, {3, 80.0, 9.9}, rng, Policy::kGreedy) == v);
  }

  TEST_CASE("epsilon schedule and target sync") {
    auto a = small_agent();
    a.q_main.layers[0].w(0, 0) += 1.0;
    CHECK_FALSE(a.q_main == a.q_tgt);
    for (int k = 1; k <= 40; ++k) {
      for (int i = 0; i < 75; ++i) {
        const double before = a.epsilon;
        maintenance(a);
        CHECK(a.epsilon <= before);
        CHECK(a.epsilon > 0.0);
      }
      CHECK(a.decay_events == k);
      CHECK(a.epsilon == std::pow(0.995, k));
      CHECK(a.q_main == a.q_tgt);
    }
    maintenance(a, 150);
    CHECK(a.decay_events == 42);
  }

  TEST_CASE("rewards") {
    auto a = small_agent();
    CHECK(learning_reward(a, 9.9, 10.0) == doctest::Approx(99.0 - 100.0));
    a.cfg.shaping = RewardShaping::kRaw;
    CHECK(learning_reward(a, 9.9, 10.0) == 99.0);
    CHECK(parse_reward_shaping("raw") == RewardShaping::kRaw);
    CHECK_THROWS_AS(parse_reward_shaping("log"), ConfigError);
    CHECK(parse_epsilon_counting(to_string(EpsilonCounting::kGlobal)) == EpsilonCounting::kGlobal);
    CHECK_THROWS_AS(parse_epsilon_counting("both"), ConfigError);
  }

  TEST_CASE("targets") {
    auto a = small_agent();
    a.q_tgt = Mlp::create(q_net_dims(2, 8), 0.01, 77);
    const Transition term = tr(9, 12.0, 12.0, -0.37, true);
    const std::vector<Transition> tb{term};
    CHECK(compute_targets(a, tb)(0) == -0.37);

    // next step is the last: v* is the remaining inventory, valued by q_tgt
    const Transition pen = tr(8, 30.0, 10.0, -0.2);
    const std::vector<Transition> pb{pen};
    const auto x = a.scaler.normalize(pen.next, 20.0);
    const double q = forward(a.q_tgt, std::span<const double>(x.data(), 4));
    CHECK(compute_targets(a, pb)(0) == doctest::Approx(-0.2 + q).epsilon(1e-14));

    // double-Q: argmax by q_main, value by q_tgt
    const Transition mid = tr(3, 60.0, 5.0, -0.1);
    const std::vector<Transition> mb{mid};
    const auto grid = action_grid(mid.next.inventory, 101);
    const double v_star = grid[greedy_index(a.q_main, a.scaler, mid.next, grid)];
    const auto xs = a.scaler.normalize(mid.next, v_star);
    const double expect = -0.1 + forward(a.q_tgt, std::span<const double>(xs.data(), 4));
    const double y = compute_targets(a, mb)(0);
    CHECK(y == doctest::Approx(expect).epsilon(1e-14));
    std::swap(a.q_main, a.q_tgt);
    CHECK(compute_targets(a, mb)(0) != doctest::Approx(y).epsilon(1e-9));

    a.cfg.gamma = 0.0;
    CHECK(compute_targets(a, mb)(0) == -0.1);
    CHECK_THROWS_AS(compute_targets(a, std::vector<Transition>{}), EmptyInputError);
  }

  TEST_CASE("train step") {
    auto a = small_agent();
    std::mt19937_64 rng(8);
    for (int i = 0; i < 3; ++i) a.memory.push(tr(i, 100.0 - 10 * i, 10.0, -0.1));
    CHECK_FALSE(train_step(a, rng).has_value());
    a.memory.push(tr(9, 70.0, 70.0, -5.0, true));
    const auto before = a.q_main;
    const auto loss = train_step(a, rng);
    REQUIRE(loss.has_value());
    CHECK(std::isfinite(*loss));
    CHECK(a.train_steps == 1);
    CHECK_FALSE(a.q_main == before);
    CHECK(a.q_tgt == before);
  }

  TEST_CASE("config validation") {
    DdqlConfig c;
    CHECK_NOTHROW(c.validate());
    c.decay = 1.5;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.memory_len = 64;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = {};
    c.epsilon0 = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
  }
}
