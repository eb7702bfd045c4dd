#include <doctest.h>

#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <vector>

#include "decorl/env.hpp"
#include "decorl/errors.hpp"
#include "decorl/oracles.hpp"
#include "decorl/rng.hpp"

using decorl::BanditEnv;
using decorl::CartPoleEnv;
using decorl::ChainEnv;
using decorl::ConfigError;
using decorl::Environment;
using decorl::GridWorldEnv;
using decorl::Rng;
using decorl::StepResult;
using decorl::UsageError;

namespace {

std::size_t one_hot_index(const std::vector<double>& obs) {
  std::size_t idx = 0;
  for (std::size_t i = 1; i < obs.size(); ++i) {
    if (obs[i] > obs[idx]) idx = i;
  }
  return idx;
}

}  // namespace

TEST_SUITE("env") {

TEST_CASE("clip_reward") {
  CHECK(decorl::clip_reward(3.7) == 1.0);
  CHECK(decorl::clip_reward(-0.1) == -1.0);
  CHECK(decorl::clip_reward(0.0) == 0.0);
  CHECK(decorl::clip_reward(1.0) == 1.0);
  CHECK_THROWS_AS(decorl::clip_reward(std::numeric_limits<double>::quiet_NaN()),
                  UsageError);
  CHECK_THROWS_AS(decorl::clip_reward(std::numeric_limits<double>::infinity()),
                  UsageError);
}

TEST_CASE("chain walks right to the terminal reward") {
  ChainEnv env;
  CHECK(env.spec().obs_dim == 5);
  CHECK(env.spec().num_actions == 2);
  CHECK(env.spec().max_episode_steps == 100);

  std::vector<double> obs = env.reset(0);
  CHECK(one_hot_index(obs) == 0);
  CHECK(obs.size() == 5);
  for (int i = 0; i < 4; ++i) {
    const StepResult res = env.step(1);
    CHECK_FALSE(res.terminal);
    CHECK(res.reward_raw == 0.0);
    CHECK(one_hot_index(res.observation) == static_cast<std::size_t>(i + 1));
  }
  const StepResult last = env.step(1);
  CHECK(last.terminal);
  CHECK(last.reward_raw == 1.0);
  CHECK_THROWS_AS(env.step(0), UsageError);
}

TEST_CASE("chain clamps left at the start") {
  ChainEnv env;
  env.reset(0);
  StepResult res = env.step(0);
  CHECK(one_hot_index(res.observation) == 0);
  res = env.step(1);
  CHECK(one_hot_index(res.observation) == 1);
  res = env.step(0);
  CHECK(one_hot_index(res.observation) == 0);
  CHECK_THROWS_AS(env.step(2), UsageError);
  CHECK_THROWS_AS(ChainEnv(1), ConfigError);
}

TEST_CASE("chain matches its tabular restatement") {
  // Always-right from the start earns 1 after 5 transitions, so the
  // discounted return is gamma^4, which must equal value iteration's V*(0).
  const double gamma = 0.9;
  const auto mdp = decorl::oracles::make_chain_mdp(gamma);
  const auto q = decorl::oracles::value_iteration(mdp, 1e-12);
  const double v0 = std::max(q(0, 0), q(0, 1));
  CHECK(v0 == doctest::Approx(std::pow(gamma, 4)).epsilon(1e-10));

  ChainEnv env;
  env.reset(3);
  double discounted = 0.0, discount = 1.0;
  for (int i = 0; i < 5; ++i) {
    const StepResult res = env.step(1);
    discounted += discount * res.reward_raw;
    discount *= gamma;
    if (res.terminal) break;
  }
  CHECK(discounted == doctest::Approx(v0).epsilon(1e-10));
}

TEST_CASE("gridworld deterministic path reaches the goal") {
  GridWorldEnv env(8, 0.0);
  CHECK(env.spec().obs_dim == 64);
  CHECK(env.spec().num_actions == 4);
  CHECK(env.spec().max_episode_steps == 500);

  std::vector<double> obs = env.reset(1);
  CHECK(one_hot_index(obs) == 0);
  // Row-major layout: right increments the cell, down adds `side`.
  for (int i = 0; i < 7; ++i) {
    const StepResult res = env.step(3);
    CHECK(one_hot_index(res.observation) == static_cast<std::size_t>(i + 1));
    CHECK_FALSE(res.terminal);
  }
  for (int i = 0; i < 6; ++i) {
    const StepResult res = env.step(1);
    CHECK(one_hot_index(res.observation) == 7 + 8 * static_cast<std::size_t>(i + 1));
    CHECK(res.reward_raw == 0.0);
  }
  const StepResult goal = env.step(1);
  CHECK(goal.terminal);
  CHECK(goal.reward_raw == 1.0);
  CHECK(one_hot_index(goal.observation) == 63);
}

TEST_CASE("gridworld clamps at the walls") {
  GridWorldEnv env(8, 0.0);
  env.reset(1);
  CHECK(one_hot_index(env.step(0).observation) == 0);  // up against the top
  CHECK(one_hot_index(env.step(2).observation) == 0);  // left against the side
  CHECK(one_hot_index(env.step(1).observation) == 8);  // down one row
  CHECK(one_hot_index(env.step(0).observation) == 0);  // back up
  CHECK_THROWS_AS(env.step(4), UsageError);
  CHECK_THROWS_AS(GridWorldEnv(1, 0.0), ConfigError);
  CHECK_THROWS_AS(GridWorldEnv(8, 1.5), ConfigError);
  CHECK_THROWS_AS(GridWorldEnv(8, -0.1), ConfigError);
}

TEST_CASE("gridworld slip rate is statistically visible") {
  // Against the top wall, action `up` only moves if a slip resamples it to
  // down or right (2 of 4 outcomes), so P(move) = slip/2.
  const double slip = 0.4;
  GridWorldEnv env(8, slip);
  const int trials = 20000;
  int moved = 0;
  for (int i = 0; i < trials; ++i) {
    env.reset(static_cast<std::uint64_t>(i));
    const StepResult res = env.step(0);
    if (one_hot_index(res.observation) != 0) ++moved;
  }
  const double expected = trials * slip / 2.0;
  const double sd = std::sqrt(trials * (slip / 2.0) * (1.0 - slip / 2.0));
  CHECK(std::abs(static_cast<double>(moved) - expected) < 4.0 * sd);
}

TEST_CASE("gridworld trajectories are reproducible from the reset seed") {
  GridWorldEnv a(8, 0.3);
  GridWorldEnv b(8, 0.3);
  a.reset(77);
  b.reset(77);
  Rng actions(5);
  for (int i = 0; i < 200; ++i) {
    const std::size_t action = actions.uniform_int(4);
    const StepResult ra = a.step(action);
    const StepResult rb = b.step(action);
    CHECK(ra.observation == rb.observation);
    CHECK(ra.reward_raw == rb.reward_raw);
    CHECK(ra.terminal == rb.terminal);
    if (ra.terminal) {
      a.reset(static_cast<std::uint64_t>(i));
      b.reset(static_cast<std::uint64_t>(i));
    }
  }
}

TEST_CASE("cartpole matches an independent euler step") {
  CartPoleEnv env;
  CHECK(env.spec().obs_dim == 4);
  CHECK(env.spec().num_actions == 2);
  CHECK(env.spec().max_episode_steps == 200);

  const std::vector<double> obs = env.reset(12345);
  REQUIRE(obs.size() == 4);
  for (double v : obs) {
    CHECK(v >= -0.05);
    CHECK(v <= 0.05);
  }

  // Re-derive one transition from the published dynamics.
  double x = obs[0], x_dot = obs[1], theta = obs[2], theta_dot = obs[3];
  const std::size_t action = 1;
  const double force = action == 1 ? 10.0 : -10.0;
  const double cos_t = std::cos(theta), sin_t = std::sin(theta);
  const double temp = (force + 0.05 * theta_dot * theta_dot * sin_t) / 1.1;
  const double theta_acc =
      (9.8 * sin_t - cos_t * temp) / (0.5 * (4.0 / 3.0 - 0.1 * cos_t * cos_t / 1.1));
  const double x_acc = temp - 0.05 * theta_acc * cos_t / 1.1;
  const double tau = 0.02;
  x += tau * x_dot;
  x_dot += tau * x_acc;
  theta += tau * theta_dot;
  theta_dot += tau * theta_acc;

  const StepResult res = env.step(action);
  CHECK(res.reward_raw == 1.0);
  CHECK(res.observation[0] == doctest::Approx(x).epsilon(1e-12));
  CHECK(res.observation[1] == doctest::Approx(x_dot).epsilon(1e-12));
  CHECK(res.observation[2] == doctest::Approx(theta).epsilon(1e-12));
  CHECK(res.observation[3] == doctest::Approx(theta_dot).epsilon(1e-12));
  CHECK_THROWS_AS(env.step(2), UsageError);
}

TEST_CASE("cartpole falls over under a constant push") {
  CartPoleEnv env;
  env.reset(5);
  bool terminated = false;
  for (int i = 0; i < 200; ++i) {
    const StepResult res = env.step(1);
    CHECK(res.reward_raw == 1.0);
    if (res.terminal) {
      terminated = true;
      // 12 degrees or 2.4 units, whichever the constant push hit first.
      const double theta_lim = 12.0 * 2.0 * 3.14159265358979323846 / 360.0;
      CHECK((std::abs(res.observation[2]) > theta_lim ||
             std::abs(res.observation[0]) > 2.4));
      break;
    }
  }
  CHECK(terminated);
  CHECK_THROWS_AS(env.step(0), UsageError);
}

TEST_CASE("cartpole resets are reproducible and varied") {
  CartPoleEnv a;
  CartPoleEnv b;
  CHECK(a.reset(42) == b.reset(42));
  CHECK(a.reset(42) != a.reset(43));
  a.reset(42);
  b.reset(42);
  for (int i = 0; i < 50; ++i) {
    const StepResult ra = a.step(i % 2);
    const StepResult rb = b.step(i % 2);
    CHECK(ra.observation == rb.observation);
    if (ra.terminal) break;
  }
}

TEST_CASE("bandit pays each arm at its probability") {
  BanditEnv env({0.3, 0.7});
  CHECK(env.spec().obs_dim == 1);
  CHECK(env.spec().num_actions == 2);
  CHECK(env.spec().max_episode_steps == 1);
  CHECK(env.arm_probs() == std::vector<double>{0.3, 0.7});

  const int episodes = 10000;
  double payout = 0.0;
  for (int i = 0; i < episodes; ++i) {
    const std::vector<double> obs = env.reset(static_cast<std::uint64_t>(i));
    CHECK(obs == std::vector<double>{1.0});
    const StepResult res = env.step(0);
    CHECK(res.terminal);
    CHECK((res.reward_raw == 0.0 || res.reward_raw == 1.0));
    payout += res.reward_raw;
  }
  const double rate = payout / episodes;
  const double sd = std::sqrt(0.3 * 0.7 / episodes);
  CHECK(std::abs(rate - 0.3) < 4.0 * sd);

  env.reset(1);
  env.step(1);
  CHECK_THROWS_AS(env.step(0), UsageError);
  CHECK_THROWS_AS(BanditEnv({0.5}), ConfigError);
  CHECK_THROWS_AS(BanditEnv({0.5, 1.5}), ConfigError);
}

TEST_CASE("make_environment dispatches on name") {
  CHECK(decorl::make_environment("chain")->name() == "chain");
  CHECK(decorl::make_environment("gridworld")->name() == "gridworld");
  CHECK(decorl::make_environment("cartpole")->name() == "cartpole");
  CHECK(decorl::make_environment("bandit")->name() == "bandit");

  const std::unique_ptr<Environment> custom = decorl::make_environment("bandit:0.5,0.9");
  auto* bandit = dynamic_cast<BanditEnv*>(custom.get());
  REQUIRE(bandit != nullptr);
  CHECK(bandit->arm_probs() == std::vector<double>{0.5, 0.9});

  CHECK_THROWS_AS(decorl::make_environment("atari"), ConfigError);
  CHECK_THROWS_AS(decorl::make_environment("bandit:0.5,oops"), ConfigError);
}

TEST_CASE("stepping before reset is rejected") {
  ChainEnv chain;
  CHECK_THROWS_AS(chain.step(0), UsageError);
  GridWorldEnv grid;
  CHECK_THROWS_AS(grid.step(0), UsageError);
  CartPoleEnv cart;
  CHECK_THROWS_AS(cart.step(0), UsageError);
  BanditEnv bandit;
  CHECK_THROWS_AS(bandit.step(0), UsageError);
}

}  // TEST_SUITE
