#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "decorl/rng.hpp"

namespace decorl {

struct EnvSpec {
  std::size_t obs_dim = 0;
  std::size_t num_actions = 0;
  std::size_t max_episode_steps = 0;
};

struct StepResult {
  std::vector<double> observation;
  double reward_raw = 0.0;
  bool terminal = false;
};

// Episode-structured environment. Reaching max_episode_steps is a truncation
// handled by the caller (reset without a terminal flag, bootstrap through);
// the environment itself only reports true terminals.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const EnvSpec& spec() const = 0;
  virtual const std::string& name() const = 0;
  virtual std::vector<double> reset(std::uint64_t seed) = 0;
  virtual StepResult step(std::size_t action) = 0;
};

// Sign clipping to {-1, 0, +1}. Callers keep the raw reward for scoring.
double clip_reward(double r);

// Deterministic chain of `num_states` cells, one-hot observations, actions
// {0: left (clamped), 1: right}. Right from the last cell ends the episode
// with reward 1; everything else pays 0.
class ChainEnv : public Environment {
 public:
  explicit ChainEnv(std::size_t num_states = 5);
  const EnvSpec& spec() const override { return spec_; }
  const std::string& name() const override { return name_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;

 private:
  EnvSpec spec_;
  std::string name_ = "chain";
  std::size_t num_states_;
  std::size_t state_ = 0;
  bool terminal_ = true;
};

// side x side grid, one-hot observations, actions {0: up, 1: down, 2: left,
// 3: right} with wall clamping. With probability `slip` the executed action is
// resampled uniformly from all four. Entering the goal cell (side-1, side-1)
// pays 1 and ends the episode; the agent starts at (0, 0).
class GridWorldEnv : public Environment {
 public:
  explicit GridWorldEnv(std::size_t side = 8, double slip = 0.1);
  const EnvSpec& spec() const override { return spec_; }
  const std::string& name() const override { return name_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;

 private:
  EnvSpec spec_;
  std::string name_ = "gridworld";
  std::size_t side_;
  double slip_;
  std::size_t cell_ = 0;
  bool terminal_ = true;
  Rng rng_{0};
};

// Classic cart-pole balance: Euler integration at 0.02s, push force 10N,
// termination at |x| > 2.4 or |pole angle| > 12 degrees, reward 1 per step.
// State starts uniform in [-0.05, 0.05]^4; observation is the raw state.
class CartPoleEnv : public Environment {
 public:
  CartPoleEnv();
  const EnvSpec& spec() const override { return spec_; }
  const std::string& name() const override { return name_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;

 private:
  EnvSpec spec_;
  std::string name_ = "cartpole";
  double x_ = 0.0, x_dot_ = 0.0, theta_ = 0.0, theta_dot_ = 0.0;
  bool terminal_ = true;
  Rng rng_{0};

  std::vector<double> observation() const;
};

// Single-state bandit: every action ends the episode immediately, paying 1
// with the arm's probability and 0 otherwise. Return distributions are
// Bernoulli, so their quantiles are known in closed form.
class BanditEnv : public Environment {
 public:
  explicit BanditEnv(std::vector<double> arm_probs = {0.3, 0.7});
  const EnvSpec& spec() const override { return spec_; }
  const std::string& name() const override { return name_; }
  std::vector<double> reset(std::uint64_t seed) override;
  StepResult step(std::size_t action) override;
  const std::vector<double>& arm_probs() const { return arm_probs_; }

 private:
  EnvSpec spec_;
  std::string name_ = "bandit";
  std::vector<double> arm_probs_;
  bool terminal_ = true;
  Rng rng_{0};
};

// Factory by config name: "chain", "gridworld", "cartpole", "bandit".
// "bandit:p1,p2,..." overrides the default arm probabilities {0.3, 0.7}.
std::unique_ptr<Environment> make_environment(const std::string& name);

}  // namespace decorl
