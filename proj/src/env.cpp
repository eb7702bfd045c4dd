#include "decorl/env.hpp"

#include <cmath>
#include <sstream>

#include "decorl/errors.hpp"

namespace decorl {

namespace {

std::vector<double> one_hot(std::size_t index, std::size_t dim) {
  std::vector<double> v(dim, 0.0);
  v[index] = 1.0;
  return v;
}

void check_action(std::size_t action, const EnvSpec& spec, bool terminal,
                  const std::string& name) {
  if (terminal) {
    throw UsageError(name + ": episode is over, call reset before stepping");
  }
  if (action >= spec.num_actions) {
    throw UsageError(name + ": action " + std::to_string(action) + " out of range [0," +
                     std::to_string(spec.num_actions) + ")");
  }
}

}  // namespace

double clip_reward(double r) {
  if (!std::isfinite(r)) throw UsageError("clip_reward: reward must be finite");
  if (r > 0.0) return 1.0;
  if (r < 0.0) return -1.0;
  return 0.0;
}

ChainEnv::ChainEnv(std::size_t num_states) : num_states_(num_states) {
  if (num_states_ < 2) throw ConfigError("ChainEnv: need at least 2 states");
  spec_ = {num_states_, 2, 100};
}

std::vector<double> ChainEnv::reset(std::uint64_t) {
  state_ = 0;
  terminal_ = false;
  return one_hot(state_, num_states_);
}

StepResult ChainEnv::step(std::size_t action) {
  check_action(action, spec_, terminal_, name_);
  StepResult res;
  if (action == 1) {
    if (state_ + 1 == num_states_) {
      terminal_ = true;
      res.reward_raw = 1.0;
      res.terminal = true;
      res.observation = one_hot(state_, num_states_);
      return res;
    }
    ++state_;
  } else if (state_ > 0) {
    --state_;
  }
  res.observation = one_hot(state_, num_states_);
  return res;
}

GridWorldEnv::GridWorldEnv(std::size_t side, double slip) : side_(side), slip_(slip) {
  if (side_ < 2) throw ConfigError("GridWorldEnv: side must be at least 2");
  if (slip_ < 0.0 || slip_ > 1.0) throw ConfigError("GridWorldEnv: slip must lie in [0,1]");
  spec_ = {side_ * side_, 4, 500};
}

std::vector<double> GridWorldEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  cell_ = 0;
  terminal_ = false;
  return one_hot(cell_, spec_.obs_dim);
}

StepResult GridWorldEnv::step(std::size_t action) {
  check_action(action, spec_, terminal_, name_);
  std::size_t executed = action;
  if (rng_.uniform01() < slip_) executed = rng_.uniform_int(4);
  std::size_t r = cell_ / side_;
  std::size_t c = cell_ % side_;
  switch (executed) {
    case 0: r = r == 0 ? 0 : r - 1; break;
    case 1: r = r + 1 >= side_ ? side_ - 1 : r + 1; break;
    case 2: c = c == 0 ? 0 : c - 1; break;
    default: c = c + 1 >= side_ ? side_ - 1 : c + 1; break;
  }
  cell_ = r * side_ + c;
  StepResult res;
  res.observation = one_hot(cell_, spec_.obs_dim);
  if (cell_ == spec_.obs_dim - 1) {
    res.reward_raw = 1.0;
    res.terminal = true;
    terminal_ = true;
  }
  return res;
}

CartPoleEnv::CartPoleEnv() { spec_ = {4, 2, 200}; }

std::vector<double> CartPoleEnv::observation() const {
  return {x_, x_dot_, theta_, theta_dot_};
}

std::vector<double> CartPoleEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  x_ = rng_.uniform(-0.05, 0.05);
  x_dot_ = rng_.uniform(-0.05, 0.05);
  theta_ = rng_.uniform(-0.05, 0.05);
  theta_dot_ = rng_.uniform(-0.05, 0.05);
  terminal_ = false;
  return observation();
}

StepResult CartPoleEnv::step(std::size_t action) {
  check_action(action, spec_, terminal_, name_);
  constexpr double kGravity = 9.8;
  constexpr double kMassCart = 1.0;
  constexpr double kMassPole = 0.1;
  constexpr double kTotalMass = kMassCart + kMassPole;
  constexpr double kHalfLength = 0.5;
  constexpr double kPoleMassLength = kMassPole * kHalfLength;
  constexpr double kForce = 10.0;
  constexpr double kTau = 0.02;
  constexpr double kThetaLimit = 12.0 * 2.0 * M_PI / 360.0;
  constexpr double kXLimit = 2.4;

  const double force = action == 1 ? kForce : -kForce;
  const double cos_t = std::cos(theta_);
  const double sin_t = std::sin(theta_);
  const double temp =
      (force + kPoleMassLength * theta_dot_ * theta_dot_ * sin_t) / kTotalMass;
  const double theta_acc =
      (kGravity * sin_t - cos_t * temp) /
      (kHalfLength * (4.0 / 3.0 - kMassPole * cos_t * cos_t / kTotalMass));
  const double x_acc = temp - kPoleMassLength * theta_acc * cos_t / kTotalMass;

  x_ += kTau * x_dot_;
  x_dot_ += kTau * x_acc;
  theta_ += kTau * theta_dot_;
  theta_dot_ += kTau * theta_acc;

  StepResult res;
  res.observation = observation();
  res.reward_raw = 1.0;
  if (std::fabs(x_) > kXLimit || std::fabs(theta_) > kThetaLimit) {
    res.terminal = true;
    terminal_ = true;
  }
  return res;
}

BanditEnv::BanditEnv(std::vector<double> arm_probs) : arm_probs_(std::move(arm_probs)) {
  if (arm_probs_.size() < 2) throw ConfigError("BanditEnv: need at least 2 arms");
  for (double p : arm_probs_) {
    if (p < 0.0 || p > 1.0) throw ConfigError("BanditEnv: arm probability out of [0,1]");
  }
  spec_ = {1, arm_probs_.size(), 1};
}

std::vector<double> BanditEnv::reset(std::uint64_t seed) {
  rng_ = Rng(seed);
  terminal_ = false;
  return {1.0};
}

StepResult BanditEnv::step(std::size_t action) {
  check_action(action, spec_, terminal_, name_);
  StepResult res;
  res.observation = {1.0};
  res.reward_raw = rng_.uniform01() < arm_probs_[action] ? 1.0 : 0.0;
  res.terminal = true;
  terminal_ = true;
  return res;
}

std::unique_ptr<Environment> make_environment(const std::string& name) {
  if (name == "chain") return std::make_unique<ChainEnv>();
  if (name == "gridworld") return std::make_unique<GridWorldEnv>();
  if (name == "cartpole") return std::make_unique<CartPoleEnv>();
  if (name == "bandit") return std::make_unique<BanditEnv>();
  if (name.rfind("bandit:", 0) == 0) {
    std::vector<double> probs;
    std::istringstream args(name.substr(7));
    std::string token;
    while (std::getline(args, token, ',')) {
      try {
        probs.push_back(std::stod(token));
      } catch (const std::exception&) {
        throw ConfigError("make_environment: bad bandit arm probability '" + token + "'");
      }
    }
    return std::make_unique<BanditEnv>(std::move(probs));
  }
  throw ConfigError("make_environment: unknown environment '" + name +
                    "' (expected chain, gridworld, cartpole, bandit)");
}

}  // namespace decorl
