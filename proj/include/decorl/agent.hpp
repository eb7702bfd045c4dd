#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "decorl/env.hpp"
#include "decorl/losses.hpp"
#include "decorl/network.hpp"
#include "decorl/optimizer.hpp"
#include "decorl/replay.hpp"
#include "decorl/rng.hpp"

namespace decorl {

enum class Algorithm { kDqn, kDqnDecor, kQrDqn, kQrDqnDecor };

Algorithm parse_algorithm(const std::string& name);
std::string algorithm_name(Algorithm algorithm);
bool is_decor(Algorithm algorithm);
bool is_quantile(Algorithm algorithm);

struct ExplorationSchedule {
  double eps_start = 1.0;
  double eps_end = 0.02;
  std::size_t decay_steps = 20000;

  // Linear from eps_start at step 0 to eps_end at decay_steps, constant after.
  double epsilon(std::size_t step) const;
};

struct AgentConfig {
  Algorithm algorithm = Algorithm::kDqn;
  double gamma = 0.99;
  // Correlation penalty weight; used by the decor algorithms, ignored otherwise.
  double lambda = 0.0;
  // Hidden widths of the q-network; the last entry is the feature dimension d.
  // Empty means a bias-free linear network (used for tabular-equivalence runs).
  std::vector<std::size_t> hidden = {64, 32};
  std::size_t num_quantiles = 32;  // qr only
  double kappa = 1.0;              // qr only
  bool qr_inner_mean = false;      // also average the target-quantile sum by 1/N
  OptimizerConfig optimizer;
  std::size_t sync_period = 1000;
  std::size_t buffer_capacity = 50000;
  std::size_t minibatch = 32;
  std::size_t warm_start = 1000;
  ExplorationSchedule exploration;
  // Draw a separate minibatch for the correlation penalty instead of reusing
  // the TD minibatch. Ablation flag, off by default.
  bool decor_independent_batch = false;
  std::uint64_t seed = 0;

  void validate(const EnvSpec& env_spec) const;
};

struct StepMetrics {
  double td_loss = 0.0;
  double correlation_loss = 0.0;
  double grad_norm = 0.0;
};

struct QuantileDist {
  Matrix theta;           // num_actions x N
  std::vector<double> q;  // per-action quantile means
};

// One of DQN, DQN-decor, QR-DQN, QR-DQN-decor: online + target networks,
// replay, epsilon-greedy exploration, and one optimizer step per learn_step.
// The decor variants add the correlation penalty's gradient, scaled by lambda,
// into the shared backward pass at the last hidden layer. All randomness comes
// from streams derived from config.seed, so runs are exactly reproducible.
class Agent {
 public:
  Agent(AgentConfig config, EnvSpec env_spec);

  // Epsilon-greedy with epsilon evaluated at `step`; greedy ties go to the
  // lowest action index.
  std::size_t act(std::span<const double> observation, std::size_t step);
  // Uniform action from the exploration stream; the harness uses this during
  // the warm-start phase.
  std::size_t random_action();
  // Clips the reward and stores the transition.
  void observe(const Transition& transition);
  // One minibatch gradient step. Returns nothing while the buffer holds fewer
  // than max(minibatch, warm_start) transitions.
  std::optional<StepMetrics> learn_step();

  std::vector<double> q_values(std::span<const double> observation) const;
  QuantileDist quantiles(std::span<const double> observation) const;
  std::size_t greedy_action(std::span<const double> observation) const;
  // Post-activation last-hidden-layer features for a batch of observations.
  Matrix features(const Matrix& observations) const;

  const AgentConfig& config() const { return config_; }
  const EnvSpec& env_spec() const { return env_spec_; }
  const QNetwork& online() const { return online_; }
  const QNetwork& target() const { return target_; }
  std::size_t env_steps() const { return env_steps_; }
  std::size_t learn_steps() const { return learn_steps_; }
  std::size_t feature_dim() const { return online_.feature_dim(); }
  CheckpointInfo checkpoint_info() const;

 private:
  AgentConfig config_;
  EnvSpec env_spec_;
  QNetwork online_;
  QNetwork target_;
  Optimizer optimizer_;
  ReplayBuffer buffer_;
  Rng explore_rng_;
  Rng sample_rng_;
  std::size_t env_steps_ = 0;
  std::size_t learn_steps_ = 0;

  Matrix batch_matrix(const std::vector<const Transition*>& batch, bool next) const;
  std::size_t argmax_row(std::span<const double> values) const;
};

// Builds the q-network for a config: MLP with ReLU hidden layers, or the
// bias-free linear network when no hidden widths are given. Output width is
// num_actions for dqn and num_actions * N for qr.
QNetwork build_network(const AgentConfig& config, const EnvSpec& env_spec, Rng& rng);

}  // namespace decorl
