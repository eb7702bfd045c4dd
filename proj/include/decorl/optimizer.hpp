#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "decorl/network.hpp"

namespace decorl {

enum class OptimizerKind { kSgd, kRmsProp, kAdam };

OptimizerKind parse_optimizer(const std::string& name);
std::string optimizer_name(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-4;
  // rmsprop
  double rms_decay = 0.95;
  double rms_epsilon = 0.01;
  // adam
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
};

// First-order updater over a QNetwork's parameters. State buffers mirror the
// layer layout so sgd carries none, rmsprop one accumulator, adam two plus a
// step counter for bias correction.
class Optimizer {
 public:
  Optimizer(const OptimizerConfig& config, const QNetwork& net);

  // Applies one descent step in place. Throws NumericError naming the first
  // offending layer and entry if a gradient is not finite.
  void step(QNetwork& net, const GradientTape& tape);

  const OptimizerConfig& config() const { return config_; }
  std::size_t num_steps() const { return num_steps_; }

 private:
  OptimizerConfig config_;
  std::size_t num_steps_ = 0;
  std::vector<Matrix> m_w_, v_w_;
  std::vector<std::vector<double>> m_b_, v_b_;
};

}  // namespace decorl
