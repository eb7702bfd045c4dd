#include "decorl/optimizer.hpp"

#include <cmath>
#include <span>

#include "decorl/errors.hpp"

namespace decorl {

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "sgd") return OptimizerKind::kSgd;
  if (name == "rmsprop") return OptimizerKind::kRmsProp;
  if (name == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + name + "' (expected sgd, rmsprop or adam)");
}

std::string optimizer_name(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::kSgd: return "sgd";
    case OptimizerKind::kRmsProp: return "rmsprop";
    case OptimizerKind::kAdam: return "adam";
  }
  throw UsageError("optimizer_name: bad enum value");
}

Optimizer::Optimizer(const OptimizerConfig& config, const QNetwork& net)
    : config_(config) {
  if (config_.learning_rate <= 0.0) {
    throw ConfigError("optimizer learning_rate must be positive");
  }
  if (config_.kind == OptimizerKind::kSgd) return;
  for (const Layer& layer : net.layers()) {
    v_w_.emplace_back(layer.in_dim(), layer.out_dim());
    v_b_.emplace_back(layer.out_dim(), 0.0);
    if (config_.kind == OptimizerKind::kAdam) {
      m_w_.emplace_back(layer.in_dim(), layer.out_dim());
      m_b_.emplace_back(layer.out_dim(), 0.0);
    }
  }
}

namespace {

void check_finite(std::span<const double> grad, std::size_t layer, const char* what) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      throw NumericError("optimizer: non-finite " + std::string(what) +
                         " gradient at layer " + std::to_string(layer) + " entry " +
                         std::to_string(i) + " value " + std::to_string(grad[i]));
    }
  }
}

}  // namespace

void Optimizer::step(QNetwork& net, const GradientTape& tape) {
  if (tape.weight_grads.size() != net.num_layers()) {
    throw DimensionError("Optimizer::step: tape does not match network");
  }
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    check_finite(tape.weight_grads[l].flat(), l, "weight");
    check_finite(tape.bias_grads[l], l, "bias");
  }
  ++num_steps_;
  const double lr = config_.learning_rate;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    Layer& layer = net.layers()[l];
    std::span<double> w(layer.weight.data(), layer.weight.size());
    std::span<const double> gw = tape.weight_grads[l].flat();
    std::span<double> b(layer.bias.data(), layer.bias.size());
    std::span<const double> gb = tape.bias_grads[l];
    switch (config_.kind) {
      case OptimizerKind::kSgd: {
        for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * gw[i];
        for (std::size_t i = 0; i < b.size(); ++i) b[i] -= lr * gb[i];
        break;
      }
      case OptimizerKind::kRmsProp: {
        auto update = [&](std::span<double> p, std::span<const double> g,
                          std::span<double> acc) {
          for (std::size_t i = 0; i < p.size(); ++i) {
            acc[i] = config_.rms_decay * acc[i] + (1.0 - config_.rms_decay) * g[i] * g[i];
            p[i] -= lr * g[i] / std::sqrt(acc[i] + config_.rms_epsilon);
          }
        };
        update(w, gw, std::span<double>(v_w_[l].data(), v_w_[l].size()));
        update(b, gb, v_b_[l]);
        break;
      }
      case OptimizerKind::kAdam: {
        const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(num_steps_));
        const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(num_steps_));
        auto update = [&](std::span<double> p, std::span<const double> g,
                          std::span<double> m, std::span<double> v) {
          for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g[i];
            v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g[i] * g[i];
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (std::sqrt(v_hat) + config_.adam_epsilon);
          }
        };
        update(w, gw, std::span<double>(m_w_[l].data(), m_w_[l].size()),
               std::span<double>(v_w_[l].data(), v_w_[l].size()));
        update(b, gb, m_b_[l], v_b_[l]);
        break;
      }
    }
  }
}

}  // namespace decorl
