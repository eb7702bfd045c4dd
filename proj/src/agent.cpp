#include "decorl/agent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "decorl/errors.hpp"

namespace decorl {

namespace {

// Seed-stream tags so the network init, exploration and replay sampling draw
// from independent deterministic sequences.
constexpr std::uint64_t kInitStream = 0x1a;
constexpr std::uint64_t kExploreStream = 0x2b;
constexpr std::uint64_t kSampleStream = 0x3c;

}  // namespace

Algorithm parse_algorithm(const std::string& name) {
  if (name == "dqn") return Algorithm::kDqn;
  if (name == "dqn_decor") return Algorithm::kDqnDecor;
  if (name == "qr_dqn") return Algorithm::kQrDqn;
  if (name == "qr_dqn_decor") return Algorithm::kQrDqnDecor;
  throw ConfigError("unknown algorithm '" + name +
                    "' (expected dqn, dqn_decor, qr_dqn or qr_dqn_decor)");
}

std::string algorithm_name(Algorithm algorithm) {
  switch (algorithm) {
    case Algorithm::kDqn: return "dqn";
    case Algorithm::kDqnDecor: return "dqn_decor";
    case Algorithm::kQrDqn: return "qr_dqn";
    case Algorithm::kQrDqnDecor: return "qr_dqn_decor";
  }
  throw UsageError("algorithm_name: bad enum value");
}

bool is_decor(Algorithm algorithm) {
  return algorithm == Algorithm::kDqnDecor || algorithm == Algorithm::kQrDqnDecor;
}

bool is_quantile(Algorithm algorithm) {
  return algorithm == Algorithm::kQrDqn || algorithm == Algorithm::kQrDqnDecor;
}

double ExplorationSchedule::epsilon(std::size_t step) const {
  if (decay_steps == 0 || step >= decay_steps) return eps_end;
  const double frac = static_cast<double>(step) / static_cast<double>(decay_steps);
  return eps_start + (eps_end - eps_start) * frac;
}

void AgentConfig::validate(const EnvSpec& env_spec) const {
  if (env_spec.obs_dim < 1 || env_spec.num_actions < 2) {
    throw ConfigError("AgentConfig: environment must have obs_dim >= 1 and >= 2 actions");
  }
  if (gamma < 0.0 || gamma >= 1.0) throw ConfigError("AgentConfig: gamma must lie in [0,1)");
  if (lambda < 0.0) throw ConfigError("AgentConfig: lambda must be >= 0");
  if (sync_period < 1) throw ConfigError("AgentConfig: sync_period must be >= 1");
  if (minibatch < 1) throw ConfigError("AgentConfig: minibatch must be >= 1");
  if (is_decor(algorithm) && minibatch < 2) {
    throw ConfigError("AgentConfig: decor algorithms need minibatch >= 2 to estimate "
                      "the feature covariance");
  }
  if (buffer_capacity < minibatch) {
    throw ConfigError("AgentConfig: buffer capacity below minibatch size");
  }
  if (warm_start > buffer_capacity) {
    throw ConfigError("AgentConfig: warm_start exceeds buffer capacity");
  }
  if (exploration.eps_end <= 0.0 || exploration.eps_start < exploration.eps_end ||
      exploration.eps_start > 1.0) {
    throw ConfigError("AgentConfig: need 1 >= eps_start >= eps_end > 0");
  }
  for (std::size_t width : hidden) {
    if (width == 0) throw ConfigError("AgentConfig: hidden widths must be positive");
  }
  if (is_decor(algorithm)) {
    const std::size_t d = hidden.empty() ? env_spec.obs_dim : hidden.back();
    if (d < 2) throw ConfigError("AgentConfig: decor algorithms need feature dim >= 2");
  }
  if (is_quantile(algorithm)) {
    if (num_quantiles < 1) throw ConfigError("AgentConfig: need at least one quantile");
    if (kappa <= 0.0) throw ConfigError("AgentConfig: kappa must be positive");
  }
}

QNetwork build_network(const AgentConfig& config, const EnvSpec& env_spec, Rng& rng) {
  const std::size_t out =
      is_quantile(config.algorithm) ? env_spec.num_actions * config.num_quantiles
                                    : env_spec.num_actions;
  if (config.hidden.empty()) return QNetwork::linear(env_spec.obs_dim, out);
  return QNetwork::mlp(env_spec.obs_dim, config.hidden, out, rng);
}

namespace {

QNetwork init_network(const AgentConfig& config, const EnvSpec& env_spec) {
  Rng rng(mix_seed(config.seed, kInitStream));
  return build_network(config, env_spec, rng);
}

AgentConfig validated(AgentConfig config, const EnvSpec& env_spec) {
  config.validate(env_spec);
  return config;
}

}  // namespace

Agent::Agent(AgentConfig config, EnvSpec env_spec)
    : config_(validated(std::move(config), env_spec)),
      env_spec_(env_spec),
      online_(init_network(config_, env_spec_)),
      target_(sync_target(online_)),
      optimizer_(config_.optimizer, online_),
      buffer_(config_.buffer_capacity),
      explore_rng_(mix_seed(config_.seed, kExploreStream)),
      sample_rng_(mix_seed(config_.seed, kSampleStream)) {}

std::size_t Agent::argmax_row(std::span<const double> values) const {
  std::size_t best = 0;
  for (std::size_t a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

std::size_t Agent::act(std::span<const double> observation, std::size_t step) {
  const double eps = config_.exploration.epsilon(step);
  if (explore_rng_.uniform01() < eps) {
    return explore_rng_.uniform_int(env_spec_.num_actions);
  }
  return greedy_action(observation);
}

std::size_t Agent::random_action() {
  return explore_rng_.uniform_int(env_spec_.num_actions);
}

void Agent::observe(const Transition& transition) {
  if (transition.s.size() != env_spec_.obs_dim ||
      transition.s_next.size() != env_spec_.obs_dim) {
    throw DimensionError("Agent::observe: observation length mismatch");
  }
  if (transition.a >= env_spec_.num_actions) {
    throw UsageError("Agent::observe: action out of range");
  }
  Transition stored = transition;
  stored.r = clip_reward(transition.r);
  buffer_.push(std::move(stored));
  ++env_steps_;
}

Matrix Agent::batch_matrix(const std::vector<const Transition*>& batch, bool next) const {
  Matrix m(batch.size(), env_spec_.obs_dim);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& src = next ? batch[t]->s_next : batch[t]->s;
    auto row = m.row(t);
    std::copy(src.begin(), src.end(), row.begin());
  }
  return m;
}

std::optional<StepMetrics> Agent::learn_step() {
  const std::size_t k = config_.minibatch;
  if (buffer_.size() < std::max(k, config_.warm_start)) return std::nullopt;

  const std::vector<const Transition*> batch = buffer_.sample(k, sample_rng_);
  const Matrix states = batch_matrix(batch, false);
  const Matrix next_states = batch_matrix(batch, true);

  ForwardResult online_fwd = forward(online_, states);
  const ForwardResult target_fwd = forward(target_, next_states);

  StepMetrics metrics;
  Matrix output_grad(online_fwd.outputs.rows(), online_fwd.outputs.cols());
  if (is_quantile(config_.algorithm)) {
    const std::size_t N = config_.num_quantiles;
    const QuantileHead head(N, config_.kappa, config_.qr_inner_mean);
    Matrix theta_pred(k, N);
    Matrix targets(k, N);
    Matrix theta_next(env_spec_.num_actions, N);
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t a = batch[t]->a;
      auto out_row = online_fwd.outputs.row(t);
      auto pred_row = theta_pred.row(t);
      for (std::size_t i = 0; i < N; ++i) pred_row[i] = out_row[a * N + i];
      auto next_row = target_fwd.outputs.row(t);
      for (std::size_t b = 0; b < env_spec_.num_actions; ++b) {
        auto dst = theta_next.row(b);
        for (std::size_t i = 0; i < N; ++i) dst[i] = next_row[b * N + i];
      }
      const std::vector<double> y =
          qr_target(batch[t]->r, batch[t]->terminal, theta_next, config_.gamma);
      auto target_row = targets.row(t);
      std::copy(y.begin(), y.end(), target_row.begin());
    }
    QuantileHuberResult qh = quantile_huber_loss_and_grad(theta_pred, targets, head);
    metrics.td_loss = qh.loss;
    for (std::size_t t = 0; t < k; ++t) {
      const std::size_t a = batch[t]->a;
      auto grad_row = qh.grad.row(t);
      auto out_row = output_grad.row(t);
      for (std::size_t i = 0; i < N; ++i) out_row[a * N + i] = grad_row[i];
    }
  } else {
    std::vector<double> q_sa(k), targets(k);
    for (std::size_t t = 0; t < k; ++t) {
      q_sa[t] = online_fwd.outputs(t, batch[t]->a);
      targets[t] = dqn_target(batch[t]->r, batch[t]->terminal,
                              target_fwd.outputs.row(t), config_.gamma);
    }
    const TdResult td = td_loss_and_grad(q_sa, targets);
    metrics.td_loss = td.loss;
    for (std::size_t t = 0; t < k; ++t) output_grad(t, batch[t]->a) = td.grad[t];
  }

  // Correlation loss is logged for every algorithm so decor/base runs can be
  // compared; only the decor variants feed its gradient back.
  const bool corr_defined = k >= 2 && online_.feature_dim() >= 2;
  if (is_decor(config_.algorithm) && config_.decor_independent_batch) {
    const std::vector<const Transition*> decor_batch = buffer_.sample(k, sample_rng_);
    ForwardResult decor_fwd = forward(online_, batch_matrix(decor_batch, false));
    metrics.correlation_loss = correlation_loss(feature_covariance(decor_fwd.features));
    Matrix feature_grad = correlation_loss_grad(decor_fwd.features);
    for (std::size_t i = 0; i < feature_grad.size(); ++i) {
      feature_grad.data()[i] *= config_.lambda;
    }
    backward(online_, online_fwd.tape, output_grad, nullptr);
    const Matrix zero_out(decor_fwd.outputs.rows(), decor_fwd.outputs.cols());
    backward(online_, decor_fwd.tape, zero_out, &feature_grad);
    online_fwd.tape.accumulate(decor_fwd.tape);
  } else if (is_decor(config_.algorithm)) {
    metrics.correlation_loss = correlation_loss(feature_covariance(online_fwd.features));
    Matrix feature_grad = correlation_loss_grad(online_fwd.features);
    for (std::size_t i = 0; i < feature_grad.size(); ++i) {
      feature_grad.data()[i] *= config_.lambda;
    }
    backward(online_, online_fwd.tape, output_grad, &feature_grad);
  } else {
    if (corr_defined) {
      metrics.correlation_loss = correlation_loss(feature_covariance(online_fwd.features));
    }
    backward(online_, online_fwd.tape, output_grad, nullptr);
  }

  metrics.grad_norm = online_fwd.tape.grad_norm();
  optimizer_.step(online_, online_fwd.tape);
  ++learn_steps_;
  if (learn_steps_ % config_.sync_period == 0) target_ = sync_target(online_);
  return metrics;
}

std::vector<double> Agent::q_values(std::span<const double> observation) const {
  if (observation.size() != env_spec_.obs_dim) {
    throw DimensionError("Agent::q_values: observation length mismatch");
  }
  Matrix obs(1, env_spec_.obs_dim);
  std::copy(observation.begin(), observation.end(), obs.row(0).begin());
  const ForwardResult fwd = forward(online_, obs);
  auto out = fwd.outputs.row(0);
  if (!is_quantile(config_.algorithm)) {
    return std::vector<double>(out.begin(), out.end());
  }
  const std::size_t N = config_.num_quantiles;
  std::vector<double> q(env_spec_.num_actions, 0.0);
  for (std::size_t a = 0; a < q.size(); ++a) {
    for (std::size_t i = 0; i < N; ++i) q[a] += out[a * N + i];
    q[a] /= static_cast<double>(N);
  }
  return q;
}

QuantileDist Agent::quantiles(std::span<const double> observation) const {
  if (!is_quantile(config_.algorithm)) {
    throw UsageError("Agent::quantiles: agent has no quantile head");
  }
  if (observation.size() != env_spec_.obs_dim) {
    throw DimensionError("Agent::quantiles: observation length mismatch");
  }
  Matrix obs(1, env_spec_.obs_dim);
  std::copy(observation.begin(), observation.end(), obs.row(0).begin());
  const ForwardResult fwd = forward(online_, obs);
  auto out = fwd.outputs.row(0);
  const std::size_t N = config_.num_quantiles;
  QuantileDist dist;
  dist.theta = Matrix(env_spec_.num_actions, N);
  dist.q.assign(env_spec_.num_actions, 0.0);
  for (std::size_t a = 0; a < env_spec_.num_actions; ++a) {
    auto row = dist.theta.row(a);
    for (std::size_t i = 0; i < N; ++i) {
      row[i] = out[a * N + i];
      dist.q[a] += row[i];
    }
    dist.q[a] /= static_cast<double>(N);
  }
  return dist;
}

std::size_t Agent::greedy_action(std::span<const double> observation) const {
  const std::vector<double> q = q_values(observation);
  return argmax_row(q);
}

Matrix Agent::features(const Matrix& observations) const {
  return forward(online_, observations).features;
}

CheckpointInfo Agent::checkpoint_info() const {
  CheckpointInfo info;
  info.quantile_head = is_quantile(config_.algorithm);
  info.num_quantiles = info.quantile_head ? config_.num_quantiles : 0;
  return info;
}

}  // namespace decorl
