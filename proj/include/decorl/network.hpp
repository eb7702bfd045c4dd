#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "decorl/matrix.hpp"
#include "decorl/rng.hpp"

namespace decorl {

enum class Activation { kRelu, kIdentity };

/// One fully connected layer: y = act(x * weight + bias).
/// weight is [in x out] so batches multiply from the left.
struct Layer {
  Matrix weight;
  std::vector<double> bias;
  Activation activation = Activation::kIdentity;
  bool use_bias = true;

  std::size_t in_dim() const { return weight.rows(); }
  std::size_t out_dim() const { return weight.cols(); }
};

/// Parameter set of a Q network. The input of the final (identity) layer is
/// the feature vector phi; its width d is the feature dimension.
class QNetwork {
 public:
  QNetwork() = default;
  explicit QNetwork(std::vector<Layer> layers);

  /// ReLU MLP obs_dim -> hidden[0] -> ... -> hidden.back() -> output_dim with
  /// He-scaled Gaussian weights and zero biases. hidden must be non-empty.
  static QNetwork mlp(std::size_t obs_dim, std::span<const std::size_t> hidden,
                      std::size_t output_dim, Rng& rng);

  /// Single bias-free linear layer, zero-initialized. With one-hot inputs the
  /// weight matrix is exactly a Q table.
  static QNetwork linear(std::size_t obs_dim, std::size_t output_dim);

  std::size_t num_layers() const { return layers_.size(); }
  std::size_t input_dim() const { return layers_.front().in_dim(); }
  std::size_t output_dim() const { return layers_.back().out_dim(); }
  /// Width of the last hidden layer (the input dimension of the output head).
  std::size_t feature_dim() const { return layers_.back().in_dim(); }
  std::size_t num_params() const;

  const std::vector<Layer>& layers() const { return layers_; }
  std::vector<Layer>& layers() { return layers_; }

 private:
  std::vector<Layer> layers_;
};

/// Per-parameter gradients plus the activations cached by a forward pass.
struct GradientTape {
  std::vector<Matrix> weight_grads;
  std::vector<std::vector<double>> bias_grads;
  std::vector<Matrix> activations;  // activations[0] = input batch
  bool has_activations = false;

  void accumulate(const GradientTape& other);
  double grad_norm() const;  // L2 norm over all parameter gradients
};

struct ForwardResult {
  Matrix features;  // [batch x d], post-activation last hidden layer
  Matrix outputs;   // [batch x output_dim]
  GradientTape tape;
};

/// Batched forward pass caching every intermediate needed by backward.
ForwardResult forward(const QNetwork& net, const Matrix& states);

/// Reverse pass accumulating d(<output_grad, outputs> + <feature_grad, features>)/dtheta
/// into the tape. feature_grad is injected additively where the last hidden
/// activations feed the output head, so a regularizer gradient on phi shares
/// the same pass as the TD gradient. Pass nullptr to skip the injection.
void backward(const QNetwork& net, GradientTape& tape, const Matrix& output_grad,
              const Matrix* feature_grad = nullptr);

/// Deep copy used as the periodically synchronized target network.
QNetwork sync_target(const QNetwork& online);

std::vector<double> flatten_parameters(const QNetwork& net);
void set_parameters(QNetwork& net, std::span<const double> params);
std::vector<double> flatten_gradients(const GradientTape& tape);

/// Head metadata carried by checkpoints so a saved network can be evaluated
/// without the original config (quantile heads need N to reshape outputs).
struct CheckpointInfo {
  bool quantile_head = false;
  std::size_t num_quantiles = 1;
};

void save_network(const QNetwork& net, const CheckpointInfo& info, std::ostream& out);
QNetwork load_network(std::istream& in, CheckpointInfo* info = nullptr);

}  // namespace decorl
