#include "decorl/network.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <string>

#include "decorl/errors.hpp"

namespace decorl {

QNetwork::QNetwork(std::vector<Layer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw UsageError("QNetwork: needs at least one layer");
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    if (layers_[l].out_dim() != layers_[l + 1].in_dim()) {
      throw DimensionError("QNetwork: layer " + std::to_string(l) + " out dim " +
                           std::to_string(layers_[l].out_dim()) +
                           " does not feed layer " + std::to_string(l + 1));
    }
  }
  for (const Layer& layer : layers_) {
    if (layer.bias.size() != layer.out_dim()) {
      throw DimensionError("QNetwork: bias length does not match layer width");
    }
  }
  if (layers_.back().activation != Activation::kIdentity) {
    throw UsageError("QNetwork: output layer must be linear");
  }
}

QNetwork QNetwork::mlp(std::size_t obs_dim, std::span<const std::size_t> hidden,
                       std::size_t output_dim, Rng& rng) {
  if (hidden.empty()) throw UsageError("QNetwork::mlp: hidden widths must be non-empty");
  std::vector<Layer> layers;
  std::size_t in = obs_dim;
  auto make_layer = [&](std::size_t out, Activation act) {
    Layer layer;
    layer.weight = Matrix(in, out);
    layer.bias.assign(out, 0.0);
    layer.activation = act;
    const double scale = std::sqrt(2.0 / static_cast<double>(in));
    for (std::size_t i = 0; i < layer.weight.size(); ++i) {
      layer.weight.data()[i] = scale * rng.normal();
    }
    in = out;
    layers.push_back(std::move(layer));
  };
  for (std::size_t width : hidden) make_layer(width, Activation::kRelu);
  make_layer(output_dim, Activation::kIdentity);
  return QNetwork(std::move(layers));
}

QNetwork QNetwork::linear(std::size_t obs_dim, std::size_t output_dim) {
  Layer layer;
  layer.weight = Matrix(obs_dim, output_dim);
  layer.bias.assign(output_dim, 0.0);
  layer.activation = Activation::kIdentity;
  layer.use_bias = false;
  return QNetwork({std::move(layer)});
}

std::size_t QNetwork::num_params() const {
  std::size_t n = 0;
  for (const Layer& layer : layers_) n += layer.weight.size() + layer.bias.size();
  return n;
}

void GradientTape::accumulate(const GradientTape& other) {
  if (weight_grads.size() != other.weight_grads.size()) {
    throw DimensionError("GradientTape::accumulate: layer counts differ");
  }
  for (std::size_t l = 0; l < weight_grads.size(); ++l) {
    add_scaled(weight_grads[l], other.weight_grads[l], 1.0);
    for (std::size_t i = 0; i < bias_grads[l].size(); ++i) {
      bias_grads[l][i] += other.bias_grads[l][i];
    }
  }
}

double GradientTape::grad_norm() const {
  double sq = 0.0;
  for (const Matrix& g : weight_grads) {
    for (double v : g.flat()) sq += v * v;
  }
  for (const auto& g : bias_grads) {
    for (double v : g) sq += v * v;
  }
  return std::sqrt(sq);
}

ForwardResult forward(const QNetwork& net, const Matrix& states) {
  if (states.rows() == 0) throw UsageError("forward: batch must be non-empty");
  if (states.cols() != net.input_dim()) {
    throw DimensionError("forward: states have " + std::to_string(states.cols()) +
                         " columns, network expects " +
                         std::to_string(net.input_dim()));
  }
  ForwardResult res;
  res.tape.activations.reserve(net.num_layers() + 1);
  res.tape.activations.push_back(states);
  for (const Layer& layer : net.layers()) {
    Matrix z = matmul(res.tape.activations.back(), layer.weight);
    if (layer.use_bias) {
      for (std::size_t i = 0; i < z.rows(); ++i) {
        auto zi = z.row(i);
        for (std::size_t j = 0; j < z.cols(); ++j) zi[j] += layer.bias[j];
      }
    }
    if (layer.activation == Activation::kRelu) {
      for (std::size_t i = 0; i < z.size(); ++i) {
        if (z.data()[i] < 0.0) z.data()[i] = 0.0;
      }
    }
    res.tape.activations.push_back(std::move(z));
  }
  res.tape.weight_grads.reserve(net.num_layers());
  res.tape.bias_grads.reserve(net.num_layers());
  for (const Layer& layer : net.layers()) {
    res.tape.weight_grads.emplace_back(layer.in_dim(), layer.out_dim());
    res.tape.bias_grads.emplace_back(layer.out_dim(), 0.0);
  }
  res.tape.has_activations = true;
  res.features = res.tape.activations[net.num_layers() - 1];
  res.outputs = res.tape.activations[net.num_layers()];
  return res;
}

void backward(const QNetwork& net, GradientTape& tape, const Matrix& output_grad,
              const Matrix* feature_grad) {
  if (!tape.has_activations) {
    throw UsageError("backward: tape has no cached forward pass");
  }
  if (tape.activations.size() != net.num_layers() + 1 ||
      tape.weight_grads.size() != net.num_layers()) {
    throw UsageError("backward: tape does not match this network");
  }
  const Matrix& outputs = tape.activations.back();
  if (!output_grad.same_shape(outputs)) {
    throw DimensionError("backward: output_grad shape mismatch");
  }
  const std::size_t L = net.num_layers();
  if (feature_grad != nullptr) {
    const Matrix& features = tape.activations[L - 1];
    if (!feature_grad->same_shape(features)) {
      throw DimensionError("backward: feature_grad shape mismatch");
    }
  }
  Matrix delta = output_grad;
  for (std::size_t l = L; l-- > 0;) {
    const Layer& layer = net.layers()[l];
    const Matrix& input = tape.activations[l];
    if (layer.activation == Activation::kRelu) {
      const Matrix& out = tape.activations[l + 1];
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (out.data()[i] <= 0.0) delta.data()[i] = 0.0;
      }
    }
    add_scaled(tape.weight_grads[l], matmul_tn(input, delta), 1.0);
    if (layer.use_bias) {
      auto& bg = tape.bias_grads[l];
      for (std::size_t i = 0; i < delta.rows(); ++i) {
        auto di = delta.row(i);
        for (std::size_t j = 0; j < delta.cols(); ++j) bg[j] += di[j];
      }
    }
    if (l == 0) break;
    delta = matmul_nt(delta, layer.weight);
    if (l == L - 1 && feature_grad != nullptr) {
      add_scaled(delta, *feature_grad, 1.0);
    }
  }
}

QNetwork sync_target(const QNetwork& online) { return online; }

std::vector<double> flatten_parameters(const QNetwork& net) {
  std::vector<double> out;
  out.reserve(net.num_params());
  for (const Layer& layer : net.layers()) {
    out.insert(out.end(), layer.weight.flat().begin(), layer.weight.flat().end());
    out.insert(out.end(), layer.bias.begin(), layer.bias.end());
  }
  return out;
}

void set_parameters(QNetwork& net, std::span<const double> params) {
  if (params.size() != net.num_params()) {
    throw DimensionError("set_parameters: expected " + std::to_string(net.num_params()) +
                         " values, got " + std::to_string(params.size()));
  }
  std::size_t k = 0;
  for (Layer& layer : net.layers()) {
    for (std::size_t i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = params[k++];
    for (double& b : layer.bias) b = params[k++];
  }
}

std::vector<double> flatten_gradients(const GradientTape& tape) {
  std::vector<double> out;
  for (std::size_t l = 0; l < tape.weight_grads.size(); ++l) {
    out.insert(out.end(), tape.weight_grads[l].flat().begin(),
               tape.weight_grads[l].flat().end());
    out.insert(out.end(), tape.bias_grads[l].begin(), tape.bias_grads[l].end());
  }
  return out;
}

namespace {

void write_doubles(std::ostream& out, std::span<const double> values) {
  char buf[32];
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g", values[i]);
    out << buf << (i + 1 == values.size() ? "" : " ");
  }
  out << "\n";
}

}  // namespace

void save_network(const QNetwork& net, const CheckpointInfo& info, std::ostream& out) {
  out << "decorl-net v1\n";
  out << "head " << (info.quantile_head ? "quantile" : "value") << " "
      << info.num_quantiles << "\n";
  out << "layers " << net.num_layers() << "\n";
  for (const Layer& layer : net.layers()) {
    out << "layer " << layer.in_dim() << " " << layer.out_dim() << " "
        << (layer.activation == Activation::kRelu ? "relu" : "identity") << " "
        << (layer.use_bias ? 1 : 0) << "\n";
    write_doubles(out, layer.weight.flat());
    write_doubles(out, layer.bias);
  }
}

QNetwork load_network(std::istream& in, CheckpointInfo* info) {
  std::string magic, version;
  in >> magic >> version;
  if (magic != "decorl-net" || version != "v1") {
    throw ParseError("load_network: not a decorl-net v1 checkpoint");
  }
  std::string tag, head_kind;
  std::size_t num_quantiles = 0;
  in >> tag >> head_kind >> num_quantiles;
  if (tag != "head" || (head_kind != "quantile" && head_kind != "value")) {
    throw ParseError("load_network: malformed head line");
  }
  std::size_t num_layers = 0;
  in >> tag >> num_layers;
  if (tag != "layers" || num_layers == 0) {
    throw ParseError("load_network: malformed layer count");
  }
  std::vector<Layer> layers;
  for (std::size_t l = 0; l < num_layers; ++l) {
    std::size_t in_dim = 0, out_dim = 0;
    std::string act;
    int use_bias = 1;
    in >> tag >> in_dim >> out_dim >> act >> use_bias;
    if (!in || tag != "layer" || in_dim == 0 || out_dim == 0) {
      throw ParseError("load_network: malformed layer header " + std::to_string(l));
    }
    Layer layer;
    layer.weight = Matrix(in_dim, out_dim);
    layer.bias.assign(out_dim, 0.0);
    layer.activation = act == "relu" ? Activation::kRelu : Activation::kIdentity;
    layer.use_bias = use_bias != 0;
    for (std::size_t i = 0; i < layer.weight.size(); ++i) in >> layer.weight.data()[i];
    for (double& b : layer.bias) in >> b;
    if (!in) throw ParseError("load_network: truncated parameters in layer " +
                              std::to_string(l));
    layers.push_back(std::move(layer));
  }
  if (info != nullptr) {
    info->quantile_head = head_kind == "quantile";
    info->num_quantiles = num_quantiles;
  }
  return QNetwork(std::move(layers));
}

}  // namespace decorl
