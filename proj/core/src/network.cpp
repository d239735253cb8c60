// Copyright 2026 The cemmaf Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cemmaf/network.hpp"

#include "cemmaf/error.hpp"

namespace cemmaf {

std::string_view activation_name(Activation activation) {
  switch (activation) {
    case Activation::kNone: return "none";
    case Activation::kRelu: return "relu";
    case Activation::kSigmoid: return "sigmoid";
  }
  return "none";
}

Activation parse_activation(std::string_view name) {
  if (name == "none") return Activation::kNone;
  if (name == "relu") return Activation::kRelu;
  if (name == "sigmoid") return Activation::kSigmoid;
  throw FormatError("unknown activation '" + std::string(name) + "'");
}

Network::Network(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw ShapeError("network needs at least one layer");
  GraphBuilder b;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& layer = layers_[i];
    if (layer.weight.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.shape()[0] != layer.weight.shape()[0]) {
      throw ShapeError("layer " + std::to_string(i) + " has weight " +
                       shape_to_string(layer.weight.shape()) + " and bias " +
                       shape_to_string(layer.bias.shape()));
    }
    if (i == 0) {
      input_ = b.input({layer.weight.shape()[1]}, "x");
      output_ = input_;
    } else if (layer.weight.shape()[1] != layers_[i - 1].weight.shape()[0]) {
      throw ShapeError("layer " + std::to_string(i) + " input width " +
                       std::to_string(layer.weight.shape()[1]) + " does not match previous output " +
                       std::to_string(layers_[i - 1].weight.shape()[0]));
    }
    const NodeId weight = b.constant(layer.weight);
    const NodeId bias = b.constant(layer.bias);
    NodeId h = b.add(b.matmul(weight, output_), bias);
    switch (layer.activation) {
      case Activation::kNone: break;
      case Activation::kRelu: h = b.relu(h); break;
      case Activation::kSigmoid: h = b.sigmoid(h); break;
    }
    output_ = h;
  }
  graph_ = std::make_shared<const Graph>(b.build());
}

Network Network::from_tensors(const std::vector<Tensor>& tensors,
                              const std::vector<Activation>& activations) {
  if (tensors.size() != 2 * activations.size()) {
    throw FormatError("expected " + std::to_string(2 * activations.size()) +
                      " tensors for " + std::to_string(activations.size()) + " layers, got " +
                      std::to_string(tensors.size()));
  }
  std::vector<DenseLayer> layers;
  for (std::size_t i = 0; i < activations.size(); ++i) {
    layers.push_back({tensors[2 * i], tensors[2 * i + 1], activations[i]});
  }
  return Network(std::move(layers));
}

std::size_t Network::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().weight.shape()[1];
}

std::size_t Network::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().weight.shape()[0];
}

std::vector<Tensor> Network::tensors() const {
  std::vector<Tensor> out;
  for (const DenseLayer& layer : layers_) {
    out.push_back(layer.weight);
    out.push_back(layer.bias);
  }
  return out;
}

std::vector<Activation> Network::activations() const {
  std::vector<Activation> out;
  for (const DenseLayer& layer : layers_) out.push_back(layer.activation);
  return out;
}

Network::Pass Network::forward_pass(std::span<const double> x) const {
  if (!graph_) throw Error("network is empty");
  if (x.size() != input_dim()) {
    throw ShapeError("network expects " + std::to_string(input_dim()) + " inputs, got " +
                     std::to_string(x.size()));
  }
  InputMap inputs;
  inputs.emplace(input_, Tensor::vector({x.begin(), x.end()}));
  Pass pass{forward_eval(*graph_, inputs)};
  // The graph ends at the output node, so values.back() is the output.
  return pass;
}

std::vector<double> Network::forward(std::span<const double> x) const {
  const Pass pass = forward_pass(x);
  const auto out = pass.output();
  return {out.begin(), out.end()};
}

std::vector<double> Network::pullback(const Pass& pass, std::span<const double> cotangent) const {
  if (cotangent.size() != output_dim()) {
    throw ShapeError("cotangent has " + std::to_string(cotangent.size()) + " entries, network has " +
                     std::to_string(output_dim()) + " outputs");
  }
  const Gradients grads = vector_jacobian_product(
      *graph_, pass.values, output_, Tensor::vector({cotangent.begin(), cotangent.end()}));
  return grads.at(input_).values();
}

}  // namespace cemmaf
