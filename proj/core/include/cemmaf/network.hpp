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

#ifndef CEMMAF_NETWORK_HPP_
#define CEMMAF_NETWORK_HPP_

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cemmaf/graph.hpp"
#include "cemmaf/tensor.hpp"

namespace cemmaf {

enum class Activation { kNone, kRelu, kSigmoid };

std::string_view activation_name(Activation activation);
// Accepts "none", "relu", "sigmoid"; throws FormatError otherwise.
Activation parse_activation(std::string_view name);

// y = act(W x + b) with W shaped [out, in] and b shaped [out].
struct DenseLayer {
  Tensor weight;
  Tensor bias;
  Activation activation = Activation::kNone;
};

// Feed-forward stack of dense layers compiled once into a Graph. Copies share
// the compiled graph, which is immutable.
class Network {
 public:
  // Forward values kept for a later pullback at the same input.
  struct Pass {
    NodeValues values;
    std::span<const double> output() const { return values.back().data(); }
  };

  Network() = default;
  // Throws ShapeError if layer dimensions do not chain.
  explicit Network(std::vector<DenseLayer> layers);

  // Rebuilds layers from a flat [W0, b0, W1, b1, ...] list.
  static Network from_tensors(const std::vector<Tensor>& tensors,
                              const std::vector<Activation>& activations);

  bool empty() const { return layers_.empty(); }
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<Tensor> tensors() const;
  std::vector<Activation> activations() const;

  const Graph& graph() const { return *graph_; }
  NodeId input_node() const { return input_; }
  NodeId output_node() const { return output_; }

  Pass forward_pass(std::span<const double> x) const;
  std::vector<double> forward(std::span<const double> x) const;
  // Gradient of <cotangent, net(x)> with respect to x.
  std::vector<double> pullback(const Pass& pass, std::span<const double> cotangent) const;

 private:
  std::vector<DenseLayer> layers_;
  std::shared_ptr<const Graph> graph_;
  NodeId input_;
  NodeId output_;
};

}  // namespace cemmaf

#endif  // CEMMAF_NETWORK_HPP_
