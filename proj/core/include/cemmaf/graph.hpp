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

// Small dense computation graph with reverse-mode differentiation.
//
// A Graph is built once through GraphBuilder and is immutable afterwards, so
// one graph may be evaluated from many threads at once. All evaluation state
// (node values, adjoints) lives in the per-call return values.
//
// Supported ops and their shape rules:
//   input, constant        any shape
//   matmul(a, b)           [m,k] x [k] -> [m], [m,k] x [k,n] -> [m,n]
//   add(a, b)              equal shapes, or [m,n] + [m] (b added to every column)
//   relu, sigmoid, square  elementwise
//   max_with_zero          elementwise max(x, 0); the hinge used by objectives
//   scale(a, s)            a * s for a fixed real s
//   sum(a)                 -> [1]
//   concat(a, b, ...)      rank-1 parents joined end to end
//
// ReLU and max_with_zero use 0 as the subgradient at exactly 0.

#ifndef CEMMAF_GRAPH_HPP_
#define CEMMAF_GRAPH_HPP_

#include <compare>
#include <cstddef>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "cemmaf/tensor.hpp"

namespace cemmaf {

enum class OpKind {
  kInput,
  kConstant,
  kMatMul,
  kAdd,
  kRelu,
  kSigmoid,
  kScale,
  kSum,
  kSquare,
  kMaxWithZero,
  kConcat,
};

const char* op_name(OpKind op);

struct NodeId {
  std::size_t index = 0;
  auto operator<=>(const NodeId&) const = default;
};

struct Node {
  OpKind op = OpKind::kInput;
  std::vector<NodeId> parents;
  Shape shape;
  double factor = 1.0;                      // kScale only
  std::shared_ptr<const Tensor> constant;   // kConstant only
  std::string name;                         // kInput only, for diagnostics
};

class Graph {
 public:
  std::span<const Node> nodes() const { return nodes_; }
  const Node& node(NodeId id) const { return nodes_.at(id.index); }
  std::size_t size() const { return nodes_.size(); }
  const std::vector<NodeId>& inputs() const { return inputs_; }
  // True when the node's value depends on at least one input node.
  bool depends_on_input(NodeId id) const { return depends_on_input_.at(id.index); }

 private:
  friend class GraphBuilder;
  std::vector<Node> nodes_;
  std::vector<NodeId> inputs_;
  std::vector<bool> depends_on_input_;
};

// Appends nodes in topological order; every method validates shapes and
// throws ShapeError on inconsistency.
class GraphBuilder {
 public:
  NodeId input(Shape shape, std::string name = {});
  NodeId constant(Tensor value);
  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId scale(NodeId a, double factor);
  NodeId sum(NodeId a);
  NodeId square(NodeId a);
  NodeId max_with_zero(NodeId a);
  NodeId concat(std::vector<NodeId> parts);

  const Shape& shape(NodeId id) const;

  // The builder stays usable; build() copies the nodes.
  Graph build() const;

 private:
  NodeId push(Node node);
  void check(NodeId id) const;

  Graph graph_;
};

using InputMap = std::map<NodeId, Tensor>;
using NodeValues = std::vector<Tensor>;   // indexed by NodeId::index
using Gradients = std::map<NodeId, Tensor>;  // keyed by input node

// Value of every node. Throws Error for unbound inputs, ShapeError for
// mismatched input shapes, NumericError if any node becomes non-finite.
NodeValues forward_eval(const Graph& graph, const InputMap& inputs);

// Pulls `cotangent` (shaped like `output`) back to every input node, given
// values from forward_eval on the same graph.
Gradients vector_jacobian_product(const Graph& graph, const NodeValues& values,
                                  NodeId output, const Tensor& cotangent);

// d(seed)/d(input) for every input. The seed node must hold one element.
Gradients backward_grad(const Graph& graph, const InputMap& inputs, NodeId seed);

// Central-difference estimate of backward_grad; step must be positive.
Gradients finite_diff_grad(const Graph& graph, const InputMap& inputs, NodeId seed,
                           double step);

}  // namespace cemmaf

#endif  // CEMMAF_GRAPH_HPP_
