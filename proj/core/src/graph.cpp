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

#include "cemmaf/graph.hpp"

#include <cmath>
#include <optional>

#include "cemmaf/error.hpp"

namespace cemmaf {

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kInput: return "input";
    case OpKind::kConstant: return "constant";
    case OpKind::kMatMul: return "matmul";
    case OpKind::kAdd: return "add";
    case OpKind::kRelu: return "relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kScale: return "scale";
    case OpKind::kSum: return "sum";
    case OpKind::kSquare: return "square";
    case OpKind::kMaxWithZero: return "max_with_zero";
    case OpKind::kConcat: return "concat";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// Builder

void GraphBuilder::check(NodeId id) const {
  if (id.index >= graph_.nodes_.size()) {
    throw Error("node id " + std::to_string(id.index) + " does not exist");
  }
}

const Shape& GraphBuilder::shape(NodeId id) const {
  check(id);
  return graph_.nodes_[id.index].shape;
}

NodeId GraphBuilder::push(Node node) {
  bool depends = node.op == OpKind::kInput;
  for (NodeId p : node.parents) depends = depends || graph_.depends_on_input_[p.index];
  NodeId id{graph_.nodes_.size()};
  if (node.op == OpKind::kInput) graph_.inputs_.push_back(id);
  graph_.nodes_.push_back(std::move(node));
  graph_.depends_on_input_.push_back(depends);
  return id;
}

NodeId GraphBuilder::input(Shape shape, std::string name) {
  Tensor probe(shape);  // validates the shape
  Node node;
  node.op = OpKind::kInput;
  node.shape = std::move(shape);
  node.name = std::move(name);
  return push(std::move(node));
}

NodeId GraphBuilder::constant(Tensor value) {
  if (!value.all_finite()) throw NumericError("constant node holds a non-finite value");
  Node node;
  node.op = OpKind::kConstant;
  node.shape = value.shape();
  node.constant = std::make_shared<const Tensor>(std::move(value));
  return push(std::move(node));
}

NodeId GraphBuilder::matmul(NodeId a, NodeId b) {
  const Shape& sa = shape(a);
  const Shape& sb = shape(b);
  if (sa.size() != 2 || (sb.size() != 1 && sb.size() != 2) || sa[1] != sb[0]) {
    throw ShapeError("matmul shape mismatch: " + shape_to_string(sa) + " x " +
                     shape_to_string(sb));
  }
  Node node;
  node.op = OpKind::kMatMul;
  node.parents = {a, b};
  node.shape = sb.size() == 1 ? Shape{sa[0]} : Shape{sa[0], sb[1]};
  return push(std::move(node));
}

NodeId GraphBuilder::add(NodeId a, NodeId b) {
  const Shape& sa = shape(a);
  const Shape& sb = shape(b);
  const bool column_broadcast = sa.size() == 2 && sb.size() == 1 && sa[0] == sb[0];
  if (sa != sb && !column_broadcast) {
    throw ShapeError("add shape mismatch: " + shape_to_string(sa) + " + " +
                     shape_to_string(sb));
  }
  Node node;
  node.op = OpKind::kAdd;
  node.parents = {a, b};
  node.shape = sa;
  return push(std::move(node));
}

namespace {

Node unary(OpKind op, NodeId a, const Shape& shape) {
  Node node;
  node.op = op;
  node.parents = {a};
  node.shape = shape;
  return node;
}

}  // namespace

NodeId GraphBuilder::relu(NodeId a) { return push(unary(OpKind::kRelu, a, shape(a))); }
NodeId GraphBuilder::sigmoid(NodeId a) { return push(unary(OpKind::kSigmoid, a, shape(a))); }
NodeId GraphBuilder::square(NodeId a) { return push(unary(OpKind::kSquare, a, shape(a))); }
NodeId GraphBuilder::sum(NodeId a) { return push(unary(OpKind::kSum, a, {1})); }

NodeId GraphBuilder::max_with_zero(NodeId a) {
  return push(unary(OpKind::kMaxWithZero, a, shape(a)));
}

NodeId GraphBuilder::scale(NodeId a, double factor) {
  if (!std::isfinite(factor)) throw NumericError("scale factor must be finite");
  Node node = unary(OpKind::kScale, a, shape(a));
  node.factor = factor;
  return push(std::move(node));
}

NodeId GraphBuilder::concat(std::vector<NodeId> parts) {
  if (parts.empty()) throw ShapeError("concat needs at least one part");
  std::size_t total = 0;
  for (NodeId p : parts) {
    const Shape& s = shape(p);
    if (s.size() != 1) throw ShapeError("concat parts must be rank 1, got " + shape_to_string(s));
    total += s[0];
  }
  Node node;
  node.op = OpKind::kConcat;
  node.parents = std::move(parts);
  node.shape = {total};
  return push(std::move(node));
}

Graph GraphBuilder::build() const { return graph_; }

// ---------------------------------------------------------------------------
// Forward

namespace {

double sigmoid_value(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Tensor eval_matmul(const Tensor& a, const Tensor& b) {
  const std::size_t m = a.shape()[0];
  const std::size_t k = a.shape()[1];
  if (b.rank() == 1) {
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* row = a.data().data() + i * k;
      for (std::size_t j = 0; j < k; ++j) acc += row[j] * b[j];
      out[i] = acc;
    }
    return out;
  }
  const std::size_t n = b.shape()[1];
  Tensor out({m, n});
  double* o = out.data().data();
  const double* bd = b.data().data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bd + p * n;
      double* orow = o + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  return out;
}

Tensor eval_node(const Node& node, const NodeValues& values) {
  auto parent = [&](std::size_t i) -> const Tensor& { return values[node.parents[i].index]; };
  switch (node.op) {
    case OpKind::kInput:
    case OpKind::kConstant:
      break;  // handled by the caller
    case OpKind::kMatMul:
      return eval_matmul(parent(0), parent(1));
    case OpKind::kAdd: {
      const Tensor& a = parent(0);
      const Tensor& b = parent(1);
      Tensor out = a;
      if (a.shape() == b.shape()) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
      } else {
        const std::size_t cols = a.shape()[1];
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i / cols];
      }
      return out;
    }
    case OpKind::kRelu:
    case OpKind::kMaxWithZero: {
      Tensor out = parent(0);
      for (double& v : out.data()) v = v > 0.0 ? v : 0.0;
      return out;
    }
    case OpKind::kSigmoid: {
      Tensor out = parent(0);
      for (double& v : out.data()) v = sigmoid_value(v);
      return out;
    }
    case OpKind::kScale: {
      Tensor out = parent(0);
      for (double& v : out.data()) v *= node.factor;
      return out;
    }
    case OpKind::kSum: {
      double acc = 0.0;
      for (double v : parent(0).data()) acc += v;
      return Tensor::scalar(acc);
    }
    case OpKind::kSquare: {
      Tensor out = parent(0);
      for (double& v : out.data()) v *= v;
      return out;
    }
    case OpKind::kConcat: {
      std::vector<double> joined;
      joined.reserve(shape_size(node.shape));
      for (std::size_t i = 0; i < node.parents.size(); ++i) {
        const auto d = parent(i).data();
        joined.insert(joined.end(), d.begin(), d.end());
      }
      return Tensor::vector(std::move(joined));
    }
  }
  throw Error("unsupported op");
}

}  // namespace

NodeValues forward_eval(const Graph& graph, const InputMap& inputs) {
  for (const auto& [id, tensor] : inputs) {
    if (id.index >= graph.size() || graph.node(id).op != OpKind::kInput) {
      throw Error("node " + std::to_string(id.index) + " is not an input of this graph");
    }
  }
  NodeValues values;
  values.reserve(graph.size());
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const Node& node = graph.nodes()[i];
    if (node.op == OpKind::kInput) {
      auto it = inputs.find(NodeId{i});
      if (it == inputs.end()) {
        throw Error("unbound input node " + std::to_string(i) +
                    (node.name.empty() ? "" : " ('" + node.name + "')"));
      }
      if (it->second.shape() != node.shape) {
        throw ShapeError("input node " + std::to_string(i) + " expects shape " +
                         shape_to_string(node.shape) + ", got " +
                         shape_to_string(it->second.shape()));
      }
      if (!it->second.all_finite()) {
        throw NumericError("input node " + std::to_string(i) + " holds a non-finite value");
      }
      values.push_back(it->second);
    } else if (node.op == OpKind::kConstant) {
      values.push_back(*node.constant);
    } else {
      Tensor out = eval_node(node, values);
      if (!out.all_finite()) {
        throw NumericError(std::string("non-finite result at node ") + std::to_string(i) +
                           " (" + op_name(node.op) + ")");
      }
      values.push_back(std::move(out));
    }
  }
  return values;
}

// ---------------------------------------------------------------------------
// Reverse mode

Gradients vector_jacobian_product(const Graph& graph, const NodeValues& values,
                                  NodeId output, const Tensor& cotangent) {
  if (values.size() != graph.size()) throw Error("node values do not belong to this graph");
  if (output.index >= graph.size()) throw Error("output node does not exist");
  if (cotangent.shape() != graph.node(output).shape) {
    throw ShapeError("cotangent shape " + shape_to_string(cotangent.shape()) +
                     " does not match output shape " +
                     shape_to_string(graph.node(output).shape));
  }

  std::vector<std::optional<Tensor>> adjoint(graph.size());
  adjoint[output.index] = cotangent;

  auto accumulate = [&](NodeId target) -> Tensor* {
    if (!graph.depends_on_input(target)) return nullptr;
    auto& slot = adjoint[target.index];
    if (!slot) slot.emplace(graph.node(target).shape);
    return &*slot;
  };

  for (std::size_t i = output.index + 1; i-- > 0;) {
    if (!adjoint[i]) continue;
    const Node& node = graph.nodes()[i];
    const Tensor& g = *adjoint[i];
    switch (node.op) {
      case OpKind::kInput:
      case OpKind::kConstant:
        break;
      case OpKind::kMatMul: {
        const Tensor& a = values[node.parents[0].index];
        const Tensor& b = values[node.parents[1].index];
        const std::size_t m = a.shape()[0];
        const std::size_t k = a.shape()[1];
        const std::size_t n = b.rank() == 1 ? 1 : b.shape()[1];
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t p = 0; p < k; ++p) {
              double acc = 0.0;
              for (std::size_t c = 0; c < n; ++c) acc += g[r * n + c] * b[p * n + c];
              (*da)[r * k + p] += acc;
            }
          }
        }
        if (Tensor* db = accumulate(node.parents[1])) {
          for (std::size_t r = 0; r < m; ++r) {
            for (std::size_t p = 0; p < k; ++p) {
              const double arp = a[r * k + p];
              if (arp == 0.0) continue;
              for (std::size_t c = 0; c < n; ++c) (*db)[p * n + c] += arp * g[r * n + c];
            }
          }
        }
        break;
      }
      case OpKind::kAdd: {
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t j = 0; j < g.size(); ++j) (*da)[j] += g[j];
        }
        if (Tensor* db = accumulate(node.parents[1])) {
          if (db->size() == g.size()) {
            for (std::size_t j = 0; j < g.size(); ++j) (*db)[j] += g[j];
          } else {
            const std::size_t cols = node.shape[1];
            for (std::size_t j = 0; j < g.size(); ++j) (*db)[j / cols] += g[j];
          }
        }
        break;
      }
      case OpKind::kRelu:
      case OpKind::kMaxWithZero: {
        const Tensor& x = values[node.parents[0].index];
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t j = 0; j < g.size(); ++j) {
            if (x[j] > 0.0) (*da)[j] += g[j];
          }
        }
        break;
      }
      case OpKind::kSigmoid: {
        const Tensor& y = values[i];
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t j = 0; j < g.size(); ++j) (*da)[j] += g[j] * y[j] * (1.0 - y[j]);
        }
        break;
      }
      case OpKind::kScale: {
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t j = 0; j < g.size(); ++j) (*da)[j] += g[j] * node.factor;
        }
        break;
      }
      case OpKind::kSum: {
        if (Tensor* da = accumulate(node.parents[0])) {
          for (double& v : da->data()) v += g[0];
        }
        break;
      }
      case OpKind::kSquare: {
        const Tensor& x = values[node.parents[0].index];
        if (Tensor* da = accumulate(node.parents[0])) {
          for (std::size_t j = 0; j < g.size(); ++j) (*da)[j] += 2.0 * x[j] * g[j];
        }
        break;
      }
      case OpKind::kConcat: {
        std::size_t offset = 0;
        for (NodeId p : node.parents) {
          const std::size_t len = graph.node(p).shape[0];
          if (Tensor* dp = accumulate(p)) {
            for (std::size_t j = 0; j < len; ++j) (*dp)[j] += g[offset + j];
          }
          offset += len;
        }
        break;
      }
    }
  }

  Gradients grads;
  for (NodeId in : graph.inputs()) {
    auto& slot = adjoint[in.index];
    grads.emplace(in, slot ? std::move(*slot) : Tensor(graph.node(in).shape));
  }
  return grads;
}

namespace {

void check_scalar_seed(const Graph& graph, NodeId seed) {
  if (seed.index >= graph.size()) throw Error("seed node does not exist");
  if (shape_size(graph.node(seed).shape) != 1) {
    throw ShapeError("seed node must be scalar, has shape " +
                     shape_to_string(graph.node(seed).shape));
  }
}

}  // namespace

Gradients backward_grad(const Graph& graph, const InputMap& inputs, NodeId seed) {
  check_scalar_seed(graph, seed);
  const NodeValues values = forward_eval(graph, inputs);
  return vector_jacobian_product(graph, values, seed,
                                 Tensor(graph.node(seed).shape, {1.0}));
}

Gradients finite_diff_grad(const Graph& graph, const InputMap& inputs, NodeId seed,
                           double step) {
  if (!(step > 0.0)) throw Error("finite-difference step must be positive");
  check_scalar_seed(graph, seed);
  // Surface unbound inputs and shape errors before perturbing anything.
  forward_eval(graph, inputs);

  Gradients grads;
  InputMap probe = inputs;
  for (NodeId in : graph.inputs()) {
    Tensor& x = probe.at(in);
    Tensor grad(x.shape());
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double saved = x[j];
      x[j] = saved + step;
      const double up = forward_eval(graph, probe)[seed.index][0];
      x[j] = saved - step;
      const double down = forward_eval(graph, probe)[seed.index][0];
      x[j] = saved;
      grad[j] = (up - down) / (2.0 * step);
    }
    grads.emplace(in, std::move(grad));
  }
  return grads;
}

}  // namespace cemmaf
