// Copyright 2026 The frih Authors
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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "frih/tensor.hpp"

namespace frih {

template <typename T>
class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives.
template <typename T>
struct Var {
  Graph<T>* graph = nullptr;
  std::size_t id = 0;

  const Tensor<T>& value() const { return graph->value(id); }
  const Shape& shape() const { return graph->value(id).shape(); }
  bool requires_grad() const { return graph->requires_grad(id); }
};

// Tape of op records in creation order. Every input id precedes its
// consumer, so the creation order is a topological order and backward is a
// single reverse sweep.
template <typename T>
class Graph {
 public:
  using BackwardFn = std::function<void(Graph&, std::size_t)>;

  struct Node {
    std::string op;
    std::vector<std::size_t> inputs;
    Tensor<T> value;
    std::optional<Tensor<T>> grad;
    bool requires_grad = false;
    BackwardFn backward;
  };

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var<T> leaf(Tensor<T> value, bool requires_grad = false) {
    nodes_.push_back(Node{"leaf", {}, std::move(value), std::nullopt, requires_grad, {}});
    return {this, nodes_.size() - 1};
  }

  Var<T> constant(Tensor<T> value) { return leaf(std::move(value), false); }

  // Appends an op node. The backward closure is dropped when no input needs
  // a gradient.
  Var<T> record(std::string op, std::vector<std::size_t> inputs, Tensor<T> value, BackwardFn fn) {
    bool needs = false;
    for (auto in : inputs) {
      if (in >= nodes_.size()) throw InvalidArgument("graph: input id out of range");
      needs = needs || nodes_[in].requires_grad;
    }
    nodes_.push_back(
        Node{std::move(op), std::move(inputs), std::move(value), std::nullopt, needs, needs ? std::move(fn) : BackwardFn{}});
    return {this, nodes_.size() - 1};
  }

  std::size_t size() const noexcept { return nodes_.size(); }
  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const Tensor<T>& value(std::size_t id) const { return nodes_.at(id).value; }
  bool requires_grad(std::size_t id) const { return nodes_.at(id).requires_grad; }

  // Gradient of the last backward() loss w.r.t. a node; zeros when the node
  // does not reach the loss.
  Tensor<T> grad(std::size_t id) const {
    const auto& n = nodes_.at(id);
    return n.grad ? *n.grad : Tensor<T>(n.value.shape());
  }
  Tensor<T> grad(const Var<T>& v) const { return grad(v.id); }

  // Zero-initialized on first touch; used by backward closures.
  Tensor<T>& grad_buffer(std::size_t id) {
    auto& n = nodes_.at(id);
    if (!n.grad) n.grad.emplace(n.value.shape());
    return *n.grad;
  }

  void backward(const Var<T>& loss) { backward(loss.id); }

  void backward(std::size_t loss) {
    if (loss >= nodes_.size()) throw InvalidArgument("backward: loss id out of range");
    if (nodes_[loss].value.numel() != 1) {
      throw InvalidArgument("backward: loss node must be scalar, got shape " +
                            shape_to_string(nodes_[loss].value.shape()));
    }
    for (auto& n : nodes_) n.grad.reset();
    if (!nodes_[loss].requires_grad) return;
    grad_buffer(loss)[0] = T(1);
    for (std::size_t i = loss + 1; i-- > 0;) {
      auto& n = nodes_[i];
      if (n.requires_grad && n.grad && n.backward) n.backward(*this, i);
    }
  }

  // node id -> gradient for every node that requires one.
  std::map<std::size_t, Tensor<T>> gradients() const {
    std::map<std::size_t, Tensor<T>> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (nodes_[i].requires_grad) out.emplace(i, grad(i));
    }
    return out;
  }

 private:
  // Deque: push_back keeps references returned by value() valid.
  std::deque<Node> nodes_;
};

}  // namespace frih
