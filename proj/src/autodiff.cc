// Copyright 2026 The twsent Authors.
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

#include "twsent/autodiff.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "twsent/errors.h"

namespace twsent::ad {

namespace {

std::size_t product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

}  // namespace

// ---------------------------------------------------------------------------
// Tensor

Tensor::Tensor(std::vector<std::size_t> shape, Real fill)
    : shape_(std::move(shape)), values_(product(shape_), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<Real> values)
    : shape_(std::move(shape)), values_(std::move(values)) {
  if (values_.size() != product(shape_)) {
    throw ShapeError("tensor of shape " + shape_string(shape_) + " given " +
                     std::to_string(values_.size()) + " values");
  }
}

Tensor Tensor::vector(std::vector<Real> values) {
  const std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols,
                      std::vector<Real> values) {
  return Tensor({rows, cols}, std::move(values));
}

void Tensor::fill(Real v) { std::fill(values_.begin(), values_.end(), v); }

bool Tensor::all_finite() const {
  return std::all_of(values_.begin(), values_.end(),
                     [](Real v) { return std::isfinite(v); });
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += " x ";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

Parameter::Parameter(std::string name_, Tensor value_)
    : name(std::move(name_)), value(std::move(value_)),
      grad(value.shape(), 0.0) {}

// ---------------------------------------------------------------------------
// Graph

const Tensor& Var::value() const { return graph->value(id); }

std::span<const Real> Var::grad() const { return graph->grad_view(id); }

Var Graph::constant(Tensor value) {
  return add_node(std::move(value), false, nullptr);
}

Var Graph::param(Parameter& p) {
  for (const auto& [ptr, id] : param_nodes_) {
    if (ptr == &p) return {this, id};
  }
  Node node;
  node.external = &p.value;
  node.param = p.trainable ? &p : nullptr;
  node.needs_grad = p.trainable;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace_back(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Graph::param(const Parameter& p) {
  for (const auto& [ptr, id] : param_nodes_) {
    if (ptr == &p) return {this, id};
  }
  Node node;
  node.external = &p.value;
  nodes_.push_back(std::move(node));
  param_nodes_.emplace_back(&p, nodes_.size() - 1);
  return {this, nodes_.size() - 1};
}

Var Graph::add_node(Tensor value, bool needs_grad, BackwardFn backward) {
  Node node;
  node.owned = std::move(value);
  node.needs_grad = needs_grad;
  if (needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return {this, nodes_.size() - 1};
}

const Tensor& Graph::value(std::size_t id) const {
  const Node& n = nodes_.at(id);
  return n.external ? *n.external : n.owned;
}

std::span<Real> Graph::grad(std::size_t id) {
  Node& n = nodes_.at(id);
  if (n.param) return n.param->grad.values();
  if (n.grad.empty()) n.grad.assign(value(id).size(), 0.0);
  return n.grad;
}

std::span<const Real> Graph::grad_view(std::size_t id) const {
  const Node& n = nodes_.at(id);
  if (n.param) return n.param->grad.values();
  return n.grad;
}

void Graph::backward(Var loss, Real seed) {
  if (loss.graph != this) throw ContractError("loss belongs to another graph");
  if (value(loss.id).size() != 1) {
    throw ContractError("backward needs a scalar, got shape " +
                        shape_string(value(loss.id).shape()));
  }
  if (!nodes_[loss.id].needs_grad) return;
  grad(loss.id)[0] += seed;
  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.needs_grad || !n.backward || n.grad.empty()) continue;
    n.backward(*this, id, n.grad);
  }
}

}  // namespace twsent::ad
