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

// A small tape-based reverse-mode differentiator with just the operations
// the sentence classifier needs.
//
// A Graph records nodes in creation order, which is a topological order, and
// backward() replays them in reverse. Parameter nodes alias the parameter's
// own storage: forward reads Parameter::value without copying and backward
// accumulates straight into Parameter::grad, so a parameter used on several
// paths receives the sum of their gradients.
//
// Layouts are row-major. A matrix of shape {r, c} stores (i, j) at i*c + j.
// A character sequence is {d, s}: one column per position.

#ifndef TWSENT_AUTODIFF_H_
#define TWSENT_AUTODIFF_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "twsent/rng.h"

namespace twsent::ad {

using Real = double;

class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape, Real fill = 0);
  Tensor(std::vector<std::size_t> shape, std::vector<Real> values);

  static Tensor vector(std::vector<Real> values);
  static Tensor matrix(std::size_t rows, std::size_t cols,
                       std::vector<Real> values);

  const std::vector<std::size_t>& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const { return values_.size(); }

  std::span<Real> values() { return values_; }
  std::span<const Real> values() const { return values_; }
  Real* data() { return values_.data(); }
  const Real* data() const { return values_.data(); }

  Real& operator[](std::size_t i) { return values_[i]; }
  Real operator[](std::size_t i) const { return values_[i]; }

  // Rank-2 access.
  Real& at(std::size_t r, std::size_t c) { return values_[r * shape_[1] + c]; }
  Real at(std::size_t r, std::size_t c) const { return values_[r * shape_[1] + c]; }

  void fill(Real v);
  bool all_finite() const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<Real> values_;
};

std::string shape_string(const std::vector<std::size_t>& shape);

// A trainable tensor with its gradient accumulator.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Tensor value);

  std::string name;
  Tensor value;
  Tensor grad;  // same shape as value
  bool trainable = true;

  void zero_grad() { grad.fill(0); }
};

class Graph;

// Handle to a node of a Graph. Cheap to copy; valid while the graph lives,
// as are references returned by value() and grad().
struct Var {
  Graph* graph = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  std::span<const Real> grad() const;
  std::size_t size() const { return value().size(); }
};

class Graph {
 public:
  // Called during backward with the node's own id and its upstream gradient.
  using BackwardFn =
      std::function<void(Graph&, std::size_t self, std::span<const Real>)>;

  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  // Differentiable leaf bound to `p`. Repeated calls return the same node.
  Var param(Parameter& p);
  // Read-only leaf; never receives gradient. Safe for concurrent evaluation.
  Var param(const Parameter& p);

  Var add_node(Tensor value, bool needs_grad, BackwardFn backward);

  const Tensor& value(std::size_t id) const;
  bool needs_grad(std::size_t id) const { return nodes_[id].needs_grad; }
  // Gradient buffer of a node, allocated on first use. For a parameter leaf
  // this is the parameter's own accumulator.
  std::span<Real> grad(std::size_t id);
  std::span<const Real> grad_view(std::size_t id) const;

  // Seeds d(loss)/d(loss) = seed and propagates. `loss` must hold exactly
  // one value; anything else throws ContractError.
  void backward(Var loss, Real seed = 1.0);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Parameter* param = nullptr;
    std::vector<Real> grad;
    bool needs_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;  // deque: references stay valid as nodes are added
  std::vector<std::pair<const Parameter*, std::size_t>> param_nodes_;
};

// Elementwise, equal sizes.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, Real k);
Var sigmoid(Var a);
Var tanh(Var a);
Var sum(Var a);

// W{r,c} * x{c}.
Var matvec(Var w, Var x);
// W{r,c} * x{c} + b{r}.
Var affine(Var w, Var x, Var b);

// Flattened concatenation into a vector.
Var concat(std::span<const Var> parts);
Var concat(std::initializer_list<Var> parts);
Var slice(Var x, std::size_t offset, std::size_t length);
// Stacks equal-length vectors as the columns of a {d, n} matrix.
Var columns(std::span<const Var> vectors);

// Column `index` of a {d, V} table as a vector {d}. Gradient is scattered
// into that column only; column 0 (padding) never receives gradient.
Var lookup_column(Graph& g, Parameter& table, std::size_t index);
Var lookup_column(Graph& g, const Parameter& table, std::size_t index);
// Columns of a {d, V} table gathered into a {d, n} matrix.
Var embed_columns(Graph& g, Parameter& table, std::span<const int> indices);
Var embed_columns(Graph& g, const Parameter& table, std::span<const int> indices);

// Wide 1-D convolution. seq {d, s}, filters {k, d, m}, bias {k} ->
// {k, s+m-1}. Output column j (0-based) is
//   bias[f] + sum_{r,w} filters[f,r,w] * seq[r, j-m+1+w]
// with positions outside [0, s) read as zero.
Var wide_conv1d(Var seq, Var filters, Var bias);

// {k, t} -> {k}: row maxima. Gradient goes to the first argmax of each row.
Var max_pool_time(Var feature_maps);

// Multiplies by a fixed mask.
Var apply_mask(Var x, Tensor mask);
// Inverted dropout: keeps each entry with probability 1-p and scales kept
// entries by 1/(1-p). p must be in [0, 1).
Var dropout(Var x, Real p, Rng& rng);

struct SoftmaxXent {
  Var loss;     // scalar, -log probs[target]
  Tensor probs;
};
// logits {c}, c >= 2. Backward yields probs - one_hot(target).
SoftmaxXent softmax_xent(Var logits, std::size_t target);

// Numerically stable softmax on plain values.
std::vector<Real> softmax(std::span<const Real> logits);

// Builds a graph and returns the node to differentiate.
using GraphFn = std::function<Var(Graph&)>;

struct GradCheckReport {
  double max_relative_error = 0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t entries_checked = 0;
};

// Compares backward-pass gradients against central differences for every
// entry of every parameter. The per-entry error is
//   |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// `f` must be scalar-valued and deterministic; throws ContractError
// otherwise or if eps <= 0. Parameter values are restored on return;
// gradients are left holding the analytic result.
GradCheckReport grad_check(const GraphFn& f, std::span<Parameter* const> params,
                           Real eps = 1e-5);

}  // namespace twsent::ad

#endif  // TWSENT_AUTODIFF_H_
