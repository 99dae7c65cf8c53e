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

#include "twsent/lstm.h"

#include "twsent/errors.h"

namespace twsent::ad {

namespace {

template <typename Params>
LstmState step(Graph& g, Var x, const LstmState& prev, Params& p) {
  const std::size_t hidden = p.hidden();
  if (x.size() != p.input_dim()) {
    throw ShapeError("lstm_step: input of size " + std::to_string(x.size()) +
                     ", expected " + std::to_string(p.input_dim()));
  }
  if (prev.h.size() != hidden || prev.c.size() != hidden) {
    throw ShapeError("lstm_step: state size does not match hidden size " +
                     std::to_string(hidden));
  }
  const Var gates = add(affine(g.param(p.input_weights), x, g.param(p.bias)),
                        matvec(g.param(p.recurrent_weights), prev.h));
  const Var i = sigmoid(add(slice(gates, 0, hidden),
                            mul(g.param(p.peephole_input), prev.c)));
  const Var f = sigmoid(add(slice(gates, hidden, hidden),
                            mul(g.param(p.peephole_forget), prev.c)));
  const Var candidate = tanh(slice(gates, 2 * hidden, hidden));
  const Var c = add(mul(f, prev.c), mul(i, candidate));
  const Var o = sigmoid(add(slice(gates, 3 * hidden, hidden),
                            mul(g.param(p.peephole_output), c)));
  return {mul(o, tanh(c)), c};
}

}  // namespace

LstmParams::LstmParams(const std::string& prefix, std::size_t input_dim,
                       std::size_t hidden)
    : input_weights(prefix + ".input_weights", Tensor({4 * hidden, input_dim})),
      recurrent_weights(prefix + ".recurrent_weights", Tensor({4 * hidden, hidden})),
      peephole_input(prefix + ".peephole_input", Tensor({hidden})),
      peephole_forget(prefix + ".peephole_forget", Tensor({hidden})),
      peephole_output(prefix + ".peephole_output", Tensor({hidden})),
      bias(prefix + ".bias", Tensor({4 * hidden})) {}

std::vector<Parameter*> LstmParams::all() {
  return {&input_weights,   &recurrent_weights, &peephole_input,
          &peephole_forget, &peephole_output,   &bias};
}

std::vector<const Parameter*> LstmParams::all() const {
  return {&input_weights,   &recurrent_weights, &peephole_input,
          &peephole_forget, &peephole_output,   &bias};
}

LstmState lstm_initial_state(Graph& g, std::size_t hidden) {
  return {g.constant(Tensor({hidden})), g.constant(Tensor({hidden}))};
}

LstmState lstm_step(Graph& g, Var x, const LstmState& prev, LstmParams& p) {
  return step(g, x, prev, p);
}

LstmState lstm_step(Graph& g, Var x, const LstmState& prev, const LstmParams& p) {
  return step(g, x, prev, p);
}

}  // namespace twsent::ad
