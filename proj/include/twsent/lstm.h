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

#ifndef TWSENT_LSTM_H_
#define TWSENT_LSTM_H_

#include <cstddef>
#include <string>
#include <vector>

#include "twsent/autodiff.h"

namespace twsent::ad {

// Peephole LSTM weights. The four gate blocks are stacked in the order
// input, forget, cell-input, output:
//   input_weights     {4H, D}   rows [0,H) = W_xi, [H,2H) = W_xf, ...
//   recurrent_weights {4H, H}   same order for W_h*
//   bias              {4H}
// The peepholes W_ci, W_cf, W_co are diagonal and stored as vectors {H}.
struct LstmParams {
  LstmParams() = default;
  LstmParams(const std::string& prefix, std::size_t input_dim, std::size_t hidden);

  Parameter input_weights;
  Parameter recurrent_weights;
  Parameter peephole_input;
  Parameter peephole_forget;
  Parameter peephole_output;
  Parameter bias;

  std::size_t hidden() const { return peephole_input.value.size(); }
  std::size_t input_dim() const { return input_weights.value.dim(1); }

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
};

struct LstmState {
  Var h;
  Var c;
};

// Zero hidden and cell state.
LstmState lstm_initial_state(Graph& g, std::size_t hidden);

// One step:
//   i = sigmoid(W_xi x + W_hi h + w_ci * c_prev + b_i)
//   f = sigmoid(W_xf x + W_hf h + w_cf * c_prev + b_f)
//   c = f * c_prev + i * tanh(W_xc x + W_hc h + b_c)
//   o = sigmoid(W_xo x + W_ho h + w_co * c + b_o)
//   h = o * tanh(c)
// Throws ShapeError on dimension mismatch.
LstmState lstm_step(Graph& g, Var x, const LstmState& prev, LstmParams& p);
LstmState lstm_step(Graph& g, Var x, const LstmState& prev, const LstmParams& p);

}  // namespace twsent::ad

#endif  // TWSENT_LSTM_H_
