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

#include <cmath>
#include <vector>

#include "doctest.h"
#include "twsent/autodiff.h"
#include "twsent/errors.h"
#include "twsent/lstm.h"
#include "twsent/rng.h"

using namespace twsent;
using namespace twsent::ad;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-scale, scale);
  return t;
}

// Reduces any node to a scalar with fixed random weights so every output
// entry contributes a distinct amount.
Var weighted_sum(Graph& g, Var x, std::uint64_t seed) {
  Rng rng(seed);
  return sum(mul(x, g.constant(random_tensor(x.value().shape(), rng))));
}

double check(const GraphFn& f, std::vector<Parameter*> params) {
  const auto report = grad_check(f, params);
  CAPTURE(report.worst_parameter);
  CAPTURE(report.worst_index);
  return report.max_relative_error;
}

// Wide convolution computed by explicitly zero-padding the sequence with
// m-1 columns on each side and running a narrow convolution.
std::vector<std::vector<double>> conv_oracle(
    const std::vector<std::vector<double>>& seq,                 // [d][s]
    const std::vector<std::vector<std::vector<double>>>& filt,   // [k][d][m]
    const std::vector<double>& bias) {
  const std::size_t d = seq.size(), s = seq[0].size();
  const std::size_t k = filt.size(), m = filt[0][0].size();
  std::vector<std::vector<double>> padded(d, std::vector<double>(s + 2 * (m - 1), 0.0));
  for (std::size_t r = 0; r < d; ++r)
    for (std::size_t i = 0; i < s; ++i) padded[r][i + m - 1] = seq[r][i];
  std::vector<std::vector<double>> out(k, std::vector<double>(s + m - 1, 0.0));
  for (std::size_t f = 0; f < k; ++f)
    for (std::size_t j = 0; j < s + m - 1; ++j) {
      double acc = bias[f];
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t w = 0; w < m; ++w) acc += filt[f][r][w] * padded[r][j + w];
      out[f][j] = acc;
    }
  return out;
}

double sig(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Straight-line evaluation of one peephole LSTM step, no graph involved.
void lstm_oracle(const LstmParams& p, const std::vector<double>& x,
                 const std::vector<double>& h_prev, const std::vector<double>& c_prev,
                 std::vector<double>& h, std::vector<double>& c) {
  const std::size_t H = p.hidden(), D = p.input_dim();
  auto pre = [&](std::size_t gate, std::size_t j) {
    double acc = p.bias.value[gate * H + j];
    for (std::size_t q = 0; q < D; ++q) acc += p.input_weights.value.at(gate * H + j, q) * x[q];
    for (std::size_t q = 0; q < H; ++q)
      acc += p.recurrent_weights.value.at(gate * H + j, q) * h_prev[q];
    return acc;
  };
  h.assign(H, 0.0);
  c.assign(H, 0.0);
  for (std::size_t j = 0; j < H; ++j) {
    const double i_t = sig(pre(0, j) + p.peephole_input.value[j] * c_prev[j]);
    const double f_t = sig(pre(1, j) + p.peephole_forget.value[j] * c_prev[j]);
    c[j] = f_t * c_prev[j] + i_t * std::tanh(pre(2, j));
    const double o_t = sig(pre(3, j) + p.peephole_output.value[j] * c[j]);
    h[j] = o_t * std::tanh(c[j]);
  }
}

void randomize(LstmParams& p, Rng& rng, double scale) {
  for (Parameter* q : p.all()) {
    for (auto& v : q->value.values()) v = rng.uniform(-scale, scale);
  }
}

}  // namespace

TEST_CASE("wide_conv1d width is s+m-1") {
  Graph g;
  Rng rng(1);
  const Var seq = g.constant(random_tensor({2, 5}, rng));
  const Var filt = g.constant(random_tensor({3, 2, 3}, rng));
  const Var bias = g.constant(Tensor({3}));
  const Var out = wide_conv1d(seq, filt, bias);
  CHECK(out.value().shape() == std::vector<std::size_t>{3, 7});
}

TEST_CASE("wide_conv1d hand example") {
  Graph g;
  const Var seq = g.constant(Tensor::matrix(1, 3, {1, 2, 3}));
  const Var filt = g.constant(Tensor({1, 1, 2}, {1, 1}));
  const Var bias = g.constant(Tensor({1}));
  const Var out = wide_conv1d(seq, filt, bias);
  const std::vector<double> expected = {1, 3, 5, 3};
  REQUIRE(out.size() == 4);
  for (std::size_t j = 0; j < 4; ++j) CHECK(out.value()[j] == expected[j]);
  // Oracle agrees.
  const auto oracle = conv_oracle({{1, 2, 3}}, {{{1, 1}}}, {0});
  CHECK(oracle[0] == expected);
}

TEST_CASE("wide_conv1d with zero filters is zero") {
  Graph g;
  Rng rng(2);
  const Var out = wide_conv1d(g.constant(random_tensor({3, 6}, rng)),
                              g.constant(Tensor({4, 3, 2})), g.constant(Tensor({4})));
  for (const double v : out.value().values()) CHECK(v == 0.0);
}

TEST_CASE("wide_conv1d matches the zero-padding oracle on random shapes") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + rng.below(4), s = 1 + rng.below(12);
    const std::size_t k = 1 + rng.below(4), m = 1 + rng.below(8);
    const Tensor seq = random_tensor({d, s}, rng);
    const Tensor filt = random_tensor({k, d, m}, rng);
    const Tensor bias = random_tensor({k}, rng);

    std::vector<std::vector<double>> seq_v(d, std::vector<double>(s));
    for (std::size_t r = 0; r < d; ++r)
      for (std::size_t i = 0; i < s; ++i) seq_v[r][i] = seq.at(r, i);
    std::vector<std::vector<std::vector<double>>> filt_v(
        k, std::vector<std::vector<double>>(d, std::vector<double>(m)));
    for (std::size_t f = 0; f < k; ++f)
      for (std::size_t r = 0; r < d; ++r)
        for (std::size_t w = 0; w < m; ++w) filt_v[f][r][w] = filt[(f * d + r) * m + w];
    const auto expected =
        conv_oracle(seq_v, filt_v, std::vector<double>(bias.values().begin(), bias.values().end()));

    Graph g;
    const Var out = wide_conv1d(g.constant(seq), g.constant(filt), g.constant(bias));
    REQUIRE(out.value().shape() == std::vector<std::size_t>{k, s + m - 1});
    for (std::size_t f = 0; f < k; ++f)
      for (std::size_t j = 0; j < s + m - 1; ++j)
        CHECK(out.value().at(f, j) == doctest::Approx(expected[f][j]).epsilon(1e-12));
  }
}

TEST_CASE("wide_conv1d rejects a depth mismatch") {
  Graph g;
  CHECK_THROWS_AS(wide_conv1d(g.constant(Tensor({2, 4})), g.constant(Tensor({3, 5, 2})),
                              g.constant(Tensor({3}))),
                  ShapeError);
}

TEST_CASE("max_pool_time takes row maxima") {
  Graph g;
  const Var out = max_pool_time(g.constant(Tensor::matrix(2, 3, {1, 5, 2, 0, -1, -2})));
  CHECK(out.value()[0] == 5);
  CHECK(out.value()[1] == 0);

  const Var single = max_pool_time(g.constant(Tensor::matrix(3, 1, {4, -2, 7})));
  CHECK(single.value() == Tensor::vector({4, -2, 7}));
}

TEST_CASE("max_pool_time equals brute-force max and ignores time order") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor x = random_tensor({4, 9}, rng);
    Graph g;
    const Var out = max_pool_time(g.constant(x));
    std::vector<std::size_t> perm(9);
    for (std::size_t i = 0; i < 9; ++i) perm[i] = i;
    rng.shuffle(std::span<std::size_t>(perm));
    Tensor permuted({4, 9});
    for (std::size_t r = 0; r < 4; ++r) {
      double best = -1e300;
      for (std::size_t c = 0; c < 9; ++c) {
        best = std::max(best, x.at(r, c));
        permuted.at(r, c) = x.at(r, perm[c]);
      }
      CHECK(out.value()[r] == best);
    }
    CHECK(max_pool_time(g.constant(permuted)).value() == out.value());
  }
}

TEST_CASE("max_pool_time routes gradient to the first argmax") {
  Parameter x("x", Tensor::matrix(1, 4, {2, 7, 7, 1}));
  Graph g;
  g.backward(sum(max_pool_time(g.param(x))));
  CHECK(x.grad == Tensor::matrix(1, 4, {0, 1, 0, 0}));
}

TEST_CASE("lstm_step with zero parameters yields zero state") {
  LstmParams p("lstm", 3, 4);
  Graph g;
  const auto s0 = lstm_initial_state(g, 4);
  const auto s1 = lstm_step(g, g.constant(Tensor::vector({0.5, -1, 2})), s0, p);
  for (const double v : s1.h.value().values()) CHECK(v == 0.0);
  for (const double v : s1.c.value().values()) CHECK(v == 0.0);
}

TEST_CASE("lstm_step carries the cell when forget is open and input closed") {
  LstmParams p("lstm", 2, 3);
  for (std::size_t j = 0; j < 3; ++j) {
    p.bias.value[0 * 3 + j] = -50;  // input gate shut
    p.bias.value[1 * 3 + j] = 50;   // forget gate open
  }
  Graph g;
  const LstmState prev{g.constant(Tensor::vector({0.1, 0.2, -0.3})),
                       g.constant(Tensor::vector({0.7, -1.2, 0.4}))};
  const auto next = lstm_step(g, g.constant(Tensor::vector({1, -1})), prev, p);
  for (std::size_t j = 0; j < 3; ++j) {
    CHECK(std::abs(next.c.value()[j] - prev.c.value()[j]) < 1e-6);
  }
}

TEST_CASE("lstm_step matches a straight-line evaluation") {
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    LstmParams p("lstm", 5, 6);
    randomize(p, rng, 0.5);
    const Tensor x = random_tensor({5}, rng);
    const Tensor h = random_tensor({6}, rng);
    const Tensor c = random_tensor({6}, rng);
    std::vector<double> h_ref, c_ref;
    lstm_oracle(p, {x.values().begin(), x.values().end()},
                {h.values().begin(), h.values().end()},
                {c.values().begin(), c.values().end()}, h_ref, c_ref);
    Graph g;
    const auto out = lstm_step(g, g.constant(x), {g.constant(h), g.constant(c)}, p);
    for (std::size_t j = 0; j < 6; ++j) {
      CHECK(out.h.value()[j] == doctest::Approx(h_ref[j]).epsilon(1e-12));
      CHECK(out.c.value()[j] == doctest::Approx(c_ref[j]).epsilon(1e-12));
    }
  }
}

TEST_CASE("lstm_step rejects mismatched input") {
  LstmParams p("lstm", 3, 2);
  Graph g;
  CHECK_THROWS_AS(lstm_step(g, g.constant(Tensor({4})), lstm_initial_state(g, 2), p),
                  ShapeError);
  CHECK_THROWS_AS(lstm_step(g, g.constant(Tensor({3})), lstm_initial_state(g, 5), p),
                  ShapeError);
}

TEST_CASE("grad_check on one lstm_step with 8 hidden units") {
  Rng rng(6);
  LstmParams p("lstm", 5, 8);
  randomize(p, rng, 0.5);
  Parameter x("x", random_tensor({5}, rng));
  Parameter h("h", random_tensor({8}, rng));
  Parameter c("c", random_tensor({8}, rng));
  auto f = [&](Graph& g) {
    const auto out = lstm_step(g, g.param(x), {g.param(h), g.param(c)}, p);
    return add(weighted_sum(g, out.h, 11), weighted_sum(g, out.c, 12));
  };
  auto params = p.all();
  params.insert(params.end(), {&x, &h, &c});
  CHECK(check(f, params) <= 1e-4);
}

TEST_CASE("grad_check through a multi-step recurrence") {
  Rng rng(7);
  LstmParams p("lstm", 3, 4);
  randomize(p, rng, 0.6);
  std::vector<Tensor> xs;
  for (int t = 0; t < 5; ++t) xs.push_back(random_tensor({3}, rng));
  auto f = [&](Graph& g) {
    auto state = lstm_initial_state(g, 4);
    for (const auto& x : xs) state = lstm_step(g, g.constant(x), state, p);
    return weighted_sum(g, state.h, 21);
  };
  CHECK(check(f, p.all()) <= 1e-4);
}

TEST_CASE("softmax_xent basics") {
  Graph g;
  const auto eq = softmax_xent(g.constant(Tensor::vector({0.3, 0.3})), 1);
  CHECK(eq.probs[0] == doctest::Approx(0.5));
  CHECK(eq.probs[1] == doctest::Approx(0.5));
  CHECK(eq.loss.value()[0] == doctest::Approx(std::log(2.0)));

  const auto big = softmax_xent(g.constant(Tensor::vector({1000, 0})), 0);
  CHECK(std::isfinite(big.loss.value()[0]));
  CHECK(big.probs[0] == doctest::Approx(1.0));
  CHECK(big.probs[1] == doctest::Approx(0.0));
  CHECK(big.loss.value()[0] == doctest::Approx(0.0));

  CHECK_THROWS_AS(softmax_xent(g.constant(Tensor::vector({1})), 0), ShapeError);
  CHECK_THROWS_AS(softmax_xent(g.constant(Tensor::vector({1, 2})), 2), ContractError);
}

TEST_CASE("softmax_xent gradient is probs minus one-hot and matches differences") {
  Rng rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t c = 2 + rng.below(5);
    const std::size_t target = rng.below(c);
    Parameter z("z", random_tensor({c}, rng, 3.0));
    Graph g;
    const auto out = softmax_xent(g.param(z), target);
    g.backward(out.loss);
    double total = 0;
    for (std::size_t i = 0; i < c; ++i) {
      CHECK(out.probs[i] > 0.0);
      CHECK(out.probs[i] < 1.0);
      total += out.probs[i];
      CHECK(z.grad[i] == doctest::Approx(out.probs[i] - (i == target ? 1.0 : 0.0)));
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
    const auto f = [&](Graph& g2) { return softmax_xent(g2.param(z), target).loss; };
    CHECK(check(f, {&z}) <= 1e-6);
  }
}

TEST_CASE("grad_check on a linear function is exact to rounding") {
  Parameter w("w", Tensor::vector({0.5, -1.25, 2.0, 0.75}));
  const Tensor x = Tensor::vector({1.5, 0.25, -0.5, 1.0});
  const auto f = [&](Graph& g) { return sum(mul(g.param(w), g.constant(x))); };
  CHECK(check(f, {&w}) <= 1e-9);
}

TEST_CASE("grad_check rejects non-scalar functions and bad eps") {
  Parameter w("w", Tensor::vector({1, 2}));
  const auto vec = [&](Graph& g) { return g.param(w); };
  CHECK_THROWS_AS(grad_check(vec, std::vector<Parameter*>{&w}), ContractError);
  const auto ok = [&](Graph& g) { return sum(g.param(w)); };
  CHECK_THROWS_AS(grad_check(ok, std::vector<Parameter*>{&w}, 0.0), ContractError);
  Graph g;
  CHECK_THROWS_AS(g.backward(g.param(w)), ContractError);
}

TEST_CASE("every primitive op passes grad_check") {
  Rng rng(9);
  Parameter a("a", random_tensor({6}, rng));
  Parameter b("b", random_tensor({6}, rng));
  Parameter w("w", random_tensor({4, 6}, rng));
  Parameter bias("bias", random_tensor({4}, rng));
  Parameter seq("seq", random_tensor({3, 5}, rng));
  Parameter filt("filt", random_tensor({4, 3, 3}, rng));
  Parameter fb("fb", random_tensor({4}, rng));
  Parameter table("table", random_tensor({3, 7}, rng));
  Parameter logits("logits", random_tensor({3}, rng));

  SUBCASE("add") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, add(g.param(a), g.param(b)), 1); },
                {&a, &b}) <= 1e-4);
  }
  SUBCASE("sub") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, sub(g.param(a), g.param(b)), 1); },
                {&a, &b}) <= 1e-4);
  }
  SUBCASE("mul") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, mul(g.param(a), g.param(b)), 1); },
                {&a, &b}) <= 1e-4);
  }
  SUBCASE("scale") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, scale(g.param(a), -2.5), 1); },
                {&a}) <= 1e-4);
  }
  SUBCASE("sigmoid") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, sigmoid(g.param(a)), 1); },
                {&a}) <= 1e-4);
  }
  SUBCASE("tanh") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, tanh(g.param(a)), 1); },
                {&a}) <= 1e-4);
  }
  SUBCASE("matvec") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, matvec(g.param(w), g.param(a)), 1); },
                {&w, &a}) <= 1e-4);
  }
  SUBCASE("affine") {
    CHECK(check([&](Graph& g) {
            return weighted_sum(g, affine(g.param(w), g.param(a), g.param(bias)), 1);
          },
          {&w, &a, &bias}) <= 1e-4);
  }
  SUBCASE("concat and slice") {
    CHECK(check([&](Graph& g) {
            const Var c = concat({g.param(a), g.param(bias), g.param(b)});
            return add(weighted_sum(g, c, 1), weighted_sum(g, slice(c, 3, 8), 2));
          },
          {&a, &b, &bias}) <= 1e-4);
  }
  SUBCASE("columns") {
    CHECK(check([&](Graph& g) {
            const std::vector<Var> cols = {g.param(a), g.param(b), g.param(a)};
            return weighted_sum(g, columns(cols), 1);
          },
          {&a, &b}) <= 1e-4);
  }
  SUBCASE("lookup_column and embed_columns") {
    CHECK(check([&](Graph& g) {
            const std::vector<int> idx = {2, 5, 2, 1};
            return add(weighted_sum(g, embed_columns(g, table, idx), 1),
                       weighted_sum(g, lookup_column(g, table, 3), 2));
          },
          {&table}) <= 1e-4);
  }
  SUBCASE("wide_conv1d") {
    CHECK(check([&](Graph& g) {
            return weighted_sum(g, wide_conv1d(g.param(seq), g.param(filt), g.param(fb)), 1);
          },
          {&seq, &filt, &fb}) <= 1e-4);
  }
  SUBCASE("max_pool_time") {
    CHECK(check([&](Graph& g) { return weighted_sum(g, max_pool_time(g.param(seq)), 1); },
                {&seq}) <= 1e-4);
  }
  SUBCASE("dropout mask") {
    CHECK(check([&](Graph& g) {
            Rng mask_rng(99);  // same mask on every evaluation
            return weighted_sum(g, dropout(g.param(a), 0.5, mask_rng), 1);
          },
          {&a}) <= 1e-4);
  }
  SUBCASE("softmax_xent") {
    CHECK(check([&](Graph& g) { return softmax_xent(g.param(logits), 2).loss; },
                {&logits}) <= 1e-4);
  }
}

TEST_CASE("a parameter used twice receives the sum of both path gradients") {
  Rng rng(10);
  const Tensor init = random_tensor({5}, rng);
  // Shared: one parameter feeding two branches.
  Parameter shared("shared", init);
  {
    Graph g;
    const Var p1 = g.param(shared);
    const Var p2 = g.param(shared);
    g.backward(add(weighted_sum(g, tanh(p1), 1), weighted_sum(g, sigmoid(p2), 2)));
  }
  // Oracle: two independent copies, one per branch.
  Parameter left("left", init), right("right", init);
  {
    Graph g;
    g.backward(add(weighted_sum(g, tanh(g.param(left)), 1),
                   weighted_sum(g, sigmoid(g.param(right)), 2)));
  }
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(shared.grad[i] == doctest::Approx(left.grad[i] + right.grad[i]).epsilon(1e-14));
  }
}

TEST_CASE("embedding padding column never receives gradient") {
  Parameter table("table", Tensor({2, 4}, 1.0));
  Graph g;
  const std::vector<int> idx = {0, 1, 0, 3};
  g.backward(sum(embed_columns(g, table, idx)));
  g.backward(sum(lookup_column(g, table, 0)));
  CHECK(table.grad.at(0, 0) == 0.0);
  CHECK(table.grad.at(1, 0) == 0.0);
  CHECK(table.grad.at(0, 1) == 1.0);
  CHECK(table.grad.at(0, 3) == 1.0);
  CHECK(table.grad.at(0, 2) == 0.0);
}

TEST_CASE("frozen parameters and const bindings receive no gradient") {
  Parameter w("w", Tensor::vector({1, 2, 3}));
  w.trainable = false;
  Parameter v("v", Tensor::vector({1, 1, 1}));
  Graph g;
  const Parameter& cv = v;
  g.backward(sum(add(g.param(w), g.param(cv))));
  CHECK(w.grad == Tensor({3}));
  CHECK(v.grad == Tensor({3}));
}

TEST_CASE("dropout is inverted and identity at p = 0") {
  Graph g;
  Rng rng(11);
  const Var x = g.constant(Tensor({1000}, 1.0));
  CHECK(dropout(x, 0.0, rng).id == x.id);
  const Var y = dropout(x, 0.5, rng);
  std::size_t kept = 0;
  for (const double v : y.value().values()) {
    CHECK((v == 0.0 || v == 2.0));
    kept += v != 0.0;
  }
  CHECK(kept > 400);
  CHECK(kept < 600);
  CHECK_THROWS_AS(dropout(x, 1.0, rng), ContractError);
}

TEST_CASE("backward on large finite inputs stays finite") {
  Rng rng(12);
  LstmParams p("lstm", 4, 5);
  randomize(p, rng, 5.0);
  Parameter x("x", random_tensor({4}, rng, 50.0));
  Parameter logits_w("lw", random_tensor({3, 5}, rng, 20.0));
  Graph g;
  auto state = lstm_initial_state(g, 5);
  for (int t = 0; t < 6; ++t) state = lstm_step(g, g.param(x), state, p);
  const auto out = softmax_xent(matvec(g.param(logits_w), state.h), 1);
  g.backward(out.loss);
  CHECK(std::isfinite(out.loss.value()[0]));
  for (Parameter* q : p.all()) CHECK(q->grad.all_finite());
  CHECK(x.grad.all_finite());
  CHECK(logits_w.grad.all_finite());
}

TEST_CASE("shape errors from elementwise and linear ops") {
  Graph g;
  const Var a = g.constant(Tensor({3}));
  const Var b = g.constant(Tensor({4}));
  CHECK_THROWS_AS(add(a, b), ShapeError);
  CHECK_THROWS_AS(mul(a, b), ShapeError);
  CHECK_THROWS_AS(matvec(g.constant(Tensor({2, 5})), a), ShapeError);
  CHECK_THROWS_AS(slice(a, 2, 2), ShapeError);
  CHECK_THROWS_AS(Tensor({2, 2}, std::vector<double>{1, 2, 3}), ShapeError);
}
