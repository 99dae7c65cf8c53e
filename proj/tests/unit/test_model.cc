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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <numeric>
#include <string>
#include <vector>

#include "doctest.h"
#include "twsent/classifier.h"
#include "twsent/errors.h"
#include "twsent/model.h"
#include "twsent/rng.h"

using namespace twsent;
using namespace twsent::model;
using twsent::embeddings::IndexedSentence;

namespace {

ModelConfig micro_config() {
  ModelConfig c;
  c.char_dim = 2;
  c.conv1 = {2, 2};
  c.conv2 = {2, 3};
  c.word_dim = 3;
  c.lstm_hidden = 4;
  c.num_classes = 2;
  c.dropout = 0.5;
  return c;
}

IndexedSentence random_sentence(Rng& rng, std::size_t n, std::size_t vocab,
                                std::size_t max_chars) {
  IndexedSentence s;
  std::size_t widest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    s.words.push_back(static_cast<int>(1 + rng.below(vocab - 1)));
    s.word_lengths.push_back(1 + rng.below(max_chars));
    widest = std::max(widest, s.word_lengths.back());
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> row(widest, 0);
    for (std::size_t k = 0; k < s.word_lengths[i]; ++k) {
      row[k] = static_cast<int>(1 + rng.below(vocab - 1));
    }
    s.chars.push_back(row);
  }
  return s;
}

using Matrix = std::vector<std::vector<double>>;

Matrix conv_oracle(const Matrix& in, const Tensor& filters, const Tensor& bias) {
  const std::size_t k = filters.dim(0), d = filters.dim(1), m = filters.dim(2);
  const std::size_t s = in[0].size();
  Matrix out(k, std::vector<double>(s + m - 1));
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t j = 0; j < s + m - 1; ++j) {
      double acc = bias[f];
      for (std::size_t r = 0; r < d; ++r) {
        for (std::size_t w = 0; w < m; ++w) {
          const long pos = static_cast<long>(j + w) - static_cast<long>(m - 1);
          if (pos < 0 || pos >= static_cast<long>(s)) continue;
          acc += filters[(f * d + r) * m + w] * in[r][static_cast<std::size_t>(pos)];
        }
      }
      out[f][j] = std::tanh(acc);
    }
  }
  return out;
}

std::vector<double> char_feature_oracle(const ModelParams& p, const std::vector<int>& chars) {
  const std::size_t d = p.config.char_dim;
  Matrix u(d, std::vector<double>(chars.size()));
  for (std::size_t r = 0; r < d; ++r) {
    for (std::size_t j = 0; j < chars.size(); ++j) {
      u[r][j] = p.char_embeddings.value.at(r, static_cast<std::size_t>(chars[j]));
    }
  }
  const Matrix h1 = conv_oracle(u, p.conv1_filters.value, p.conv1_bias.value);
  const Matrix h2 = conv_oracle(h1, p.conv2_filters.value, p.conv2_bias.value);
  std::vector<double> out;
  for (const auto& row : h2) out.push_back(*std::max_element(row.begin(), row.end()));
  return out;
}

std::vector<double> to_vector(const Var& v) {
  const auto s = v.value().values();
  return {s.begin(), s.end()};
}

bool params_equal(const ModelParams& a, const ModelParams& b) {
  const auto pa = a.all();
  const auto pb = b.all();
  if (pa.size() != pb.size()) return false;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    if (pa[i]->name != pb[i]->name || !(pa[i]->value == pb[i]->value)) return false;
  }
  return true;
}

// Gradient-check instances use wider weights than init_params so that no
// partial derivative sits near the finite-difference noise floor.
void randomize(ModelParams& p, Rng& rng) {
  for (auto* q : p.all()) {
    for (double& v : q->value.values()) v = rng.uniform(-0.5, 0.5);
  }
  if (p.config.char_cnn) {
    for (std::size_t r = 0; r < p.config.char_dim; ++r) p.char_embeddings.value.at(r, 0) = 0;
  }
  for (std::size_t r = 0; r < p.config.word_dim; ++r) p.word_embeddings.value.at(r, 0) = 0;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("twsent_model_" + name)).string();
}

}  // namespace

TEST_CASE("config defaults and validation") {
  const ModelConfig c;
  CHECK(c.conv1.window == 7);
  CHECK(c.conv1.feature_maps == 6);
  CHECK(c.conv2.window == 5);
  CHECK(c.conv2.feature_maps == 14);
  CHECK(c.dropout == 0.5);
  CHECK(c.token_dim() == 214);
  CHECK(c.sentence_dim() == 200);

  ModelConfig bad = c;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.conv2.window = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.num_classes = 1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("config key-value round trip") {
  ModelConfig c = micro_config();
  c.bilstm = false;
  c.freeze_word_embeddings = true;
  c.dropout = 0.3;
  KeyValueConfig kv;
  c.write(kv);
  CHECK(ModelConfig::read(kv) == c);
  CHECK(ModelConfig::read(KeyValueConfig()) == ModelConfig());
  kv.set("lstm_hidden", "-3");
  CHECK_THROWS_AS(ModelConfig::read(kv), ConfigError);
}

TEST_CASE("init_params contract") {
  const ModelConfig c = micro_config();
  const ModelParams a = init_params(c, 10, 10, 7);
  const ModelParams b = init_params(c, 10, 10, 7);
  const ModelParams other = init_params(c, 10, 10, 8);
  CHECK(params_equal(a, b));
  CHECK_FALSE(params_equal(a, other));

  for (const auto* lstm : {&a.forward, &a.backward}) {
    for (std::size_t k = 0; k < 4 * c.lstm_hidden; ++k) {
      const bool forget = k >= c.lstm_hidden && k < 2 * c.lstm_hidden;
      CHECK(lstm->bias.value[k] == (forget ? 1.0 : 0.0));
    }
    for (double v : lstm->input_weights.value.values()) CHECK(std::abs(v) <= 0.1);
    for (double v : lstm->peephole_forget.value.values()) CHECK(std::abs(v) <= 0.1);
  }
  const double conv1_bound = std::sqrt(6.0 / (2 * 2 + 2 * 2));
  for (double v : a.conv1_filters.value.values()) CHECK(std::abs(v) <= conv1_bound);
  const double softmax_bound = std::sqrt(6.0 / (8 + 2));
  for (double v : a.softmax_weights.value.values()) CHECK(std::abs(v) <= softmax_bound);
  for (double v : a.char_embeddings.value.values()) CHECK(std::abs(v) <= 0.25);
  for (std::size_t r = 0; r < c.char_dim; ++r) CHECK(a.char_embeddings.value.at(r, 0) == 0);
  for (std::size_t r = 0; r < c.word_dim; ++r) CHECK(a.word_embeddings.value.at(r, 0) == 0);
  for (const auto* p : a.all()) CHECK(p->value.all_finite());
}

TEST_CASE("default shapes") {
  const ModelParams p(ModelConfig(), 50, 20);
  CHECK(p.char_embeddings.value.shape() == std::vector<std::size_t>{30, 20});
  CHECK(p.conv1_filters.value.shape() == std::vector<std::size_t>{6, 30, 7});
  CHECK(p.conv2_filters.value.shape() == std::vector<std::size_t>{14, 6, 5});
  CHECK(p.forward.input_weights.value.shape() == std::vector<std::size_t>{400, 214});
  CHECK(p.backward.recurrent_weights.value.shape() == std::vector<std::size_t>{400, 100});
  CHECK(p.softmax_weights.value.shape() == std::vector<std::size_t>{2, 200});
  CHECK(p.all().size() == 20);
}

TEST_CASE("char_feature output size is independent of word length") {
  const ModelParams p = init_params(ModelConfig(), 5, 12, 3);
  Rng rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t m = 1 + rng.below(60);
    std::vector<int> chars(m);
    for (auto& ch : chars) ch = static_cast<int>(1 + rng.below(11));
    Graph g;
    CHECK(char_feature(g, p, chars).size() == 14);
  }
}

TEST_CASE("char_feature with zero filters is zero") {
  ModelParams p = init_params(micro_config(), 10, 10, 1);
  p.conv1_filters.value.fill(0);
  p.conv2_filters.value.fill(0);
  Graph g;
  const std::vector<int> chars{3, 4, 5};
  for (double v : to_vector(char_feature(g, p, chars))) CHECK(v == 0.0);
}

TEST_CASE("char_feature matches a straight-line evaluation") {
  Rng rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    ModelParams p = init_params(micro_config(), 10, 10, 100 + static_cast<std::uint64_t>(trial));
    for (double& b : p.conv1_bias.value.values()) b = rng.uniform(-0.5, 0.5);
    for (double& b : p.conv2_bias.value.values()) b = rng.uniform(-0.5, 0.5);
    std::vector<int> chars(1 + rng.below(12));
    for (auto& ch : chars) ch = static_cast<int>(1 + rng.below(9));
    Graph g;
    const auto got = to_vector(char_feature(g, p, chars));
    const auto want = char_feature_oracle(p, chars);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("encode_sentence dimensions and order") {
  ModelConfig c;
  const ModelParams p = init_params(c, 10, 10, 2);
  Rng rng(3);
  const auto s = random_sentence(rng, 4, 10, 6);
  Graph g;
  const auto v = encode_sentence(g, p, s);
  REQUIRE(v.size() == 4);
  for (const auto& x : v) CHECK(x.size() == 214);

  const auto single = random_sentence(rng, 1, 10, 3);
  Graph g1;
  CHECK(encode_sentence(g1, p, single).size() == 1);

  Graph g0;
  CHECK_THROWS_AS(encode_sentence(g0, p, IndexedSentence{}), DegenerateTweet);
}

TEST_CASE("encode_sentence commutes with token permutations") {
  const ModelParams p = init_params(micro_config(), 10, 10, 4);
  Rng rng(8);
  for (int trial = 0; trial < 25; ++trial) {
    const auto s = random_sentence(rng, 2 + rng.below(6), 10, 7);
    std::vector<std::size_t> perm(s.length());
    std::iota(perm.begin(), perm.end(), 0);
    rng.shuffle(std::span<std::size_t>(perm));
    IndexedSentence t;
    for (auto i : perm) {
      t.words.push_back(s.words[i]);
      t.chars.push_back(s.chars[i]);
      t.word_lengths.push_back(s.word_lengths[i]);
    }
    Graph g;
    const auto vs = encode_sentence(g, p, s);
    const auto vt = encode_sentence(g, p, t);
    for (std::size_t i = 0; i < perm.size(); ++i) {
      CHECK(to_vector(vt[i]) == to_vector(vs[perm[i]]));
    }
  }
}

TEST_CASE("bilstm_encode with zero parameters is zero") {
  ModelParams p = init_params(micro_config(), 10, 10, 4);
  for (auto* lstm : {&p.forward, &p.backward}) {
    for (auto* q : lstm->all()) q->value.fill(0);
  }
  Rng rng(1);
  const auto s = random_sentence(rng, 3, 10, 4);
  Graph g;
  const auto v = encode_sentence(g, p, s);
  const Var out = bilstm_encode(g, p, v);
  CHECK(out.size() == 8);
  for (double x : to_vector(out)) CHECK(x == 0.0);
}

TEST_CASE("backward direction equals a forward pass over the reversed input") {
  const ModelParams p = init_params(micro_config(), 10, 10, 12);
  Rng rng(13);
  for (int trial = 0; trial < 10; ++trial) {
    const auto s = random_sentence(rng, 1 + rng.below(6), 10, 5);
    Graph g;
    const auto v = encode_sentence(g, p, s);
    const auto both = to_vector(bilstm_encode(g, p, v));

    ad::LstmState st = ad::lstm_initial_state(g, 4);
    for (auto it = v.rbegin(); it != v.rend(); ++it) st = ad::lstm_step(g, *it, st, p.backward);
    const auto reversed = to_vector(st.h);
    for (std::size_t k = 0; k < 4; ++k) CHECK(both[4 + k] == reversed[k]);

    ad::LstmState fw = ad::lstm_initial_state(g, 4);
    for (const auto& x : v) fw = ad::lstm_step(g, x, fw, p.forward);
    const auto forward = to_vector(fw.h);
    for (std::size_t k = 0; k < 4; ++k) CHECK(both[k] == forward[k]);
  }
}

TEST_CASE("single token sentence is well defined") {
  const ModelParams p = init_params(micro_config(), 10, 10, 12);
  Rng rng(2);
  const auto s = random_sentence(rng, 1, 10, 3);
  const auto probs = predict(p, s);
  CHECK(probs.size() == 2);
  CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("predict is a deterministic distribution in eval mode") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const ModelParams p = init_params(micro_config(), 10, 10, rng.next());
    const auto s = random_sentence(rng, 1 + rng.below(5), 10, 6);
    const auto a = predict(p, s);
    const auto b = predict(p, s);
    CHECK(a == b);
    double total = 0;
    for (double x : a) {
      CHECK(x > 0.0);
      CHECK(x < 1.0);
      total += x;
    }
    CHECK(std::abs(total - 1.0) <= 1e-6);
  }
}

TEST_CASE("train-mode dropout changes outputs but keeps a distribution") {
  const ModelParams p = init_params(micro_config(), 10, 10, 5);
  Rng data(1);
  const auto s = random_sentence(data, 5, 10, 4);
  Rng r1(1), r2(2);
  const auto a = predict(p, s, &r1);
  const auto b = predict(p, s, &r2);
  CHECK(a != b);
  CHECK(a[0] + a[1] == doctest::Approx(1.0));
}

TEST_CASE("full micro-model passes gradient check") {
  for (bool train_mode : {false, true}) {
    ModelParams p = init_params(micro_config(), 10, 10, 31);
    Rng rng(41);
    randomize(p, rng);
    const auto s = random_sentence(rng, 4, 10, 5);
    const ad::GraphFn f = [&](Graph& g) {
      Rng dropout_rng(99);
      const Var z = logits(g, p, s, train_mode ? &dropout_rng : nullptr);
      return ad::softmax_xent(z, 1).loss;
    };
    const auto params = p.all();
    const auto report = ad::grad_check(f, params);
    INFO("worst " << report.worst_parameter << "[" << report.worst_index << "]");
    CHECK(report.max_relative_error <= 1e-4);
    CHECK(report.entries_checked > 100);
  }
}

TEST_CASE("ablation variants build and differentiate") {
  for (bool cnn : {false, true}) {
    for (bool lstm : {false, true}) {
      ModelConfig c = micro_config();
      c.char_cnn = cnn;
      c.bilstm = lstm;
      ModelParams p = init_params(c, 10, 10, 3);
      CHECK(p.softmax_weights.value.dim(1) == c.sentence_dim());
      Rng rng(4);
      randomize(p, rng);
      const auto s = random_sentence(rng, 3, 10, 4);
      const ad::GraphFn f = [&](Graph& g) { return ad::softmax_xent(logits(g, p, s), 0).loss; };
      const auto params = p.all();
      // Some peephole partials here are ~1e-8; a wider step keeps the central
      // difference above double roundoff.
      const auto report = ad::grad_check(f, params, 1e-4);
      INFO("cnn " << cnn << " lstm " << lstm << " worst " << report.worst_parameter << "["
                  << report.worst_index << "]");
      CHECK(report.max_relative_error <= 1e-4);
    }
  }
}

TEST_CASE("frozen word embeddings receive no gradient") {
  ModelConfig c = micro_config();
  c.freeze_word_embeddings = true;
  ModelParams p = init_params(c, 10, 10, 3);
  for (auto* q : p.all()) q->zero_grad();
  Rng rng(4);
  const auto s = random_sentence(rng, 3, 10, 4);
  Graph g;
  g.backward(ad::softmax_xent(logits(g, p, s), 0).loss);
  for (double v : p.word_embeddings.grad.values()) CHECK(v == 0.0);
  double total = 0;
  for (double v : p.softmax_weights.grad.values()) total += std::abs(v);
  CHECK(total > 0);
}

TEST_CASE("set_word_embeddings checks shape") {
  ModelParams p = init_params(micro_config(), 10, 10, 3);
  CHECK_THROWS_AS(set_word_embeddings(p, Tensor({3, 9})), ShapeError);
  Tensor t({3, 10}, 0.5);
  set_word_embeddings(p, t);
  CHECK(p.word_embeddings.value == t);
}

TEST_CASE("argmax breaks ties toward the lower index") {
  CHECK(argmax(std::vector<double>{0.5, 0.5}) == 0);
  CHECK(argmax(std::vector<double>{0.2, 0.8}) == 1);
  CHECK(argmax(std::vector<double>{0.3, 0.4, 0.4}) == 1);
}

TEST_CASE("checkpoint round trip") {
  Classifier c;
  c.pipeline.apply_rules = false;
  c.pipeline.normalize.remove_stop_words = true;
  for (const char* w : {"good", "bad", "day"}) c.words.add(w);
  for (const char* ch : {"g", "o", "d", "b", "a", "y"}) c.chars.add(ch);
  c.params = init_params(micro_config(), c.words.size(), c.chars.size(), 77);
  const std::string path = temp_path("roundtrip.twnt");
  save_checkpoint(path, c);
  const Classifier back = load_checkpoint(path);
  CHECK(back.params.config == c.params.config);
  CHECK(back.pipeline.apply_rules == false);
  CHECK(back.pipeline.normalize.remove_stop_words == true);
  CHECK(back.words == c.words);
  CHECK(back.chars == c.chars);
  CHECK(params_equal(back.params, c.params));
  CHECK(back.predict_text("Good day!!") == c.predict_text("Good day!!"));
  CHECK_THROWS_AS(back.predict_text("!!!"), DegenerateTweet);

  std::ifstream in(path, std::ios::binary);
  std::string bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  in.close();

  SUBCASE("config that disagrees with tensors") {
    const auto pos = bytes.find("lstm_hidden = 4");
    REQUIRE(pos != std::string::npos);
    std::string bad = bytes;
    bad[pos + 14] = '5';
    std::ofstream(path, std::ios::binary) << bad;
    CHECK_THROWS_AS(load_checkpoint(path), ShapeError);
  }
  SUBCASE("truncated file") {
    std::ofstream(path, std::ios::binary) << bytes.substr(0, bytes.size() - 5);
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  SUBCASE("wrong magic") {
    std::string bad = bytes;
    bad[0] = 'X';
    std::ofstream(path, std::ios::binary) << bad;
    CHECK_THROWS_AS(load_checkpoint(path), FormatError);
  }
  std::remove(path.c_str());
}

TEST_CASE("ablated checkpoint round trip") {
  Classifier c;
  c.words.add("x");
  ModelConfig cfg = micro_config();
  cfg.char_cnn = false;
  cfg.bilstm = false;
  c.params = init_params(cfg, c.words.size(), c.chars.size(), 5);
  const std::string path = temp_path("ablated.twnt");
  save_checkpoint(path, c);
  const Classifier back = load_checkpoint(path);
  CHECK(params_equal(back.params, c.params));
  CHECK(back.params.all().size() == 3);
  std::remove(path.c_str());
}
