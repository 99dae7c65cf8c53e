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

#include "twsent/model.h"

#include <cmath>

#include "twsent/errors.h"

namespace twsent::model {

namespace {

constexpr double kLstmInitRange = 0.1;
constexpr double kCharInitRange = 0.25;

std::size_t read_size(const KeyValueConfig& kv, const std::string& key,
                      std::size_t fallback) {
  const long v = kv.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(key + " must not be negative");
  return static_cast<std::size_t>(v);
}

void fill_uniform(Tensor& t, double range, Rng& rng) {
  for (auto& v : t.values()) v = rng.uniform(-range, range);
}

double glorot(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

template <typename P>
Var char_feature_impl(Graph& g, P& p, std::span<const int> chars) {
  if (chars.empty()) throw ShapeError("char_feature: word has no characters");
  const Var u = ad::embed_columns(g, p.char_embeddings, chars);
  const Var h1 = ad::tanh(ad::wide_conv1d(u, g.param(p.conv1_filters), g.param(p.conv1_bias)));
  const Var h2 = ad::tanh(ad::wide_conv1d(h1, g.param(p.conv2_filters), g.param(p.conv2_bias)));
  return ad::max_pool_time(h2);
}

template <typename P>
std::vector<Var> encode_impl(Graph& g, P& p, const embeddings::IndexedSentence& s) {
  if (s.length() == 0) throw DegenerateTweet("empty sentence");
  std::vector<Var> out;
  out.reserve(s.length());
  for (std::size_t i = 0; i < s.length(); ++i) {
    const Var r = ad::lookup_column(g, p.word_embeddings, static_cast<std::size_t>(s.words[i]));
    if (!p.config.char_cnn) {
      out.push_back(r);
      continue;
    }
    const std::span<const int> chars(s.chars[i].data(), s.word_lengths[i]);
    out.push_back(ad::concat({r, char_feature_impl(g, p, chars)}));
  }
  return out;
}

template <typename P>
Var bilstm_impl(Graph& g, P& p, std::span<const Var> v) {
  if (v.empty()) throw DegenerateTweet("empty sentence");
  const std::size_t hidden = p.forward.hidden();
  ad::LstmState fwd = ad::lstm_initial_state(g, hidden);
  for (const Var& x : v) fwd = ad::lstm_step(g, x, fwd, p.forward);
  ad::LstmState bwd = ad::lstm_initial_state(g, hidden);
  for (auto it = v.rbegin(); it != v.rend(); ++it) bwd = ad::lstm_step(g, *it, bwd, p.backward);
  return ad::concat({fwd.h, bwd.h});
}

template <typename P>
Var logits_impl(Graph& g, P& p, const embeddings::IndexedSentence& s, Rng* rng) {
  std::vector<Var> v = encode_impl(g, p, s);
  const double rate = p.config.dropout;
  if (rng != nullptr) {
    for (auto& x : v) x = ad::dropout(x, rate, *rng);
  }
  Var sentence = p.config.bilstm ? bilstm_impl(g, p, v) : ad::max_pool_time(ad::columns(v));
  if (rng != nullptr) sentence = ad::dropout(sentence, rate, *rng);
  return ad::affine(g.param(p.softmax_weights), sentence, g.param(p.softmax_bias));
}

}  // namespace

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* what) {
    if (v < 1) throw ConfigError(std::string(what) + " must be at least 1");
  };
  positive(conv1.window, "conv1_window");
  positive(conv1.feature_maps, "conv1_maps");
  positive(conv2.window, "conv2_window");
  positive(conv2.feature_maps, "conv2_maps");
  positive(char_dim, "char_dim");
  positive(word_dim, "word_dim");
  positive(lstm_hidden, "lstm_hidden");
  positive(max_word_len, "max_word_len");
  positive(max_sent_len, "max_sent_len");
  if (num_classes < 2) throw ConfigError("num_classes must be at least 2");
  if (!(dropout >= 0 && dropout < 1)) throw ConfigError("dropout must be in [0, 1)");
}

std::size_t ModelConfig::token_dim() const {
  return word_dim + (char_cnn ? conv2.feature_maps : 0);
}

std::size_t ModelConfig::sentence_dim() const {
  return bilstm ? 2 * lstm_hidden : token_dim();
}

void ModelConfig::write(KeyValueConfig& kv) const {
  kv.set("conv1_window", std::to_string(conv1.window));
  kv.set("conv1_maps", std::to_string(conv1.feature_maps));
  kv.set("conv2_window", std::to_string(conv2.window));
  kv.set("conv2_maps", std::to_string(conv2.feature_maps));
  kv.set("char_dim", std::to_string(char_dim));
  kv.set("word_dim", std::to_string(word_dim));
  kv.set("lstm_hidden", std::to_string(lstm_hidden));
  kv.set("num_classes", std::to_string(num_classes));
  kv.set("dropout", format_double(dropout));
  kv.set("char_cnn", char_cnn ? "on" : "off");
  kv.set("bilstm", bilstm ? "on" : "off");
  kv.set("freeze_word_embeddings", freeze_word_embeddings ? "on" : "off");
  kv.set("max_word_len", std::to_string(max_word_len));
  kv.set("max_sent_len", std::to_string(max_sent_len));
}

ModelConfig ModelConfig::read(const KeyValueConfig& kv) {
  ModelConfig c;
  c.conv1.window = read_size(kv, "conv1_window", c.conv1.window);
  c.conv1.feature_maps = read_size(kv, "conv1_maps", c.conv1.feature_maps);
  c.conv2.window = read_size(kv, "conv2_window", c.conv2.window);
  c.conv2.feature_maps = read_size(kv, "conv2_maps", c.conv2.feature_maps);
  c.char_dim = read_size(kv, "char_dim", c.char_dim);
  c.word_dim = read_size(kv, "word_dim", c.word_dim);
  c.lstm_hidden = read_size(kv, "lstm_hidden", c.lstm_hidden);
  c.num_classes = read_size(kv, "num_classes", c.num_classes);
  c.dropout = kv.get_double("dropout", c.dropout);
  c.char_cnn = kv.get_bool("char_cnn", c.char_cnn);
  c.bilstm = kv.get_bool("bilstm", c.bilstm);
  c.freeze_word_embeddings = kv.get_bool("freeze_word_embeddings", c.freeze_word_embeddings);
  c.max_word_len = read_size(kv, "max_word_len", c.max_word_len);
  c.max_sent_len = read_size(kv, "max_sent_len", c.max_sent_len);
  c.validate();
  return c;
}

ModelParams::ModelParams(const ModelConfig& cfg, std::size_t word_vocab,
                         std::size_t char_vocab)
    : config(cfg) {
  config.validate();
  if (word_vocab < 2) throw ShapeError("word vocabulary lacks reserved entries");
  if (cfg.char_cnn) {
    if (char_vocab < 2) throw ShapeError("character vocabulary lacks reserved entries");
    const std::size_t k1 = cfg.conv1.feature_maps;
    const std::size_t k2 = cfg.conv2.feature_maps;
    char_embeddings = Parameter("char_embeddings", Tensor({cfg.char_dim, char_vocab}));
    conv1_filters = Parameter("conv1.filters", Tensor({k1, cfg.char_dim, cfg.conv1.window}));
    conv1_bias = Parameter("conv1.bias", Tensor({k1}));
    conv2_filters = Parameter("conv2.filters", Tensor({k2, k1, cfg.conv2.window}));
    conv2_bias = Parameter("conv2.bias", Tensor({k2}));
  }
  word_embeddings = Parameter("word_embeddings", Tensor({cfg.word_dim, word_vocab}));
  word_embeddings.trainable = !cfg.freeze_word_embeddings;
  if (cfg.bilstm) {
    forward = ad::LstmParams("lstm_forward", cfg.token_dim(), cfg.lstm_hidden);
    backward = ad::LstmParams("lstm_backward", cfg.token_dim(), cfg.lstm_hidden);
  }
  softmax_weights = Parameter("softmax.weights", Tensor({cfg.num_classes, cfg.sentence_dim()}));
  softmax_bias = Parameter("softmax.bias", Tensor({cfg.num_classes}));
}

std::vector<Parameter*> ModelParams::all() {
  std::vector<Parameter*> out;
  if (config.char_cnn) {
    out.insert(out.end(), {&char_embeddings, &conv1_filters, &conv1_bias,
                           &conv2_filters, &conv2_bias});
  }
  out.push_back(&word_embeddings);
  if (config.bilstm) {
    for (auto* p : forward.all()) out.push_back(p);
    for (auto* p : backward.all()) out.push_back(p);
  }
  out.insert(out.end(), {&softmax_weights, &softmax_bias});
  return out;
}

std::vector<const Parameter*> ModelParams::all() const {
  std::vector<const Parameter*> out;
  for (auto* p : const_cast<ModelParams*>(this)->all()) out.push_back(p);
  return out;
}

std::vector<Parameter*> ModelParams::constrained() {
  std::vector<Parameter*> out{&softmax_weights};
  if (config.bilstm) {
    out.insert(out.end(), {&forward.input_weights, &forward.recurrent_weights,
                           &backward.input_weights, &backward.recurrent_weights});
  }
  return out;
}

std::vector<const Parameter*> ModelParams::constrained() const {
  auto mutable_view = const_cast<ModelParams*>(this)->constrained();
  return {mutable_view.begin(), mutable_view.end()};
}

std::size_t ModelParams::char_vocab_size() const {
  return config.char_cnn ? char_embeddings.value.dim(1) : 0;
}

ModelParams init_params(const ModelConfig& config, std::size_t word_vocab,
                        std::size_t char_vocab, std::uint64_t seed) {
  ModelParams p(config, word_vocab, char_vocab);
  Rng rng(seed);
  if (config.char_cnn) {
    fill_uniform(p.char_embeddings.value, kCharInitRange, rng);
    for (std::size_t r = 0; r < config.char_dim; ++r) {
      p.char_embeddings.value.at(r, embeddings::kPadIndex) = 0;
    }
    const auto& c1 = config.conv1;
    const auto& c2 = config.conv2;
    fill_uniform(p.conv1_filters.value,
                 glorot(config.char_dim * c1.window, c1.feature_maps * c1.window), rng);
    fill_uniform(p.conv2_filters.value,
                 glorot(c1.feature_maps * c2.window, c2.feature_maps * c2.window), rng);
  }
  fill_uniform(p.word_embeddings.value, embeddings::kRandomInitRange, rng);
  for (std::size_t r = 0; r < config.word_dim; ++r) {
    p.word_embeddings.value.at(r, embeddings::kPadIndex) = 0;
  }
  if (config.bilstm) {
    for (auto* lstm : {&p.forward, &p.backward}) {
      fill_uniform(lstm->input_weights.value, kLstmInitRange, rng);
      fill_uniform(lstm->recurrent_weights.value, kLstmInitRange, rng);
      fill_uniform(lstm->peephole_input.value, kLstmInitRange, rng);
      fill_uniform(lstm->peephole_forget.value, kLstmInitRange, rng);
      fill_uniform(lstm->peephole_output.value, kLstmInitRange, rng);
      // gate order i, f, c, o
      const std::size_t h = config.lstm_hidden;
      for (std::size_t k = h; k < 2 * h; ++k) lstm->bias.value[k] = 1.0;
    }
  }
  fill_uniform(p.softmax_weights.value,
               glorot(config.sentence_dim(), config.num_classes), rng);
  return p;
}

void set_word_embeddings(ModelParams& params, const Tensor& values) {
  if (values.shape() != params.word_embeddings.value.shape()) {
    throw ShapeError("word embeddings " + ad::shape_string(values.shape()) +
                     " do not fit " + ad::shape_string(params.word_embeddings.value.shape()));
  }
  params.word_embeddings.value = values;
}

Var char_feature(Graph& g, ModelParams& p, std::span<const int> chars) {
  return char_feature_impl(g, p, chars);
}
Var char_feature(Graph& g, const ModelParams& p, std::span<const int> chars) {
  return char_feature_impl(g, p, chars);
}

std::vector<Var> encode_sentence(Graph& g, ModelParams& p,
                                 const embeddings::IndexedSentence& s) {
  return encode_impl(g, p, s);
}
std::vector<Var> encode_sentence(Graph& g, const ModelParams& p,
                                 const embeddings::IndexedSentence& s) {
  return encode_impl(g, p, s);
}

Var bilstm_encode(Graph& g, ModelParams& p, std::span<const Var> v) {
  return bilstm_impl(g, p, v);
}
Var bilstm_encode(Graph& g, const ModelParams& p, std::span<const Var> v) {
  return bilstm_impl(g, p, v);
}

Var logits(Graph& g, ModelParams& p, const embeddings::IndexedSentence& s, Rng* rng) {
  return logits_impl(g, p, s, rng);
}
Var logits(Graph& g, const ModelParams& p, const embeddings::IndexedSentence& s,
           Rng* rng) {
  return logits_impl(g, p, s, rng);
}

std::vector<double> predict(const ModelParams& p, const embeddings::IndexedSentence& s,
                            Rng* rng) {
  Graph g;
  const Var z = logits(g, p, s, rng);
  const auto values = z.value().values();
  return ad::softmax(values);
}

std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] > v[best]) best = i;
  }
  return best;
}

}  // namespace twsent::model
