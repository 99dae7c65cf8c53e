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

#ifndef TWSENT_MODEL_H_
#define TWSENT_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "twsent/autodiff.h"
#include "twsent/embeddings.h"
#include "twsent/kv_config.h"
#include "twsent/lstm.h"
#include "twsent/rng.h"

namespace twsent::model {

using ad::Graph;
using ad::Parameter;
using ad::Tensor;
using ad::Var;

struct ConvLayerSpec {
  std::size_t window = 1;        // m
  std::size_t feature_maps = 1;  // k

  friend bool operator==(const ConvLayerSpec&, const ConvLayerSpec&) = default;
};

struct ModelConfig {
  ConvLayerSpec conv1{7, 6};
  ConvLayerSpec conv2{5, 14};
  std::size_t char_dim = 30;
  std::size_t word_dim = 200;
  std::size_t lstm_hidden = 100;
  std::size_t num_classes = 2;
  double dropout = 0.5;

  // Ablation switches. With char_cnn off, v_i = r_i. With bilstm off, the
  // sentence vector is the max over time of the v_i.
  bool char_cnn = true;
  bool bilstm = true;
  bool freeze_word_embeddings = false;

  std::size_t max_word_len = 40;
  std::size_t max_sent_len = 60;

  // Throws ConfigError.
  void validate() const;

  std::size_t token_dim() const;     // |v_i|
  std::size_t sentence_dim() const;  // |s|

  void write(KeyValueConfig& kv) const;
  // Missing keys keep their defaults. Throws ConfigError on bad values.
  static ModelConfig read(const KeyValueConfig& kv);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// All weights. Tensors of a disabled component have no entries and are left
// out of all().
struct ModelParams {
  ModelParams() = default;
  ModelParams(const ModelConfig& config, std::size_t word_vocab, std::size_t char_vocab);

  ModelConfig config;

  Parameter char_embeddings;  // {d_char, |V_c|}
  Parameter conv1_filters;    // {k1, d_char, m1}
  Parameter conv1_bias;       // {k1}
  Parameter conv2_filters;    // {k2, k1, m2}
  Parameter conv2_bias;       // {k2}
  Parameter word_embeddings;  // {d_word, |V_w|}
  ad::LstmParams forward;
  ad::LstmParams backward;
  Parameter softmax_weights;  // {C, |s|}
  Parameter softmax_bias;     // {C}

  std::vector<Parameter*> all();
  std::vector<const Parameter*> all() const;
  // Rows of these matrices are held under the l2 max-norm.
  std::vector<Parameter*> constrained();
  std::vector<const Parameter*> constrained() const;

  std::size_t word_vocab_size() const { return word_embeddings.value.dim(1); }
  std::size_t char_vocab_size() const;
};

// Glorot-uniform conv and softmax weights, LSTM weights and peepholes in
// [-0.1, 0.1], forget bias 1 and other biases 0, embeddings in
// [-0.25, 0.25] with a zero padding column.
ModelParams init_params(const ModelConfig& config, std::size_t word_vocab,
                        std::size_t char_vocab, std::uint64_t seed);

// Copies pretrained/random word vectors in. Throws ShapeError on mismatch.
void set_word_embeddings(ModelParams& params, const Tensor& values);

// Character indices of one word (no padding) -> e_i of size conv2.k.
Var char_feature(Graph& g, ModelParams& p, std::span<const int> chars);
Var char_feature(Graph& g, const ModelParams& p, std::span<const int> chars);

// v_i = [r_i; e_i] for each token, in order.
std::vector<Var> encode_sentence(Graph& g, ModelParams& p,
                                 const embeddings::IndexedSentence& s);
std::vector<Var> encode_sentence(Graph& g, const ModelParams& p,
                                 const embeddings::IndexedSentence& s);

// [h_forward_N; h_backward_1].
Var bilstm_encode(Graph& g, ModelParams& p, std::span<const Var> v);
Var bilstm_encode(Graph& g, const ModelParams& p, std::span<const Var> v);

// Unnormalized class scores. Dropout is active iff `dropout_rng` is set.
Var logits(Graph& g, ModelParams& p, const embeddings::IndexedSentence& s,
           Rng* dropout_rng = nullptr);
Var logits(Graph& g, const ModelParams& p, const embeddings::IndexedSentence& s,
           Rng* dropout_rng = nullptr);

// Class probabilities. Throws DegenerateTweet on an empty sentence.
std::vector<double> predict(const ModelParams& p, const embeddings::IndexedSentence& s,
                            Rng* dropout_rng = nullptr);

// Lowest index among the maxima.
std::size_t argmax(std::span<const double> v);

}  // namespace twsent::model

#endif  // TWSENT_MODEL_H_
