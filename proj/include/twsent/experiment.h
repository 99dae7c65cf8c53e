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

#ifndef TWSENT_EXPERIMENT_H_
#define TWSENT_EXPERIMENT_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "twsent/classifier.h"
#include "twsent/datasets.h"
#include "twsent/kv_config.h"
#include "twsent/training.h"

namespace twsent::training {

enum class EmbeddingKind { kRandom, kGlove200, kWord2vec300 };

std::string_view embedding_name(EmbeddingKind kind);
std::optional<EmbeddingKind> parse_embedding_kind(std::string_view name);

// Everything that shapes a trained model, short of the data.
struct ExperimentConfig {
  model::ModelConfig model;
  TrainConfig train;
  textproc::PipelineOptions pipeline;
  model::LexiconPaths lexicons;
  EmbeddingKind embeddings = EmbeddingKind::kRandom;
  std::string vectors_path;
  int min_count = 1;
  double dev_fraction = 0.1;

  // Pretrained kinds fix word_dim (200 or 300) and need vectors_path.
  // Throws ConfigError.
  void validate() const;
  void write(KeyValueConfig& kv) const;
  // A pretrained kind sets word_dim unless the file sets it explicitly.
  static ExperimentConfig read(const KeyValueConfig& kv);
};

// Labeled examples after preprocessing and tokenization. Tweets with nothing
// left are dropped and counted.
struct PreparedCorpus {
  std::vector<textproc::TokenizedSentence> sentences;
  std::vector<std::size_t> labels;
  std::vector<std::size_t> source_index;  // position in the dataset
  std::size_t degenerate = 0;

  std::size_t size() const { return sentences.size(); }
};

// Throws ContractError on an unlabeled example.
PreparedCorpus prepare_corpus(const datasets::Dataset& d,
                              const textproc::PipelineOptions& pipeline,
                              const textproc::Lexicons& lexicons);

textproc::Lexicons load_lexicons(const model::LexiconPaths& paths);

struct WordVectors {
  Tensor values;
  double coverage = 0;
};

// Vectors for every column of `words`, pretrained or random per config.
WordVectors make_word_vectors(const ExperimentConfig& config, const embeddings::Vocab& words);

// Vocabularies over `vocab_corpus`, fresh weights from config.train.seed.
model::Classifier make_classifier(const ExperimentConfig& config,
                                  std::span<const textproc::TokenizedSentence> vocab_corpus,
                                  const textproc::Lexicons& lexicons);

std::vector<Example> index_examples(const model::Classifier& c, const PreparedCorpus& corpus,
                                    std::span<const std::size_t> subset);
std::vector<Example> index_examples(const model::Classifier& c, const PreparedCorpus& corpus);

struct FitResult {
  model::Classifier classifier;
  TrainReport report;
  double embedding_coverage = 0;
  std::size_t dropped = 0;  // degenerate tweets across both splits
};

// Vocabularies come from train and dev together.
FitResult fit(const ExperimentConfig& config, const datasets::Dataset& train_set,
              const datasets::Dataset& dev_set, const StepObserver& observer = {});

// Deterministic balanced assignment: a seeded permutation dealt round-robin.
std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed);

struct FoldResult {
  std::size_t fold = 0;
  std::size_t train_size = 0;
  std::size_t dev_size = 0;
  std::size_t test_size = 0;
  std::size_t best_epoch = 0;
  double accuracy = 0;
};

struct CvReport {
  std::vector<FoldResult> folds;
  double mean = 0;
  double stdev = 0;  // sample standard deviation
  std::size_t degenerate = 0;

  std::string serialize() const;
};

// Per fold: the other folds give 10% dev and 90% train, the fold itself is
// the test set. Throws ContractError when k < 2 or k exceeds the number of
// usable examples.
CvReport cross_validate(const datasets::Dataset& d, std::size_t k,
                        const ExperimentConfig& config);

}  // namespace twsent::training

#endif  // TWSENT_EXPERIMENT_H_
