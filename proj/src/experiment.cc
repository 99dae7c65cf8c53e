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

#include "twsent/experiment.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "twsent/errors.h"
#include "twsent/rng.h"

namespace twsent::training {

namespace {

std::size_t pretrained_dim(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kGlove200: return 200;
    case EmbeddingKind::kWord2vec300: return 300;
    case EmbeddingKind::kRandom: return 0;
  }
  return 0;
}

}  // namespace

std::string_view embedding_name(EmbeddingKind kind) {
  switch (kind) {
    case EmbeddingKind::kRandom: return "random";
    case EmbeddingKind::kGlove200: return "glove200";
    case EmbeddingKind::kWord2vec300: return "word2vec300";
  }
  return "?";
}

std::optional<EmbeddingKind> parse_embedding_kind(std::string_view name) {
  for (auto kind : {EmbeddingKind::kRandom, EmbeddingKind::kGlove200,
                    EmbeddingKind::kWord2vec300}) {
    if (embedding_name(kind) == name) return kind;
  }
  return std::nullopt;
}

void ExperimentConfig::validate() const {
  model.validate();
  train.validate();
  if (min_count < 1) throw ConfigError("min_count must be at least 1");
  if (!(dev_fraction > 0 && dev_fraction < 1)) throw ConfigError("dev_fraction must be in (0, 1)");
  const std::size_t dim = pretrained_dim(embeddings);
  if (dim != 0) {
    if (vectors_path.empty()) {
      throw ConfigError("embeddings = " + std::string(embedding_name(embeddings)) +
                        " needs vectors_path");
    }
    if (model.word_dim != dim) {
      throw ConfigError("embeddings = " + std::string(embedding_name(embeddings)) +
                        " requires word_dim = " + std::to_string(dim));
    }
  }
}

void ExperimentConfig::write(KeyValueConfig& kv) const {
  model.write(kv);
  train.write(kv);
  model::write_pipeline(kv, pipeline, lexicons);
  kv.set("embeddings", std::string(embedding_name(embeddings)));
  kv.set("vectors_path", vectors_path);
  kv.set("min_count", std::to_string(min_count));
  kv.set("dev_fraction", format_double(dev_fraction));
}

ExperimentConfig ExperimentConfig::read(const KeyValueConfig& kv) {
  ExperimentConfig c;
  const std::string kind = kv.get_string("embeddings", "random");
  const auto parsed = parse_embedding_kind(kind);
  if (!parsed) throw ConfigError("embeddings must be glove200, word2vec300 or random, got " + kind);
  c.embeddings = *parsed;
  KeyValueConfig model_kv = kv;
  if (pretrained_dim(c.embeddings) != 0 && !kv.has("word_dim")) {
    model_kv.set("word_dim", std::to_string(pretrained_dim(c.embeddings)));
  }
  c.model = model::ModelConfig::read(model_kv);
  c.train = TrainConfig::read(kv);
  c.pipeline = model::read_pipeline(kv);
  c.lexicons = model::read_lexicon_paths(kv);
  c.vectors_path = kv.get_string("vectors_path", "");
  c.min_count = static_cast<int>(kv.get_int("min_count", c.min_count));
  c.dev_fraction = kv.get_double("dev_fraction", c.dev_fraction);
  c.validate();
  return c;
}

PreparedCorpus prepare_corpus(const datasets::Dataset& d,
                              const textproc::PipelineOptions& pipeline,
                              const textproc::Lexicons& lexicons) {
  PreparedCorpus out;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& t = d.examples[i];
    if (!t.label) throw ContractError("example " + std::to_string(i + 1) + " has no label");
    try {
      out.sentences.push_back(textproc::prepare_sentence(t.text, pipeline, lexicons));
    } catch (const DegenerateTweet&) {
      ++out.degenerate;
      continue;
    }
    out.labels.push_back(static_cast<std::size_t>(*t.label));
    out.source_index.push_back(i);
  }
  return out;
}

textproc::Lexicons load_lexicons(const model::LexiconPaths& paths) {
  return textproc::Lexicons::load(paths.emoticons, paths.negative_cues, paths.stop_words);
}

WordVectors make_word_vectors(const ExperimentConfig& config, const embeddings::Vocab& words) {
  const auto m = config.embeddings == EmbeddingKind::kRandom
                     ? embeddings::random_embeddings(words, config.model.word_dim, config.train.seed)
                     : embeddings::load_pretrained(config.vectors_path, words,
                                                   config.model.word_dim, config.train.seed);
  return {m.values, m.coverage};
}

model::Classifier make_classifier(const ExperimentConfig& config,
                                  std::span<const textproc::TokenizedSentence> vocab_corpus,
                                  const textproc::Lexicons& lexicons) {
  model::Classifier c;
  c.pipeline = config.pipeline;
  c.lexicon_paths = config.lexicons;
  c.lexicons = lexicons;
  auto vocabs = embeddings::build_vocabs(vocab_corpus, config.min_count);
  c.words = std::move(vocabs.words);
  c.chars = std::move(vocabs.chars);
  c.params = model::init_params(config.model, c.words.size(), c.chars.size(), config.train.seed);
  return c;
}

std::vector<Example> index_examples(const model::Classifier& c, const PreparedCorpus& corpus,
                                    std::span<const std::size_t> subset) {
  std::vector<Example> out;
  out.reserve(subset.size());
  for (auto i : subset) out.push_back({c.index(corpus.sentences[i]), corpus.labels[i]});
  return out;
}

std::vector<Example> index_examples(const model::Classifier& c, const PreparedCorpus& corpus) {
  std::vector<std::size_t> all(corpus.size());
  std::iota(all.begin(), all.end(), 0);
  return index_examples(c, corpus, all);
}

FitResult fit(const ExperimentConfig& config, const datasets::Dataset& train_set,
              const datasets::Dataset& dev_set, const StepObserver& observer) {
  config.validate();
  const auto lexicons = load_lexicons(config.lexicons);
  const PreparedCorpus train_corpus = prepare_corpus(train_set, config.pipeline, lexicons);
  const PreparedCorpus dev_corpus = prepare_corpus(dev_set, config.pipeline, lexicons);
  if (train_corpus.size() == 0 || dev_corpus.size() == 0) {
    throw ContractError("fit: a split has no usable examples");
  }
  std::vector<textproc::TokenizedSentence> vocab_corpus = train_corpus.sentences;
  vocab_corpus.insert(vocab_corpus.end(), dev_corpus.sentences.begin(), dev_corpus.sentences.end());

  FitResult r;
  r.classifier = make_classifier(config, vocab_corpus, lexicons);
  const WordVectors vectors = make_word_vectors(config, r.classifier.words);
  model::set_word_embeddings(r.classifier.params, vectors.values);
  r.embedding_coverage = vectors.coverage;
  r.dropped = train_corpus.degenerate + dev_corpus.degenerate;
  const auto train_examples = index_examples(r.classifier, train_corpus);
  const auto dev_examples = index_examples(r.classifier, dev_corpus);
  r.report = train(r.classifier.params, train_examples, dev_examples, config.train, observer);
  return r;
}

std::vector<std::size_t> assign_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ContractError("cross validation needs k >= 2");
  if (k > n) {
    throw ContractError("k = " + std::to_string(k) + " exceeds " + std::to_string(n) +
                        " examples");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[order[i]] = i % k;
  return fold;
}

std::string CvReport::serialize() const {
  std::string out = "fold\ttrain\tdev\ttest\tbest_epoch\taccuracy\n";
  for (const auto& f : folds) {
    out += std::to_string(f.fold + 1) + '\t' + std::to_string(f.train_size) + '\t' +
           std::to_string(f.dev_size) + '\t' + std::to_string(f.test_size) + '\t' +
           std::to_string(f.best_epoch) + '\t' + format_double(f.accuracy) + '\n';
  }
  out += "mean\t" + format_double(mean) + '\n';
  out += "stdev\t" + format_double(stdev) + '\n';
  out += "degenerate\t" + std::to_string(degenerate) + '\n';
  return out;
}

CvReport cross_validate(const datasets::Dataset& d, std::size_t k,
                        const ExperimentConfig& config) {
  config.validate();
  const auto lexicons = load_lexicons(config.lexicons);
  const PreparedCorpus corpus = prepare_corpus(d, config.pipeline, lexicons);
  const std::vector<std::size_t> fold_of = assign_folds(corpus.size(), k, config.train.seed);

  const model::Classifier base = make_classifier(config, corpus.sentences, lexicons);
  const WordVectors vectors = make_word_vectors(config, base.words);

  CvReport report;
  report.degenerate = corpus.degenerate;
  for (std::size_t f = 0; f < k; ++f) {
    std::vector<std::size_t> test, rest;
    for (std::size_t i = 0; i < corpus.size(); ++i) (fold_of[i] == f ? test : rest).push_back(i);

    Rng rng(config.train.seed + 1 + f);
    rng.shuffle(std::span<std::size_t>(rest));
    const auto dev_size = static_cast<std::size_t>(
        std::floor(config.dev_fraction * static_cast<double>(rest.size()) + 0.5));
    std::vector<std::size_t> dev(rest.begin(), rest.begin() + static_cast<long>(dev_size));
    std::vector<std::size_t> tr(rest.begin() + static_cast<long>(dev_size), rest.end());
    if (dev.empty() || tr.empty()) {
      // Too few examples to hold any out: select on the training data.
      tr = rest;
      dev = rest;
    }
    std::sort(dev.begin(), dev.end());
    std::sort(tr.begin(), tr.end());

    model::Classifier c = base;
    TrainConfig tc = config.train;
    tc.seed = config.train.seed + f;
    c.params = model::init_params(config.model, c.words.size(), c.chars.size(), tc.seed);
    model::set_word_embeddings(c.params, vectors.values);
    const auto train_examples = index_examples(c, corpus, tr);
    const auto dev_examples = index_examples(c, corpus, dev);
    const auto test_examples = index_examples(c, corpus, test);
    const TrainReport tr_report = train(c.params, train_examples, dev_examples, tc);
    const Evaluation e = evaluate(c.params, test_examples, tc.eval_threads);
    report.folds.push_back({f, tr.size(), dev.size(), test.size(), tr_report.best_epoch,
                            e.accuracy});
  }
  double sum = 0;
  for (const auto& f : report.folds) sum += f.accuracy;
  report.mean = sum / static_cast<double>(k);
  double sq = 0;
  for (const auto& f : report.folds) sq += (f.accuracy - report.mean) * (f.accuracy - report.mean);
  report.stdev = std::sqrt(sq / static_cast<double>(k - 1));
  return report;
}

}  // namespace twsent::training
