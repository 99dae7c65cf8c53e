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

#ifndef TWSENT_CLASSIFIER_H_
#define TWSENT_CLASSIFIER_H_

#include <string>
#include <string_view>
#include <vector>

#include "twsent/embeddings.h"
#include "twsent/kv_config.h"
#include "twsent/model.h"
#include "twsent/textproc.h"

namespace twsent::model {

// Word-list overrides; empty means built-in.
struct LexiconPaths {
  std::string emoticons;
  std::string negative_cues;
  std::string stop_words;

  friend bool operator==(const LexiconPaths&, const LexiconPaths&) = default;
};

void write_pipeline(KeyValueConfig& kv, const textproc::PipelineOptions& pipeline,
                    const LexiconPaths& paths);
textproc::PipelineOptions read_pipeline(const KeyValueConfig& kv);
LexiconPaths read_lexicon_paths(const KeyValueConfig& kv);

// Everything needed to go from raw text to class probabilities.
struct Classifier {
  textproc::PipelineOptions pipeline;
  LexiconPaths lexicon_paths;
  textproc::Lexicons lexicons = textproc::Lexicons::builtin();
  embeddings::Vocab words;
  embeddings::Vocab chars;
  ModelParams params;

  embeddings::IndexedSentence index(const textproc::TokenizedSentence& s) const;
  // Throws DegenerateTweet when nothing survives preprocessing.
  embeddings::IndexedSentence prepare(std::string_view raw) const;
  std::vector<double> predict_text(std::string_view raw) const;

  KeyValueConfig config() const;
};

// Binary layout, integers little-endian:
//   "TWNT1\n"
//   u64 length + `key = value` config text
//   u64 length + word vocabulary, u64 length + character vocabulary
//   u32 tensor count, then per tensor:
//     u32 name length + name, u32 rank, u64 dims..., f64 values...
void save_checkpoint(const std::string& path, const Classifier& classifier);

// Throws FormatError on a damaged file and ShapeError when a stored tensor
// does not fit the stored config.
Classifier load_checkpoint(const std::string& path);

}  // namespace twsent::model

#endif  // TWSENT_CLASSIFIER_H_
