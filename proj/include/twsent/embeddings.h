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

#ifndef TWSENT_EMBEDDINGS_H_
#define TWSENT_EMBEDDINGS_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "twsent/autodiff.h"
#include "twsent/textproc.h"

namespace twsent::embeddings {

inline constexpr int kPadIndex = 0;
inline constexpr int kUnknownIndex = 1;
inline constexpr std::string_view kPadSymbol = "<pad>";
inline constexpr std::string_view kUnknownSymbol = "<unk>";

// Symbol <-> index map in insertion order. Indices 0 and 1 are reserved for
// padding and unknown symbols.
class Vocab {
 public:
  Vocab();

  // Index of `symbol`, inserting it if new.
  int add(std::string_view symbol);
  // Index of `symbol`, or kUnknownIndex.
  int index(std::string_view symbol) const;
  bool contains(std::string_view symbol) const;
  const std::string& symbol(int index) const;

  // Including the two reserved entries.
  std::size_t size() const { return symbols_.size(); }
  const std::vector<std::string>& symbols() const { return symbols_; }

  // `index<TAB>symbol` per line, reserved entries included.
  std::string serialize() const;
  static Vocab parse(std::string_view text, const std::string& source = "<vocab>");
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  friend bool operator==(const Vocab& a, const Vocab& b) {
    return a.symbols_ == b.symbols_;
  }

 private:
  std::vector<std::string> symbols_;
  std::unordered_map<std::string, int> index_;
};

struct Vocabs {
  Vocab words;
  Vocab chars;
};

// Words seen at least `min_count` times, in first-seen order; every
// character of every token. Throws ContractError on an empty corpus.
Vocabs build_vocabs(std::span<const textproc::TokenizedSentence> corpus,
                    int min_count = 1);

enum class ColumnOrigin : std::uint8_t { kReserved, kPretrained, kRandom };

// {dim, |V|}, one column per vocabulary entry.
struct WordEmbeddingMatrix {
  ad::Tensor values;
  std::vector<ColumnOrigin> origin;
  double coverage = 0;  // pretrained share of non-reserved columns
};

inline constexpr double kRandomInitRange = 0.25;

// Reads `token v1 ... v_dim` lines (plain or gzip). A leading
// `count dim` header line is skipped. Tokens match vocabulary words after
// ASCII lowercasing; the first match wins. Columns without a match are
// uniform in [-0.25, 0.25], drawn from `seed`; the padding column is zero.
// Throws ParseError on a malformed line and ShapeError on a line whose
// vector length differs from `dim`.
WordEmbeddingMatrix load_pretrained(const std::string& path, const Vocab& words,
                                    std::size_t dim, std::uint64_t seed);

// Same initialization with no vector file.
WordEmbeddingMatrix random_embeddings(const Vocab& words, std::size_t dim,
                                      std::uint64_t seed);

struct IndexedSentence {
  std::vector<int> words;               // N
  std::vector<std::vector<int>> chars;  // N rows of M_max, padded with 0
  std::vector<std::size_t> word_lengths;  // true (truncated) lengths

  std::size_t length() const { return words.size(); }
};

// Unknown symbols map to kUnknownIndex. The sentence is cut to
// max_sent_len tokens and each word to max_word_len characters.
IndexedSentence index_sentence(const textproc::TokenizedSentence& sentence,
                               const Vocab& words, const Vocab& chars,
                               std::size_t max_word_len, std::size_t max_sent_len);

}  // namespace twsent::embeddings

#endif  // TWSENT_EMBEDDINGS_H_
