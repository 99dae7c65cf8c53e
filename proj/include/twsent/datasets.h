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

#ifndef TWSENT_DATASETS_H_
#define TWSENT_DATASETS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "twsent/kv_config.h"
#include "twsent/textproc.h"

namespace twsent::datasets {

using textproc::RawTweet;

enum class Split { kTrain, kDev, kTest };

std::string_view split_name(Split split);

struct Dataset {
  std::string name;
  std::vector<RawTweet> examples;
  Split split = Split::kTrain;
  std::size_t num_classes = 2;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  // True when every example carries a label.
  bool labeled() const;
};

bool operator==(const Dataset& a, const Dataset& b);

// Column mapping for delimited sources. The defaults describe the canonical
// `label<TAB>text` format; `-` always marks an unlabeled row.
struct SchemaDescriptor {
  std::size_t label_col = 0;
  std::size_t text_col = 1;
  std::size_t num_columns = 2;
  char delimiter = '\t';
  bool has_header = false;
  bool quoted = false;  // "..." fields with "" escapes
  std::map<std::string, int> label_map{{"0", 0}, {"1", 1}};
  std::set<std::string> skip_labels;  // rows with these raw labels are dropped

  std::size_t num_classes() const;

  friend bool operator==(const SchemaDescriptor&, const SchemaDescriptor&) = default;

  // Keys: text_col, label_col, num_columns, delimiter (tab, comma or one
  // character), has_header, quoted, label_map (`raw:class,...`),
  // skip_labels (`raw,...`). Throws ConfigError.
  static SchemaDescriptor from_config(const KeyValueConfig& kv);
  void write(KeyValueConfig& kv) const;
  static SchemaDescriptor load(const std::string& path);
};

// Throws ParseError for a row with the wrong column count or empty text and
// LabelError for a label outside the map.
Dataset parse_tsv(std::string_view text, const std::string& source,
                  const SchemaDescriptor& schema = {});
Dataset load_tsv(const std::string& path, const SchemaDescriptor& schema = {});

// Canonical form. Throws ContractError if a text holds a tab or line break.
std::string serialize_tsv(const Dataset& d);
void save_tsv(const std::string& path, const Dataset& d);

// Seeded shuffle, then the first round-half-up(fraction * N) examples form
// the dev split. Both parts keep the input order. Throws ContractError when
// fraction is outside (0, 1) or either part would be empty.
std::pair<Dataset, Dataset> split_dev(const Dataset& d, double fraction,
                                      std::uint64_t seed);

// `n` examples drawn without replacement, in input order.
Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed);

struct CorpusStats {
  std::size_t n = 0;            // examples
  std::size_t classes = 0;      // distinct labels present
  std::size_t max_sentence = 0; // l_w, tokens
  std::size_t max_word = 0;     // l_c, characters
  std::size_t word_vocab = 0;   // |V_w| without reserved entries
  std::size_t char_vocab = 0;   // |V_c| without reserved entries
  std::size_t degenerate = 0;   // examples with nothing left after preprocessing
};

CorpusStats compute_stats(const Dataset& d, bool after_rules,
                          const textproc::Lexicons& lexicons = textproc::Lexicons::builtin(),
                          const textproc::NormalizeOptions& normalize = {});

// Tab-separated table with a header row.
std::string format_stats(const std::string& name, const CorpusStats& s);

}  // namespace twsent::datasets

#endif  // TWSENT_DATASETS_H_
