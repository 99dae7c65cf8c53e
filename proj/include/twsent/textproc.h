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

// Tweet normalization, clause-discarding semantic rules and tokenization.
//
// Pipeline order used everywhere (training, evaluation, prediction):
//   raw text -> apply_semantic_rules (optional) -> normalize_tweet -> tokenize
// The rules run on raw text because cue detection and clause boundaries rely
// on punctuation that normalization strips.

#ifndef TWSENT_TEXTPROC_H_
#define TWSENT_TEXTPROC_H_

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

namespace twsent::textproc {

inline constexpr std::string_view kUserToken = "<user>";
inline constexpr std::string_view kUrlToken = "<url>";

enum class Rule { kR11 = 0, kR12, kR13, kR14, kR15 };
inline constexpr std::size_t kNumRules = 5;

std::string_view rule_name(Rule rule);
std::optional<Rule> parse_rule(std::string_view name);

struct RawTweet {
  std::string text;
  std::optional<int> label;  // 0 = negative, 1 = positive
};

struct ProcessedTweet {
  std::string text;
  std::vector<Rule> applied_rules;
  std::vector<std::string> emoticons_kept;
};

struct Token {
  std::string text;
  std::vector<std::string> chars;  // UTF-8 code points of `text`
};

struct TokenizedSentence {
  std::vector<Token> tokens;

  std::size_t size() const { return tokens.size(); }
};

// Word lists consulted by the pipeline. The built-in set mirrors the files
// under data/; any list can be replaced from a one-entry-per-line file.
struct Lexicons {
  std::vector<std::string> emoticons;  // matched longest first
  std::unordered_set<std::string> negative_cues;
  std::unordered_set<std::string> stop_words;

  static const Lexicons& builtin();

  // Empty paths keep the built-in list.
  static Lexicons load(const std::string& emoticons_path,
                       const std::string& negative_cues_path,
                       const std::string& stop_words_path);
};

std::vector<std::string> builtin_emoticon_list();
std::vector<std::string> builtin_negative_cue_list();
std::vector<std::string> builtin_stop_word_list();

// One entry per line, surrounding whitespace trimmed, blank lines and lines
// starting with "##" skipped.
std::vector<std::string> load_word_list(const std::string& path);

// Words the stop-word filter never removes: rule cue words and "not".
bool is_protected_word(std::string_view lowercase_word);

struct NormalizeOptions {
  bool remove_stop_words = false;
};

// Throws DegenerateTweet when nothing is left.
ProcessedTweet normalize_tweet(const RawTweet& raw,
                               const Lexicons& lexicons = Lexicons::builtin(),
                               const NormalizeOptions& options = {});

struct RuleOutput {
  std::string text;
  std::vector<Rule> applied_rules;  // no duplicates, first-fired order
};

// At most five rule applications; rules are tried R11..R15 and the scan
// restarts after every application.
RuleOutput apply_semantic_rules(std::string_view text,
                                const Lexicons& lexicons = Lexicons::builtin());

// Whitespace tokenization. Throws DegenerateTweet on zero tokens.
TokenizedSentence tokenize(std::string_view text);

struct RuleStats {
  std::array<std::size_t, kNumRules> per_rule{};  // tweets where rule fired
  std::size_t total_processed = 0;                // tweets with >= 1 rule
  std::size_t total = 0;
};

RuleStats corpus_rule_stats(std::span<const RawTweet> tweets,
                            const Lexicons& lexicons = Lexicons::builtin());

// The complete text pipeline; a single code path shared by training and
// prediction.
struct PipelineOptions {
  bool apply_rules = true;
  NormalizeOptions normalize;
};

ProcessedTweet preprocess(const RawTweet& raw, const PipelineOptions& options,
                          const Lexicons& lexicons = Lexicons::builtin());

TokenizedSentence prepare_sentence(std::string_view text,
                                   const PipelineOptions& options,
                                   const Lexicons& lexicons = Lexicons::builtin());

// Splits UTF-8 into code points; a stray byte becomes its own element.
std::vector<std::string> utf8_chars(std::string_view text);

}  // namespace twsent::textproc

#endif  // TWSENT_TEXTPROC_H_
