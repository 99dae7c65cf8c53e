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

#include "twsent/textproc.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>

#include "twsent/errors.h"
#include "twsent/kv_config.h"

namespace twsent::textproc {

namespace detail {
extern const std::string_view kEmoticonData;
extern const std::string_view kNegativeCueData;
extern const std::string_view kStopWordData;
}  // namespace detail

namespace {

constexpr std::array<std::string_view, kNumRules> kRuleNames = {
    "R11", "R12", "R13", "R14", "R15"};

constexpr std::array<std::string_view, 6> kProtectedWords = {
    "but", "despite", "unless", "while", "however", "not"};

std::vector<std::string> parse_word_list(std::string_view text) {
  std::vector<std::string> out;
  for (const auto& raw : split(text, '\n')) {
    const auto line = trim(raw);
    if (line.empty() || line.substr(0, 2) == "##") continue;
    out.emplace_back(line);
  }
  return out;
}

void sort_longest_first(std::vector<std::string>& emoticons) {
  std::stable_sort(emoticons.begin(), emoticons.end(),
                   [](const std::string& a, const std::string& b) {
                     return a.size() > b.size();
                   });
}

std::unordered_set<std::string> to_set(const std::vector<std::string>& words) {
  std::unordered_set<std::string> out;
  for (const auto& w : words) {
    std::string lower = w;
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    out.insert(std::move(lower));
  }
  return out;
}

std::unordered_set<std::string> stop_set(const std::vector<std::string>& words) {
  auto out = to_set(words);
  for (auto w : kProtectedWords) out.erase(std::string(w));
  return out;
}

bool is_ascii_alnum(unsigned char c) { return std::isalnum(c) != 0; }

// Bytes that can be part of a word for cue matching and normalization.
bool is_word_byte(unsigned char c) {
  return is_ascii_alnum(c) || c == '\'' || c >= 0x80;
}

bool is_space(unsigned char c) { return std::isspace(c) != 0; }

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::size_t utf8_length(unsigned char lead) {
  if (lead < 0x80) return 1;
  if ((lead >> 5) == 0x6) return 2;
  if ((lead >> 4) == 0xE) return 3;
  if ((lead >> 3) == 0x1E) return 4;
  return 1;
}

// ---------------------------------------------------------------------------
// Normalization helpers

std::string collapse_repeats(std::string_view text) {
  const auto chars = utf8_chars(text);
  std::string out;
  out.reserve(text.size());
  std::size_t run = 0;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    run = (i > 0 && chars[i] == chars[i - 1]) ? run + 1 : 1;
    if (run <= 2) out += chars[i];
  }
  return out;
}

// Longest emoticon starting at `pos`, or 0. An emoticon whose first (last)
// character is alphanumeric must not touch an alphanumeric on that side.
std::size_t match_emoticon(std::string_view text, std::size_t pos,
                           const std::vector<std::string>& emoticons) {
  for (const auto& e : emoticons) {
    if (text.compare(pos, e.size(), e) != 0) continue;
    const auto first = static_cast<unsigned char>(e.front());
    const auto last = static_cast<unsigned char>(e.back());
    if (is_ascii_alnum(first) && pos > 0 &&
        is_ascii_alnum(static_cast<unsigned char>(text[pos - 1]))) {
      continue;
    }
    const std::size_t end = pos + e.size();
    if (is_ascii_alnum(last) && end < text.size() &&
        is_ascii_alnum(static_cast<unsigned char>(text[end]))) {
      continue;
    }
    return e.size();
  }
  return 0;
}

std::size_t match_sentinel(std::string_view text, std::size_t pos) {
  for (auto s : {kUserToken, kUrlToken}) {
    if (text.compare(pos, s.size(), s) == 0) return s.size();
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Semantic-rule helpers

struct Span {
  std::size_t begin;
  std::size_t end;
};

std::vector<Span> find_cue(std::string_view text, std::string_view cue) {
  std::vector<Span> out;
  const std::string lower = ascii_lower(text);
  std::size_t pos = 0;
  while ((pos = lower.find(cue, pos)) != std::string::npos) {
    const std::size_t end = pos + cue.size();
    const bool left_ok =
        pos == 0 || !is_word_byte(static_cast<unsigned char>(lower[pos - 1]));
    const bool right_ok = end == lower.size() ||
                          !is_word_byte(static_cast<unsigned char>(lower[end]));
    if (left_ok && right_ok) out.push_back({pos, end});
    pos = end;
  }
  return out;
}

// Delimiters dropped where a kept clause begins.
std::string_view trim_clause_start(std::string_view s) {
  while (!s.empty()) {
    const char c = s.front();
    if (is_space(static_cast<unsigned char>(c)) || c == ',' || c == '.' ||
        c == '!' || c == '?') {
      s.remove_prefix(1);
    } else {
      break;
    }
  }
  return trim(s);
}

// Delimiters dropped where a kept clause ends. A dash or semicolon counts only
// when it stands alone, so emoticons such as "-_-" survive.
std::string_view trim_clause_end(std::string_view s) {
  while (!s.empty()) {
    const char c = s.back();
    if (is_space(static_cast<unsigned char>(c)) || c == ',') {
      s.remove_suffix(1);
      continue;
    }
    if ((c == '-' || c == ';') &&
        (s.size() == 1 || is_space(static_cast<unsigned char>(s[s.size() - 2])))) {
      s.remove_suffix(1);
      continue;
    }
    break;
  }
  return trim(s);
}

bool is_negative_word(const std::string& word, const Lexicons& lexicons) {
  if (lexicons.negative_cues.count(word)) return true;
  for (const auto& cue : lexicons.negative_cues) {
    if (cue.size() >= 3 && cue.compare(0, 3, "n't") == 0 &&
        word.size() >= cue.size() &&
        word.compare(word.size() - cue.size(), cue.size(), cue) == 0) {
      return true;
    }
  }
  return false;
}

bool has_negative_cue(std::string_view text, const Lexicons& lexicons) {
  const std::string lower = ascii_lower(text);
  std::size_t i = 0;
  while (i < lower.size()) {
    if (!is_word_byte(static_cast<unsigned char>(lower[i]))) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < lower.size() && is_word_byte(static_cast<unsigned char>(lower[j]))) ++j;
    if (is_negative_word(lower.substr(i, j - i), lexicons)) return true;
    i = j;
  }
  return false;
}

// Each rule returns the kept clause, or nullopt when it does not fire.
using RuleFn = std::optional<std::string> (*)(std::string_view, const Lexicons&);

std::optional<std::string> keep_nonempty(std::string_view s) {
  if (s.empty()) return std::nullopt;
  return std::string(s);
}

// R11: only the part after the last "but".
std::optional<std::string> rule_but(std::string_view text, const Lexicons&) {
  const auto cues = find_cue(text, "but");
  if (cues.empty()) return std::nullopt;
  return keep_nonempty(trim_clause_start(text.substr(cues.back().end)));
}

// R12: only the part before "despite".
std::optional<std::string> rule_despite(std::string_view text, const Lexicons&) {
  const auto cues = find_cue(text, "despite");
  if (cues.empty()) return std::nullopt;
  return keep_nonempty(trim_clause_end(text.substr(0, cues.front().begin)));
}

// R13: drop an "unless" clause that is followed by negative content.
std::optional<std::string> rule_unless(std::string_view text,
                                       const Lexicons& lexicons) {
  for (const auto& cue : find_cue(text, "unless")) {
    if (!has_negative_cue(text.substr(cue.end), lexicons)) continue;
    if (auto kept = keep_nonempty(trim_clause_end(text.substr(0, cue.begin)))) {
      return kept;
    }
  }
  return std::nullopt;
}

// R14: drop the clause governed by "while" and keep the main clause that
// follows it, up to the end of that sentence.
std::optional<std::string> rule_while(std::string_view text, const Lexicons&) {
  for (const auto& cue : find_cue(text, "while")) {
    const auto rest = text.substr(cue.end);
    const auto boundary = rest.find_first_of(",.!?;");
    if (boundary == std::string_view::npos) continue;
    auto main = trim_clause_start(rest.substr(boundary + 1));
    main = main.substr(0, main.find_first_of(".!?"));
    if (auto kept = keep_nonempty(trim_clause_end(main))) return kept;
  }
  return std::nullopt;
}

// R15: only the part after the last "however".
std::optional<std::string> rule_however(std::string_view text, const Lexicons&) {
  const auto cues = find_cue(text, "however");
  if (cues.empty()) return std::nullopt;
  return keep_nonempty(trim_clause_start(text.substr(cues.back().end)));
}

constexpr std::array<RuleFn, kNumRules> kRules = {
    rule_but, rule_despite, rule_unless, rule_while, rule_however};

constexpr int kMaxRuleApplications = 5;

}  // namespace

std::string_view rule_name(Rule rule) {
  return kRuleNames[static_cast<std::size_t>(rule)];
}

std::optional<Rule> parse_rule(std::string_view name) {
  for (std::size_t i = 0; i < kNumRules; ++i) {
    if (kRuleNames[i] == name) return static_cast<Rule>(i);
  }
  return std::nullopt;
}

std::vector<std::string> builtin_emoticon_list() {
  return parse_word_list(detail::kEmoticonData);
}

std::vector<std::string> builtin_negative_cue_list() {
  return parse_word_list(detail::kNegativeCueData);
}

std::vector<std::string> builtin_stop_word_list() {
  return parse_word_list(detail::kStopWordData);
}

std::vector<std::string> load_word_list(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open word list " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return parse_word_list(text);
}

bool is_protected_word(std::string_view lowercase_word) {
  return std::find(kProtectedWords.begin(), kProtectedWords.end(),
                   lowercase_word) != kProtectedWords.end();
}

const Lexicons& Lexicons::builtin() {
  static const Lexicons lexicons = [] {
    Lexicons l;
    l.emoticons = builtin_emoticon_list();
    sort_longest_first(l.emoticons);
    l.negative_cues = to_set(builtin_negative_cue_list());
    l.stop_words = stop_set(builtin_stop_word_list());
    return l;
  }();
  return lexicons;
}

Lexicons Lexicons::load(const std::string& emoticons_path,
                        const std::string& negative_cues_path,
                        const std::string& stop_words_path) {
  Lexicons l = builtin();
  if (!emoticons_path.empty()) {
    l.emoticons = load_word_list(emoticons_path);
    sort_longest_first(l.emoticons);
  }
  if (!negative_cues_path.empty()) {
    l.negative_cues = to_set(load_word_list(negative_cues_path));
  }
  if (!stop_words_path.empty()) {
    l.stop_words = stop_set(load_word_list(stop_words_path));
  }
  return l;
}

std::vector<std::string> utf8_chars(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    std::size_t len = utf8_length(static_cast<unsigned char>(text[i]));
    if (i + len > text.size()) len = 1;
    for (std::size_t k = 1; k < len; ++k) {
      if ((static_cast<unsigned char>(text[i + k]) & 0xC0) != 0x80) {
        len = 1;
        break;
      }
    }
    out.emplace_back(text.substr(i, len));
    i += len;
  }
  return out;
}

ProcessedTweet normalize_tweet(const RawTweet& raw, const Lexicons& lexicons,
                               const NormalizeOptions& options) {
  if (trim(raw.text).empty()) throw DegenerateTweet("empty tweet");

  static const std::regex url_re(R"((?:(?:https?|ftp)://|www\.)\S+)",
                                 std::regex::ECMAScript | std::regex::icase);
  static const std::regex user_re(R"(@\w+)");
  static const std::regex retweet_re(R"(\bRT\b)");

  std::string s = std::regex_replace(raw.text, url_re, " <url> ");
  s = std::regex_replace(s, user_re, " <user> ");
  s = std::regex_replace(s, retweet_re, " ");
  s = collapse_repeats(s);

  ProcessedTweet out;
  std::string text;
  text.reserve(s.size() + 8);
  auto pad = [&text] {
    if (!text.empty() && text.back() != ' ') text += ' ';
  };

  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    if (const auto n = match_sentinel(s, i)) {
      pad();
      text.append(s, i, n);
      text += ' ';
      i += n;
    } else if (const auto n = match_emoticon(s, i, lexicons.emoticons)) {
      pad();
      std::string emoticon = s.substr(i, n);
      text += emoticon;
      text += ' ';
      if (std::find(out.emoticons_kept.begin(), out.emoticons_kept.end(),
                    emoticon) == out.emoticons_kept.end()) {
        out.emoticons_kept.push_back(std::move(emoticon));
      }
      i += n;
    } else if (is_ascii_alnum(c) || c >= 0x80) {
      text += static_cast<char>(std::tolower(c));
      ++i;
    } else if (c == '\'' && !text.empty() &&
               is_word_byte(static_cast<unsigned char>(text.back())) &&
               text.back() != '\'' && i + 1 < s.size() &&
               is_ascii_alnum(static_cast<unsigned char>(s[i + 1]))) {
      // Intra-word apostrophe, as in "she's".
      text += '\'';
      ++i;
    } else {
      pad();
      ++i;
    }
  }

  std::string joined;
  for (const auto& token : split(text, ' ')) {
    if (token.empty()) continue;
    if (options.remove_stop_words && lexicons.stop_words.count(token)) continue;
    if (!joined.empty()) joined += ' ';
    joined += token;
  }
  if (joined.empty()) throw DegenerateTweet("nothing left after normalization");

  // Stop-word removal can drop a token that happened to be an emoticon.
  std::erase_if(out.emoticons_kept, [&joined](const std::string& e) {
    return joined.find(e) == std::string::npos;
  });
  out.text = std::move(joined);
  return out;
}

RuleOutput apply_semantic_rules(std::string_view text, const Lexicons& lexicons) {
  RuleOutput out;
  out.text = std::string(text);
  for (int applications = 0; applications < kMaxRuleApplications; ++applications) {
    bool fired = false;
    for (std::size_t r = 0; r < kNumRules; ++r) {
      auto kept = kRules[r](out.text, lexicons);
      if (!kept) continue;
      out.text = std::move(*kept);
      const auto rule = static_cast<Rule>(r);
      if (std::find(out.applied_rules.begin(), out.applied_rules.end(), rule) ==
          out.applied_rules.end()) {
        out.applied_rules.push_back(rule);
      }
      fired = true;
      break;
    }
    if (!fired) break;
  }
  return out;
}

TokenizedSentence tokenize(std::string_view text) {
  TokenizedSentence out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !is_space(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) {
      Token token;
      token.text = std::string(text.substr(i, j - i));
      token.chars = utf8_chars(token.text);
      out.tokens.push_back(std::move(token));
    }
    i = j;
  }
  if (out.tokens.empty()) throw DegenerateTweet("no tokens");
  return out;
}

RuleStats corpus_rule_stats(std::span<const RawTweet> tweets,
                            const Lexicons& lexicons) {
  RuleStats stats;
  for (const auto& tweet : tweets) {
    ++stats.total;
    const auto result = apply_semantic_rules(tweet.text, lexicons);
    for (const auto rule : result.applied_rules) {
      ++stats.per_rule[static_cast<std::size_t>(rule)];
    }
    if (!result.applied_rules.empty()) ++stats.total_processed;
  }
  return stats;
}

ProcessedTweet preprocess(const RawTweet& raw, const PipelineOptions& options,
                          const Lexicons& lexicons) {
  if (!options.apply_rules) return normalize_tweet(raw, lexicons, options.normalize);
  auto ruled = apply_semantic_rules(raw.text, lexicons);
  ProcessedTweet out =
      normalize_tweet({ruled.text, raw.label}, lexicons, options.normalize);
  out.applied_rules = std::move(ruled.applied_rules);
  return out;
}

TokenizedSentence prepare_sentence(std::string_view text,
                                   const PipelineOptions& options,
                                   const Lexicons& lexicons) {
  return tokenize(preprocess({std::string(text), std::nullopt}, options, lexicons).text);
}

}  // namespace twsent::textproc
