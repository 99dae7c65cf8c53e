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

#include "twsent/datasets.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "twsent/errors.h"
#include "twsent/rng.h"

namespace twsent::datasets {

namespace {

constexpr std::string_view kUnlabeled = "-";

std::vector<std::string> split_plain(std::string_view line, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(line.substr(start));
      return out;
    }
    out.emplace_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

std::vector<std::string> split_quoted(std::string_view line, char delim,
                                      const std::string& source, std::size_t line_no) {
  std::vector<std::string> out;
  std::string field;
  std::size_t i = 0;
  while (true) {
    field.clear();
    if (i < line.size() && line[i] == '"') {
      ++i;
      while (true) {
        if (i >= line.size()) throw ParseError(source, line_no, "unterminated quote");
        if (line[i] == '"') {
          if (i + 1 < line.size() && line[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          break;
        }
        field += line[i++];
      }
      if (i < line.size() && line[i] != delim) {
        throw ParseError(source, line_no, "text after closing quote");
      }
    } else {
      while (i < line.size() && line[i] != delim) field += line[i++];
    }
    out.push_back(field);
    if (i >= line.size()) return out;
    ++i;  // delimiter
  }
}

std::string flatten_whitespace(std::string s) {
  for (auto& c : s) {
    if (c == '\t' || c == '\n' || c == '\r') c = ' ';
  }
  return s;
}

char parse_delimiter(const std::string& v) {
  if (v == "tab" || v == "\\t") return '\t';
  if (v == "comma") return ',';
  if (v == "semicolon") return ';';
  if (v.size() == 1) return v[0];
  throw ConfigError("delimiter must be tab, comma, semicolon or a single character");
}

std::string delimiter_name(char c) {
  switch (c) {
    case '\t': return "tab";
    case ',': return "comma";
    case ';': return "semicolon";
    default: return std::string(1, c);
  }
}

std::size_t parse_index(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  const long v = kv.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(key + " must not be negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string_view split_name(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kDev: return "dev";
    case Split::kTest: return "test";
  }
  return "?";
}

bool Dataset::labeled() const {
  return std::all_of(examples.begin(), examples.end(),
                     [](const RawTweet& t) { return t.label.has_value(); });
}

bool operator==(const Dataset& a, const Dataset& b) {
  if (a.num_classes != b.num_classes || a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.examples[i].text != b.examples[i].text ||
        a.examples[i].label != b.examples[i].label) {
      return false;
    }
  }
  return true;
}

std::size_t SchemaDescriptor::num_classes() const {
  int top = -1;
  for (const auto& [raw, cls] : label_map) top = std::max(top, cls);
  return static_cast<std::size_t>(top + 1);
}

SchemaDescriptor SchemaDescriptor::from_config(const KeyValueConfig& kv) {
  SchemaDescriptor s;
  s.label_col = parse_index(kv, "label_col", s.label_col);
  s.text_col = parse_index(kv, "text_col", s.text_col);
  s.num_columns = parse_index(kv, "num_columns", s.num_columns);
  if (const auto d = kv.get("delimiter")) s.delimiter = parse_delimiter(*d);
  s.has_header = kv.get_bool("has_header", s.has_header);
  s.quoted = kv.get_bool("quoted", s.quoted);
  if (const auto m = kv.get("label_map")) {
    s.label_map.clear();
    for (const auto& entry : split(*m, ',')) {
      const auto colon = entry.rfind(':');
      if (colon == std::string::npos) throw ConfigError("label_map entry '" + entry + "' lacks ':'");
      const std::string raw(trim(std::string_view(entry).substr(0, colon)));
      const long cls = parse_long(trim(std::string_view(entry).substr(colon + 1)), "label_map class");
      if (cls < 0) throw ConfigError("label_map classes must not be negative");
      s.label_map[raw] = static_cast<int>(cls);
    }
    if (s.label_map.empty()) throw ConfigError("label_map is empty");
  }
  if (const auto skip = kv.get("skip_labels")) {
    for (const auto& entry : split(*skip, ',')) {
      const auto t = trim(entry);
      if (!t.empty()) s.skip_labels.emplace(t);
    }
  }
  if (s.label_col == s.text_col) throw ConfigError("label_col and text_col coincide");
  if (s.label_col >= s.num_columns || s.text_col >= s.num_columns) {
    throw ConfigError("column index beyond num_columns");
  }
  return s;
}

void SchemaDescriptor::write(KeyValueConfig& kv) const {
  kv.set("label_col", std::to_string(label_col));
  kv.set("text_col", std::to_string(text_col));
  kv.set("num_columns", std::to_string(num_columns));
  kv.set("delimiter", delimiter_name(delimiter));
  kv.set("has_header", has_header ? "on" : "off");
  kv.set("quoted", quoted ? "on" : "off");
  std::string map;
  for (const auto& [raw, cls] : label_map) {
    if (!map.empty()) map += ',';
    map += raw + ':' + std::to_string(cls);
  }
  kv.set("label_map", map);
  std::string skip;
  for (const auto& raw : skip_labels) {
    if (!skip.empty()) skip += ',';
    skip += raw;
  }
  kv.set("skip_labels", skip);
}

SchemaDescriptor SchemaDescriptor::load(const std::string& path) {
  return from_config(KeyValueConfig::load(path));
}

Dataset parse_tsv(std::string_view text, const std::string& source,
                  const SchemaDescriptor& schema) {
  Dataset d;
  d.name = source;
  d.num_classes = schema.num_classes();
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && schema.has_header) continue;
    if (line.empty()) continue;

    const auto fields = schema.quoted ? split_quoted(line, schema.delimiter, source, line_no)
                                      : split_plain(line, schema.delimiter);
    if (fields.size() != schema.num_columns) {
      throw ParseError(source, line_no,
                       "expected " + std::to_string(schema.num_columns) + " columns, found " +
                           std::to_string(fields.size()));
    }
    const std::string raw_label(trim(fields[schema.label_col]));
    if (schema.skip_labels.count(raw_label)) continue;
    RawTweet tweet;
    tweet.text = flatten_whitespace(fields[schema.text_col]);
    if (trim(tweet.text).empty()) throw ParseError(source, line_no, "empty text");
    if (raw_label != kUnlabeled) {
      const auto it = schema.label_map.find(raw_label);
      if (it == schema.label_map.end()) {
        throw LabelError(source, line_no, "unknown label '" + raw_label + "'");
      }
      tweet.label = it->second;
    }
    d.examples.push_back(std::move(tweet));
  }
  return d;
}

Dataset load_tsv(const std::string& path, const SchemaDescriptor& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open corpus " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_tsv(ss.str(), path, schema);
}

std::string serialize_tsv(const Dataset& d) {
  std::string out;
  for (const auto& t : d.examples) {
    if (t.text.find_first_of("\t\r\n") != std::string::npos) {
      throw ContractError("text contains a tab or line break");
    }
    out += t.label ? std::to_string(*t.label) : std::string(kUnlabeled);
    out += '\t';
    out += t.text;
    out += '\n';
  }
  return out;
}

void save_tsv(const std::string& path, const Dataset& d) {
  const std::string data = serialize_tsv(d);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write corpus " + path);
  out << data;
}

std::pair<Dataset, Dataset> split_dev(const Dataset& d, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw ContractError("dev fraction must be in (0, 1)");
  const std::size_t n = d.size();
  const auto dev_size =
      static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 0.5));
  if (dev_size == 0 || dev_size >= n) {
    throw ContractError("split_dev: " + std::to_string(n) + " examples at fraction " +
                        format_double(fraction) + " leave an empty split");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<bool> in_dev(n, false);
  for (std::size_t i = 0; i < dev_size; ++i) in_dev[order[i]] = true;

  Dataset train{d.name, {}, Split::kTrain, d.num_classes};
  Dataset dev{d.name, {}, Split::kDev, d.num_classes};
  for (std::size_t i = 0; i < n; ++i) {
    (in_dev[i] ? dev : train).examples.push_back(d.examples[i]);
  }
  return {std::move(train), std::move(dev)};
}

Dataset subsample(const Dataset& d, std::size_t n, std::uint64_t seed) {
  if (n > d.size()) {
    throw ContractError("subsample of " + std::to_string(n) + " from " +
                        std::to_string(d.size()) + " examples");
  }
  std::vector<std::size_t> order(d.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(n);
  std::sort(order.begin(), order.end());
  Dataset out{d.name, {}, d.split, d.num_classes};
  for (auto i : order) out.examples.push_back(d.examples[i]);
  return out;
}

CorpusStats compute_stats(const Dataset& d, bool after_rules,
                          const textproc::Lexicons& lexicons,
                          const textproc::NormalizeOptions& normalize) {
  CorpusStats s;
  s.n = d.size();
  textproc::PipelineOptions options;
  options.apply_rules = after_rules;
  options.normalize = normalize;
  std::unordered_set<int> labels;
  std::unordered_set<std::string> words;
  std::unordered_set<std::string> chars;
  for (const auto& t : d.examples) {
    if (t.label) labels.insert(*t.label);
    textproc::TokenizedSentence sentence;
    try {
      sentence = textproc::prepare_sentence(t.text, options, lexicons);
    } catch (const DegenerateTweet&) {
      ++s.degenerate;
      continue;
    }
    s.max_sentence = std::max(s.max_sentence, sentence.size());
    for (const auto& token : sentence.tokens) {
      words.insert(token.text);
      s.max_word = std::max(s.max_word, token.chars.size());
      chars.insert(token.chars.begin(), token.chars.end());
    }
  }
  s.classes = labels.size();
  s.word_vocab = words.size();
  s.char_vocab = chars.size();
  return s;
}

std::string format_stats(const std::string& name, const CorpusStats& s) {
  std::ostringstream out;
  out << "data\tN\tc\tl_w\tl_c\t|V_w|\t|V_c|\tdegenerate\n"
      << name << '\t' << s.n << '\t' << s.classes << '\t' << s.max_sentence << '\t'
      << s.max_word << '\t' << s.word_vocab << '\t' << s.char_vocab << '\t' << s.degenerate
      << '\n';
  return out.str();
}

}  // namespace twsent::datasets
