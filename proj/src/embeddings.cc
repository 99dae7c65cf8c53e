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

#include "twsent/embeddings.h"

#include <zlib.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <memory>
#include <sstream>

#include "twsent/errors.h"
#include "twsent/kv_config.h"
#include "twsent/rng.h"

namespace twsent::embeddings {

namespace {

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool is_integer(std::string_view s) {
  long v;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Line reader over gzip or plain files.
class LineReader {
 public:
  explicit LineReader(const std::string& path)
      : file_(gzopen(path.c_str(), "rb"), &gzclose) {
    if (!file_) throw ConfigError("cannot open vector file " + path);
  }

  bool next(std::string& line) {
    line.clear();
    char buf[8192];
    while (gzgets(file_.get(), buf, sizeof(buf)) != nullptr) {
      line += buf;
      if (!line.empty() && line.back() == '\n') {
        line.pop_back();
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return true;
      }
    }
    return !line.empty();
  }

 private:
  std::unique_ptr<gzFile_s, decltype(&gzclose)> file_;
};

}  // namespace

Vocab::Vocab() {
  add(kPadSymbol);
  add(kUnknownSymbol);
}

int Vocab::add(std::string_view symbol) {
  const auto it = index_.find(std::string(symbol));
  if (it != index_.end()) return it->second;
  const int idx = static_cast<int>(symbols_.size());
  symbols_.emplace_back(symbol);
  index_.emplace(symbols_.back(), idx);
  return idx;
}

int Vocab::index(std::string_view symbol) const {
  const auto it = index_.find(std::string(symbol));
  return it == index_.end() ? kUnknownIndex : it->second;
}

bool Vocab::contains(std::string_view symbol) const {
  return index_.count(std::string(symbol)) > 0;
}

const std::string& Vocab::symbol(int index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= symbols_.size()) {
    throw ContractError("vocabulary index " + std::to_string(index) + " out of range");
  }
  return symbols_[static_cast<std::size_t>(index)];
}

std::string Vocab::serialize() const {
  std::string out;
  for (std::size_t i = 0; i < symbols_.size(); ++i) {
    out += std::to_string(i);
    out += '\t';
    out += symbols_[i];
    out += '\n';
  }
  return out;
}

Vocab Vocab::parse(std::string_view text, const std::string& source) {
  Vocab vocab;
  std::size_t line_no = 0;
  for (const auto& line : split(text, '\n')) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw ParseError(source, line_no, "expected index<TAB>symbol");
    long idx;
    const auto [ptr, ec] = std::from_chars(line.data(), line.data() + tab, idx);
    if (ec != std::errc() || ptr != line.data() + tab) {
      throw ParseError(source, line_no, "bad index");
    }
    const std::string_view symbol = std::string_view(line).substr(tab + 1);
    if (idx < 2) {
      if (symbol != vocab.symbol(static_cast<int>(idx))) {
        throw ParseError(source, line_no, "reserved entry mismatch");
      }
      continue;
    }
    if (static_cast<std::size_t>(idx) != vocab.size() || vocab.contains(symbol)) {
      throw ParseError(source, line_no, "indices must be dense and symbols unique");
    }
    vocab.add(symbol);
  }
  return vocab;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write vocabulary " + path);
  out << serialize();
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open vocabulary " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

Vocabs build_vocabs(std::span<const textproc::TokenizedSentence> corpus,
                    int min_count) {
  if (corpus.empty()) throw ContractError("build_vocabs: empty corpus");
  std::unordered_map<std::string, int> counts;
  std::vector<std::string> order;
  Vocabs out;
  for (const auto& sentence : corpus) {
    for (const auto& token : sentence.tokens) {
      if (counts[token.text]++ == 0) order.push_back(token.text);
      for (const auto& c : token.chars) out.chars.add(c);
    }
  }
  for (const auto& word : order) {
    if (counts[word] >= min_count) out.words.add(word);
  }
  return out;
}

WordEmbeddingMatrix random_embeddings(const Vocab& words, std::size_t dim,
                                      std::uint64_t seed) {
  if (dim == 0) throw ShapeError("embedding dimension must be positive");
  const std::size_t n = words.size();
  WordEmbeddingMatrix m;
  m.values = ad::Tensor({dim, n});
  m.origin.assign(n, ColumnOrigin::kRandom);
  m.origin[kPadIndex] = ColumnOrigin::kReserved;
  m.origin[kUnknownIndex] = ColumnOrigin::kReserved;
  Rng rng(seed);
  // Column-major draw order so a column's values do not depend on |V|.
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < dim; ++r) {
      const double v = rng.uniform(-kRandomInitRange, kRandomInitRange);
      m.values.at(r, c) = c == kPadIndex ? 0.0 : v;
    }
  }
  return m;
}

WordEmbeddingMatrix load_pretrained(const std::string& path, const Vocab& words,
                                    std::size_t dim, std::uint64_t seed) {
  WordEmbeddingMatrix m = random_embeddings(words, dim, seed);
  LineReader reader(path);
  std::string line;
  std::size_t line_no = 0;
  std::size_t matched = 0;
  while (reader.next(line)) {
    ++line_no;
    const auto fields = split_ws(line);
    if (fields.empty()) continue;
    if (line_no == 1 && fields.size() == 2 && is_integer(fields[0]) &&
        is_integer(fields[1])) {
      continue;  // word2vec-style header
    }
    if (fields.size() - 1 != dim) {
      throw ShapeError(path + ":" + std::to_string(line_no) + ": vector has " +
                       std::to_string(fields.size() - 1) + " values, expected " +
                       std::to_string(dim));
    }
    std::vector<double> vec(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      const auto f = fields[k + 1];
      const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), vec[k]);
      if (ec != std::errc() || ptr != f.data() + f.size()) {
        throw ParseError(path, line_no, "bad number '" + std::string(f) + "'");
      }
    }
    const std::string key = ascii_lower(fields[0]);
    if (!words.contains(key)) continue;
    const int col = words.index(key);
    if (col <= kUnknownIndex) continue;
    auto& origin = m.origin[static_cast<std::size_t>(col)];
    if (origin == ColumnOrigin::kPretrained) continue;
    origin = ColumnOrigin::kPretrained;
    ++matched;
    for (std::size_t r = 0; r < dim; ++r) m.values.at(r, static_cast<std::size_t>(col)) = vec[r];
  }
  const std::size_t regular = words.size() - 2;
  m.coverage = regular == 0 ? 0.0 : static_cast<double>(matched) / regular;
  return m;
}

IndexedSentence index_sentence(const textproc::TokenizedSentence& sentence,
                               const Vocab& words, const Vocab& chars,
                               std::size_t max_word_len, std::size_t max_sent_len) {
  if (max_word_len < 1 || max_sent_len < 1) {
    throw ContractError("index_sentence: limits must be at least 1");
  }
  IndexedSentence out;
  const std::size_t n = std::min(sentence.size(), max_sent_len);
  std::size_t widest = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& token = sentence.tokens[i];
    out.words.push_back(words.index(token.text));
    const std::size_t len = std::min(token.chars.size(), max_word_len);
    out.word_lengths.push_back(len);
    widest = std::max(widest, len);
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<int> row(widest, kPadIndex);
    for (std::size_t k = 0; k < out.word_lengths[i]; ++k) {
      row[k] = chars.index(sentence.tokens[i].chars[k]);
    }
    out.chars.push_back(std::move(row));
  }
  return out;
}

}  // namespace twsent::embeddings
