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

#include "twsent/classifier.h"

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <map>

#include "twsent/errors.h"

namespace twsent::model {

namespace {

constexpr std::string_view kMagic = "TWNT1\n";

class Writer {
 public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(std::string_view s) { out_.append(s); }
  void block(std::string_view s) {
    u64(s.size());
    bytes(s);
  }
  const std::string& data() const { return out_; }

 private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class Reader {
 public:
  Reader(std::string data, std::string source)
      : data_(std::move(data)), source_(std::move(source)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::uint64_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string block() { return bytes(u64()); }
  bool done() const { return pos_ == data_.size(); }

 private:
  void need(std::uint64_t n) const {
    if (n > data_.size() - pos_) throw FormatError(source_ + ": truncated checkpoint");
  }
  std::uint64_t get(int n) {
    need(static_cast<std::uint64_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::string data_;
  std::string source_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_pipeline(KeyValueConfig& kv, const textproc::PipelineOptions& pipeline,
                    const LexiconPaths& paths) {
  kv.set("apply_rules", pipeline.apply_rules ? "on" : "off");
  kv.set("remove_stop_words", pipeline.normalize.remove_stop_words ? "on" : "off");
  kv.set("emoticons_path", paths.emoticons);
  kv.set("negative_cues_path", paths.negative_cues);
  kv.set("stop_words_path", paths.stop_words);
}

textproc::PipelineOptions read_pipeline(const KeyValueConfig& kv) {
  textproc::PipelineOptions p;
  p.apply_rules = kv.get_bool("apply_rules", p.apply_rules);
  p.normalize.remove_stop_words =
      kv.get_bool("remove_stop_words", p.normalize.remove_stop_words);
  return p;
}

LexiconPaths read_lexicon_paths(const KeyValueConfig& kv) {
  return {kv.get_string("emoticons_path", ""), kv.get_string("negative_cues_path", ""),
          kv.get_string("stop_words_path", "")};
}

embeddings::IndexedSentence Classifier::index(const textproc::TokenizedSentence& s) const {
  return embeddings::index_sentence(s, words, chars, params.config.max_word_len,
                                    params.config.max_sent_len);
}

embeddings::IndexedSentence Classifier::prepare(std::string_view raw) const {
  return index(textproc::prepare_sentence(raw, pipeline, lexicons));
}

std::vector<double> Classifier::predict_text(std::string_view raw) const {
  return predict(params, prepare(raw));
}

KeyValueConfig Classifier::config() const {
  KeyValueConfig kv;
  params.config.write(kv);
  write_pipeline(kv, pipeline, lexicon_paths);
  return kv;
}

void save_checkpoint(const std::string& path, const Classifier& c) {
  Writer w;
  w.bytes(kMagic);
  w.block(c.config().serialize());
  w.block(c.words.serialize());
  w.block(c.chars.serialize());
  const auto params = c.params.all();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const auto* p : params) {
    w.u32(static_cast<std::uint32_t>(p->name.size()));
    w.bytes(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rank()));
    for (auto d : p->value.shape()) w.u64(d);
    for (auto v : p->value.values()) w.f64(v);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write checkpoint " + path);
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw ConfigError("failed writing checkpoint " + path);
}

Classifier load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open checkpoint " + path);
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  Reader r(std::move(data), path);
  if (r.bytes(kMagic.size()) != kMagic) throw FormatError(path + ": not a checkpoint");

  const KeyValueConfig kv = KeyValueConfig::parse(r.block(), path + "#config");
  Classifier c;
  const ModelConfig config = ModelConfig::read(kv);
  c.pipeline = read_pipeline(kv);
  c.lexicon_paths = read_lexicon_paths(kv);
  c.lexicons = textproc::Lexicons::load(c.lexicon_paths.emoticons,
                                        c.lexicon_paths.negative_cues,
                                        c.lexicon_paths.stop_words);
  c.words = embeddings::Vocab::parse(r.block(), path + "#words");
  c.chars = embeddings::Vocab::parse(r.block(), path + "#chars");
  c.params = ModelParams(config, c.words.size(), c.chars.size());

  std::map<std::string, ad::Parameter*> by_name;
  for (auto* p : c.params.all()) by_name.emplace(p->name, p);
  const std::uint32_t count = r.u32();
  for (std::uint32_t t = 0; t < count; ++t) {
    const std::string name = r.bytes(r.u32());
    const auto it = by_name.find(name);
    if (it == by_name.end()) throw ShapeError(path + ": unexpected tensor " + name);
    std::vector<std::size_t> shape(r.u32());
    for (auto& d : shape) d = r.u64();
    ad::Parameter& p = *it->second;
    if (shape != p.value.shape()) {
      throw ShapeError(path + ": tensor " + name + " is " + ad::shape_string(shape) +
                       " but the config implies " + ad::shape_string(p.value.shape()));
    }
    for (auto& v : p.value.values()) v = r.f64();
    by_name.erase(it);
  }
  if (!by_name.empty()) {
    throw ShapeError(path + ": missing tensor " + by_name.begin()->first);
  }
  if (!r.done()) throw FormatError(path + ": trailing bytes");
  return c;
}

}  // namespace twsent::model
