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

#include "twsent/kv_config.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "twsent/errors.h"

namespace twsent {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r\n\f\v";
  const auto begin = s.find_first_not_of(ws);
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(ws);
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(delim, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

long parse_long(std::string_view text, std::string_view what) {
  text = trim(text);
  long v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(what) + ": expected an integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view text, std::string_view what) {
  text = trim(text);
  double v = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw ConfigError(std::string(what) + ": expected a number, got '" +
                      std::string(text) + "'");
  }
  return v;
}

bool parse_bool(std::string_view text, std::string_view what) {
  text = trim(text);
  if (text == "on" || text == "true" || text == "yes" || text == "1") return true;
  if (text == "off" || text == "false" || text == "no" || text == "0") return false;
  throw ConfigError(std::string(what) + ": expected on/off, got '" +
                    std::string(text) + "'");
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text,
                                     const std::string& source) {
  KeyValueConfig cfg;
  std::size_t line_no = 0;
  for (const auto& raw : split(text, '\n')) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) +
                        ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": empty key");
    }
    cfg.set(std::string(key), std::string(trim(line.substr(eq + 1))));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path);
}

bool KeyValueConfig::has(const std::string& key) const {
  return values_.count(key) > 0;
}

void KeyValueConfig::set(const std::string& key, std::string value) {
  if (!has(key)) order_.push_back(key);
  values_[key] = std::move(value);
}

std::optional<std::string> KeyValueConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string KeyValueConfig::get_string(const std::string& key,
                                       const std::string& fallback) const {
  return get(key).value_or(fallback);
}

long KeyValueConfig::get_int(const std::string& key, long fallback) const {
  const auto v = get(key);
  return v ? parse_long(*v, key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key,
                                  double fallback) const {
  const auto v = get(key);
  return v ? parse_double(*v, key) : fallback;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto v = get(key);
  return v ? parse_bool(*v, key) : fallback;
}

std::string KeyValueConfig::serialize() const {
  std::string out;
  for (const auto& key : order_) {
    out += key;
    out += " = ";
    out += values_.at(key);
    out += '\n';
  }
  return out;
}

}  // namespace twsent
