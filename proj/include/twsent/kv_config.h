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

#ifndef TWSENT_KV_CONFIG_H_
#define TWSENT_KV_CONFIG_H_

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace twsent {

// Flat `key = value` text. Blank lines and lines starting with '#' are
// ignored; later assignments override earlier ones. Key order is preserved
// for serialization.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text,
                              const std::string& source = "<string>");
  static KeyValueConfig load(const std::string& path);

  bool has(const std::string& key) const;
  void set(const std::string& key, std::string value);
  std::optional<std::string> get(const std::string& key) const;

  std::string get_string(const std::string& key,
                         const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  // Accepts on/off, true/false, yes/no, 1/0.
  bool get_bool(const std::string& key, bool fallback) const;

  const std::vector<std::string>& keys() const { return order_; }

  // Writes in insertion order, one `key = value` per line.
  std::string serialize() const;

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// Strict parsers used for config values and data files. Throw ConfigError
// naming `what` on bad input.
long parse_long(std::string_view text, std::string_view what);
double parse_double(std::string_view text, std::string_view what);
bool parse_bool(std::string_view text, std::string_view what);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char delim);

// %.17g, enough digits to round-trip a double.
std::string format_double(double v);

}  // namespace twsent

#endif  // TWSENT_KV_CONFIG_H_
