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

#ifndef TWSENT_ERRORS_H_
#define TWSENT_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace twsent {

// A tweet that has no content left after normalization or tokenization.
class DegenerateTweet : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Tensor or matrix dimensions that do not agree.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller broke an operation's precondition.
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Malformed input file. Carries the 1-based line number of the bad record.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line,
             const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// A binary file that is truncated or carries the wrong magic.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A label value the ingestion schema does not know how to map.
class LabelError : public std::runtime_error {
 public:
  LabelError(const std::string& source, std::size_t line,
             const std::string& what)
      : std::runtime_error(source + ":" + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(int epoch, const std::string& what)
      : std::runtime_error("diverged in epoch " + std::to_string(epoch) +
                           ": " + what),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

// Invalid or inconsistent run configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace twsent

#endif  // TWSENT_ERRORS_H_
