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

// The `twsent` command line: preprocess, stats, train, cv, eval, predict.

#ifndef TWSENT_CLI_H_
#define TWSENT_CLI_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "twsent/datasets.h"
#include "twsent/experiment.h"
#include "twsent/kv_config.h"

namespace twsent::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigFailure = 2,
  kDataFailure = 3,
  kDiverged = 4,
};

// Model, training and pipeline settings plus the files a run touches.
// Relative paths resolve against the working directory.
struct RunConfig {
  training::ExperimentConfig experiment;
  datasets::SchemaDescriptor schema;
  std::string train_path;
  std::string dev_path;   // empty: carve dev_fraction out of train
  std::string test_path;  // optional held-out set scored after training
  std::string data_path;  // cv input; falls back to train_path
  std::string out_dir;
  std::string precision = "f64";
  std::size_t folds = 10;

  // Throws ConfigError for an unsupported precision or a named file that
  // does not exist.
  void validate() const;
  KeyValueConfig to_config() const;
  // Unknown keys are a ConfigError, so typos do not pass silently.
  static RunConfig from_config(const KeyValueConfig& kv);
};

// Command-line values that take precedence over the config file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<bool> apply_rules;
  std::optional<std::string> embeddings;
  std::optional<std::string> out_dir;

  void apply(KeyValueConfig& kv) const;
};

// `config_path` may be empty for an all-defaults run.
RunConfig resolve(const std::string& config_path, const Overrides& overrides);

// Parses argv and runs one command. Errors are reported on `err` and mapped
// to ExitCode.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace twsent::cli

#endif  // TWSENT_CLI_H_
