// Copyright 2026 The mmseq Authors
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

#ifndef MMSEQ_CONFIG_HPP_
#define MMSEQ_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmseq/training.hpp"

namespace mmseq {

struct TaskConfig {
  // copy | token_map | length_control | corpus
  std::string kind = "length_control";
  int source_vocab_size = 5;
  int target_vocab_size = 5;
  int min_length = 1;
  int max_length = 4;
  int train_size = 2000;
  int dev_size = 200;
  double ratio = 2.0;
  std::vector<int> mapping;
  // corpus only; relative paths resolve against the config file.
  std::string train_source;
  std::string train_target;
  std::string dev_source;
  std::string dev_target;
};

struct ModelConfig {
  int context_order = 1;
  int max_len = 8;
  double init_scale = 0.1;
};

struct FeatureSpec {
  // length_ratio | lexical_dict | constant | target_length
  std::string type = "length_ratio";
  double scale = 1.0;
  double beta = 1.0;        // length_ratio
  std::string path;         // lexical_dict; empty uses the token_map task's own pairs
  double threshold = 0.5;   // lexical_dict
  double value = 1.0;       // constant
};

struct VerifyConfig {
  int source_vocab_size = 2;
  int target_vocab_size = 3;
  int max_len = 3;
  int context_order = 1;
  double logit_scale = 1.0;
  std::vector<std::string> strategies = {"exact", "simplistic", "economical", "jackknife"};
  int jackknife_J = 3;
  int simplistic_J = 2;
  int simplistic_K = 2;
  int economical_J = 1;
  bool lemma1 = true;
  int lemma1_J = 2;
  std::uint64_t replicates = 200000;
  std::vector<FeatureSpec> features;
};

struct GradcheckConfig {
  int instances = 20;
  int source_vocab_size = 2;
  int target_vocab_size = 3;
  int max_len = 3;
  int context_order = 1;
  double logit_scale = 1.0;
  double h = 1e-5;
  double tolerance = 1e-5;
  std::vector<FeatureSpec> features;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::string out = "runs/default";
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  TaskConfig task;
  ModelConfig model;
  std::vector<FeatureSpec> features;
  TrainConfig train;  // train.seed mirrors seed
  VerifyConfig verify;
  GradcheckConfig gradcheck;
};

RunConfig default_run_config();

// Strict: unknown keys and ill-typed values raise kConfig. Missing keys take
// defaults. Relative paths are resolved against base_dir. A run manifest is
// accepted in place of a config.
RunConfig parse_run_config(const nlohmann::json& doc,
                           const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);

nlohmann::json to_json(const RunConfig& config);

// Sets a dotted key ("train.lambda", "features.0.beta") in a config document.
// The value is parsed as JSON, falling back to a plain string.
void apply_override(nlohmann::json& doc, const std::string& key, const std::string& value);

// Hex digest of the canonical serialization.
std::string config_hash(const RunConfig& config);

}  // namespace mmseq

#endif  // MMSEQ_CONFIG_HPP_
