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

#ifndef MMSEQ_COMMANDS_HPP_
#define MMSEQ_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "json.hpp"
#include "mmseq/config.hpp"
#include "mmseq/data.hpp"
#include "mmseq/verification.hpp"

namespace mmseq {

struct TaskData {
  ParallelCorpus train;
  ParallelCorpus dev;
  std::optional<SyntheticTaskSpec> spec;  // set for synthetic tasks
};

// Synthetic corpora draw from derive_seed(seed, 10) (train) and
// derive_seed(seed, 11) (dev). Corpus dev files are read with the training
// vocabularies.
TaskData build_task(const RunConfig& config);
SyntheticTaskSpec synthetic_spec(const RunConfig& config);

// lexical_dict without a path takes its pairs from the token_map mapping.
FeatureSet build_feature_set(const std::vector<FeatureSpec>& specs, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab,
                             const std::optional<SyntheticTaskSpec>& task);

TabularModel initial_model(const RunConfig& config, const TaskData& data);

struct TinyInstance {
  TabularModel model;
  Example example;
  FeatureSet features;
};

// Random model over "s0.."/"t0.." vocabularies, source "s0 s1", one
// reference "t0 t1" (both truncated to fit).
TinyInstance standard_tiny_instance(const VerifyConfig& config, std::uint64_t seed);

// Model that strongly prefers stopping early, a full-length reference and the
// target_length feature: the moment gap is large and one-signed.
TinyInstance unmatched_instance(const VerifyConfig& config, std::uint64_t seed);

struct CheckOutcome {
  bool passed = false;
  nlohmann::json report;
};

// Writes metrics.jsonl, timing.jsonl, checkpoint_final.json,
// checkpoint_best.json, best.json and manifest.json into config.out.
nlohmann::json run_train(const RunConfig& config);

// Bias reports for the configured strategies plus the lemma1 check, written
// to config.out/verify. Passes iff exact matches exactly, jackknife and
// simplistic pass the unbiasedness rule, economical fails it and lemma1
// passes.
CheckOutcome run_verify(const RunConfig& config, unsigned workers = 0);

// Finite-difference check of the exact MM gradient. drop_factor_two halves
// the analytic gradient.
CheckOutcome run_gradcheck(const RunConfig& config, bool drop_factor_two = false);

nlohmann::json run_eval(const RunConfig& config, const std::filesystem::path& checkpoint);

nlohmann::json to_json(const BiasReport& report);

const char* library_version();

}  // namespace mmseq

#endif  // MMSEQ_COMMANDS_HPP_
