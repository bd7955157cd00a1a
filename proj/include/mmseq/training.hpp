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

#ifndef MMSEQ_TRAINING_HPP_
#define MMSEQ_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "mmseq/data.hpp"
#include "mmseq/estimators.hpp"

namespace mmseq {

enum class TrainMode { kAlternation, kInterpolation };

std::string train_mode_name(TrainMode mode);
TrainMode parse_train_mode(const std::string& name);

struct TrainConfig {
  TrainMode mode = TrainMode::kInterpolation;
  double lambda = 0.5;
  EstimatorConfig estimator;  // jackknife, J = 5
  int max_steps = 2000;
  int batch_size = 16;
  double learning_rate = 0.05;
  // Alternation blocks, starting with CE.
  int ce_steps = 100;
  int mm_steps = 100;
  int eval_every = 100;
  int dev_sample_count = 32;
  // CE-only steps run by warm_start() before the MM phase.
  int warm_start_steps = 1000;
  std::uint64_t seed = 1;

  void validate() const;
};

// Which gradient a step applied.
enum class StepKind { kNone, kCe, kMm, kInterpolation };
std::string step_kind_name(StepKind kind);

struct MetricsRecord {
  int step = 0;
  StepKind update = StepKind::kNone;
  double ce_loss_dev = 0.0;  // mean negative log-likelihood of dev references
  double mm_loss_dev = 0.0;
  std::vector<double> moment_gap;  // mean (Phi_hat - Phi_bar) per feature over dev
  double exact_match = 0.0;        // greedy output equals a reference
  std::uint64_t mm_samples = 0;    // sequences drawn by MM estimators so far
  double wall_seconds = 0.0;
};

// One JSON object per line. Wall-clock time is left out unless requested so
// that reruns produce identical streams.
std::string to_json_line(const MetricsRecord& record, bool include_timing = false);

struct Checkpoint {
  TabularModel model;
  int step = 0;
  double mm_loss_dev = 0.0;
};

struct TrainResult {
  TabularModel final_model;
  Checkpoint best;
  std::vector<MetricsRecord> metrics;
  std::uint64_t mm_samples = 0;
};

struct DevEvaluation {
  double mm_loss = 0.0;
  std::vector<double> moment_gap;
  double ce_loss = 0.0;
  double exact_match = 0.0;
};

// Plug-in dev loss (1/N) sum_n ||mean of S sampled Phi - Phi_bar_n||^2.
// Source n draws from Rng(derive_seed(seed, n)).
double dev_mm_loss(const TabularModel& model, const FeatureSet& fs, std::span<const Example> dev,
                   int samples, std::uint64_t seed);

DevEvaluation evaluate_dev(const TabularModel& model, const FeatureSet& fs,
                           std::span<const Example> dev, int samples, std::uint64_t seed);

// grad_ce + lambda * grad_mm, both already oriented as update directions
// (the caller negates the MM loss gradient).
GradientVector interpolate(const GradientVector& grad_ce, const GradientVector& grad_mm,
                           double lambda);

// CE-only SGD for config.warm_start_steps steps.
TabularModel warm_start(TabularModel model, const ParallelCorpus& train_corpus,
                        const TrainConfig& config);

using MetricsObserver = std::function<void(const MetricsRecord&)>;

// MM phase. Evaluates at step 0, every eval_every steps and at the last step;
// the best checkpoint has the lowest dev MM loss seen (earliest on ties).
TrainResult train(const TrainConfig& config, TabularModel model, const FeatureSet& fs,
                  const ParallelCorpus& train_corpus, const ParallelCorpus& dev_corpus,
                  const MetricsObserver& observer = {});

// Seed used for every dev evaluation of a run.
std::uint64_t evaluation_seed(const TrainConfig& config);

}  // namespace mmseq

#endif  // MMSEQ_TRAINING_HPP_
