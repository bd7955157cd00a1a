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

#ifndef MMSEQ_ESTIMATORS_HPP_
#define MMSEQ_ESTIMATORS_HPP_

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "mmseq/features.hpp"
#include "mmseq/seqmodel.hpp"

namespace mmseq {

// How the model average inside the moment-matching gradient is obtained.
//   kExact       full enumeration of the support
//   kSimplistic  K fresh samples for the average, J independent samples for
//                the outer expectation (unbiased)
//   kEconomical  one set of J samples reused for both roles (biased)
//   kJackknife   one set of J samples, leave-one-out average per term
//                (unbiased, needs J >= 2)
enum class Strategy { kExact, kSimplistic, kEconomical, kJackknife };

std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

struct EstimatorConfig {
  Strategy strategy = Strategy::kJackknife;
  int samples = 5;          // J: draws for the outer expectation
  int average_samples = 5;  // K: draws for the model average (simplistic only)
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;

  void validate() const;
  // Number of sequences one instance-level estimate draws.
  std::uint64_t draws_per_instance() const;
};

struct MomentGap {
  FeatureVector phi_hat;
  FeatureVector phi_bar;
  FeatureVector delta;  // phi_hat - phi_bar
};

MomentGap moment_gap(FeatureVector phi_hat, FeatureVector phi_bar);

// A sampled target together with its features and the scalar weight that
// multiplied its log-probability gradient.
struct ScoredSample {
  Sequence sequence;
  FeatureVector phi;
  double score = 0.0;
};

using RewardFunction = std::function<double(const Sequence& x, const Sequence& y)>;

// E_{y ~ p}[Phi(y | x)] by enumeration.
FeatureVector model_average_exact(const TabularModel& model, const FeatureSet& fs,
                                  const Sequence& x,
                                  std::uint64_t cap = kDefaultEnumerationCap);

// (1/N) sum_n ||Phi_hat_n - Phi_bar_n||^2.
double mm_loss_exact(const TabularModel& model, const FeatureSet& fs,
                     std::span<const Example> batch,
                     std::uint64_t cap = kDefaultEnumerationCap);

// <phi_hat - phi_bar, phi_y - phi_bar>
double multiplicative_score(const FeatureVector& phi_hat, const FeatureVector& phi_bar,
                            const FeatureVector& phi_y);

// Gradient of ||Phi_hat_n - Phi_bar_n||^2 for one instance:
//   2 sum_y p(y|x) <Phi_hat - Phi_bar, Phi(y) - Phi_bar> grad log p(y|x)
GradientVector mm_instance_gradient_exact(const TabularModel& model, const FeatureSet& fs,
                                          const Example& example,
                                          std::uint64_t cap = kDefaultEnumerationCap);

// Mean of the per-instance exact gradients; the gradient of mm_loss_exact.
GradientVector mm_gradient_exact(const TabularModel& model, const FeatureSet& fs,
                                 std::span<const Example> batch,
                                 std::uint64_t cap = kDefaultEnumerationCap);

// Mean of all vectors except index `leave_out` (0-based).
FeatureVector jackknife_average(std::span<const FeatureVector> features, std::size_t leave_out);

// Stochastic per-instance estimates of the exact gradient above. All keep the
// factor 2 and the 1/J average, so the unbiased ones have the exact gradient
// as their expectation. `trace`, when given, receives the J scored samples.
GradientVector mm_gradient_jackknife(const TabularModel& model, const FeatureSet& fs,
                                     const Sequence& x, std::span<const Sequence> refs,
                                     int samples, Rng& rng,
                                     std::vector<ScoredSample>* trace = nullptr);

GradientVector mm_gradient_simplistic(const TabularModel& model, const FeatureSet& fs,
                                      const Sequence& x, std::span<const Sequence> refs,
                                      int samples, int average_samples, Rng& rng,
                                      std::vector<ScoredSample>* trace = nullptr);

GradientVector mm_gradient_economical(const TabularModel& model, const FeatureSet& fs,
                                      const Sequence& x, std::span<const Sequence> refs,
                                      int samples, Rng& rng,
                                      std::vector<ScoredSample>* trace = nullptr);

// Dispatches on config.strategy. kExact ignores rng.
GradientVector mm_instance_gradient(const TabularModel& model, const FeatureSet& fs,
                                    const Example& example, const EstimatorConfig& config,
                                    Rng& rng, std::vector<ScoredSample>* trace = nullptr);

// Mean over the batch of mm_instance_gradient, summed in index order.
GradientVector mm_batch_gradient(const TabularModel& model, const FeatureSet& fs,
                                 std::span<const Example> batch,
                                 const EstimatorConfig& config, Rng& rng);

// Mean log p(ref | x) over every (source, reference) pair.
double mean_log_likelihood(const TabularModel& model, std::span<const Example> batch);

// Mean grad log p(ref | x) over every (source, reference) pair. Ascent
// direction on the log-likelihood.
GradientVector ce_gradient(const TabularModel& model, std::span<const Example> batch);

// (1/J) sum_j R(y_j) grad log p(y_j | x), y_j ~ p(. | x).
GradientVector rl_pg_gradient(const TabularModel& model, const RewardFunction& reward,
                              const Sequence& x, int samples, Rng& rng);

// sum_y p(y|x) R(y) grad log p(y|x) by enumeration.
GradientVector rl_pg_gradient_exact(const TabularModel& model, const RewardFunction& reward,
                                    const Sequence& x,
                                    std::uint64_t cap = kDefaultEnumerationCap);

// sum_y p(y|x) grad log p(y|x); zero up to rounding.
GradientVector score_function_mean_exact(const TabularModel& model, const Sequence& x,
                                         std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mmseq

#endif  // MMSEQ_ESTIMATORS_HPP_
