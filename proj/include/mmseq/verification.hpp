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

#ifndef MMSEQ_VERIFICATION_HPP_
#define MMSEQ_VERIFICATION_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmseq/estimators.hpp"

namespace mmseq {

inline constexpr std::uint64_t kMinReplicates = 10000;

// Central differences (f(p + h e_i) - f(p - h e_i)) / 2h for every coordinate.
using ScalarLoss = std::function<double(std::span<const double>)>;
std::vector<double> finite_difference_gradient(const ScalarLoss& loss,
                                               std::span<const double> params, double h);

// max_i |a_i - b_i| / max(||a||_inf, ||b||_inf, floor). The floor keeps
// round-off on identically zero gradients from reading as a relative error of 1.
inline constexpr double kRelativeErrorFloor = 1e-10;
double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor = kRelativeErrorFloor);

// Per-coordinate Monte Carlo summary of an estimator against an exact value.
struct BiasReport {
  std::vector<double> mean;
  std::vector<double> standard_error;
  std::vector<double> exact;
  std::vector<double> z_scores;  // +inf where se = 0 and mean != exact
  std::uint64_t replicates = 0;
  double max_abs_z = 0.0;
  double fraction_within_4 = 0.0;

  // fraction_within_4 >= 0.99 and max_abs_z <= 6.
  bool passes_unbiasedness_rule() const;
  // Every coordinate matches with zero deviation.
  bool exact_match() const;
};

// Builds the report fields from replicate moments.
BiasReport make_bias_report(std::vector<double> mean, std::vector<double> standard_error,
                            std::vector<double> exact, std::uint64_t replicates);

// Mean and standard error of `draw` over `replicates` calls. Replicate r uses
// Rng(derive_seed(seed, r)); the reduction is over fixed-size chunks merged in
// index order, so the result does not depend on the worker count.
struct ReplicateMoments {
  std::vector<double> mean;
  std::vector<double> standard_error;
};
using ReplicateFn = std::function<void(Rng& rng, std::span<double> out)>;
ReplicateMoments replicate_moments(std::size_t dimension, std::uint64_t replicates,
                                   std::uint64_t seed, const ReplicateFn& draw,
                                   unsigned workers = 0);

// Worker count from MM_THREADS (default: hardware concurrency).
unsigned default_worker_count();

// Runs the configured estimator on one instance `replicates` times and
// compares the mean against mm_instance_gradient_exact.
BiasReport estimator_bias_report(const TabularModel& model, const FeatureSet& fs,
                                 const Example& instance, const EstimatorConfig& config,
                                 std::uint64_t replicates, std::uint64_t seed,
                                 unsigned workers = 0);

using ZetaFunction = std::function<std::vector<double>(const Sequence&)>;

struct Lemma1Options {
  int samples = 2;
  std::uint64_t replicates = 200000;
  std::uint64_t seed = 0;
  // When set, features are replaced by Phi - center on both sides.
  std::optional<FeatureVector> center;
  std::uint64_t enumeration_cap = kDefaultEnumerationCap;
  unsigned workers = 0;
};

// Exact A = sum_y p(y) <Phi_hat, Phi(y)> zeta(y) with Phi_hat = E[Phi], under
// the unconditional model (empty source).
std::vector<double> lemma1_target(const TabularModel& model, const FeatureSet& fs,
                                  const ZetaFunction& zeta, const Lemma1Options& options);

// Leave-one-out estimator B(y_1..y_J) = (1/J) sum_i <Phi~(-i), Phi(y_i)> zeta(y_i).
std::vector<double> lemma1_estimate(const FeatureSet& fs, std::span<const Sequence> draws,
                                    const ZetaFunction& zeta,
                                    const std::optional<FeatureVector>& center);

// Monte Carlo mean of B against the enumerated A.
BiasReport lemma1_check(const TabularModel& model, const FeatureSet& fs,
                        const ZetaFunction& zeta, const Lemma1Options& options);

struct SamplerReport {
  std::uint64_t samples = 0;
  double tv_distance = 0.0;
  double chi_square = 0.0;
  int degrees_of_freedom = 0;
  double p_value = 1.0;
};

// Empirical frequencies of ancestral samples against enumerated
// probabilities. Atoms with expected count below 5 are pooled into one cell.
SamplerReport sampler_frequency_check(const TabularModel& model, const Sequence& x,
                                      std::uint64_t samples, std::uint64_t seed,
                                      std::uint64_t cap = kDefaultEnumerationCap);

}  // namespace mmseq

#endif  // MMSEQ_VERIFICATION_HPP_
