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

#include "mmseq/estimators.hpp"

#include <cmath>
#include <string>

namespace mmseq {
namespace {

// Incremental mean; equal inputs reproduce their value exactly.
FeatureVector running_mean(std::span<const FeatureVector> vs, std::size_t skip) {
  FeatureVector mean;
  std::size_t count = 0;
  for (std::size_t k = 0; k < vs.size(); ++k) {
    if (k == skip) continue;
    if (count == 0) {
      mean = vs[k];
    } else {
      for (std::size_t i = 0; i < mean.size(); ++i)
        mean[i] += (vs[k][i] - mean[i]) / static_cast<double>(count + 1);
    }
    ++count;
  }
  return mean;
}

constexpr std::size_t kNoSkip = static_cast<std::size_t>(-1);

void check_refs(const TabularModel& model, std::span<const Sequence> refs) {
  require(!refs.empty(), ErrorCode::kInvalidArgument, "instance has no references");
  for (const auto& r : refs) model.validate_target(r);
}

struct DrawnSet {
  std::vector<Sequence> sequences;
  std::vector<FeatureVector> features;
};

DrawnSet draw(const TabularModel& model, const FeatureSet& fs, const Sequence& x, int n,
              Rng& rng) {
  DrawnSet set;
  set.sequences.reserve(static_cast<std::size_t>(n));
  set.features.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    set.sequences.push_back(sample(model, x, rng));
    set.features.push_back(fs.evaluate(x, set.sequences.back()));
  }
  return set;
}

// (2/J) sum_j score_j grad log p(y_j) with score_j supplied per term.
template <class ScoreFn>
GradientVector weighted_score_sum(const TabularModel& model, const Sequence& x,
                                  const DrawnSet& set, ScoreFn score_of,
                                  std::vector<ScoredSample>* trace) {
  GradientVector grad(model.parameter_count());
  const double scale = 2.0 / static_cast<double>(set.sequences.size());
  if (trace) trace->clear();
  for (std::size_t j = 0; j < set.sequences.size(); ++j) {
    const double score = score_of(j);
    if (score != 0.0)
      accumulate_grad_log_prob(model, x, set.sequences[j], scale * score, grad.span());
    if (trace) trace->push_back({set.sequences[j], set.features[j], score});
  }
  return grad;
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::kExact: return "exact";
    case Strategy::kSimplistic: return "simplistic";
    case Strategy::kEconomical: return "economical";
    case Strategy::kJackknife: return "jackknife";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (Strategy s : {Strategy::kExact, Strategy::kSimplistic, Strategy::kEconomical,
                     Strategy::kJackknife})
    if (strategy_name(s) == name) return s;
  fail(ErrorCode::kInvalidArgument, "unknown estimator strategy '" + std::string(name) + "'");
}

void EstimatorConfig::validate() const {
  switch (strategy) {
    case Strategy::kExact:
      break;
    case Strategy::kJackknife:
      require(samples >= 2, ErrorCode::kInvalidArgument, "jackknife needs J >= 2");
      break;
    case Strategy::kSimplistic:
      require(samples >= 1 && average_samples >= 1, ErrorCode::kInvalidArgument,
              "simplistic needs J >= 1 and K >= 1");
      break;
    case Strategy::kEconomical:
      require(samples >= 1, ErrorCode::kInvalidArgument, "economical needs J >= 1");
      break;
  }
}

std::uint64_t EstimatorConfig::draws_per_instance() const {
  switch (strategy) {
    case Strategy::kExact: return 0;
    case Strategy::kSimplistic:
      return static_cast<std::uint64_t>(samples) + static_cast<std::uint64_t>(average_samples);
    case Strategy::kEconomical:
    case Strategy::kJackknife: return static_cast<std::uint64_t>(samples);
  }
  return 0;
}

MomentGap moment_gap(FeatureVector phi_hat, FeatureVector phi_bar) {
  FeatureVector delta = phi_hat - phi_bar;
  return {std::move(phi_hat), std::move(phi_bar), std::move(delta)};
}

FeatureVector model_average_exact(const TabularModel& model, const FeatureSet& fs,
                                  const Sequence& x, std::uint64_t cap) {
  FeatureVector avg(fs.dimension());
  FeatureVector phi(fs.dimension());
  for (const auto& e : enumerate_support(model, x, cap)) {
    fs.evaluate_into(x, e.sequence, phi.span());
    avg.add_scaled(phi, e.prob);
  }
  return avg;
}

double mm_loss_exact(const TabularModel& model, const FeatureSet& fs,
                     std::span<const Example> batch, std::uint64_t cap) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  double total = 0.0;
  for (const auto& ex : batch) {
    check_refs(model, ex.references);
    const FeatureVector gap = model_average_exact(model, fs, ex.source, cap) -
                              empirical_average(fs, ex.source, ex.references);
    total += squared_norm(gap);
  }
  return total / static_cast<double>(batch.size());
}

double multiplicative_score(const FeatureVector& phi_hat, const FeatureVector& phi_bar,
                            const FeatureVector& phi_y) {
  require(phi_hat.size() == phi_bar.size() && phi_y.size() == phi_bar.size(),
          ErrorCode::kShapeMismatch, "multiplicative score: feature dimensions differ");
  double s = 0.0;
  for (std::size_t i = 0; i < phi_bar.size(); ++i)
    s += (phi_hat[i] - phi_bar[i]) * (phi_y[i] - phi_bar[i]);
  return s;
}

GradientVector mm_instance_gradient_exact(const TabularModel& model, const FeatureSet& fs,
                                          const Example& example, std::uint64_t cap) {
  check_refs(model, example.references);
  const Sequence& x = example.source;
  const auto support = enumerate_support(model, x, cap);
  std::vector<FeatureVector> phis;
  phis.reserve(support.size());
  FeatureVector phi_hat(fs.dimension());
  for (const auto& e : support) {
    phis.push_back(fs.evaluate(x, e.sequence));
    phi_hat.add_scaled(phis.back(), e.prob);
  }
  const FeatureVector phi_bar = empirical_average(fs, x, example.references);
  GradientVector grad(model.parameter_count());
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double w = 2.0 * support[i].prob * multiplicative_score(phi_hat, phi_bar, phis[i]);
    if (w != 0.0) accumulate_grad_log_prob(model, x, support[i].sequence, w, grad.span());
  }
  return grad;
}

GradientVector mm_gradient_exact(const TabularModel& model, const FeatureSet& fs,
                                 std::span<const Example> batch, std::uint64_t cap) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  GradientVector grad(model.parameter_count());
  for (const auto& ex : batch) grad += mm_instance_gradient_exact(model, fs, ex, cap);
  grad *= 1.0 / static_cast<double>(batch.size());
  return grad;
}

FeatureVector jackknife_average(std::span<const FeatureVector> features, std::size_t leave_out) {
  require(features.size() >= 2, ErrorCode::kInvalidArgument,
          "jackknife average needs at least two vectors");
  require(leave_out < features.size(), ErrorCode::kInvalidArgument,
          "jackknife index " + std::to_string(leave_out) + " out of range");
  for (const auto& f : features)
    require(f.size() == features[0].size(), ErrorCode::kShapeMismatch,
            "jackknife average: feature dimensions differ");
  return running_mean(features, leave_out);
}

GradientVector mm_gradient_jackknife(const TabularModel& model, const FeatureSet& fs,
                                     const Sequence& x, std::span<const Sequence> refs,
                                     int samples, Rng& rng, std::vector<ScoredSample>* trace) {
  require(samples >= 2, ErrorCode::kInvalidArgument, "jackknife needs J >= 2");
  check_refs(model, refs);
  const FeatureVector phi_bar = empirical_average(fs, x, refs);
  const DrawnSet set = draw(model, fs, x, samples, rng);
  return weighted_score_sum(
      model, x, set,
      [&](std::size_t j) {
        return multiplicative_score(jackknife_average(set.features, j), phi_bar,
                                    set.features[j]);
      },
      trace);
}

GradientVector mm_gradient_simplistic(const TabularModel& model, const FeatureSet& fs,
                                      const Sequence& x, std::span<const Sequence> refs,
                                      int samples, int average_samples, Rng& rng,
                                      std::vector<ScoredSample>* trace) {
  require(samples >= 1 && average_samples >= 1, ErrorCode::kInvalidArgument,
          "simplistic needs J >= 1 and K >= 1");
  check_refs(model, refs);
  const FeatureVector phi_bar = empirical_average(fs, x, refs);
  const DrawnSet average_set = draw(model, fs, x, average_samples, rng);
  const FeatureVector phi_hat = running_mean(average_set.features, kNoSkip);
  const DrawnSet set = draw(model, fs, x, samples, rng);
  return weighted_score_sum(
      model, x, set,
      [&](std::size_t j) { return multiplicative_score(phi_hat, phi_bar, set.features[j]); },
      trace);
}

GradientVector mm_gradient_economical(const TabularModel& model, const FeatureSet& fs,
                                      const Sequence& x, std::span<const Sequence> refs,
                                      int samples, Rng& rng, std::vector<ScoredSample>* trace) {
  require(samples >= 1, ErrorCode::kInvalidArgument, "economical needs J >= 1");
  check_refs(model, refs);
  const FeatureVector phi_bar = empirical_average(fs, x, refs);
  const DrawnSet set = draw(model, fs, x, samples, rng);
  // The average includes y_j itself; with J = 1 it equals Phi(y_1).
  const FeatureVector phi_hat = running_mean(set.features, kNoSkip);
  return weighted_score_sum(
      model, x, set,
      [&](std::size_t j) { return multiplicative_score(phi_hat, phi_bar, set.features[j]); },
      trace);
}

GradientVector mm_instance_gradient(const TabularModel& model, const FeatureSet& fs,
                                    const Example& example, const EstimatorConfig& config,
                                    Rng& rng, std::vector<ScoredSample>* trace) {
  config.validate();
  switch (config.strategy) {
    case Strategy::kExact:
      if (trace) trace->clear();
      return mm_instance_gradient_exact(model, fs, example, config.enumeration_cap);
    case Strategy::kJackknife:
      return mm_gradient_jackknife(model, fs, example.source, example.references,
                                   config.samples, rng, trace);
    case Strategy::kSimplistic:
      return mm_gradient_simplistic(model, fs, example.source, example.references,
                                    config.samples, config.average_samples, rng, trace);
    case Strategy::kEconomical:
      return mm_gradient_economical(model, fs, example.source, example.references,
                                    config.samples, rng, trace);
  }
  fail(ErrorCode::kInvalidArgument, "unknown strategy");
}

GradientVector mm_batch_gradient(const TabularModel& model, const FeatureSet& fs,
                                 std::span<const Example> batch,
                                 const EstimatorConfig& config, Rng& rng) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  GradientVector grad(model.parameter_count());
  for (const auto& ex : batch) grad += mm_instance_gradient(model, fs, ex, config, rng);
  grad *= 1.0 / static_cast<double>(batch.size());
  return grad;
}

double mean_log_likelihood(const TabularModel& model, std::span<const Example> batch) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  double total = 0.0;
  std::size_t pairs = 0;
  for (const auto& ex : batch) {
    require(!ex.references.empty(), ErrorCode::kInvalidArgument, "example has no references");
    for (const auto& y : ex.references) {
      total += log_prob(model, ex.source, y);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

GradientVector ce_gradient(const TabularModel& model, std::span<const Example> batch) {
  require(!batch.empty(), ErrorCode::kInvalidArgument, "empty batch");
  GradientVector grad(model.parameter_count());
  std::size_t pairs = 0;
  for (const auto& ex : batch) {
    require(!ex.references.empty(), ErrorCode::kInvalidArgument, "example has no references");
    for (const auto& y : ex.references) {
      accumulate_grad_log_prob(model, ex.source, y, 1.0, grad.span());
      ++pairs;
    }
  }
  grad *= 1.0 / static_cast<double>(pairs);
  return grad;
}

GradientVector rl_pg_gradient(const TabularModel& model, const RewardFunction& reward,
                              const Sequence& x, int samples, Rng& rng) {
  require(samples >= 1, ErrorCode::kInvalidArgument, "policy gradient needs J >= 1");
  GradientVector grad(model.parameter_count());
  const double scale = 1.0 / static_cast<double>(samples);
  for (int j = 0; j < samples; ++j) {
    const Sequence y = sample(model, x, rng);
    const double r = reward(x, y);
    if (r != 0.0) accumulate_grad_log_prob(model, x, y, scale * r, grad.span());
  }
  return grad;
}

GradientVector rl_pg_gradient_exact(const TabularModel& model, const RewardFunction& reward,
                                    const Sequence& x, std::uint64_t cap) {
  GradientVector grad(model.parameter_count());
  for (const auto& e : enumerate_support(model, x, cap)) {
    const double w = e.prob * reward(x, e.sequence);
    if (w != 0.0) accumulate_grad_log_prob(model, x, e.sequence, w, grad.span());
  }
  return grad;
}

GradientVector score_function_mean_exact(const TabularModel& model, const Sequence& x,
                                         std::uint64_t cap) {
  return rl_pg_gradient_exact(
      model, [](const Sequence&, const Sequence&) { return 1.0; }, x, cap);
}

}  // namespace mmseq
