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

#include "mmseq/verification.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <unordered_map>

#include <boost/math/special_functions/gamma.hpp>

namespace mmseq {
namespace {

constexpr std::uint64_t kChunk = 2048;

struct Accumulator {
  std::uint64_t n = 0;
  std::vector<double> mean;
  std::vector<double> m2;

  explicit Accumulator(std::size_t d) : mean(d, 0.0), m2(d, 0.0) {}

  void push(std::span<const double> x) {
    ++n;
    const auto inv = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = x[i] - mean[i];
      mean[i] += delta * inv;
      m2[i] += delta * (x[i] - mean[i]);
    }
  }

  // Chan et al. pairwise update.
  void merge(const Accumulator& other) {
    if (other.n == 0) return;
    if (n == 0) {
      *this = other;
      return;
    }
    const auto na = static_cast<double>(n);
    const auto nb = static_cast<double>(other.n);
    const double total = na + nb;
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double delta = other.mean[i] - mean[i];
      mean[i] += delta * (nb / total);
      m2[i] += other.m2[i] + delta * delta * (na * nb / total);
    }
    n += other.n;
  }
};

}  // namespace

std::vector<double> finite_difference_gradient(const ScalarLoss& loss,
                                               std::span<const double> params, double h) {
  require(h > 0.0 && std::isfinite(h), ErrorCode::kInvalidArgument,
          "finite-difference step must be positive");
  std::vector<double> p(params.begin(), params.end());
  std::vector<double> grad(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double orig = p[i];
    p[i] = orig + h;
    const double up = loss(p);
    p[i] = orig - h;
    const double down = loss(p);
    p[i] = orig;
    require(std::isfinite(up) && std::isfinite(down), ErrorCode::kNonFinite,
            "loss is not finite at coordinate " + std::to_string(i));
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

double max_relative_error(std::span<const double> a, std::span<const double> b,
                          double floor) {
  require(a.size() == b.size(), ErrorCode::kShapeMismatch,
          "relative error: vector sizes differ");
  double scale = floor;
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
    worst = std::max(worst, std::abs(a[i] - b[i]));
  }
  if (worst == 0.0) return 0.0;
  return worst / scale;
}

bool BiasReport::passes_unbiasedness_rule() const {
  return fraction_within_4 >= 0.99 && max_abs_z <= 6.0;
}

bool BiasReport::exact_match() const {
  for (std::size_t i = 0; i < mean.size(); ++i)
    if (mean[i] != exact[i] || standard_error[i] != 0.0) return false;
  return true;
}

BiasReport make_bias_report(std::vector<double> mean, std::vector<double> standard_error,
                            std::vector<double> exact, std::uint64_t replicates) {
  require(mean.size() == exact.size() && standard_error.size() == exact.size(),
          ErrorCode::kShapeMismatch, "bias report: vector sizes differ");
  BiasReport r;
  r.replicates = replicates;
  r.z_scores.resize(mean.size());
  std::size_t within = 0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    double z;
    if (standard_error[i] > 0.0) {
      z = (mean[i] - exact[i]) / standard_error[i];
    } else {
      z = mean[i] == exact[i] ? 0.0 : std::numeric_limits<double>::infinity();
    }
    r.z_scores[i] = z;
    r.max_abs_z = std::max(r.max_abs_z, std::abs(z));
    if (std::abs(z) <= 4.0) ++within;
  }
  r.fraction_within_4 =
      mean.empty() ? 1.0 : static_cast<double>(within) / static_cast<double>(mean.size());
  r.mean = std::move(mean);
  r.standard_error = std::move(standard_error);
  r.exact = std::move(exact);
  return r;
}

unsigned default_worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("MM_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end != env && cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

ReplicateMoments replicate_moments(std::size_t dimension, std::uint64_t replicates,
                                   std::uint64_t seed, const ReplicateFn& draw,
                                   unsigned workers) {
  require(replicates >= 2, ErrorCode::kInvalidArgument, "need at least two replicates");
  if (workers == 0) workers = default_worker_count();
  const std::uint64_t chunks = (replicates + kChunk - 1) / kChunk;
  std::vector<Accumulator> partial(chunks, Accumulator(dimension));
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;

  auto work = [&] {
    std::vector<double> out(dimension);
    try {
      for (std::uint64_t c = next++; c < chunks; c = next++) {
        const std::uint64_t end = std::min(replicates, (c + 1) * kChunk);
        for (std::uint64_t r = c * kChunk; r < end; ++r) {
          Rng rng(derive_seed(seed, r));
          std::fill(out.begin(), out.end(), 0.0);
          draw(rng, out);
          partial[c].push(out);
        }
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (!error) error = std::current_exception();
      next = chunks;
    }
  };

  const auto n_threads = static_cast<unsigned>(std::min<std::uint64_t>(workers, chunks));
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < n_threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);

  Accumulator total(dimension);
  for (const auto& p : partial) total.merge(p);
  ReplicateMoments m;
  m.mean = std::move(total.mean);
  m.standard_error.resize(dimension);
  const auto n = static_cast<double>(total.n);
  for (std::size_t i = 0; i < dimension; ++i)
    m.standard_error[i] = std::sqrt(std::max(0.0, total.m2[i]) / (n - 1.0) / n);
  return m;
}

BiasReport estimator_bias_report(const TabularModel& model, const FeatureSet& fs,
                                 const Example& instance, const EstimatorConfig& config,
                                 std::uint64_t replicates, std::uint64_t seed,
                                 unsigned workers) {
  require(replicates >= kMinReplicates, ErrorCode::kInvalidArgument,
          "inconclusive: " + std::to_string(replicates) + " replicates, at least " +
              std::to_string(kMinReplicates) + " required");
  config.validate();
  const GradientVector exact =
      mm_instance_gradient_exact(model, fs, instance, config.enumeration_cap);
  auto moments = replicate_moments(
      model.parameter_count(), replicates, seed,
      [&](Rng& rng, std::span<double> out) {
        const GradientVector g = mm_instance_gradient(model, fs, instance, config, rng);
        std::copy(g.begin(), g.end(), out.begin());
      },
      workers);
  return make_bias_report(std::move(moments.mean), std::move(moments.standard_error),
                          exact.values(), replicates);
}

namespace {

FeatureVector centered(const FeatureSet& fs, const Sequence& y,
                       const std::optional<FeatureVector>& center) {
  FeatureVector phi = fs.evaluate(Sequence{}, y);
  if (center) phi -= *center;
  return phi;
}

}  // namespace

std::vector<double> lemma1_target(const TabularModel& model, const FeatureSet& fs,
                                  const ZetaFunction& zeta, const Lemma1Options& options) {
  const Sequence x;
  const auto support = enumerate_support(model, x, options.enumeration_cap);
  std::vector<FeatureVector> phis;
  FeatureVector phi_hat(fs.dimension());
  for (const auto& e : support) {
    phis.push_back(centered(fs, e.sequence, options.center));
    phi_hat.add_scaled(phis.back(), e.prob);
  }
  std::vector<double> a;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const std::vector<double> z = zeta(support[k].sequence);
    if (a.empty()) a.assign(z.size(), 0.0);
    require(z.size() == a.size(), ErrorCode::kShapeMismatch, "zeta dimension varies");
    const double w = support[k].prob * dot(phi_hat, phis[k]);
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += w * z[i];
  }
  return a;
}

std::vector<double> lemma1_estimate(const FeatureSet& fs, std::span<const Sequence> draws,
                                    const ZetaFunction& zeta,
                                    const std::optional<FeatureVector>& center) {
  require(draws.size() >= 2, ErrorCode::kInvalidArgument, "lemma1 estimator needs J >= 2");
  std::vector<FeatureVector> phis;
  phis.reserve(draws.size());
  for (const auto& y : draws) phis.push_back(centered(fs, y, center));
  std::vector<double> b;
  const double inv_j = 1.0 / static_cast<double>(draws.size());
  for (std::size_t i = 0; i < draws.size(); ++i) {
    const std::vector<double> z = zeta(draws[i]);
    if (b.empty()) b.assign(z.size(), 0.0);
    require(z.size() == b.size(), ErrorCode::kShapeMismatch, "zeta dimension varies");
    const double w = inv_j * dot(jackknife_average(phis, i), phis[i]);
    for (std::size_t k = 0; k < b.size(); ++k) b[k] += w * z[k];
  }
  return b;
}

BiasReport lemma1_check(const TabularModel& model, const FeatureSet& fs,
                        const ZetaFunction& zeta, const Lemma1Options& options) {
  require(options.samples >= 2, ErrorCode::kInvalidArgument, "lemma1 check needs J >= 2");
  require(options.replicates >= kMinReplicates, ErrorCode::kInvalidArgument,
          "inconclusive: " + std::to_string(options.replicates) + " replicates, at least " +
              std::to_string(kMinReplicates) + " required");
  std::vector<double> exact = lemma1_target(model, fs, zeta, options);
  const Sequence x;
  auto moments = replicate_moments(
      exact.size(), options.replicates, options.seed,
      [&](Rng& rng, std::span<double> out) {
        std::vector<Sequence> draws;
        for (int j = 0; j < options.samples; ++j) draws.push_back(sample(model, x, rng));
        const auto b = lemma1_estimate(fs, draws, zeta, options.center);
        std::copy(b.begin(), b.end(), out.begin());
      },
      options.workers);
  return make_bias_report(std::move(moments.mean), std::move(moments.standard_error),
                          std::move(exact), options.replicates);
}

SamplerReport sampler_frequency_check(const TabularModel& model, const Sequence& x,
                                      std::uint64_t samples, std::uint64_t seed,
                                      std::uint64_t cap) {
  require(samples >= kMinReplicates, ErrorCode::kInvalidArgument,
          "sampler check needs at least " + std::to_string(kMinReplicates) + " samples");
  const auto support = enumerate_support(model, x, cap);
  std::unordered_map<Sequence, std::size_t, SequenceHash> index;
  for (std::size_t i = 0; i < support.size(); ++i) index.emplace(support[i].sequence, i);

  std::vector<std::uint64_t> counts(support.size(), 0);
  Rng rng(seed);
  for (std::uint64_t s = 0; s < samples; ++s) {
    auto it = index.find(sample(model, x, rng));
    require(it != index.end(), ErrorCode::kInvalidSequence, "sample outside the support");
    ++counts[it->second];
  }

  SamplerReport r;
  r.samples = samples;
  const auto n = static_cast<double>(samples);
  double pooled_expected = 0.0;
  double pooled_observed = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    const double observed = static_cast<double>(counts[i]);
    const double expected = n * support[i].prob;
    r.tv_distance += 0.5 * std::abs(observed / n - support[i].prob);
    if (expected < 5.0) {
      pooled_expected += expected;
      pooled_observed += observed;
      continue;
    }
    r.chi_square += (observed - expected) * (observed - expected) / expected;
    ++cells;
  }
  if (pooled_expected > 0.0) {
    r.chi_square +=
        (pooled_observed - pooled_expected) * (pooled_observed - pooled_expected) /
        pooled_expected;
    ++cells;
  }
  r.degrees_of_freedom = std::max(0, cells - 1);
  r.p_value = r.degrees_of_freedom == 0
                  ? 1.0
                  : boost::math::gamma_q(0.5 * r.degrees_of_freedom, 0.5 * r.chi_square);
  return r;
}

}  // namespace mmseq
