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

#include "mmseq/training.hpp"

#include <chrono>
#include <cmath>

#include "json.hpp"

namespace mmseq {
namespace {

constexpr std::uint64_t kStreamBatches = 1;
constexpr std::uint64_t kStreamMm = 2;
constexpr std::uint64_t kStreamEval = 3;
constexpr std::uint64_t kStreamWarmStart = 4;

StepKind scheduled_update(const TrainConfig& c, int step) {
  if (c.mode == TrainMode::kInterpolation) return StepKind::kInterpolation;
  const int period = c.ce_steps + c.mm_steps;
  return (step - 1) % period < c.ce_steps ? StepKind::kCe : StepKind::kMm;
}

}  // namespace

std::string train_mode_name(TrainMode mode) {
  return mode == TrainMode::kAlternation ? "alternation" : "interpolation";
}

TrainMode parse_train_mode(const std::string& name) {
  if (name == "alternation") return TrainMode::kAlternation;
  if (name == "interpolation") return TrainMode::kInterpolation;
  fail(ErrorCode::kInvalidArgument, "unknown training mode '" + name + "'");
}

std::string step_kind_name(StepKind kind) {
  switch (kind) {
    case StepKind::kNone: return "none";
    case StepKind::kCe: return "ce";
    case StepKind::kMm: return "mm";
    case StepKind::kInterpolation: return "interpolation";
  }
  return "unknown";
}

void TrainConfig::validate() const {
  estimator.validate();
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "lambda must be finite and >= 0");
  require(max_steps >= 1, ErrorCode::kInvalidArgument, "max_steps must be >= 1");
  require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch_size must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, ErrorCode::kInvalidArgument,
          "learning_rate must be positive");
  require(ce_steps >= 0 && mm_steps >= 0 && ce_steps + mm_steps >= 1,
          ErrorCode::kInvalidArgument, "alternation blocks must be >= 0 and not both zero");
  require(eval_every >= 1, ErrorCode::kInvalidArgument, "eval_every must be >= 1");
  require(dev_sample_count >= 1, ErrorCode::kInvalidArgument, "dev_sample_count must be >= 1");
  require(warm_start_steps >= 0, ErrorCode::kInvalidArgument,
          "warm_start_steps must be >= 0");
}

std::string to_json_line(const MetricsRecord& r, bool include_timing) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["update"] = step_kind_name(r.update);
  j["ce_loss_dev"] = r.ce_loss_dev;
  j["mm_loss_dev"] = r.mm_loss_dev;
  j["moment_gap"] = r.moment_gap;
  j["exact_match"] = r.exact_match;
  j["mm_samples"] = r.mm_samples;
  if (include_timing) j["wall_seconds"] = r.wall_seconds;
  return j.dump();
}

double dev_mm_loss(const TabularModel& model, const FeatureSet& fs, std::span<const Example> dev,
                   int samples, std::uint64_t seed) {
  return evaluate_dev(model, fs, dev, samples, seed).mm_loss;
}

DevEvaluation evaluate_dev(const TabularModel& model, const FeatureSet& fs,
                           std::span<const Example> dev, int samples, std::uint64_t seed) {
  require(!dev.empty(), ErrorCode::kInvalidArgument, "empty dev set");
  require(samples >= 1, ErrorCode::kInvalidArgument, "dev sample count must be >= 1");
  const std::size_t m = fs.dimension();
  DevEvaluation ev;
  ev.moment_gap.assign(m, 0.0);
  FeatureVector phi(m);
  std::size_t matches = 0;
  for (std::size_t n = 0; n < dev.size(); ++n) {
    const Example& ex = dev[n];
    Rng rng(derive_seed(seed, n));
    FeatureVector phi_hat(m);
    for (int s = 0; s < samples; ++s) {
      fs.evaluate_into(ex.source, sample(model, ex.source, rng), phi.span());
      for (std::size_t i = 0; i < m; ++i)
        phi_hat[i] += (phi[i] - phi_hat[i]) / static_cast<double>(s + 1);
    }
    const FeatureVector gap = phi_hat - empirical_average(fs, ex.source, ex.references);
    ev.mm_loss += squared_norm(gap);
    for (std::size_t i = 0; i < m; ++i) ev.moment_gap[i] += gap[i];

    const Sequence decoded = greedy_decode(model, ex.source);
    for (const auto& r : ex.references) {
      if (r == decoded) {
        ++matches;
        break;
      }
    }
  }
  const auto n = static_cast<double>(dev.size());
  ev.mm_loss /= n;
  for (double& g : ev.moment_gap) g /= n;
  ev.exact_match = static_cast<double>(matches) / n;
  ev.ce_loss = -mean_log_likelihood(model, dev);
  return ev;
}

GradientVector interpolate(const GradientVector& grad_ce, const GradientVector& grad_mm,
                           double lambda) {
  require(lambda >= 0.0 && std::isfinite(lambda), ErrorCode::kInvalidArgument,
          "lambda must be finite and >= 0");
  require(grad_ce.size() == grad_mm.size(), ErrorCode::kShapeMismatch,
          "interpolate: gradient sizes differ");
  if (lambda == 0.0) return grad_ce;
  GradientVector out = grad_ce;
  out.add_scaled(grad_mm, lambda);
  return out;
}

std::uint64_t evaluation_seed(const TrainConfig& config) {
  return derive_seed(config.seed, kStreamEval);
}

TabularModel warm_start(TabularModel model, const ParallelCorpus& train_corpus,
                        const TrainConfig& config) {
  config.validate();
  if (config.warm_start_steps == 0) return model;
  BatchIterator batches(train_corpus.size(), static_cast<std::size_t>(config.batch_size),
                        derive_seed(config.seed, kStreamWarmStart));
  for (int step = 1; step <= config.warm_start_steps; ++step) {
    const auto batch = gather(train_corpus, batches.next());
    apply_update(model, ce_gradient(model, batch), config.learning_rate);
  }
  return model;
}

TrainResult train(const TrainConfig& config, TabularModel model, const FeatureSet& fs,
                  const ParallelCorpus& train_corpus, const ParallelCorpus& dev_corpus,
                  const MetricsObserver& observer) {
  config.validate();
  require(train_corpus.size() >= 1 && dev_corpus.size() >= 1, ErrorCode::kInvalidArgument,
          "training and dev corpora must be non-empty");
  const auto started = std::chrono::steady_clock::now();
  BatchIterator batches(train_corpus.size(), static_cast<std::size_t>(config.batch_size),
                        derive_seed(config.seed, kStreamBatches));
  Rng mm_rng(derive_seed(config.seed, kStreamMm));
  const std::uint64_t eval_seed = evaluation_seed(config);

  TrainResult result{model, Checkpoint{model, 0, 0.0}, {}, 0};
  bool have_best = false;

  auto record = [&](int step, StepKind update) {
    const DevEvaluation ev = evaluate_dev(model, fs, dev_corpus.examples,
                                          config.dev_sample_count, eval_seed);
    MetricsRecord r;
    r.step = step;
    r.update = update;
    r.ce_loss_dev = ev.ce_loss;
    r.mm_loss_dev = ev.mm_loss;
    r.moment_gap = ev.moment_gap;
    r.exact_match = ev.exact_match;
    r.mm_samples = result.mm_samples;
    r.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (!have_best || r.mm_loss_dev < result.best.mm_loss_dev) {
      result.best = Checkpoint{model, step, r.mm_loss_dev};
      have_best = true;
    }
    result.metrics.push_back(r);
    if (observer) observer(r);
  };

  auto mm_gradient = [&](std::span<const Example> batch) {
    result.mm_samples += config.estimator.draws_per_instance() * batch.size();
    return mm_batch_gradient(model, fs, batch, config.estimator, mm_rng);
  };

  record(0, StepKind::kNone);
  for (int step = 1; step <= config.max_steps; ++step) {
    const auto batch = gather(train_corpus, batches.next());
    const StepKind kind = scheduled_update(config, step);
    try {
      switch (kind) {
        case StepKind::kCe:
          apply_update(model, ce_gradient(model, batch), config.learning_rate);
          break;
        case StepKind::kMm:
          // Descend the MM loss.
          apply_update(model, mm_gradient(batch), -config.learning_rate);
          break;
        case StepKind::kInterpolation: {
          GradientVector update = ce_gradient(model, batch);
          if (config.lambda > 0.0) update = interpolate(update, -1.0 * mm_gradient(batch),
                                                        config.lambda);
          apply_update(model, update, config.learning_rate);
          break;
        }
        case StepKind::kNone:
          break;
      }
    } catch (const Error& e) {
      fail(e.code(), "step " + std::to_string(step) + ": " + e.what());
    }
    if (step % config.eval_every == 0 || step == config.max_steps) record(step, kind);
  }
  result.final_model = std::move(model);
  return result;
}

}  // namespace mmseq
