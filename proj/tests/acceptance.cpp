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

// Acceptance gate: one PASS/FAIL line per criterion.
// Usage: mmseq_acceptance <configs dir> <scratch dir> [criterion numbers...]

#include <chrono>
#include <cstdarg>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <string>

#include "mmseq/commands.hpp"
#include "mmseq/training.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace mmseq;
using testing::seq;

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

class Clock {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

std::string fmt(const char* format, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* format, ...) {
  char buf[1024];
  va_list args;
  va_start(args, format);
  std::vsnprintf(buf, sizeof buf, format, args);
  va_end(args);
  return buf;
}

std::string summary(const BiasReport& r) {
  return fmt("within4=%.4f max|z|=%.2f", r.fraction_within_4, r.max_abs_z);
}

double squared_distance(const FeatureVector& a, const FeatureVector& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

// 1. Exact gradient against central differences of the oracle loss.
Outcome gradient_correctness() {
  const Clock clock;
  const Vocabulary src = testing::names("s", 2);
  const Vocabulary tgt = testing::names("t", 3);
  FeatureSet features;
  features.add(std::make_shared<LengthRatioFeature>(1.0));
  features.add(std::make_shared<TargetLengthFeature>(), 0.5);
  features.add(std::make_shared<LexicalDictFeature>(
      LexDictionary({{"s0", "t0", 1.0}, {"s1", "t2", 1.0}}, 0.5), src, tgt));
  const auto phi = [&](const Sequence& x, const Sequence& y) {
    return features.evaluate(x, y).values();
  };

  const int instances = 24;
  std::mt19937_64 gen(2024);
  double worst = 0.0;
  for (int i = 0; i < instances; ++i) {
    const TabularModel m =
        TabularModel::random(src, tgt, 1, 3, 1.0, static_cast<std::uint64_t>(1000 + i));
    std::vector<Example> batch;
    for (int n = 0; n < 2; ++n) {
      Example ex{testing::random_sequence(gen, 2, 1, 3), {}};
      for (int r = 0; r < 1 + n; ++r) ex.references.push_back(testing::random_sequence(gen, 3, 0, 3));
      batch.push_back(std::move(ex));
    }
    const GradientVector analytic = mm_gradient_exact(m, features, batch);
    const auto numeric = oracle::central_difference(
        oracle::with_params(m, [&](const TabularModel& p) { return oracle::mm_loss(p, phi, batch); }),
        oracle::params_of(m), 1e-5);
    worst = std::max(worst, max_relative_error(analytic.values(), numeric));
  }
  const double secs = clock.seconds();
  return {worst <= 1e-5 && secs < 30.0,
          fmt("%d instances, m=%zu, max rel err %.2e, %.1fs", instances, features.dimension(), worst,
              secs)};
}

// 2. Jackknife, simplistic and the leave-one-out identity pass the unbiasedness rule.
Outcome unbiasedness() {
  const Clock clock;
  const VerifyConfig v = default_run_config().verify;
  const TinyInstance tiny = standard_tiny_instance(v, derive_seed(1, 40));
  const std::uint64_t reps = 200000;

  EstimatorConfig jk;
  jk.strategy = Strategy::kJackknife;
  jk.samples = 3;
  const BiasReport a = estimator_bias_report(tiny.model, tiny.features, tiny.example, jk, reps, 21);

  EstimatorConfig simple;
  simple.strategy = Strategy::kSimplistic;
  simple.samples = 2;
  simple.average_samples = 2;
  const BiasReport b =
      estimator_bias_report(tiny.model, tiny.features, tiny.example, simple, reps, 22);

  FeatureSet length_only;
  length_only.add(std::make_shared<TargetLengthFeature>());
  Lemma1Options opt;
  opt.samples = 2;
  opt.replicates = reps;
  opt.seed = 23;
  const TabularModel& m = tiny.model;
  const BiasReport c = lemma1_check(
      m, length_only, [&m](const Sequence& y) { return grad_log_prob(m, Sequence{}, y).values(); },
      opt);
  const double secs = clock.seconds();
  const bool nontrivial = oracle::max_abs(a.exact) > 0.0 && oracle::max_abs(c.exact) > 0.0;
  return {a.passes_unbiasedness_rule() && b.passes_unbiasedness_rule() &&
              c.passes_unbiasedness_rule() && nontrivial && secs < 300.0,
          "jackknife " + summary(a) + "; simplistic " + summary(b) + "; lemma1 " + summary(c) +
              fmt("; %.1fs", secs)};
}

// 3. Economical estimator at J = 1: positive scores, visible bias.
Outcome economical_bias() {
  const VerifyConfig v = default_run_config().verify;
  const TinyInstance inst = unmatched_instance(v, derive_seed(1, 41));
  const FeatureVector phi_bar =
      empirical_average(inst.features, inst.example.source, inst.example.references);
  const std::uint64_t reps = 200000;
  std::uint64_t differing = 0, violations = 0;
  std::vector<ScoredSample> trace;
  for (std::uint64_t r = 0; r < reps; ++r) {
    Rng rng(derive_seed(31, r));
    mm_gradient_economical(inst.model, inst.features, inst.example.source,
                           inst.example.references, 1, rng, &trace);
    const FeatureVector phi_y = inst.features.evaluate(inst.example.source, trace[0].sequence);
    const double expected = squared_distance(phi_y, phi_bar);
    if (phi_y != phi_bar) {
      ++differing;
      if (!(trace[0].score > 0.0)) ++violations;
    }
    if (std::abs(trace[0].score - expected) > 1e-12 * std::max(1.0, expected)) ++violations;
  }
  EstimatorConfig eco;
  eco.strategy = Strategy::kEconomical;
  eco.samples = 1;
  const BiasReport r =
      estimator_bias_report(inst.model, inst.features, inst.example, eco, reps, 32);
  return {violations == 0 && differing > 0 && r.max_abs_z > 4.0,
          fmt("%llu/%llu draws with phi(y) != phi_bar, %llu score violations, ",
              static_cast<unsigned long long>(differing), static_cast<unsigned long long>(reps),
              static_cast<unsigned long long>(violations)) +
              summary(r)};
}

// 4. The score function has zero mean.
Outcome zero_mean_score() {
  double worst_exact = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TabularModel m = testing::random_model(2 + static_cast<int>(seed % 3), 3,
                                                 3 + static_cast<int>(seed % 3), seed, 2.0);
    const Sequence x = seq({1, 2});
    worst_exact = std::max(worst_exact, oracle::max_abs(score_function_mean_exact(m, x).values()));
  }

  const TabularModel m = testing::random_model(2, 3, 3, 77);
  const Sequence x = seq({2, 1});
  const RewardFunction one = [](const Sequence&, const Sequence&) { return 1.0; };
  const std::uint64_t reps = 200000;
  std::vector<double> mean(m.parameter_count(), 0.0), m2(m.parameter_count(), 0.0);
  Rng rng(41);
  for (std::uint64_t r = 0; r < reps; ++r) {
    const GradientVector g = rl_pg_gradient(m, one, x, 1, rng);
    for (std::size_t i = 0; i < mean.size(); ++i) {
      const double d = g[i] - mean[i];
      mean[i] += d / static_cast<double>(r + 1);
      m2[i] += d * (g[i] - mean[i]);
    }
  }
  double worst_z = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double se = std::sqrt(m2[i] / static_cast<double>(reps - 1) / static_cast<double>(reps));
    const double z = se > 0.0 ? std::abs(mean[i]) / se : (mean[i] == 0.0 ? 0.0 : INFINITY);
    worst_z = std::max(worst_z, z);
  }
  return {worst_exact <= 1e-8 && worst_z <= 4.0,
          fmt("max |enumerated mean| %.2e, constant-reward MC max |z| %.2f", worst_exact, worst_z)};
}

// 5. Interpolated MM training halves the dev MM loss without hurting CE by more than 10%.
Outcome training_effectiveness(const fs::path& configs, const fs::path& scratch) {
  std::string detail;
  bool ok = true;
  for (const char* task : {"length_control", "token_map"}) {
    const Clock clock;
    RunConfig c = load_run_config(configs / (std::string(task) + ".json"));
    c.out = (scratch / task).string();
    const bool shape = c.task.kind == task && c.task.source_vocab_size == 5 &&
                       c.task.target_vocab_size == 5 && c.model.max_len == 8 &&
                       c.task.train_size == 2000 && c.task.dev_size == 200 &&
                       c.train.mode == TrainMode::kInterpolation && c.train.lambda == 0.5 &&
                       c.train.estimator.strategy == Strategy::kJackknife &&
                       c.train.estimator.samples == 5 && c.train.warm_start_steps == 1000 &&
                       c.train.max_steps == 2000;
    bool lexicon = true;
    if (std::string(task) == "token_map") {
      const TaskData data = build_task(c);
      const FeatureSet f =
          build_feature_set(c.features, data.train.source_vocab, data.train.target_vocab, data.spec);
      lexicon = f.component_count() == 1 && f.component(0).name() == "lexical_dict" &&
                f.dimension() == 5;
    }
    const auto s = run_train(c);
    const double initial = s["initial_mm_loss_dev"], best = s["best_mm_loss_dev"];
    const double ce0 = s["initial_ce_loss_dev"], ce_best = s["best_ce_loss_dev"];
    const double ce_change = (ce_best - ce0) / ce0;
    const double secs = clock.seconds();
    const bool pass = shape && lexicon && best <= 0.5 * initial && ce_change <= 0.10 && secs < 600.0;
    ok = ok && pass;
    detail += fmt("%s%s: mm %.5f -> %.5f (x%.3f) at step %d, ce %+.1f%%, %.0fs%s",
                  detail.empty() ? "" : "; ", task, initial, best, best / initial,
                  s["best_step"].get<int>(), 100.0 * ce_change, secs,
                  shape && lexicon ? "" : " [config mismatch]");
  }
  return {ok, detail};
}

// 6. lambda = 0 interpolation is pure CE, bit for bit.
Outcome degenerate_mode(const fs::path& configs) {
  RunConfig c = load_run_config(configs / "length_control.json");
  const TaskData data = build_task(c);
  const FeatureSet features =
      build_feature_set(c.features, data.train.source_vocab, data.train.target_vocab, data.spec);
  const TabularModel init = initial_model(c, data);
  bool ok = true;
  std::uint64_t samples = 0;
  int compared = 0;
  for (int steps : {1, 10, 100, 300}) {
    TrainConfig t = c.train;
    t.max_steps = steps;
    t.eval_every = steps;
    t.lambda = 0.0;
    const TrainResult r = train(t, init, features, data.train, data.dev);
    samples += r.mm_samples;

    TabularModel manual = init;
    BatchIterator batches(data.train.size(), static_cast<std::size_t>(t.batch_size),
                          derive_seed(t.seed, 1));
    for (int step = 0; step < steps; ++step)
      apply_update(manual, ce_gradient(manual, gather(data.train, batches.next())),
                   t.learning_rate);

    TrainConfig alt = t;
    alt.mode = TrainMode::kAlternation;
    alt.mm_steps = 0;
    const TrainResult a = train(alt, init, features, data.train, data.dev);
    ok = ok && r.final_model == manual && a.final_model == manual;
    ++compared;
  }
  return {ok && samples == 0,
          fmt("%d horizons up to 300 steps identical to a hand-written CE loop, %llu MM samples",
              compared, static_cast<unsigned long long>(samples))};
}

// 7. Ancestral sampling matches the enumerated distribution.
Outcome sampler_fidelity() {
  // Seven atoms: the empty target and every target of length 1 or 2 over two tokens.
  const TabularModel small = testing::random_model(2, 2, 2, 52);
  const SamplerReport r = sampler_frequency_check(small, seq({1, 2}), 1000000, 51);
  const TinyInstance tiny = standard_tiny_instance(default_run_config().verify, derive_seed(1, 40));
  const SamplerReport t = sampler_frequency_check(tiny.model, tiny.example.source, 1000000, 53);
  return {r.p_value > 0.001 && r.tv_distance < 0.002 && t.p_value > 0.001,
          fmt("1e6 samples, %d atoms: chi2=%.2f p=%.3f TV=%.5f; tiny instance, %d atoms: p=%.3f "
              "TV=%.5f",
              r.degrees_of_freedom + 1, r.chi_square, r.p_value, r.tv_distance,
              t.degrees_of_freedom + 1, t.p_value, t.tv_distance)};
}

// 8. Feature example tables and the dictionary threshold.
Outcome feature_units(const fs::path& configs) {
  int checks = 0, wrong = 0;
  auto expect = [&](bool ok) {
    ++checks;
    if (!ok) ++wrong;
  };
  auto len = [](std::size_t n) {
    Sequence s;
    s.ids.assign(n, 1);
    return s;
  };
  expect(length_ratio(len(3), len(3), 1.0) == 1.0);
  expect(length_ratio(len(2), len(4), 1.0) == 0.5);
  expect(length_ratio(len(3), len(4), 2.0) == 4.0 / 6.0);
  expect(length_ratio(len(3), len(0), 1.0) == 0.0);

  const Vocabulary src = Vocabulary::with_eos({"a", "c"});
  const Vocabulary tgt = Vocabulary::with_eos({"b", "d"});
  const LexDictionary ab({{"a", "b", 0.9}}, 0.5);
  expect(lexical_dict_features(ab, src, tgt, src.encode("a c"), tgt.encode("d b"))[0] == 1.0);
  expect(lexical_dict_features(ab, src, tgt, src.encode("a"), tgt.encode("d"))[0] == 0.0);
  expect(lexical_dict_features(ab, src, tgt, src.encode("c"), tgt.encode("b"))[0] == 0.0);
  expect(lexical_dict_features(ab, src, tgt, src.encode("c"), tgt.encode("d d"))[0] == 0.0);

  FeatureSet one;
  one.add(std::make_shared<LengthRatioFeature>(1.0));
  expect(one.evaluate(src.encode("a c"), tgt.encode("b d")).values() == std::vector<double>{1.0});
  FeatureSet two;
  two.add(std::make_shared<LengthRatioFeature>(1.0));
  two.add(std::make_shared<LexicalDictFeature>(ab, src, tgt));
  expect(two.evaluate(src.encode("a c"), tgt.encode("b d d d")).values() ==
         std::vector<double>{0.5, 1.0});
  FeatureSet constant;
  constant.add(std::make_shared<ConstantFeature>(0.7));
  expect(constant.evaluate(src.encode("c"), tgt.encode("")).values() == std::vector<double>{0.7});

  const LexDictionary both({{"a", "b", 1.0}, {"a", "d", 1.0}}, 0.5);
  FeatureSet lex;
  lex.add(std::make_shared<LexicalDictFeature>(both, src, tgt));
  const std::vector<Sequence> refs{tgt.encode("b"), tgt.encode("d")};
  expect(empirical_average(lex, src.encode("a"), refs).values() == std::vector<double>{0.5, 0.5});
  expect(empirical_average(lex, src.encode("a"), std::span(refs).first(1)) ==
         lex.evaluate(src.encode("a"), refs[0]));

  auto parse = [](const std::string& text) {
    std::istringstream in(text);
    return load_lex_dictionary(in, 0.5);
  };
  expect(parse("casa house 0.6\n").size() == 1);
  expect(parse("casa home 0.4\n").empty());
  expect(parse("casa house 0.5\n").size() == 1);
  bool parse_error = false;
  try {
    parse("casa house\n");
  } catch (const Error& e) {
    parse_error = e.code() == ErrorCode::kParse &&
                  std::string(e.what()).find("line 1") != std::string::npos;
  }
  expect(parse_error);

  std::ifstream table(configs / "token_map.lex");
  const LexDictionary shipped = load_lex_dictionary(table, 0.5);
  expect(shipped.size() == 5);
  for (const auto& e : shipped.entries()) expect(e.probability >= 0.5);

  return {wrong == 0 && checks > 0, fmt("%d/%d table entries exact", checks - wrong, checks)};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <configs dir> <scratch dir> [criteria...]\n", argv[0]);
    return 2;
  }
  const fs::path configs = argv[1];
  const fs::path scratch = argv[2];
  fs::create_directories(scratch);
  std::set<int> only;
  for (int i = 3; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"estimator unbiasedness", unbiasedness},
      {"economical estimator bias", economical_bias},
      {"zero-mean score function", zero_mean_score},
      {"training effectiveness", [&] { return training_effectiveness(configs, scratch); }},
      {"degenerate-mode equivalence", [&] { return degenerate_mode(configs); }},
      {"sampler fidelity", sampler_fidelity},
      {"feature units", [&] { return feature_units(configs); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i + 1);
    if (!only.empty() && !only.count(number)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    if (!o.passed) ++failed;
    std::printf("%s criterion %d (%s): %s\n", o.passed ? "PASS" : "FAIL", number,
                criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
