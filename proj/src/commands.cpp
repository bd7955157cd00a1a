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

#include "mmseq/commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#ifndef MMSEQ_VERSION
#define MMSEQ_VERSION "0.0.0"
#endif

namespace mmseq {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kStreamTrainCorpus = 10;
constexpr std::uint64_t kStreamDevCorpus = 11;
constexpr std::uint64_t kStreamModelInit = 12;
constexpr std::uint64_t kStreamBias = 20;
constexpr std::uint64_t kStreamLemma1 = 30;
constexpr std::uint64_t kStreamTinyModel = 40;
constexpr std::uint64_t kStreamUnmatchedModel = 41;
constexpr std::uint64_t kStreamGradcheck = 100;

std::ifstream open_input(const std::string& path, const char* what) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, std::string("cannot open ") + what + " '" + path + "'");
  return in;
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

void make_directory(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create directory '" + dir.string() + "': " + ec.message());
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

json vector_json(const std::vector<double>& v) {
  json out = json::array();
  for (double x : v) out.push_back(finite_or_string(x));
  return out;
}

// Probe vocabularies and lexicon pairs for the tiny instances.
SyntheticTaskSpec probe_spec(int source_vocab_size, int target_vocab_size) {
  SyntheticTaskSpec spec;
  spec.kind = SyntheticKind::kTokenMap;
  spec.source_vocab_size = source_vocab_size;
  spec.target_vocab_size = target_vocab_size;
  spec.max_length = 1;
  spec.max_len = 1;
  for (int k = 0; k < source_vocab_size; ++k) spec.mapping.push_back(k % target_vocab_size);
  return spec;
}

Sequence first_tokens(std::size_t count, std::size_t vocab_size) {
  Sequence s;
  for (std::size_t i = 0; i < count; ++i)
    s.ids.push_back(static_cast<TokenId>(i % vocab_size + 1));
  return s;
}

EstimatorConfig estimator_for(Strategy strategy, const VerifyConfig& v, std::uint64_t cap) {
  EstimatorConfig c;
  c.strategy = strategy;
  c.enumeration_cap = cap;
  switch (strategy) {
    case Strategy::kExact: break;
    case Strategy::kJackknife: c.samples = v.jackknife_J; break;
    case Strategy::kSimplistic:
      c.samples = v.simplistic_J;
      c.average_samples = v.simplistic_K;
      break;
    case Strategy::kEconomical: c.samples = v.economical_J; break;
  }
  return c;
}

}  // namespace

const char* library_version() { return MMSEQ_VERSION; }

SyntheticTaskSpec synthetic_spec(const RunConfig& config) {
  const auto& t = config.task;
  SyntheticTaskSpec spec;
  spec.kind = parse_synthetic_kind(t.kind);
  spec.source_vocab_size = t.source_vocab_size;
  spec.target_vocab_size = t.target_vocab_size;
  spec.min_length = t.min_length;
  spec.max_length = t.max_length;
  spec.size = t.train_size;
  spec.max_len = config.model.max_len;
  spec.mapping = t.mapping;
  spec.ratio = t.ratio;
  spec.seed = derive_seed(config.seed, kStreamTrainCorpus);
  return spec;
}

TaskData build_task(const RunConfig& config) {
  TaskData data;
  const auto& t = config.task;
  if (t.kind == "corpus") {
    auto src = open_input(t.train_source, "training source file");
    auto tgt = open_input(t.train_target, "training target file");
    data.train = load_parallel_corpus(src, tgt);
    auto dsrc = open_input(t.dev_source, "dev source file");
    auto dtgt = open_input(t.dev_target, "dev target file");
    data.dev = load_parallel_corpus(dsrc, dtgt, data.train.source_vocab, data.train.target_vocab);
    return data;
  }
  SyntheticTaskSpec spec;
  try {
    spec = synthetic_spec(config);
    spec.validate();
  } catch (const Error& e) {
    fail(ErrorCode::kConfig, std::string("task: ") + e.what());
  }
  data.train = generate_synthetic(spec);
  SyntheticTaskSpec dev_spec = spec;
  dev_spec.size = t.dev_size;
  dev_spec.seed = derive_seed(config.seed, kStreamDevCorpus);
  data.dev = generate_synthetic(dev_spec);
  data.spec = spec;
  return data;
}

FeatureSet build_feature_set(const std::vector<FeatureSpec>& specs, const Vocabulary& source_vocab,
                             const Vocabulary& target_vocab,
                             const std::optional<SyntheticTaskSpec>& task) {
  require(!specs.empty(), ErrorCode::kConfig, "feature list is empty");
  FeatureSet fs;
  for (const auto& f : specs) {
    if (f.type == "length_ratio") {
      fs.add(std::make_shared<LengthRatioFeature>(f.beta), f.scale);
    } else if (f.type == "lexical_dict") {
      LexDictionary dict;
      if (!f.path.empty()) {
        auto in = open_input(f.path, "dictionary file");
        dict = load_lex_dictionary(in, f.threshold);
      } else if (task && task->kind == SyntheticKind::kTokenMap) {
        dict = synthetic_lexicon(*task);
      } else {
        fail(ErrorCode::kConfig, "lexical_dict feature needs a path unless the task is token_map");
      }
      fs.add(std::make_shared<LexicalDictFeature>(std::move(dict), source_vocab, target_vocab),
             f.scale);
    } else if (f.type == "constant") {
      fs.add(std::make_shared<ConstantFeature>(f.value), f.scale);
    } else if (f.type == "target_length") {
      fs.add(std::make_shared<TargetLengthFeature>(), f.scale);
    } else {
      fail(ErrorCode::kConfig, "unknown feature type '" + f.type + "'");
    }
  }
  return fs;
}

TabularModel initial_model(const RunConfig& config, const TaskData& data) {
  return TabularModel::random(data.train.source_vocab, data.train.target_vocab,
                              config.model.context_order, config.model.max_len,
                              config.model.init_scale,
                              derive_seed(config.seed, kStreamModelInit));
}

TinyInstance standard_tiny_instance(const VerifyConfig& config, std::uint64_t seed) {
  const SyntheticTaskSpec spec = probe_spec(config.source_vocab_size, config.target_vocab_size);
  TabularModel model =
      TabularModel::random(spec.source_vocab(), spec.target_vocab(), config.context_order,
                           config.max_len, config.logit_scale, seed);
  Example ex;
  ex.source = first_tokens(2, static_cast<std::size_t>(config.source_vocab_size));
  ex.references.push_back(
      first_tokens(std::min<std::size_t>(2, static_cast<std::size_t>(config.max_len)),
                   static_cast<std::size_t>(config.target_vocab_size)));
  FeatureSet fs = build_feature_set(config.features, model.source_vocab(), model.target_vocab(),
                                    spec);
  return {std::move(model), std::move(ex), std::move(fs)};
}

TinyInstance unmatched_instance(const VerifyConfig& config, std::uint64_t seed) {
  const SyntheticTaskSpec spec = probe_spec(config.source_vocab_size, config.target_vocab_size);
  TabularModel model =
      TabularModel::random(spec.source_vocab(), spec.target_vocab(), config.context_order,
                           config.max_len, config.logit_scale, seed);
  const TokenId eos = model.target_vocab().eos_id();
  for (std::size_t row = 0; row < model.row_count(); ++row)
    model.row_logits(row)[static_cast<std::size_t>(eos)] += 3.0;
  Example ex;
  ex.source = first_tokens(1, static_cast<std::size_t>(config.source_vocab_size));
  ex.references.push_back(first_tokens(static_cast<std::size_t>(config.max_len), 1));
  FeatureSet fs;
  fs.add(std::make_shared<TargetLengthFeature>());
  return {std::move(model), std::move(ex), std::move(fs)};
}

json to_json(const BiasReport& r) {
  return json{{"replicates", r.replicates},
              {"max_abs_z", finite_or_string(r.max_abs_z)},
              {"fraction_within_4", r.fraction_within_4},
              {"passes_unbiasedness_rule", r.passes_unbiasedness_rule()},
              {"exact_match", r.exact_match()},
              {"mean", vector_json(r.mean)},
              {"standard_error", vector_json(r.standard_error)},
              {"exact", vector_json(r.exact)},
              {"z_scores", vector_json(r.z_scores)}};
}

json run_train(const RunConfig& config) {
  const TaskData data = build_task(config);
  const FeatureSet fs = build_feature_set(config.features, data.train.source_vocab,
                                          data.train.target_vocab, data.spec);
  const fs::path out(config.out);
  make_directory(out);

  std::ofstream metrics(out / "metrics.jsonl", std::ios::binary);
  std::ofstream timing(out / "timing.jsonl", std::ios::binary);
  if (!metrics || !timing) fail(ErrorCode::kIo, "cannot write metrics into '" + out.string() + "'");

  TabularModel model = warm_start(initial_model(config, data), data.train, config.train);
  const TrainResult result =
      train(config.train, std::move(model), fs, data.train, data.dev,
            [&](const MetricsRecord& r) {
              metrics << to_json_line(r) << '\n' << std::flush;
              timing << json{{"step", r.step}, {"wall_seconds", r.wall_seconds}}.dump() << '\n';
            });

  {
    std::ofstream f(out / "checkpoint_final.json", std::ios::binary);
    save_checkpoint(result.final_model, f);
    std::ofstream b(out / "checkpoint_best.json", std::ios::binary);
    save_checkpoint(result.best.model, b);
    if (!f || !b) fail(ErrorCode::kIo, "cannot write checkpoints into '" + out.string() + "'");
  }
  write_file(out / "best.json", json{{"step", result.best.step},
                                     {"mm_loss_dev", result.best.mm_loss_dev},
                                     {"checkpoint", "checkpoint_best.json"}}
                                    .dump(2) +
                                    "\n");
  write_file(out / "manifest.json", json{{"command", "train"},
                                         {"config", to_json(config)},
                                         {"config_hash", config_hash(config)},
                                         {"seed", config.seed},
                                         {"version", library_version()}}
                                        .dump(2) +
                                        "\n");

  const MetricsRecord& first = result.metrics.front();
  const MetricsRecord& last = result.metrics.back();
  double best_ce = first.ce_loss_dev;
  for (const auto& r : result.metrics)
    if (r.step == result.best.step) best_ce = r.ce_loss_dev;
  return json{{"out", out.string()},
              {"initial_mm_loss_dev", first.mm_loss_dev},
              {"initial_ce_loss_dev", first.ce_loss_dev},
              {"best_step", result.best.step},
              {"best_mm_loss_dev", result.best.mm_loss_dev},
              {"best_ce_loss_dev", best_ce},
              {"final_mm_loss_dev", last.mm_loss_dev},
              {"final_exact_match", last.exact_match},
              {"mm_samples", result.mm_samples}};
}

CheckOutcome run_verify(const RunConfig& config, unsigned workers) {
  const VerifyConfig& v = config.verify;
  const fs::path out = fs::path(config.out) / "verify";
  CheckOutcome outcome{true, json::object()};
  json strategies = json::object();

  std::vector<Strategy> selected;
  for (const auto& name : v.strategies) selected.push_back(parse_strategy(name));
  std::vector<json> files;

  for (Strategy s : selected) {
    const bool economical = s == Strategy::kEconomical;
    const TinyInstance inst =
        economical ? unmatched_instance(v, derive_seed(config.seed, kStreamUnmatchedModel))
                   : standard_tiny_instance(v, derive_seed(config.seed, kStreamTinyModel));
    const EstimatorConfig ec = estimator_for(s, v, config.enumeration_cap);
    const BiasReport r =
        estimator_bias_report(inst.model, inst.features, inst.example, ec, v.replicates,
                              derive_seed(config.seed, kStreamBias + static_cast<int>(s)),
                              workers);
    bool ok = false;
    std::string expectation;
    switch (s) {
      case Strategy::kExact:
        ok = r.exact_match();
        expectation = "exact match";
        break;
      case Strategy::kJackknife:
      case Strategy::kSimplistic:
        ok = r.passes_unbiasedness_rule();
        expectation = "unbiased";
        break;
      case Strategy::kEconomical:
        ok = !r.passes_unbiasedness_rule();
        expectation = "biased";
        break;
    }
    json entry = to_json(r);
    entry["strategy"] = std::string(strategy_name(s));
    entry["instance"] = economical ? "unmatched" : "standard";
    entry["J"] = ec.samples;
    if (s == Strategy::kSimplistic) entry["K"] = ec.average_samples;
    entry["expectation"] = expectation;
    entry["passed"] = ok;
    outcome.passed = outcome.passed && ok;
    strategies[std::string(strategy_name(s))] = {{"passed", ok},
                                                 {"expectation", expectation},
                                                 {"max_abs_z", entry["max_abs_z"]},
                                                 {"fraction_within_4", r.fraction_within_4}};
    files.push_back(std::move(entry));
  }

  json lemma = nullptr;
  if (v.lemma1) {
    TinyInstance inst = standard_tiny_instance(v, derive_seed(config.seed, kStreamTinyModel));
    FeatureSet length_only;
    length_only.add(std::make_shared<TargetLengthFeature>());
    Lemma1Options opt;
    opt.samples = v.lemma1_J;
    opt.replicates = v.replicates;
    opt.seed = derive_seed(config.seed, kStreamLemma1);
    opt.enumeration_cap = config.enumeration_cap;
    opt.workers = workers;
    const TabularModel& model = inst.model;
    const ZetaFunction zeta = [&model](const Sequence& y) {
      return grad_log_prob(model, Sequence{}, y).values();
    };
    const BiasReport r = lemma1_check(model, length_only, zeta, opt);
    const bool ok = r.passes_unbiasedness_rule();
    lemma = to_json(r);
    lemma["J"] = v.lemma1_J;
    lemma["passed"] = ok;
    outcome.passed = outcome.passed && ok;
    strategies["lemma1"] = {{"passed", ok},
                            {"expectation", "unbiased"},
                            {"max_abs_z", lemma["max_abs_z"]},
                            {"fraction_within_4", r.fraction_within_4}};
  }

  make_directory(out);
  for (const auto& f : files)
    write_file(out / (f["strategy"].get<std::string>() + ".json"), f.dump(2) + "\n");
  if (!lemma.is_null()) write_file(out / "lemma1.json", lemma.dump(2) + "\n");
  outcome.report = json{{"passed", outcome.passed},
                        {"replicates", v.replicates},
                        {"checks", strategies},
                        {"out", out.string()}};
  write_file(out / "summary.json", outcome.report.dump(2) + "\n");
  return outcome;
}

CheckOutcome run_gradcheck(const RunConfig& config, bool drop_factor_two) {
  const GradcheckConfig& g = config.gradcheck;
  const SyntheticTaskSpec spec = probe_spec(g.source_vocab_size, g.target_vocab_size);
  const Vocabulary src = spec.source_vocab();
  const Vocabulary tgt = spec.target_vocab();
  const FeatureSet fs = build_feature_set(g.features, src, tgt, spec);

  double worst = 0.0;
  json per_instance = json::array();
  for (int i = 0; i < g.instances; ++i) {
    const std::uint64_t seed = derive_seed(config.seed, kStreamGradcheck + static_cast<std::uint64_t>(i));
    Rng rng(derive_seed(seed, 1));
    TabularModel model =
        TabularModel::random(src, tgt, g.context_order, g.max_len, g.logit_scale, seed);
    std::uniform_int_distribution<int> src_len(1, 3);
    std::uniform_int_distribution<int> tgt_len(0, g.max_len);
    std::uniform_int_distribution<int> src_tok(1, g.source_vocab_size);
    std::uniform_int_distribution<int> tgt_tok(1, g.target_vocab_size);
    std::uniform_int_distribution<int> ref_count(1, 2);
    std::vector<Example> batch(2);
    for (auto& ex : batch) {
      for (int t = src_len(rng); t > 0; --t) ex.source.ids.push_back(src_tok(rng));
      for (int r = ref_count(rng); r > 0; --r) {
        Sequence y;
        for (int t = tgt_len(rng); t > 0; --t) y.ids.push_back(tgt_tok(rng));
        ex.references.push_back(std::move(y));
      }
    }

    GradientVector analytic = mm_gradient_exact(model, fs, batch, config.enumeration_cap);
    if (drop_factor_two) analytic *= 0.5;
    TabularModel probe = model;
    const ScalarLoss loss = [&](std::span<const double> params) {
      std::copy(params.begin(), params.end(), probe.logits().begin());
      return mm_loss_exact(probe, fs, batch, config.enumeration_cap);
    };
    const std::vector<double> params(model.logits().begin(), model.logits().end());
    const std::vector<double> numeric = finite_difference_gradient(loss, params, g.h);
    const double err = max_relative_error(analytic.span(), numeric);
    worst = std::max(worst, err);
    per_instance.push_back({{"instance", i}, {"max_relative_error", err}});
  }
  CheckOutcome outcome;
  outcome.passed = worst <= g.tolerance;
  outcome.report = json{{"passed", outcome.passed},
                        {"instances", g.instances},
                        {"h", g.h},
                        {"tolerance", g.tolerance},
                        {"max_relative_error", worst},
                        {"per_instance", per_instance}};
  return outcome;
}

json run_eval(const RunConfig& config, const fs::path& checkpoint) {
  auto in = open_input(checkpoint.string(), "checkpoint");
  const TabularModel model = load_checkpoint(in);
  const TaskData data = build_task(config);
  if (!(model.source_vocab() == data.dev.source_vocab) ||
      !(model.target_vocab() == data.dev.target_vocab))
    fail(ErrorCode::kConfig, "checkpoint vocabularies do not match the configured task");
  const FeatureSet fs =
      build_feature_set(config.features, model.source_vocab(), model.target_vocab(), data.spec);
  const DevEvaluation ev = evaluate_dev(model, fs, data.dev.examples,
                                        config.train.dev_sample_count,
                                        evaluation_seed(config.train));
  return json{{"checkpoint", checkpoint.string()},
              {"mm_loss_dev", ev.mm_loss},
              {"ce_loss_dev", ev.ce_loss},
              {"exact_match", ev.exact_match},
              {"feature_names", fs.coordinate_names()},
              {"moment_gap", ev.moment_gap}};
}

}  // namespace mmseq
