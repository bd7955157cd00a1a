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

#include "mmseq/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace mmseq {
namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& message) { fail(ErrorCode::kConfig, message); }

void read_value(const json& v, const std::string& where, int& out) {
  if (!v.is_number_integer()) config_error(where + ": expected an integer");
  const auto x = v.get<std::int64_t>();
  if (x < INT32_MIN || x > INT32_MAX) config_error(where + ": integer out of range");
  out = static_cast<int>(x);
}

void read_value(const json& v, const std::string& where, std::uint64_t& out) {
  if (v.is_number_unsigned()) {
    out = v.get<std::uint64_t>();
  } else if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
    out = static_cast<std::uint64_t>(v.get<std::int64_t>());
  } else {
    config_error(where + ": expected a non-negative integer");
  }
}

void read_value(const json& v, const std::string& where, double& out) {
  if (!v.is_number()) config_error(where + ": expected a number");
  out = v.get<double>();
}

void read_value(const json& v, const std::string& where, bool& out) {
  if (!v.is_boolean()) config_error(where + ": expected true or false");
  out = v.get<bool>();
}

void read_value(const json& v, const std::string& where, std::string& out) {
  if (!v.is_string()) config_error(where + ": expected a string");
  out = v.get<std::string>();
}

template <class T>
void read_value(const json& v, const std::string& where, std::vector<T>& out) {
  if (!v.is_array()) config_error(where + ": expected a list");
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    T item{};
    read_value(v[i], where + "[" + std::to_string(i) + "]", item);
    out.push_back(std::move(item));
  }
}

// Reads known keys from one object and rejects the rest.
class Section {
 public:
  Section(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) config_error(label() + " must be an object");
  }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    if (it != obj_.end()) read_value(*it, path(key), out);
  }

  const json* child(const std::string& key) {
    seen_.insert(key);
    const auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  std::string path(const std::string& key) const {
    return where_.empty() ? key : where_ + "." + key;
  }

  void finish() const {
    for (const auto& item : obj_.items())
      if (!seen_.count(item.key())) config_error("unknown key '" + path(item.key()) + "'");
  }

 private:
  std::string label() const { return where_.empty() ? "config" : "'" + where_ + "'"; }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

std::string resolve(const std::string& p, const std::filesystem::path& base) {
  if (p.empty() || base.empty()) return p;
  std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (base / path).lexically_normal().string();
}

void read_features(const json& v, const std::string& where, const std::filesystem::path& base,
                   std::vector<FeatureSpec>& out) {
  if (!v.is_array()) config_error(where + ": expected a list of features");
  out.clear();
  for (std::size_t i = 0; i < v.size(); ++i) {
    Section s(v[i], where + "[" + std::to_string(i) + "]");
    FeatureSpec f;
    s.get("type", f.type);
    s.get("scale", f.scale);
    s.get("beta", f.beta);
    s.get("path", f.path);
    s.get("threshold", f.threshold);
    s.get("value", f.value);
    s.finish();
    f.path = resolve(f.path, base);
    out.push_back(std::move(f));
  }
}

json features_to_json(const std::vector<FeatureSpec>& features) {
  json out = json::array();
  for (const auto& f : features) {
    json j{{"type", f.type}, {"scale", f.scale}};
    if (f.type == "length_ratio") j["beta"] = f.beta;
    if (f.type == "lexical_dict") {
      j["path"] = f.path;
      j["threshold"] = f.threshold;
    }
    if (f.type == "constant") j["value"] = f.value;
    out.push_back(std::move(j));
  }
  return out;
}

void validate_features(const std::vector<FeatureSpec>& features, const std::string& where) {
  if (features.empty()) config_error(where + ": at least one feature is required");
  for (const auto& f : features) {
    if (f.type != "length_ratio" && f.type != "lexical_dict" && f.type != "constant" &&
        f.type != "target_length")
      config_error(where + ": unknown feature type '" + f.type + "'");
    if (!(f.scale > 0.0) || !std::isfinite(f.scale))
      config_error(where + ": feature scale must be positive");
    if (f.type == "length_ratio" && !(f.beta > 0.0))
      config_error(where + ": length_ratio beta must be positive");
    if (f.type == "lexical_dict" && !(f.threshold >= 0.0 && f.threshold <= 1.0))
      config_error(where + ": lexical_dict threshold must lie in [0, 1]");
  }
}

std::vector<FeatureSpec> default_probe_features() {
  FeatureSpec ratio;
  FeatureSpec length;
  length.type = "target_length";
  return {ratio, length};
}

void validate(const RunConfig& c) {
  const auto& t = c.task;
  if (t.kind != "copy" && t.kind != "token_map" && t.kind != "length_control" &&
      t.kind != "corpus")
    config_error("task.kind: unknown task '" + t.kind + "'");
  if (t.kind == "corpus") {
    if (t.train_source.empty() || t.train_target.empty() || t.dev_source.empty() ||
        t.dev_target.empty())
      config_error("task: corpus tasks need train_source, train_target, dev_source, dev_target");
  } else if (t.train_size < 1 || t.dev_size < 1) {
    config_error("task: train_size and dev_size must be positive");
  }
  if (c.model.context_order < 0) config_error("model.context_order must be >= 0");
  if (c.model.max_len < 1) config_error("model.max_len must be >= 1");
  if (!(c.model.init_scale >= 0.0)) config_error("model.init_scale must be >= 0");
  validate_features(c.features, "features");
  validate_features(c.verify.features, "verify.features");
  validate_features(c.gradcheck.features, "gradcheck.features");
  try {
    c.train.validate();
  } catch (const Error& e) {
    config_error(std::string("train: ") + e.what());
  }
  const auto& v = c.verify;
  for (const auto& s : v.strategies) {
    try {
      parse_strategy(s);
    } catch (const Error& e) {
      config_error(std::string("verify.strategies: ") + e.what());
    }
  }
  if (v.source_vocab_size < 1 || v.target_vocab_size < 1 || v.max_len < 1 || v.context_order < 0)
    config_error("verify: instance dimensions must be positive");
  if (v.jackknife_J < 2) config_error("verify.jackknife_J must be >= 2");
  if (v.simplistic_J < 1 || v.simplistic_K < 1)
    config_error("verify.simplistic_J and simplistic_K must be >= 1");
  if (v.economical_J < 1) config_error("verify.economical_J must be >= 1");
  if (v.lemma1_J < 2) config_error("verify.lemma1_J must be >= 2");
  const auto& g = c.gradcheck;
  if (g.instances < 1) config_error("gradcheck.instances must be >= 1");
  if (g.source_vocab_size < 1 || g.target_vocab_size < 1 || g.max_len < 1 || g.context_order < 0)
    config_error("gradcheck: instance dimensions must be positive");
  if (!(g.h > 0.0)) config_error("gradcheck.h must be positive");
  if (!(g.tolerance > 0.0)) config_error("gradcheck.tolerance must be positive");
}

}  // namespace

RunConfig default_run_config() {
  RunConfig c;
  c.features = {FeatureSpec{}};
  c.verify.features = default_probe_features();
  c.gradcheck.features = default_probe_features();
  c.train.estimator.enumeration_cap = c.enumeration_cap;
  return c;
}

RunConfig parse_run_config(const json& input, const std::filesystem::path& base_dir) {
  const json* doc = &input;
  if (input.is_object() && input.contains("config") && input.contains("config_hash"))
    doc = &input["config"];

  RunConfig c = default_run_config();
  Section top(*doc, "");
  top.get("seed", c.seed);
  top.get("out", c.out);
  top.get("enumeration_cap", c.enumeration_cap);

  if (const json* v = top.child("task")) {
    Section s(*v, "task");
    auto& t = c.task;
    s.get("kind", t.kind);
    s.get("source_vocab_size", t.source_vocab_size);
    s.get("target_vocab_size", t.target_vocab_size);
    s.get("min_length", t.min_length);
    s.get("max_length", t.max_length);
    s.get("train_size", t.train_size);
    s.get("dev_size", t.dev_size);
    s.get("ratio", t.ratio);
    s.get("mapping", t.mapping);
    s.get("train_source", t.train_source);
    s.get("train_target", t.train_target);
    s.get("dev_source", t.dev_source);
    s.get("dev_target", t.dev_target);
    s.finish();
    t.train_source = resolve(t.train_source, base_dir);
    t.train_target = resolve(t.train_target, base_dir);
    t.dev_source = resolve(t.dev_source, base_dir);
    t.dev_target = resolve(t.dev_target, base_dir);
  }

  if (const json* v = top.child("model")) {
    Section s(*v, "model");
    s.get("context_order", c.model.context_order);
    s.get("max_len", c.model.max_len);
    s.get("init_scale", c.model.init_scale);
    s.finish();
  }

  if (const json* v = top.child("features")) read_features(*v, "features", base_dir, c.features);

  if (const json* v = top.child("train")) {
    Section s(*v, "train");
    auto& t = c.train;
    std::string mode = train_mode_name(t.mode);
    std::string strategy(strategy_name(t.estimator.strategy));
    s.get("mode", mode);
    s.get("lambda", t.lambda);
    s.get("J", t.estimator.samples);
    s.get("K", t.estimator.average_samples);
    s.get("strategy", strategy);
    s.get("max_steps", t.max_steps);
    s.get("batch_size", t.batch_size);
    s.get("learning_rate", t.learning_rate);
    s.get("ce_steps", t.ce_steps);
    s.get("mm_steps", t.mm_steps);
    s.get("eval_every", t.eval_every);
    s.get("dev_sample_count", t.dev_sample_count);
    s.get("warm_start_steps", t.warm_start_steps);
    s.finish();
    try {
      t.mode = parse_train_mode(mode);
      t.estimator.strategy = parse_strategy(strategy);
    } catch (const Error& e) {
      config_error(std::string("train: ") + e.what());
    }
  }

  if (const json* v = top.child("verify")) {
    Section s(*v, "verify");
    auto& t = c.verify;
    s.get("source_vocab_size", t.source_vocab_size);
    s.get("target_vocab_size", t.target_vocab_size);
    s.get("max_len", t.max_len);
    s.get("context_order", t.context_order);
    s.get("logit_scale", t.logit_scale);
    s.get("strategies", t.strategies);
    s.get("jackknife_J", t.jackknife_J);
    s.get("simplistic_J", t.simplistic_J);
    s.get("simplistic_K", t.simplistic_K);
    s.get("economical_J", t.economical_J);
    s.get("lemma1", t.lemma1);
    s.get("lemma1_J", t.lemma1_J);
    s.get("replicates", t.replicates);
    if (const json* f = s.child("features")) read_features(*f, "verify.features", base_dir, t.features);
    s.finish();
  }

  if (const json* v = top.child("gradcheck")) {
    Section s(*v, "gradcheck");
    auto& t = c.gradcheck;
    s.get("instances", t.instances);
    s.get("source_vocab_size", t.source_vocab_size);
    s.get("target_vocab_size", t.target_vocab_size);
    s.get("max_len", t.max_len);
    s.get("context_order", t.context_order);
    s.get("logit_scale", t.logit_scale);
    s.get("h", t.h);
    s.get("tolerance", t.tolerance);
    if (const json* f = s.child("features"))
      read_features(*f, "gradcheck.features", base_dir, t.features);
    s.finish();
  }
  top.finish();

  c.train.seed = c.seed;
  c.train.estimator.enumeration_cap = c.enumeration_cap;
  validate(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    config_error("config file '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return parse_run_config(doc, std::filesystem::absolute(path).parent_path());
}

json to_json(const RunConfig& c) {
  const auto& t = c.task;
  json task{{"kind", t.kind}};
  if (t.kind == "corpus") {
    task["train_source"] = t.train_source;
    task["train_target"] = t.train_target;
    task["dev_source"] = t.dev_source;
    task["dev_target"] = t.dev_target;
  } else {
    task["source_vocab_size"] = t.source_vocab_size;
    task["target_vocab_size"] = t.target_vocab_size;
    task["min_length"] = t.min_length;
    task["max_length"] = t.max_length;
    task["train_size"] = t.train_size;
    task["dev_size"] = t.dev_size;
    task["ratio"] = t.ratio;
    task["mapping"] = t.mapping;
  }
  const auto& tr = c.train;
  const auto& v = c.verify;
  const auto& g = c.gradcheck;
  return json{
      {"seed", c.seed},
      {"out", c.out},
      {"enumeration_cap", c.enumeration_cap},
      {"task", task},
      {"model",
       {{"context_order", c.model.context_order},
        {"max_len", c.model.max_len},
        {"init_scale", c.model.init_scale}}},
      {"features", features_to_json(c.features)},
      {"train",
       {{"mode", train_mode_name(tr.mode)},
        {"lambda", tr.lambda},
        {"J", tr.estimator.samples},
        {"K", tr.estimator.average_samples},
        {"strategy", std::string(strategy_name(tr.estimator.strategy))},
        {"max_steps", tr.max_steps},
        {"batch_size", tr.batch_size},
        {"learning_rate", tr.learning_rate},
        {"ce_steps", tr.ce_steps},
        {"mm_steps", tr.mm_steps},
        {"eval_every", tr.eval_every},
        {"dev_sample_count", tr.dev_sample_count},
        {"warm_start_steps", tr.warm_start_steps}}},
      {"verify",
       {{"source_vocab_size", v.source_vocab_size},
        {"target_vocab_size", v.target_vocab_size},
        {"max_len", v.max_len},
        {"context_order", v.context_order},
        {"logit_scale", v.logit_scale},
        {"strategies", v.strategies},
        {"jackknife_J", v.jackknife_J},
        {"simplistic_J", v.simplistic_J},
        {"simplistic_K", v.simplistic_K},
        {"economical_J", v.economical_J},
        {"lemma1", v.lemma1},
        {"lemma1_J", v.lemma1_J},
        {"replicates", v.replicates},
        {"features", features_to_json(v.features)}}},
      {"gradcheck",
       {{"instances", g.instances},
        {"source_vocab_size", g.source_vocab_size},
        {"target_vocab_size", g.target_vocab_size},
        {"max_len", g.max_len},
        {"context_order", g.context_order},
        {"logit_scale", g.logit_scale},
        {"h", g.h},
        {"tolerance", g.tolerance},
        {"features", features_to_json(g.features)}}},
  };
}

void apply_override(json& doc, const std::string& key, const std::string& value) {
  if (key.empty()) config_error("override key is empty");
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos
                                                                         : dot - start);
    if (part.empty()) config_error("malformed override key '" + key + "'");
    if (node->is_array()) {
      std::size_t index = 0;
      try {
        std::size_t used = 0;
        index = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        config_error("override key '" + key + "': '" + part + "' is not a list index");
      }
      if (index >= node->size())
        config_error("override key '" + key + "': index " + part + " out of range");
      node = &(*node)[index];
    } else {
      if (node->is_null()) *node = json::object();
      if (!node->is_object())
        config_error("override key '" + key + "': '" + part + "' is not inside an object");
      node = &(*node)[part];
    }
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  try {
    *node = json::parse(value);
  } catch (const json::parse_error&) {
    *node = value;
  }
}

std::string config_hash(const RunConfig& config) {
  // FNV-1a, 64 bit.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_json(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mmseq
