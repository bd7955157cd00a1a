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

#include "mmseq/mmseq.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <string>

#include "mmseq/commands.hpp"

struct mmseq_config {
  nlohmann::json doc;
  mmseq::RunConfig resolved;
};

struct mmseq_model {
  mmseq::TabularModel model;
};

namespace {

thread_local std::string last_error;

mmseq_status status_for(mmseq::ErrorCode code) {
  using mmseq::ErrorCode;
  switch (code) {
    case ErrorCode::kInvalidArgument: return MMSEQ_ERR_INVALID_ARGUMENT;
    case ErrorCode::kConfig: return MMSEQ_ERR_CONFIG;
    case ErrorCode::kIo: return MMSEQ_ERR_IO;
    case ErrorCode::kParse: return MMSEQ_ERR_PARSE;
    case ErrorCode::kInvalidSequence: return MMSEQ_ERR_INVALID_SEQUENCE;
    case ErrorCode::kInvalidToken: return MMSEQ_ERR_INVALID_TOKEN;
    case ErrorCode::kEnumerationTooLarge: return MMSEQ_ERR_ENUMERATION_TOO_LARGE;
    case ErrorCode::kShapeMismatch: return MMSEQ_ERR_SHAPE_MISMATCH;
    case ErrorCode::kNonFinite: return MMSEQ_ERR_NON_FINITE;
  }
  return MMSEQ_ERR_INTERNAL;
}

template <class F>
mmseq_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const mmseq::Error& e) {
    last_error = e.what();
    return status_for(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
  } catch (const std::exception& e) {
    last_error = e.what();
  } catch (...) {
    last_error = "unknown error";
  }
  return MMSEQ_ERR_INTERNAL;
}

mmseq_status null_argument(const char* name) {
  last_error = std::string(name) + " must not be NULL";
  return MMSEQ_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out_json, const nlohmann::json& j) {
  if (out_json) *out_json = copy_string(j.dump(2));
}

mmseq_status make_config(nlohmann::json doc, const std::filesystem::path& base,
                         mmseq_config** out) {
  mmseq::RunConfig resolved = mmseq::parse_run_config(doc, base);
  *out = new mmseq_config{mmseq::to_json(resolved), std::move(resolved)};
  return MMSEQ_OK;
}

}  // namespace

extern "C" {

const char* mmseq_version(void) { return mmseq::library_version(); }

const char* mmseq_status_string(mmseq_status status) {
  switch (status) {
    case MMSEQ_OK: return "ok";
    case MMSEQ_ERR_INVALID_ARGUMENT: return "invalid argument";
    case MMSEQ_ERR_CONFIG: return "configuration error";
    case MMSEQ_ERR_IO: return "i/o error";
    case MMSEQ_ERR_PARSE: return "parse error";
    case MMSEQ_ERR_INVALID_SEQUENCE: return "invalid sequence";
    case MMSEQ_ERR_INVALID_TOKEN: return "invalid token";
    case MMSEQ_ERR_ENUMERATION_TOO_LARGE: return "enumeration too large";
    case MMSEQ_ERR_SHAPE_MISMATCH: return "shape mismatch";
    case MMSEQ_ERR_NON_FINITE: return "non-finite value";
    case MMSEQ_CHECK_FAILED: return "check failed";
    case MMSEQ_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* mmseq_last_error(void) { return last_error.c_str(); }

void mmseq_string_free(char* s) { std::free(s); }

mmseq_status mmseq_config_default(mmseq_config** out) {
  if (!out) return null_argument("out");
  return guarded([&] { return make_config(mmseq::to_json(mmseq::default_run_config()), {}, out); });
}

mmseq_status mmseq_config_load(const char* path, mmseq_config** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    mmseq::RunConfig resolved = mmseq::load_run_config(path);
    *out = new mmseq_config{mmseq::to_json(resolved), std::move(resolved)};
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_config_parse(const char* json_text, mmseq_config** out) {
  if (!json_text) return null_argument("json_text");
  if (!out) return null_argument("out");
  return guarded([&] {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
      mmseq::fail(mmseq::ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
    }
    return make_config(std::move(doc), std::filesystem::current_path(), out);
  });
}

mmseq_status mmseq_config_set(mmseq_config* config, const char* key, const char* value) {
  if (!config) return null_argument("config");
  if (!key) return null_argument("key");
  if (!value) return null_argument("value");
  return guarded([&] {
    nlohmann::json doc = config->doc;
    mmseq::apply_override(doc, key, value);
    mmseq::RunConfig resolved = mmseq::parse_run_config(doc, std::filesystem::current_path());
    config->doc = mmseq::to_json(resolved);
    config->resolved = std::move(resolved);
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_config_to_json(const mmseq_config* config, char** out_json) {
  if (!config) return null_argument("config");
  if (!out_json) return null_argument("out_json");
  return guarded([&] {
    emit(out_json, config->doc);
    return MMSEQ_OK;
  });
}

void mmseq_config_free(mmseq_config* config) { delete config; }

mmseq_status mmseq_run_train(const mmseq_config* config, char** out_json) {
  if (!config) return null_argument("config");
  return guarded([&] {
    emit(out_json, mmseq::run_train(config->resolved));
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_run_verify(const mmseq_config* config, char** out_json) {
  if (!config) return null_argument("config");
  return guarded([&] {
    const mmseq::CheckOutcome r = mmseq::run_verify(config->resolved);
    emit(out_json, r.report);
    if (!r.passed) last_error = "verification failed";
    return r.passed ? MMSEQ_OK : MMSEQ_CHECK_FAILED;
  });
}

mmseq_status mmseq_run_gradcheck(const mmseq_config* config, unsigned flags, char** out_json) {
  if (!config) return null_argument("config");
  return guarded([&] {
    const mmseq::CheckOutcome r = mmseq::run_gradcheck(
        config->resolved, (flags & MMSEQ_GRADCHECK_DROP_FACTOR_TWO) != 0);
    emit(out_json, r.report);
    if (!r.passed) last_error = "gradient check failed";
    return r.passed ? MMSEQ_OK : MMSEQ_CHECK_FAILED;
  });
}

mmseq_status mmseq_run_eval(const mmseq_config* config, const char* checkpoint_path,
                            char** out_json) {
  if (!config) return null_argument("config");
  if (!checkpoint_path) return null_argument("checkpoint_path");
  return guarded([&] {
    emit(out_json, mmseq::run_eval(config->resolved, checkpoint_path));
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_model_load(const char* path, mmseq_model** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  return guarded([&] {
    std::ifstream in(path);
    if (!in) mmseq::fail(mmseq::ErrorCode::kIo, std::string("cannot open checkpoint '") + path + "'");
    *out = new mmseq_model{mmseq::load_checkpoint(in)};
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_model_save(const mmseq_model* model, const char* path) {
  if (!model) return null_argument("model");
  if (!path) return null_argument("path");
  return guarded([&] {
    std::ofstream out(path, std::ios::binary);
    if (!out) mmseq::fail(mmseq::ErrorCode::kIo, std::string("cannot write '") + path + "'");
    mmseq::save_checkpoint(model->model, out);
    if (!out) mmseq::fail(mmseq::ErrorCode::kIo, std::string("write failed for '") + path + "'");
    return MMSEQ_OK;
  });
}

void mmseq_model_free(mmseq_model* model) { delete model; }

size_t mmseq_model_parameter_count(const mmseq_model* model) {
  return model ? model->model.parameter_count() : 0;
}

mmseq_status mmseq_model_log_prob(const mmseq_model* model, const char* source,
                                  const char* target, double* out) {
  if (!model) return null_argument("model");
  if (!source) return null_argument("source");
  if (!target) return null_argument("target");
  if (!out) return null_argument("out");
  return guarded([&] {
    const auto& m = model->model;
    *out = mmseq::log_prob(m, m.source_vocab().encode(source), m.target_vocab().encode(target));
    return MMSEQ_OK;
  });
}

mmseq_status mmseq_model_sample(const mmseq_model* model, const char* source, uint64_t seed,
                                char** out_target) {
  if (!model) return null_argument("model");
  if (!source) return null_argument("source");
  if (!out_target) return null_argument("out_target");
  return guarded([&] {
    const auto& m = model->model;
    mmseq::Rng rng(seed);
    const mmseq::Sequence y = mmseq::sample(m, m.source_vocab().encode(source), rng);
    *out_target = copy_string(m.target_vocab().decode(y));
    return MMSEQ_OK;
  });
}

}  // extern "C"
