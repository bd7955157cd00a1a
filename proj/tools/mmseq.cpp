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

// Command-line front end. Talks to the library only through the C interface.
//
// Exit status: 0 success, 1 runtime or check failure, 2 configuration or
// input failure.

#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mmseq/mmseq.h"

namespace {

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  long long seed = -1;
  std::string out;
};

int exit_code(mmseq_status status) {
  switch (status) {
    case MMSEQ_OK: return 0;
    case MMSEQ_CHECK_FAILED:
    case MMSEQ_ERR_NON_FINITE:
    case MMSEQ_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

int report_error(mmseq_status status) {
  std::fprintf(stderr, "mmseq: %s: %s\n", mmseq_status_string(status), mmseq_last_error());
  return exit_code(status);
}

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--config", opts.config_path, "JSON run configuration");
  cmd->add_option("--seed", opts.seed, "Override the run seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", opts.out, "Override the output directory");
  cmd->add_option("--override", opts.overrides, "KEY=VALUE, dotted keys (repeatable)");
}

std::string json_string(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

// Loads the config and applies overrides, then --seed and --out. Returns an
// exit code; 0 on success.
int build_config(const CommonOptions& opts, mmseq_config** config) {
  mmseq_status st = opts.config_path.empty() ? mmseq_config_default(config)
                                             : mmseq_config_load(opts.config_path.c_str(), config);
  if (st != MMSEQ_OK) return report_error(st);
  for (const auto& kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::fprintf(stderr, "mmseq: configuration error: override '%s' is not KEY=VALUE\n",
                   kv.c_str());
      return 2;
    }
    st = mmseq_config_set(*config, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str());
    if (st != MMSEQ_OK) return report_error(st);
  }
  if (opts.seed >= 0) {
    st = mmseq_config_set(*config, "seed", std::to_string(opts.seed).c_str());
    if (st != MMSEQ_OK) return report_error(st);
  }
  if (!opts.out.empty()) {
    st = mmseq_config_set(*config, "out", json_string(opts.out).c_str());
    if (st != MMSEQ_OK) return report_error(st);
  }
  return 0;
}

template <class Run>
int run_command(const CommonOptions& opts, Run&& run) {
  mmseq_config* config = nullptr;
  if (const int code = build_config(opts, &config); code != 0) {
    mmseq_config_free(config);
    return code;
  }
  char* json = nullptr;
  const mmseq_status st = run(config, &json);
  if (json) {
    std::printf("%s\n", json);
    mmseq_string_free(json);
  }
  mmseq_config_free(config);
  return st == MMSEQ_OK ? 0 : report_error(st);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Moment-matching training and verification for tabular sequence models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mmseq_version()));

  CommonOptions train_opts, verify_opts, grad_opts, eval_opts;

  auto* train = app.add_subcommand("train", "Warm-start with CE, then train with MM");
  add_common(train, train_opts);

  auto* verify = app.add_subcommand("verify", "Monte Carlo bias reports for the MM estimators");
  add_common(verify, verify_opts);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of the MM gradient");
  add_common(gradcheck, grad_opts);
  bool drop_factor_two = false;
  gradcheck->add_flag("--drop-factor-two", drop_factor_two)->group("");

  auto* eval = app.add_subcommand("eval", "Dev-set MM loss, moment gaps and exact match");
  add_common(eval, eval_opts);
  std::string checkpoint;
  eval->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*train) return run_command(train_opts, mmseq_run_train);
  if (*verify) return run_command(verify_opts, mmseq_run_verify);
  if (*gradcheck)
    return run_command(grad_opts, [&](const mmseq_config* c, char** out) {
      return mmseq_run_gradcheck(c, drop_factor_two ? MMSEQ_GRADCHECK_DROP_FACTOR_TWO : 0u, out);
    });
  return run_command(eval_opts, [&](const mmseq_config* c, char** out) {
    return mmseq_run_eval(c, checkpoint.c_str(), out);
  });
}
