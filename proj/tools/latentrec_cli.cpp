// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// latentrec command-line tool. Every RunConfig key is also a flag
// (underscores become dashes); flags override --config files, which
// override built-in defaults.

#include <cstdio>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "latentrec/latentrec.h"

namespace {

struct Paths {
  std::string data;
  std::string input;
  std::string checkpoint;
  std::string out;
};

std::string dashed(std::string key) {
  for (char& c : key) {
    if (c == '_') c = '-';
  }
  return key;
}

int fail(const std::string& command, lrec_status status) {
  std::fprintf(stderr, "latentrec %s: error (%s): %s\n", command.c_str(), lrec_status_name(status),
               lrec_last_error());
  return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"latentrec: latent-reasoning recommender training and evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", lrec_version());

  std::vector<std::string> config_files;
  std::vector<std::string> overrides;
  app.add_option("--config", config_files, "key = value config file (repeatable)")
      ->check(CLI::ExistingFile);
  app.add_option("--set", overrides, "KEY=VALUE override (repeatable)");

  // One flag per config key; the value text is handed to the library.
  std::map<std::string, std::string> key_values;
  std::vector<std::pair<std::string, CLI::Option*>> key_options;
  const size_t key_count = lrec_config_key_count();
  for (size_t i = 0; i < key_count; ++i) {
    const std::string key = lrec_config_key_name(i);
    CLI::Option* opt = app.add_option("--" + dashed(key), key_values[key], lrec_config_key_help(i));
    opt->group("Config keys");
    key_options.emplace_back(key, opt);
  }

  Paths paths;
  auto add = [&](const char* name, const char* help) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    return sub;
  };
  auto need = [](CLI::App* sub, const char* flag, std::string& target, const char* help) {
    sub->add_option(flag, target, help)->required();
  };

  CLI::App* synth = add("synth-data", "generate the synthetic corpus and prepare it");
  need(synth, "--out", paths.out, "dataset directory");
  CLI::App* prepare = add("prepare-data", "prepare a user/item/timestamp/title TSV");
  need(prepare, "--input", paths.input, "interaction TSV");
  need(prepare, "--out", paths.out, "dataset directory");
  CLI::App* sft = add("sft", "supervised warm-up");
  need(sft, "--data", paths.data, "dataset directory");
  need(sft, "--out", paths.out, "run directory");
  CLI::App* rl = add("rl", "reinforcement stage on an SFT checkpoint");
  need(rl, "--data", paths.data, "dataset directory");
  need(rl, "--checkpoint", paths.checkpoint, "SFT checkpoint");
  need(rl, "--out", paths.out, "run directory");
  CLI::App* eval = add("eval", "full-catalog ranking metrics for a checkpoint");
  need(eval, "--data", paths.data, "dataset directory");
  need(eval, "--checkpoint", paths.checkpoint, "checkpoint");
  need(eval, "--out", paths.out, "report file");
  CLI::App* ablate = add("ablate", "five-row ablation table");
  need(ablate, "--data", paths.data, "dataset directory");
  need(ablate, "--out", paths.out, "run directory");
  CLI::App* sweep = add("sweep-length", "latent length sweep over N = 0, 1, 2, 4, 8");
  need(sweep, "--data", paths.data, "dataset directory");
  need(sweep, "--out", paths.out, "run directory");
  CLI::App* bench = add("bench-reward", "time ppl against exact-match rewards");
  need(bench, "--data", paths.data, "dataset directory");
  need(bench, "--checkpoint", paths.checkpoint, "checkpoint");
  need(bench, "--out", paths.out, "run directory");

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  lrec_config* raw = nullptr;
  if (lrec_status s = lrec_config_new(&raw); s != LREC_OK) return fail(name, s);
  std::unique_ptr<lrec_config, decltype(&lrec_config_free)> config(raw, lrec_config_free);

  for (const auto& file : config_files) {
    if (lrec_status s = lrec_config_load_file(config.get(), file.c_str()); s != LREC_OK) {
      return fail(name, s);
    }
  }
  for (const auto& [key, opt] : key_options) {
    if (opt->count() == 0) continue;
    if (lrec_status s = lrec_config_set(config.get(), key.c_str(), key_values[key].c_str());
        s != LREC_OK) {
      return fail(name, s);
    }
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "latentrec %s: error (config): --set expects KEY=VALUE, got '%s'\n",
                   name.c_str(), kv.c_str());
      return static_cast<int>(LREC_ERR_CONFIG);
    }
    const std::string key = kv.substr(0, eq), value = kv.substr(eq + 1);
    if (lrec_status s = lrec_config_set(config.get(), key.c_str(), value.c_str()); s != LREC_OK) {
      return fail(name, s);
    }
  }

  const lrec_config* c = config.get();
  lrec_status status = LREC_OK;
  if (*synth) {
    status = lrec_cmd_synth_data(c, paths.out.c_str());
  } else if (*prepare) {
    status = lrec_cmd_prepare_data(c, paths.input.c_str(), paths.out.c_str());
  } else if (*sft) {
    status = lrec_cmd_sft(c, paths.data.c_str(), paths.out.c_str());
  } else if (*rl) {
    status = lrec_cmd_rl(c, paths.data.c_str(), paths.checkpoint.c_str(), paths.out.c_str());
  } else if (*eval) {
    status = lrec_cmd_eval(c, paths.data.c_str(), paths.checkpoint.c_str(), paths.out.c_str());
  } else if (*ablate) {
    status = lrec_cmd_ablate(c, paths.data.c_str(), paths.out.c_str());
  } else if (*sweep) {
    status = lrec_cmd_sweep_length(c, paths.data.c_str(), paths.out.c_str());
  } else if (*bench) {
    status = lrec_cmd_bench_reward(c, paths.data.c_str(), paths.checkpoint.c_str(),
                                   paths.out.c_str());
  }
  if (status != LREC_OK) return fail(name, status);
  std::printf("%s\n", lrec_last_result());
  return 0;
}
