// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Pipeline commands behind the CLI. Each returns a JSON summary of what it
// wrote; every artifact carries the run's config hash.

#ifndef LATENTREC_RUN_COMMANDS_HPP_
#define LATENTREC_RUN_COMMANDS_HPP_

#include <string>

#include "eval/experiments.hpp"
#include "json.hpp"
#include "run/run_config.hpp"

namespace latentrec {

// Writes records.tsv, vocab.txt, {train,valid,test}.tsv and manifest.json.
nlohmann::json cmd_synth_data(const RunConfig& config, const std::string& out_dir);
nlohmann::json cmd_prepare_data(const RunConfig& config, const std::string& tsv_path,
                                const std::string& out_dir);

// Model, stage configurations and seeds for the experiment drivers.
PipelineConfig pipeline_config(const RunConfig& config);

// run_dir receives the checkpoint (sft.ckpt / rl.ckpt), log.jsonl and
// config.txt.
nlohmann::json cmd_sft(const RunConfig& config, const std::string& data_dir,
                       const std::string& run_dir);
nlohmann::json cmd_rl(const RunConfig& config, const std::string& data_dir,
                      const std::string& checkpoint, const std::string& run_dir);

// Writes one MetricReport as JSON to out_path.
nlohmann::json cmd_eval(const RunConfig& config, const std::string& data_dir,
                        const std::string& checkpoint, const std::string& out_path);

// ablation.jsonl / sweep.jsonl: one row per line.
nlohmann::json cmd_ablate(const RunConfig& config, const std::string& data_dir,
                          const std::string& run_dir);
nlohmann::json cmd_sweep_length(const RunConfig& config, const std::string& data_dir,
                                const std::string& run_dir);

// bench.json with ppl and exact-match timings.
nlohmann::json cmd_bench_reward(const RunConfig& config, const std::string& data_dir,
                                const std::string& checkpoint, const std::string& run_dir);

}  // namespace latentrec

#endif  // LATENTREC_RUN_COMMANDS_HPP_
