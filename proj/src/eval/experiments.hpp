// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Multi-model experiments: the ablation table, the latent-length sweep and
// the reward-cost benchmark.

#ifndef LATENTREC_EVAL_EXPERIMENTS_HPP_
#define LATENTREC_EVAL_EXPERIMENTS_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "corpus/dataset.hpp"
#include "eval/evaluate.hpp"
#include "json.hpp"
#include "train/rl.hpp"
#include "train/sft.hpp"

namespace latentrec {

// Everything needed to train and evaluate one model on a prepared dataset.
// model.vocab_size is taken from the dataset.
struct PipelineConfig {
  ModelConfig model;
  SFTConfig sft;
  RLConfig rl;
  std::uint64_t init_seed = 0;
  int threads = 1;
  // Prefix mixed into every row hash, normally the run's config hash.
  std::string run_hash;
};

// Hash of one experiment row: the run hash plus the row's model and RL
// settings.
std::string row_config_hash(const PipelineConfig& config);

struct ExperimentLog {
  std::function<void(const std::string& row, const SFTEpochLog&)> on_sft_epoch;
  std::function<void(const std::string& row, const RLStepLog&)> on_rl_step;
  std::function<void(const std::string& row, const RLEpochLog&)> on_rl_epoch;
};

struct ExperimentRow {
  std::string name;
  MetricReport report;
  std::string config_hash;
  std::string splits_hash;
  int latent_len = 0;
  int sft_best_epoch = 0;
  int rl_best_epoch = 0;
  long wall_ms = 0;

  nlohmann::json to_json() const;
};

// Rows, in order: "full", "w/o Reasoning", "w/o LatentRATT", "w/o RL",
// "w/o Batch Advantage". "full", "w/o RL" and "w/o Batch Advantage" share
// one SFT run.
std::vector<ExperimentRow> ablation_suite(const Dataset& dataset, const PipelineConfig& config,
                                          const ExperimentLog& log = {});

inline const std::vector<int> kSweepLengths = {0, 1, 2, 4, 8};

// One SFT + RL pipeline per latent length; RL perturbs only r_1.
std::vector<ExperimentRow> length_sweep(const Dataset& dataset, const PipelineConfig& config,
                                        const std::vector<int>& lengths = kSweepLengths,
                                        const ExperimentLog& log = {});

struct RewardBench {
  double ppl_ms = 0;
  double exact_match_ms = 0;
  double ratio = 0;  // exact_match_ms / ppl_ms
  long ppl_generation_calls = 0;
  long exact_match_generation_calls = 0;
  int samples = 0;  // (K + 1) * batch

  nlohmann::json to_json() const;
};

// Times one reward pass over the same (K + 1) * |batch| latent samples in
// each reward mode; generation is capped at config.max_answer_len.
RewardBench efficiency_bench(const Model<float>& model, const std::vector<PromptSample>& batch,
                             const RLConfig& config);

}  // namespace latentrec

#endif  // LATENTREC_EVAL_EXPERIMENTS_HPP_
