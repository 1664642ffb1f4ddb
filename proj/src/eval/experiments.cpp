// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "eval/experiments.hpp"

#include <chrono>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"

namespace latentrec {

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point since) {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count());
}

std::string rl_canonical(const RLConfig& c) {
  std::string s;
  s += "advantage_mode=" + std::string(to_string(c.advantage_mode)) + "\n";
  s += "beta=" + std::to_string(c.beta) + "\n";
  s += "clip_epsilon=" + std::to_string(c.clip_epsilon) + "\n";
  s += "group_size=" + std::to_string(c.group_size) + "\n";
  s += "learning_rate=" + std::to_string(c.learning_rate) + "\n";
  s += "perturb_first_only=" + std::to_string(int(c.perturb_first_only)) + "\n";
  s += "reward_mode=" + std::string(to_string(c.reward_mode)) + "\n";
  s += "sigma=" + std::to_string(c.sigma) + "\n";
  return s;
}

PipelineConfig with_dataset(PipelineConfig config, const Dataset& dataset) {
  config.model.vocab_size = dataset.vocab.size();
  config.sft.threads = config.threads;
  config.rl.threads = config.threads;
  return config;
}

SFTResult run_sft(const Dataset& dataset, const PipelineConfig& config, const std::string& row,
                  const ExperimentLog& log) {
  const Model<float> init = Model<float>::initialize(config.model, config.init_seed);
  return train_sft(init, dataset.train, dataset.valid, config.sft, [&](const SFTEpochLog& e) {
    if (log.on_sft_epoch) log.on_sft_epoch(row, e);
  });
}

RLResult run_rl(const Dataset& dataset, const Model<float>& sft_model, const RLConfig& rl,
                const std::string& row, const ExperimentLog& log) {
  return train_rl(
      sft_model, dataset.train, dataset.valid, rl,
      [&](const RLStepLog& s) {
        if (log.on_rl_step) log.on_rl_step(row, s);
      },
      [&](const RLEpochLog& e) {
        if (log.on_rl_epoch) log.on_rl_epoch(row, e);
      });
}

ExperimentRow make_row(const std::string& name, const Dataset& dataset, const Model<float>& model,
                       const PipelineConfig& config, int sft_best, int rl_best, Clock::time_point t0) {
  ExperimentRow row;
  row.name = name;
  row.config_hash = row_config_hash(config);
  EvalOptions opts;
  opts.threads = config.threads;
  opts.config_hash = row.config_hash;
  opts.seed = config.init_seed;
  row.report = evaluate(model, dataset.test, dataset.catalog, opts).report;
  row.splits_hash = hex64(dataset.splits_hash());
  row.latent_len = config.model.latent_len;
  row.sft_best_epoch = sft_best;
  row.rl_best_epoch = rl_best;
  row.wall_ms = elapsed_ms(t0);
  return row;
}

}  // namespace

std::string row_config_hash(const PipelineConfig& config) {
  return hex64(fnv1a(config.run_hash + "\n" + config.model.canonical() + rl_canonical(config.rl)));
}

nlohmann::json ExperimentRow::to_json() const {
  nlohmann::json j;
  j["row"] = name;
  j["latent_len"] = latent_len;
  j["config_hash"] = config_hash;
  j["splits_hash"] = splits_hash;
  j["sft_best_epoch"] = sft_best_epoch;
  j["rl_best_epoch"] = rl_best_epoch;
  j["report"] = report.to_json();
  return j;
}

std::vector<ExperimentRow> ablation_suite(const Dataset& dataset, const PipelineConfig& base,
                                          const ExperimentLog& log) {
  const PipelineConfig config = with_dataset(base, dataset);
  if (config.model.latent_len < 1 || config.model.latent_mode != LatentMode::kAttention) {
    throw Error(ErrorKind::kConfig, "ablate", "the full method needs latent_len >= 1 and attention mode");
  }
  std::vector<ExperimentRow> rows;

  auto t0 = Clock::now();
  const SFTResult sft = run_sft(dataset, config, "full", log);
  const long sft_ms = elapsed_ms(t0);

  t0 = Clock::now();
  const RLResult rl_batch = run_rl(dataset, sft.model, config.rl, "full", log);
  rows.push_back(make_row("full", dataset, rl_batch.model, config, sft.best_epoch,
                          rl_batch.best_epoch, t0 - std::chrono::milliseconds(sft_ms)));

  {
    PipelineConfig c = config;
    c.model.latent_len = 0;
    const auto t = Clock::now();
    const SFTResult r = run_sft(dataset, c, "w/o Reasoning", log);
    rows.push_back(make_row("w/o Reasoning", dataset, r.model, c, r.best_epoch, 0, t));
  }
  {
    PipelineConfig c = config;
    c.model.latent_mode = LatentMode::kLastHidden;
    const auto t = Clock::now();
    const SFTResult r = run_sft(dataset, c, "w/o LatentRATT", log);
    const RLResult rl = run_rl(dataset, r.model, c.rl, "w/o LatentRATT", log);
    rows.push_back(make_row("w/o LatentRATT", dataset, rl.model, c, r.best_epoch, rl.best_epoch, t));
  }
  {
    PipelineConfig c = config;
    c.rl.max_epochs = 0;
    rows.push_back(make_row("w/o RL", dataset, sft.model, c, sft.best_epoch, 0,
                            Clock::now() - std::chrono::milliseconds(sft_ms)));
  }
  {
    PipelineConfig c = config;
    c.rl.advantage_mode = AdvantageMode::kGroup;
    const auto t = Clock::now();
    const RLResult rl = run_rl(dataset, sft.model, c.rl, "w/o Batch Advantage", log);
    rows.push_back(make_row("w/o Batch Advantage", dataset, rl.model, c, sft.best_epoch,
                            rl.best_epoch, t - std::chrono::milliseconds(sft_ms)));
  }
  return rows;
}

std::vector<ExperimentRow> length_sweep(const Dataset& dataset, const PipelineConfig& base,
                                        const std::vector<int>& lengths, const ExperimentLog& log) {
  std::vector<ExperimentRow> rows;
  for (int n : lengths) {
    PipelineConfig c = with_dataset(base, dataset);
    c.model.latent_len = n;
    c.rl.perturb_first_only = true;
    const std::string name = "N=" + std::to_string(n);
    const auto t = Clock::now();
    const SFTResult sft = run_sft(dataset, c, name, log);
    const RLResult rl = run_rl(dataset, sft.model, c.rl, name, log);
    rows.push_back(make_row(name, dataset, rl.model, c, sft.best_epoch, rl.best_epoch, t));
  }
  return rows;
}

nlohmann::json RewardBench::to_json() const {
  return nlohmann::json{{"ppl_ms", ppl_ms},
                        {"exact_match_ms", exact_match_ms},
                        {"ratio", ratio},
                        {"ppl_generation_calls", ppl_generation_calls},
                        {"exact_match_generation_calls", exact_match_generation_calls},
                        {"samples", samples}};
}

RewardBench efficiency_bench(const Model<float>& model, const std::vector<PromptSample>& batch,
                             const RLConfig& config) {
  config.validate();
  if (batch.empty()) throw Error(ErrorKind::kInvalidArgument, "bench", "empty batch");
  Rng rng(config.seed);
  std::vector<std::vector<Matrix<float>>> samples;
  for (const auto& s : batch) {
    const Matrix<float> r = generate_latent(model, std::span<const int>(s.x));
    samples.push_back(sample_latents(model, std::span<const int>(s.x), r, config.group_size,
                                     config.sigma, rng, config.perturb_first_only)
                          .samples);
  }
  RewardBench out;
  double sink = 0;
  auto pass = [&](RewardMode mode, double& ms, long& calls) {
    const long before = generation_call_count();
    const auto t0 = Clock::now();
    for (std::size_t i = 0; i < batch.size(); ++i) {
      const std::span<const int> x(batch[i].x), y(batch[i].y);
      for (const auto& r : samples[i]) {
        sink += mode == RewardMode::kPpl ? reward_ppl(model, x, r, y)
                                         : reward_exact_match(model, x, r, y, config.max_answer_len);
      }
    }
    ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    calls = generation_call_count() - before;
  };
  pass(RewardMode::kPpl, out.ppl_ms, out.ppl_generation_calls);
  pass(RewardMode::kExactMatch, out.exact_match_ms, out.exact_match_generation_calls);
  if (!std::isfinite(sink)) throw Error(ErrorKind::kNumeric, "bench", "non-finite reward");
  out.ratio = out.ppl_ms > 0 ? out.exact_match_ms / out.ppl_ms : 0.0;
  out.samples = static_cast<int>(batch.size()) * (config.group_size + 1);
  return out;
}

}  // namespace latentrec
