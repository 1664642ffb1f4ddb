// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "run/commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "corpus/dataset.hpp"
#include "eval/evaluate.hpp"
#include "eval/experiments.hpp"
#include "model/checkpoint.hpp"

namespace latentrec {

namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

long elapsed_ms(Clock::time_point since) {
  return static_cast<long>(
      std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - since).count());
}

void ensure_dir(const std::string& dir, const char* stage) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw Error(ErrorKind::kIo, stage, "cannot create directory " + dir +
                                           (ec ? ": " + ec.message() : std::string()));
  }
}

void write_file(const fs::path& path, const std::string& text, const char* stage) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw Error(ErrorKind::kIo, stage, "cannot write " + path.string());
}

// Line-delimited JSON records appended to <run_dir>/log.jsonl.
class RunLog {
 public:
  RunLog(const std::string& run_dir, std::string command, std::string config_hash)
      : command_(std::move(command)), hash_(std::move(config_hash)) {
    out_.open(fs::path(run_dir) / "log.jsonl", std::ios::app);
    if (!out_) throw Error(ErrorKind::kIo, command_, "cannot open log in " + run_dir);
  }

  void write(const std::string& event, nlohmann::json fields) {
    fields["command"] = command_;
    fields["event"] = event;
    fields["config_hash"] = hash_;
    out_ << fields.dump() << "\n";
    out_.flush();
  }

 private:
  std::string command_;
  std::string hash_;
  std::ofstream out_;
};

void start_run(const RunConfig& config, const std::string& run_dir, const char* stage) {
  config.validate();
  ensure_dir(run_dir, stage);
  write_file(fs::path(run_dir) / "config.txt", config.canonical(), stage);
}

Dataset load_data(const std::string& data_dir) {
  if (!fs::exists(fs::path(data_dir) / "manifest.json")) {
    throw Error(ErrorKind::kIo, "dataset", "no manifest.json in " + data_dir);
  }
  return load_dataset(data_dir);
}

// Loads a checkpoint and refuses it unless it was trained on this
// dataset's vocabulary.
Checkpoint load_compatible(const std::string& path, const Dataset& data, const char* stage) {
  if (!fs::exists(path)) throw Error(ErrorKind::kIo, stage, "no checkpoint at " + path);
  Checkpoint ck = load_checkpoint(path);
  const std::string expected = hex64(data.vocab.hash());
  const std::string stored = ck.meta("vocab_hash");
  if (stored != expected) {
    throw Error(ErrorKind::kState, stage,
                "checkpoint vocabulary hash " + (stored.empty() ? std::string("<none>") : stored) +
                    " does not match dataset vocabulary hash " + expected);
  }
  if (ck.model.config().vocab_size != data.vocab.size()) {
    throw Error(ErrorKind::kState, stage, "checkpoint vocabulary size differs from the dataset");
  }
  return ck;
}

nlohmann::json sft_epoch_json(const SFTEpochLog& e) {
  return {{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"valid_loss", e.valid_loss},
          {"lr", e.lr}, {"wall_ms", e.wall_ms}};
}

nlohmann::json rl_step_json(const RLStepLog& s, const RLConfig& c) {
  nlohmann::json j = {{"step", s.step},
                      {"epoch", s.epoch},
                      {"mean_reward", s.mean_reward},
                      {"baseline", s.baseline},
                      {"mean_abs_advantage", s.mean_abs_advantage},
                      {"loss", s.loss},
                      {"generation_calls", s.generation_calls},
                      {"advantage_mode", to_string(c.advantage_mode)},
                      {"reward_mode", to_string(c.reward_mode)},
                      {"perturb_first_only", c.perturb_first_only},
                      {"wall_ms", s.wall_ms}};
  if (s.valid_reward) j["valid_reward"] = *s.valid_reward;
  return j;
}

nlohmann::json rl_epoch_json(const RLEpochLog& e) {
  return {{"epoch", e.epoch}, {"steps", e.steps}, {"train_baseline", e.train_baseline},
          {"valid_reward", e.valid_reward}, {"wall_ms", e.wall_ms}};
}

}  // namespace

PipelineConfig pipeline_config(const RunConfig& config) {
  PipelineConfig p;
  p.model = config.model;
  p.sft = config.sft_config();
  p.rl = config.rl_config();
  p.init_seed = config.init_seed();
  p.threads = config.threads;
  p.run_hash = config.hash();
  return p;
}

namespace {

ExperimentLog experiment_log(RunLog& log, const RLConfig& rl) {
  ExperimentLog x;
  x.on_sft_epoch = [&log](const std::string& row, const SFTEpochLog& e) {
    auto j = sft_epoch_json(e);
    j["row"] = row;
    log.write("sft_epoch", j);
  };
  x.on_rl_step = [&log, rl](const std::string& row, const RLStepLog& s) {
    auto j = rl_step_json(s, rl);
    j["row"] = row;
    log.write("rl_step", j);
  };
  x.on_rl_epoch = [&log](const std::string& row, const RLEpochLog& e) {
    auto j = rl_epoch_json(e);
    j["row"] = row;
    log.write("rl_epoch", j);
  };
  return x;
}

std::string rows_jsonl(const std::vector<ExperimentRow>& rows) {
  std::string out;
  for (const auto& r : rows) out += r.to_json().dump() + "\n";
  return out;
}

nlohmann::json write_prepared(const Dataset& data, const std::string& out_dir, const char* stage) {
  ensure_dir(out_dir, stage);
  write_dataset(out_dir, data);
  nlohmann::json j = data.manifest();
  j["dir"] = out_dir;
  return j;
}

}  // namespace

nlohmann::json cmd_synth_data(const RunConfig& config, const std::string& out_dir) {
  config.validate();
  const auto records = synth_generate(config.synth_config());
  const Dataset data = prepare_dataset(records, config.data, config.hash());
  return write_prepared(data, out_dir, "synth-data");
}

nlohmann::json cmd_prepare_data(const RunConfig& config, const std::string& tsv_path,
                                const std::string& out_dir) {
  config.validate();
  const auto records = ingest_records(tsv_path);
  const Dataset data = prepare_dataset(records, config.data, config.hash());
  return write_prepared(data, out_dir, "prepare-data");
}

nlohmann::json cmd_sft(const RunConfig& config, const std::string& data_dir,
                       const std::string& run_dir) {
  start_run(config, run_dir, "sft");
  const Dataset data = load_data(data_dir);
  RunLog log(run_dir, "sft", config.hash());
  ModelConfig mc = config.model;
  mc.vocab_size = data.vocab.size();
  mc.validate();
  const Model<float> init = Model<float>::initialize(mc, config.init_seed());
  SFTConfig sc = config.sft_config();
  if (!config.sft_lr_candidates.empty()) {
    const auto search = lr_search(init, data.train, data.valid, sc, config.sft_lr_candidates);
    for (const auto& c : search.candidates) {
      log.write("lr_candidate", {{"learning_rate", c.learning_rate},
                                 {"diverged", c.diverged},
                                 {"valid_loss", c.valid_loss}});
    }
    sc.learning_rate = search.best_learning_rate;
  }
  const auto t0 = Clock::now();
  const SFTResult result = train_sft(init, data.train, data.valid, sc, [&](const SFTEpochLog& e) {
    log.write("sft_epoch", sft_epoch_json(e));
  });
  Checkpoint ck;
  ck.model = result.model;
  ck.rng_state = result.rng_state;
  ck.metadata = {{"stage", "sft"},
                 {"run_config_hash", config.hash()},
                 {"vocab_hash", hex64(data.vocab.hash())},
                 {"splits_hash", hex64(data.splits_hash())},
                 {"best_epoch", std::to_string(result.best_epoch)},
                 {"learning_rate", std::to_string(sc.learning_rate)}};
  const std::string path = (fs::path(run_dir) / "sft.ckpt").string();
  save_checkpoint(path, ck);
  nlohmann::json summary = {{"checkpoint", path},
                            {"checkpoint_hash", hex64(ck.hash())},
                            {"best_epoch", result.best_epoch},
                            {"best_valid_loss", result.best_valid_loss},
                            {"epochs", result.epochs.size()},
                            {"learning_rate", sc.learning_rate}};
  auto done = summary;
  done["wall_ms"] = elapsed_ms(t0);
  log.write("done", done);
  return summary;
}

nlohmann::json cmd_rl(const RunConfig& config, const std::string& data_dir,
                      const std::string& checkpoint, const std::string& run_dir) {
  start_run(config, run_dir, "rl");
  const Dataset data = load_data(data_dir);
  const Checkpoint input = load_compatible(checkpoint, data, "rl");
  RunLog log(run_dir, "rl", config.hash());
  const RLConfig rc = config.rl_config();
  const auto t0 = Clock::now();
  const RLResult result = train_rl(
      input.model, data.train, data.valid, rc,
      [&](const RLStepLog& s) { log.write("rl_step", rl_step_json(s, rc)); },
      [&](const RLEpochLog& e) { log.write("rl_epoch", rl_epoch_json(e)); });
  Checkpoint ck;
  ck.model = result.model;
  ck.rng_state = result.rng_state;
  ck.metadata = {{"stage", "rl"},
                 {"run_config_hash", config.hash()},
                 {"vocab_hash", input.meta("vocab_hash")},
                 {"splits_hash", hex64(data.splits_hash())},
                 {"parent_checkpoint_hash", hex64(input.hash())},
                 {"best_epoch", std::to_string(result.best_epoch)},
                 {"advantage_mode", to_string(rc.advantage_mode)},
                 {"reward_mode", to_string(rc.reward_mode)}};
  const std::string path = (fs::path(run_dir) / "rl.ckpt").string();
  save_checkpoint(path, ck);
  const std::string base_in = hex64(input.model.group_hash(ParamGroup::kBase));
  const std::string base_out = hex64(ck.model.group_hash(ParamGroup::kBase));
  nlohmann::json summary = {{"checkpoint", path},
                            {"checkpoint_hash", hex64(ck.hash())},
                            {"best_epoch", result.best_epoch},
                            {"initial_valid_reward", result.initial_valid_reward},
                            {"best_valid_reward", result.best_valid_reward},
                            {"steps", result.steps.size()},
                            {"base_hash_in", base_in},
                            {"base_hash_out", base_out}};
  auto done = summary;
  done["wall_ms"] = elapsed_ms(t0);
  log.write("done", done);
  return summary;
}

nlohmann::json cmd_eval(const RunConfig& config, const std::string& data_dir,
                        const std::string& checkpoint, const std::string& out_path) {
  config.validate();
  const Dataset data = load_data(data_dir);
  const Checkpoint ck = load_compatible(checkpoint, data, "eval");
  EvalOptions opts;
  opts.threads = config.threads;
  opts.config_hash = config.hash();
  opts.seed = config.seed;
  const EvalResult result = evaluate(ck.model, data.prompts(config.eval_split), data.catalog, opts);
  nlohmann::json report = result.report.to_json();
  report["checkpoint_hash"] = hex64(ck.hash());
  report["split"] = config.eval_split;
  const fs::path out(out_path);
  if (out.has_parent_path()) ensure_dir(out.parent_path().string(), "eval");
  write_file(out, report.dump(2) + "\n", "eval");
  return report;
}

nlohmann::json cmd_ablate(const RunConfig& config, const std::string& data_dir,
                          const std::string& run_dir) {
  start_run(config, run_dir, "ablate");
  const Dataset data = load_data(data_dir);
  RunLog log(run_dir, "ablate", config.hash());
  const PipelineConfig pc = pipeline_config(config);
  const auto rows = ablation_suite(data, pc, experiment_log(log, pc.rl));
  const std::string path = (fs::path(run_dir) / "ablation.jsonl").string();
  write_file(path, rows_jsonl(rows), "ablate");
  nlohmann::json summary = {{"table", path}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    summary["rows"].push_back({{"row", r.name}, {"ndcg@10", r.report.overall.ndcg.at(10)}});
    log.write("row", {{"row", r.name}, {"wall_ms", r.wall_ms}, {"report", r.report.to_json()}});
  }
  return summary;
}

nlohmann::json cmd_sweep_length(const RunConfig& config, const std::string& data_dir,
                                const std::string& run_dir) {
  start_run(config, run_dir, "sweep-length");
  const Dataset data = load_data(data_dir);
  RunLog log(run_dir, "sweep-length", config.hash());
  const PipelineConfig pc = pipeline_config(config);
  const auto rows = length_sweep(data, pc, kSweepLengths, experiment_log(log, pc.rl));
  const std::string path = (fs::path(run_dir) / "sweep.jsonl").string();
  write_file(path, rows_jsonl(rows), "sweep-length");
  nlohmann::json summary = {{"table", path}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows) {
    summary["rows"].push_back({{"latent_len", r.latent_len}, {"ndcg@10", r.report.overall.ndcg.at(10)}});
    log.write("row", {{"row", r.name}, {"wall_ms", r.wall_ms}, {"report", r.report.to_json()}});
  }
  return summary;
}

nlohmann::json cmd_bench_reward(const RunConfig& config, const std::string& data_dir,
                                const std::string& checkpoint, const std::string& run_dir) {
  start_run(config, run_dir, "bench-reward");
  const Dataset data = load_data(data_dir);
  const Checkpoint ck = load_compatible(checkpoint, data, "bench-reward");
  RunLog log(run_dir, "bench-reward", config.hash());
  const std::size_t n = std::min<std::size_t>(config.bench_batch, data.train.size());
  const std::vector<PromptSample> batch(data.train.begin(), data.train.begin() + n);
  const RewardBench bench = efficiency_bench(ck.model, batch, config.rl_config());
  nlohmann::json j = bench.to_json();
  j["config_hash"] = config.hash();
  j["checkpoint_hash"] = hex64(ck.hash());
  j["max_answer_len"] = config.rl.max_answer_len;
  const std::string path = (fs::path(run_dir) / "bench.json").string();
  write_file(path, j.dump(2) + "\n", "bench-reward");
  log.write("bench", j);
  j["file"] = path;
  return j;
}

}  // namespace latentrec
