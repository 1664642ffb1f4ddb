// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "run/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"

namespace latentrec {

namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  throw Error(ErrorKind::kConfig, "config", "key '" + key + "': expected " + want + ", got '" + value + "'");
}

template <typename I>
I parse_int(const std::string& key, const std::string& v) {
  I out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "an integer");
  return out;
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || v.empty()) bad_value(key, v, "a number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  bad_value(key, v, "true or false");
}

std::string fmt(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

std::string fmt_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
  return s;
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (v.empty()) return out;
  std::stringstream in(v);
  std::string item;
  while (std::getline(in, item, ',')) out.push_back(parse_double(key, item));
  return out;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

struct Binding {
  RunConfig::Key key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define INT_KEY(name, field, help)                                                   \
  Binding{{name, help, true}, [](const RunConfig& c) { return std::to_string(c.field); }, \
          [](RunConfig& c, const std::string& v) { c.field = parse_int<decltype(c.field)>(name, v); }}
#define DOUBLE_KEY(name, field, help)                                       \
  Binding{{name, help, true}, [](const RunConfig& c) { return fmt(c.field); }, \
          [](RunConfig& c, const std::string& v) { c.field = parse_double(name, v); }}
#define BOOL_KEY(name, field, help)                                                          \
  Binding{{name, help, true}, [](const RunConfig& c) { return std::string(c.field ? "true" : "false"); }, \
          [](RunConfig& c, const std::string& v) { c.field = parse_bool(name, v); }}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      INT_KEY("seed", seed, "global seed; every stage seed derives from it"),
      Binding{{"threads", "worker threads (results do not depend on it)", false},
              [](const RunConfig& c) { return std::to_string(c.threads); },
              [](RunConfig& c, const std::string& v) { c.threads = parse_int<int>("threads", v); }},

      INT_KEY("num_users", synth.num_users, "synthetic users"),
      INT_KEY("num_items", synth.num_items, "synthetic catalog size"),
      INT_KEY("num_archetypes", synth.num_archetypes, "synthetic user archetypes"),
      INT_KEY("num_categories", synth.num_categories, "synthetic item categories"),
      INT_KEY("min_cycle", synth.min_cycle, "shortest category cycle"),
      INT_KEY("max_cycle", synth.max_cycle, "longest category cycle"),
      INT_KEY("min_user_len", synth.min_seq_len, "shortest synthetic user sequence"),
      INT_KEY("max_user_len", synth.max_seq_len, "longest synthetic user sequence"),
      INT_KEY("noise_permille", synth.noise_permille, "per-mille chance of an off-rule step"),

      INT_KEY("end_time", data.end_time, "window end (unix seconds, 0 = latest record)"),
      INT_KEY("window_months", data.window_months, "initial window length in months"),
      INT_KEY("step_months", data.step_months, "window extension step in months"),
      INT_KEY("min_items", data.min_items, "items required after filtering"),
      INT_KEY("k_core", data.k_core, "k of the k-core filter"),
      INT_KEY("max_history", data.max_history, "history items kept per prompt"),

      INT_KEY("d_model", model.d_model, "model width"),
      INT_KEY("n_layers", model.n_layers, "transformer blocks"),
      INT_KEY("n_heads", model.n_heads, "attention heads"),
      INT_KEY("max_seq_len", model.max_seq_len, "longest input sequence"),
      INT_KEY("latent_len", model.latent_len, "latent reasoning tokens (N)"),
      Binding{{"latent_mode", "attention | last_hidden", true},
              [](const RunConfig& c) { return std::string(to_string(c.model.latent_mode)); },
              [](RunConfig& c, const std::string& v) { c.model.latent_mode = parse_latent_mode(v); }},
      BOOL_KEY("latent_residual", model.latent_residual, "add the last hidden row to latent tokens"),

      DOUBLE_KEY("sft_learning_rate", sft.learning_rate, "SFT learning rate"),
      INT_KEY("sft_batch_size", sft.batch_size, "SFT batch size"),
      INT_KEY("sft_max_epochs", sft.max_epochs, "SFT epoch limit"),
      INT_KEY("sft_patience", sft.early_stop_patience, "SFT early-stopping patience"),
      DOUBLE_KEY("sft_weight_decay", sft.weight_decay, "SFT weight decay"),
      Binding{{"sft_lr_candidates", "comma-separated learning rates to search (empty = none)", true},
              [](const RunConfig& c) { return fmt_list(c.sft_lr_candidates); },
              [](RunConfig& c, const std::string& v) {
                c.sft_lr_candidates = parse_list("sft_lr_candidates", v);
              }},

      INT_KEY("group_size", rl.group_size, "noisy latent samples per input (K)"),
      DOUBLE_KEY("sigma", rl.sigma, "latent noise standard deviation"),
      DOUBLE_KEY("rl_learning_rate", rl.learning_rate, "RL learning rate"),
      DOUBLE_KEY("beta", rl.beta, "KL coefficient"),
      Binding{{"advantage_mode", "batch | group", true},
              [](const RunConfig& c) { return std::string(to_string(c.rl.advantage_mode)); },
              [](RunConfig& c, const std::string& v) { c.rl.advantage_mode = parse_advantage_mode(v); }},
      Binding{{"reward_mode", "ppl | exact_match", true},
              [](const RunConfig& c) { return std::string(to_string(c.rl.reward_mode)); },
              [](RunConfig& c, const std::string& v) { c.rl.reward_mode = parse_reward_mode(v); }},
      INT_KEY("inner_epochs", rl.inner_epochs, "optimizer steps per sampled batch"),
      DOUBLE_KEY("clip_epsilon", rl.clip_epsilon, "ratio clip (0 = off)"),
      DOUBLE_KEY("eps_norm", rl.eps_norm, "advantage denominator floor"),
      DOUBLE_KEY("rl_weight_decay", rl.weight_decay, "RL weight decay"),
      INT_KEY("rl_batch_size", rl.batch_size, "RL batch size (groups per step)"),
      INT_KEY("rl_max_epochs", rl.max_epochs, "RL epoch limit"),
      INT_KEY("rl_steps_per_epoch", rl.steps_per_epoch, "RL steps per epoch (0 = full pass)"),
      INT_KEY("rl_patience", rl.patience, "RL early-stopping patience"),
      BOOL_KEY("perturb_first_only", rl.perturb_first_only, "perturb only the first latent token"),
      INT_KEY("max_answer_len", rl.max_answer_len, "generation cap for exact-match rewards"),
      INT_KEY("valid_every_steps", rl.valid_every_steps, "validation reward every n RL steps (0 = off)"),
      INT_KEY("valid_until_step", rl.valid_until_step, "last RL step with per-step validation (0 = all)"),

      Binding{{"eval_split", "split used by eval: valid | test", true},
              [](const RunConfig& c) { return c.eval_split; },
              [](RunConfig& c, const std::string& v) {
                if (v != "valid" && v != "test") bad_value("eval_split", v, "valid or test");
                c.eval_split = v;
              }},
      INT_KEY("bench_batch", bench_batch, "prompts per reward benchmark pass"),
  };
  return table;
}

#undef INT_KEY
#undef DOUBLE_KEY
#undef BOOL_KEY

const Binding& find_binding(const std::string& key) {
  for (const auto& b : bindings()) {
    if (b.key.name == key) return b;
  }
  throw Error(ErrorKind::kConfig, "config", "unknown key '" + key + "'");
}

}  // namespace

const std::vector<RunConfig::Key>& RunConfig::keys() {
  static const std::vector<Key> out = [] {
    std::vector<Key> k;
    for (const auto& b : bindings()) k.push_back(b.key);
    return k;
  }();
  return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  find_binding(key).set(*this, value);
}

std::string RunConfig::get(const std::string& key) const { return find_binding(key).get(*this); }

void RunConfig::load_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::kConfig, "config",
                  origin + ":" + std::to_string(number) + ": expected key = value");
    }
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorKind::kConfig, "config", origin + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "config", "cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  load_text(buf.str(), path);
}

std::string RunConfig::canonical() const {
  std::map<std::string, std::string> sorted;
  for (const auto& b : bindings()) {
    if (b.key.hashed) sorted[b.key.name] = b.get(*this);
  }
  std::string out;
  for (const auto& [k, v] : sorted) out += k + "=" + v + "\n";
  return out;
}

std::string RunConfig::hash() const { return hex64(fnv1a(canonical())); }

void RunConfig::validate() const {
  if (threads < 1) throw Error(ErrorKind::kConfig, "config", "threads must be >= 1");
  if (bench_batch < 1) throw Error(ErrorKind::kConfig, "config", "bench_batch must be >= 1");
  for (double lr : sft_lr_candidates) {
    if (!(lr > 0)) throw Error(ErrorKind::kConfig, "config", "sft_lr_candidates must be > 0");
  }
  sft_config().validate();
  rl_config().validate();
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig c = synth;
  c.seed = derive_seed(seed, "synth");
  return c;
}

std::uint64_t RunConfig::init_seed() const { return derive_seed(seed, "init"); }

SFTConfig RunConfig::sft_config() const {
  SFTConfig c = sft;
  c.seed = derive_seed(seed, "sft");
  c.threads = threads;
  return c;
}

RLConfig RunConfig::rl_config() const {
  RLConfig c = rl;
  c.seed = derive_seed(seed, "rl");
  c.threads = threads;
  return c;
}

}  // namespace latentrec
