// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "train/rl.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/tokens.hpp"

namespace latentrec {

const char* to_string(AdvantageMode mode) {
  return mode == AdvantageMode::kBatch ? "batch" : "group";
}

const char* to_string(RewardMode mode) {
  return mode == RewardMode::kPpl ? "ppl" : "exact_match";
}

AdvantageMode parse_advantage_mode(const std::string& text) {
  if (text == "batch") return AdvantageMode::kBatch;
  if (text == "group") return AdvantageMode::kGroup;
  throw Error(ErrorKind::kConfig, "rl", "unknown advantage_mode '" + text + "' (batch|group)");
}

RewardMode parse_reward_mode(const std::string& text) {
  if (text == "ppl") return RewardMode::kPpl;
  if (text == "exact_match") return RewardMode::kExactMatch;
  throw Error(ErrorKind::kConfig, "rl", "unknown reward_mode '" + text + "' (ppl|exact_match)");
}

void RLConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kConfig, "rl", m); };
  if (group_size < 1) fail("group_size (K) must be >= 1");
  if (!(sigma >= 0) || !std::isfinite(sigma)) fail("sigma must be >= 0");
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (!(beta >= 0)) fail("beta must be >= 0");
  if (inner_epochs < 1) fail("inner_epochs must be >= 1");
  if (!(clip_epsilon >= 0)) fail("clip_epsilon must be >= 0");
  if (!(eps_norm > 0)) fail("eps_norm must be > 0");
  if (!(weight_decay >= 0)) fail("weight_decay must be >= 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 0) fail("max_epochs must be >= 0");
  if (steps_per_epoch < 0) fail("steps_per_epoch must be >= 0");
  if (patience < 1) fail("patience must be >= 1");
  if (max_answer_len < 1) fail("max_answer_len must be >= 1");
  if (valid_every_steps < 0) fail("valid_every_steps must be >= 0");
  if (valid_until_step < 0) fail("valid_until_step must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
}

// ---------------------------------------------------------------------------
// Sampling and rewards
// ---------------------------------------------------------------------------

template <typename T>
Matrix<T> continue_latent(const Model<T>& model, std::span<const int> x, const Matrix<T>& first) {
  const ModelConfig& cfg = model.config();
  const int n = cfg.latent_len;
  const int d = cfg.d_model;
  if (first.rows != 1 || first.cols != d) {
    throw Error(ErrorKind::kInvalidArgument, "rl", "first latent token must be 1 x d");
  }
  Matrix<T> r(n, d);
  std::copy(first.data.begin(), first.data.end(), r.row(0));
  if (n == 1) return r;
  DecodeState<T> state(cfg.n_layers);
  std::vector<T> rows(x.size() * d);
  for (std::size_t i = 0; i < x.size(); ++i) token_embedding(model, x[i], rows.data() + i * d);
  decode_extend(model, state, rows.data(), static_cast<int>(x.size()), static_cast<T*>(nullptr));
  for (int i = 1; i < n; ++i) {
    decode_extend(model, state, r.row(i - 1), 1, static_cast<T*>(nullptr));
    decode_latent_step(model, state, r.row(i));
  }
  return r;
}

template <typename T>
LatentSamples<T> sample_latents(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                                int K, double sigma, Rng& rng, bool perturb_first_only) {
  if (K < 1) throw Error(ErrorKind::kInvalidArgument, "rl", "K must be >= 1");
  if (!(sigma >= 0)) throw Error(ErrorKind::kInvalidArgument, "rl", "sigma must be >= 0");
  const bool first_only = perturb_first_only && r.rows > 1;
  LatentSamples<T> out;
  out.samples.push_back(r);
  for (int k = 0; k < K; ++k) {
    Matrix<T> noise(first_only ? 1 : r.rows, r.cols);
    for (T& v : noise.data) v = T(sigma * rng.normal());
    out.noises.push_back(std::move(noise));
  }
  for (const Matrix<T>& noise : out.noises) {
    if (first_only) {
      Matrix<T> first(1, r.cols);
      for (int j = 0; j < r.cols; ++j) first.data[j] = r.data[j] + noise.data[j];
      out.samples.push_back(continue_latent(model, x, first));
    } else {
      Matrix<T> s = r;
      for (std::size_t j = 0; j < s.data.size(); ++j) s.data[j] += noise.data[j];
      out.samples.push_back(std::move(s));
    }
  }
  return out;
}

double reward_from_logprobs(std::span<const double> log_probs) {
  if (log_probs.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty target sequence");
  double total = 0;
  for (double lp : log_probs) {
    if (!std::isfinite(lp)) throw Error(ErrorKind::kNumeric, "rl", "non-finite log-probability");
    total += lp;
  }
  return -std::exp(-total / double(log_probs.size()));
}

template <typename T>
double reward_ppl(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                  std::span<const int> y) {
  const std::vector<T> lp = sequence_logprob(model, x, r, y);
  const std::vector<double> lpd(lp.begin(), lp.end());
  return reward_from_logprobs(lpd);
}

namespace {

std::span<const int> strip_eos(std::span<const int> y) {
  if (!y.empty() && y.back() == tokens::kEos) return y.first(y.size() - 1);
  return y;
}

}  // namespace

template <typename T>
double reward_exact_match(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                          std::span<const int> y, int max_len) {
  const std::vector<int> generated = generate_answer(model, x, r, max_len);
  const std::span<const int> answer = strip_eos(generated);
  const std::span<const int> target = strip_eos(y);
  return std::equal(answer.begin(), answer.end(), target.begin(), target.end()) ? 1.0 : 0.0;
}

// ---------------------------------------------------------------------------
// Advantages
// ---------------------------------------------------------------------------

double batch_baseline(const std::vector<std::vector<double>>& rewards) {
  if (rewards.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty batch");
  double total = 0;
  for (const auto& g : rewards) {
    if (g.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "group without sample 0");
    total += g[0];
  }
  return total / double(rewards.size());
}

std::vector<std::vector<double>> advantage_batch(const std::vector<std::vector<double>>& rewards,
                                                 double baseline, double eps_norm) {
  double sq = 0;
  for (const auto& g : rewards) {
    for (double s : g) {
      if (!std::isfinite(s)) throw Error(ErrorKind::kNumeric, "rl", "non-finite reward");
      sq += (s - baseline) * (s - baseline);
    }
  }
  const double norm = std::sqrt(sq);
  std::vector<std::vector<double>> out;
  for (const auto& g : rewards) {
    std::vector<double> a(g.size(), 0.0);
    if (norm >= eps_norm) {
      for (std::size_t k = 0; k < g.size(); ++k) a[k] = (g[k] - baseline) / norm;
    }
    out.push_back(std::move(a));
  }
  return out;
}

std::vector<double> advantage_group(const std::vector<double>& rewards, double eps_norm) {
  if (rewards.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty group");
  double mean = 0;
  for (double s : rewards) mean += s;
  mean /= double(rewards.size());
  double var = 0;
  for (double s : rewards) var += (s - mean) * (s - mean);
  var /= double(rewards.size());
  const double denom = std::max(std::sqrt(var), eps_norm);
  std::vector<double> out(rewards.size());
  for (std::size_t k = 0; k < rewards.size(); ++k) out[k] = (rewards[k] - mean) / denom;
  return out;
}

// ---------------------------------------------------------------------------
// Objective
// ---------------------------------------------------------------------------

template <typename T>
ad::Var grpo_group_loss(TapedModel<T>& tm, const SampleGroup<T>& group, const RLConfig& config) {
  auto& tape = tm.tape();
  const PromptSample& s = *group.sample;
  const int K = static_cast<int>(group.noises.size());
  if (K < 1 || static_cast<int>(group.advantages.size()) != K + 1 ||
      static_cast<int>(group.old_log_probs.size()) != K + 1) {
    throw Error(ErrorKind::kInvalidArgument, "grpo", "group is missing stored noise or log-probs");
  }
  const bool use_kl = config.beta > 0;
  if (use_kl && static_cast<int>(group.ref_log_probs.size()) != K + 1) {
    throw Error(ErrorKind::kInvalidArgument, "grpo", "beta > 0 needs reference log-probs");
  }
  const int n = tm.model().config().latent_len;
  const T coef = T(-1) / (T(K) * T(s.y.size()));

  TapeCache prompt = tm.empty_cache();
  tm.extend(prompt, tm.embed(s.x));
  typename TapedModel<T>::LatentRun run;
  if (n > 0) run = tm.generate_latent(prompt);

  std::vector<ad::Var> terms;
  for (int k = 1; k <= K; ++k) {
    const Matrix<T>& noise = group.noises[k - 1];
    ad::Var lp;
    if (n == 0) {
      lp = tm.target_log_probs(prompt, {}, s.y);
    } else if (noise.rows == 1 && n > 1) {
      Matrix<T> first_noise = noise;
      ad::Var first = ad::add(tape, run.tokens[0], tape.constant(std::move(first_noise)));
      auto cont = tm.continue_latent(prompt, first, n);
      lp = tm.target_log_probs(cont.before_last, {cont.tokens.back()}, s.y);
    } else {
      if (noise.rows != n) throw Error(ErrorKind::kInvalidArgument, "grpo", "noise shape mismatch");
      std::vector<ad::Var> tail;
      for (int i = 0; i < n; ++i) {
        Matrix<T> row(1, noise.cols);
        std::copy(noise.row(i), noise.row(i) + noise.cols, row.data.begin());
        tail.push_back(ad::add(tape, run.tokens[i], tape.constant(std::move(row))));
      }
      lp = tm.target_log_probs(prompt, tail, s.y);
    }
    terms.push_back(ad::ratio_surrogate(tape, lp, group.old_log_probs[k], T(group.advantages[k]),
                                        coef, T(config.clip_epsilon)));
    if (use_kl) {
      terms.push_back(ad::kl_estimate(tape, lp, group.ref_log_probs[k], T(config.beta) * -coef));
    }
  }
  return ad::sum_scalars(tape, terms);
}

template <typename T>
T grpo_loss(const Model<T>& model, std::span<const SampleGroup<T>> groups, const RLConfig& config) {
  T total = 0;
  for (const auto& g : groups) {
    ad::Tape<T> tape(false);
    TapedModel<T> tm(tape, model, nullptr);
    total += tape.value(grpo_group_loss(tm, g, config)).data[0];
  }
  return total;
}

template <typename T>
GradientResult<T> grpo_gradient(const Model<T>& model, std::span<const SampleGroup<T>> groups,
                                const RLConfig& config) {
  std::vector<GradientResult<T>> per(groups.size());
  parallel_for(static_cast<int>(groups.size()), config.threads, [&](int i) {
    per[i] = gradient<T>(model, GradScope::kLatentOnly,
                         [&](TapedModel<T>& tm) { return grpo_group_loss(tm, groups[i], config); });
  });
  GradientResult<T> out{T(0), Gradients<T>::for_model(model, GradScope::kLatentOnly)};
  for (const auto& p : per) {
    out.loss += p.loss;
    out.grads.add(p.grads);
  }
  return out;
}

template <typename T>
std::vector<SampleGroup<T>> build_groups(const Model<T>& model, std::span<const PromptSample> batch,
                                         const RLConfig& config, Rng& rng,
                                         const Model<T>* reference) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty batch");
  if (config.beta > 0 && reference == nullptr) {
    throw Error(ErrorKind::kInvalidArgument, "rl", "beta > 0 needs a reference model");
  }
  const int B = static_cast<int>(batch.size());
  const int K = config.group_size;
  std::vector<SampleGroup<T>> groups(B);
  parallel_for(B, config.threads, [&](int i) {
    groups[i].sample = &batch[i];
    groups[i].base = generate_latent(model, std::span<const int>(batch[i].x));
  });
  // Noise is drawn in (group, k) order on one stream so the result does not
  // depend on the thread count.
  for (auto& g : groups) {
    auto drawn = sample_latents(model, std::span<const int>(g.sample->x), g.base, K, config.sigma,
                                rng, config.perturb_first_only);
    g.samples = std::move(drawn.samples);
    g.noises = std::move(drawn.noises);
  }
  const int total = B * (K + 1);
  for (auto& g : groups) {
    g.old_log_probs.resize(K + 1);
    g.rewards.resize(K + 1);
    if (config.beta > 0) g.ref_log_probs.resize(K + 1);
  }
  parallel_for(total, config.threads, [&](int idx) {
    SampleGroup<T>& g = groups[idx / (K + 1)];
    const int k = idx % (K + 1);
    const std::span<const int> x(g.sample->x);
    const std::span<const int> y(g.sample->y);
    g.old_log_probs[k] = sequence_logprob(model, x, g.samples[k], y);
    if (config.reward_mode == RewardMode::kPpl) {
      const std::vector<double> lpd(g.old_log_probs[k].begin(), g.old_log_probs[k].end());
      g.rewards[k] = reward_from_logprobs(lpd);
    } else {
      g.rewards[k] = reward_exact_match(model, x, g.samples[k], y, config.max_answer_len);
    }
    if (config.beta > 0) g.ref_log_probs[k] = sequence_logprob(*reference, x, g.samples[k], y);
  });
  if (config.advantage_mode == AdvantageMode::kBatch) {
    std::vector<std::vector<double>> rewards;
    for (const auto& g : groups) rewards.push_back(g.rewards);
    const auto adv = advantage_batch(rewards, batch_baseline(rewards), config.eps_norm);
    for (int i = 0; i < B; ++i) groups[i].advantages = adv[i];
  } else {
    for (auto& g : groups) g.advantages = advantage_group(g.rewards, config.eps_norm);
  }
  return groups;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

long elapsed_ms(std::chrono::steady_clock::time_point since) {
  return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - since)
                               .count());
}

bool latent_finite(const Model<float>& model) {
  for (const auto& p : model.params()) {
    if (p.group == ParamGroup::kLatent && !p.value.all_finite()) return false;
  }
  return true;
}

}  // namespace

bool rl_is_noop(const ModelConfig& config) {
  return config.latent_len == 0 || config.latent_mode == LatentMode::kLastHidden;
}

RLStepLog rl_train_step(Model<float>& model, AdamW<float>& optimizer,
                        std::span<const PromptSample> batch, const RLConfig& config, Rng& rng,
                        const Model<float>* reference) {
  const auto t0 = std::chrono::steady_clock::now();
  const long calls_before = generation_call_count();
  // The groups keep the log-probs of the snapshot they were sampled from;
  // that snapshot is the old policy of the ratio.
  const auto groups = build_groups(model, batch, config, rng, reference);
  RLStepLog log;
  log.generation_calls = generation_call_count() - calls_before;
  double reward_sum = 0, adv_sum = 0, base_sum = 0;
  long count = 0;
  for (const auto& g : groups) {
    base_sum += g.rewards[0];
    for (std::size_t k = 0; k < g.rewards.size(); ++k) {
      reward_sum += g.rewards[k];
      adv_sum += std::abs(g.advantages[k]);
      ++count;
    }
  }
  log.mean_reward = reward_sum / double(count);
  log.baseline = base_sum / double(groups.size());
  log.mean_abs_advantage = adv_sum / double(count);
  for (int e = 0; e < config.inner_epochs; ++e) {
    auto g = grpo_gradient(model, std::span<const SampleGroup<float>>(groups), config);
    if (!std::isfinite(g.loss)) throw Error(ErrorKind::kNumeric, "rl", "non-finite loss");
    if (e == 0) log.loss = g.loss;
    if (!rl_is_noop(model.config())) optimizer.step(model, g.grads);
    if (!latent_finite(model)) throw Error(ErrorKind::kNumeric, "rl", "non-finite latent parameters");
  }
  log.wall_ms = elapsed_ms(t0);
  return log;
}

double validation_reward(const Model<float>& model, const std::vector<PromptSample>& split,
                         const RLConfig& config) {
  if (split.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty validation split");
  std::vector<double> per(split.size());
  parallel_for(static_cast<int>(split.size()), config.threads, [&](int i) {
    const auto& s = split[i];
    const std::span<const int> x(s.x), y(s.y);
    const Matrix<float> r = generate_latent(model, x);
    per[i] = config.reward_mode == RewardMode::kPpl
                 ? reward_ppl(model, x, r, y)
                 : reward_exact_match(model, x, r, y, config.max_answer_len);
  });
  double total = 0;
  for (double v : per) total += v;
  return total / double(split.size());
}

RLResult train_rl(const Model<float>& sft_model, const std::vector<PromptSample>& train,
                  const std::vector<PromptSample>& valid, const RLConfig& config,
                  const std::function<void(const RLStepLog&)>& on_step,
                  const std::function<void(const RLEpochLog&)>& on_epoch) {
  config.validate();
  if (train.empty() || valid.empty()) throw Error(ErrorKind::kInvalidArgument, "rl", "empty split");
  RLResult result;
  result.model = sft_model;
  Rng rng(config.seed);
  if (config.max_epochs == 0 || rl_is_noop(sft_model.config())) {
    result.rng_state = rng.state();
    return result;
  }
  result.initial_valid_reward = validation_reward(sft_model, valid, config);
  result.best_valid_reward = result.initial_valid_reward;
  if (on_epoch) {
    RLEpochLog initial;
    initial.valid_reward = result.initial_valid_reward;
    on_epoch(initial);
  }
  Model<float> model = sft_model;
  AdamW<float> opt(AdamWConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  const Model<float>* reference = config.beta > 0 ? &sft_model : nullptr;

  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  const int batches = static_cast<int>((train.size() + config.batch_size - 1) / config.batch_size);
  const int steps = config.steps_per_epoch > 0 ? std::min(config.steps_per_epoch, batches) : batches;
  long step = 0;
  int stale = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double baseline_sum = 0;
    for (int b = 0; b < steps; ++b) {
      const std::size_t start = std::size_t(b) * config.batch_size;
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<PromptSample> batch;
      for (std::size_t j = start; j < end; ++j) batch.push_back(train[order[j]]);
      ++step;
      RLStepLog log;
      try {
        log = rl_train_step(model, opt, std::span<const PromptSample>(batch), config, rng, reference);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        throw Error(ErrorKind::kNumeric, "rl", "divergence at step " + std::to_string(step) + ": " + e.what());
      }
      log.step = step;
      log.epoch = epoch;
      if (config.valid_every_steps > 0 && step % config.valid_every_steps == 0 &&
          (config.valid_until_step == 0 || step <= config.valid_until_step)) {
        log.valid_reward = validation_reward(model, valid, config);
      }
      baseline_sum += log.baseline;
      result.steps.push_back(log);
      if (on_step) on_step(log);
    }
    RLEpochLog elog;
    elog.epoch = epoch;
    elog.steps = steps;
    elog.train_baseline = baseline_sum / double(steps);
    elog.valid_reward = validation_reward(model, valid, config);
    elog.wall_ms = elapsed_ms(t0);
    result.epochs.push_back(elog);
    if (on_epoch) on_epoch(elog);
    if (elog.valid_reward > result.best_valid_reward) {
      result.best_valid_reward = elog.valid_reward;
      result.best_epoch = epoch;
      result.model = model;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
  }
  result.rng_state = rng.state();
  return result;
}

#define LATENTREC_RL_INSTANTIATE(T)                                                              \
  template Matrix<T> continue_latent(const Model<T>&, std::span<const int>, const Matrix<T>&);   \
  template LatentSamples<T> sample_latents(const Model<T>&, std::span<const int>,                \
                                           const Matrix<T>&, int, double, Rng&, bool);           \
  template double reward_ppl(const Model<T>&, std::span<const int>, const Matrix<T>&,            \
                             std::span<const int>);                                              \
  template double reward_exact_match(const Model<T>&, std::span<const int>, const Matrix<T>&,    \
                                     std::span<const int>, int);                                 \
  template ad::Var grpo_group_loss(TapedModel<T>&, const SampleGroup<T>&, const RLConfig&);      \
  template T grpo_loss(const Model<T>&, std::span<const SampleGroup<T>>, const RLConfig&);       \
  template GradientResult<T> grpo_gradient(const Model<T>&, std::span<const SampleGroup<T>>,     \
                                           const RLConfig&);                                     \
  template std::vector<SampleGroup<T>> build_groups(const Model<T>&, std::span<const PromptSample>, \
                                                    const RLConfig&, Rng&, const Model<T>*);

LATENTREC_RL_INSTANTIATE(float)
LATENTREC_RL_INSTANTIATE(double)

}  // namespace latentrec
