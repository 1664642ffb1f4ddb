// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Reinforcement stage for the latent generator: Gaussian perturbations of
// the latent thought, perplexity or exact-match rewards, batch- or
// group-relative advantages, and a ratio objective whose gradient reaches
// the latent attention block through the perturbed latents only.

#ifndef LATENTREC_TRAIN_RL_HPP_
#define LATENTREC_TRAIN_RL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "common/rng.hpp"
#include "corpus/corpus.hpp"
#include "model/adamw.hpp"
#include "model/transformer.hpp"

namespace latentrec {

enum class AdvantageMode { kBatch, kGroup };
enum class RewardMode { kPpl, kExactMatch };

const char* to_string(AdvantageMode mode);
const char* to_string(RewardMode mode);
AdvantageMode parse_advantage_mode(const std::string& text);
RewardMode parse_reward_mode(const std::string& text);

struct RLConfig {
  int group_size = 8;  // K
  double sigma = 0.05;
  double learning_rate = 1e-3;
  double beta = 0.0;
  AdvantageMode advantage_mode = AdvantageMode::kBatch;
  RewardMode reward_mode = RewardMode::kPpl;
  int inner_epochs = 1;
  double clip_epsilon = 0.0;  // 0 disables clipping
  double eps_norm = 1e-8;
  double weight_decay = 0.0;
  int batch_size = 16;
  int max_epochs = 1;
  int steps_per_epoch = 0;  // 0 = one pass over the training split
  int patience = 1;
  bool perturb_first_only = false;
  int max_answer_len = 16;
  // Validation reward after every n-th step (0 = only at epoch ends).
  int valid_every_steps = 0;
  // Last step that gets the per-step validation (0 = every step).
  int valid_until_step = 0;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

// Perturbed latents for one prompt: samples[0] is r itself; noises[k - 1]
// is the noise of sample k (N x d, or 1 x d when only r_1 is perturbed).
template <typename T>
struct LatentSamples {
  std::vector<Matrix<T>> samples;
  std::vector<Matrix<T>> noises;
};

// Draws K noise matrices from rng and builds the K + 1 samples. With
// perturb_first_only the tokens after r_1 are regenerated from the
// perturbed r_1, which needs the model and prompt.
template <typename T>
LatentSamples<T> sample_latents(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                                int K, double sigma, Rng& rng, bool perturb_first_only);

// Latent tokens that follow a fixed first token, generated from x.
template <typename T>
Matrix<T> continue_latent(const Model<T>& model, std::span<const int> x, const Matrix<T>& first);

// -exp(-mean_i log p(y_i | x, r, y_<i)).
double reward_from_logprobs(std::span<const double> log_probs);
template <typename T>
double reward_ppl(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                  std::span<const int> y);
// 1 iff greedy decoding reproduces y (trailing EOS ignored on both sides).
template <typename T>
double reward_exact_match(const Model<T>& model, std::span<const int> x, const Matrix<T>& r,
                          std::span<const int> y, int max_len);

// rewards[g][k], k = 0..K.
double batch_baseline(const std::vector<std::vector<double>>& rewards);
std::vector<std::vector<double>> advantage_batch(const std::vector<std::vector<double>>& rewards,
                                                 double baseline, double eps_norm);
std::vector<double> advantage_group(const std::vector<double>& rewards, double eps_norm);

template <typename T>
struct SampleGroup {
  const PromptSample* sample = nullptr;
  Matrix<T> base;                            // r
  std::vector<Matrix<T>> noises;             // K
  std::vector<Matrix<T>> samples;            // K + 1
  std::vector<std::vector<T>> old_log_probs;  // K + 1, per target token
  std::vector<std::vector<T>> ref_log_probs;  // K + 1 when beta > 0
  std::vector<double> rewards;               // K + 1
  std::vector<double> advantages;            // K + 1
};

// Loss of one group on a tape (sample 0 is excluded from the sum).
template <typename T>
ad::Var grpo_group_loss(TapedModel<T>& model, const SampleGroup<T>& group, const RLConfig& config);
// Sum of the group losses.
template <typename T>
T grpo_loss(const Model<T>& model, std::span<const SampleGroup<T>> groups, const RLConfig& config);
// Loss and latent-group gradient, reduced in group order.
template <typename T>
GradientResult<T> grpo_gradient(const Model<T>& model, std::span<const SampleGroup<T>> groups,
                                const RLConfig& config);

// Steps (1)-(5) of an update: latents, samples, rewards, advantages.
// `reference` supplies log-probs for the KL term and may be null when
// beta == 0.
template <typename T>
std::vector<SampleGroup<T>> build_groups(const Model<T>& model, std::span<const PromptSample> batch,
                                         const RLConfig& config, Rng& rng,
                                         const Model<T>* reference = nullptr);

struct RLStepLog {
  long step = 0;
  int epoch = 0;
  double mean_reward = 0;  // all K + 1 samples
  double baseline = 0;     // mean sample-0 reward
  double mean_abs_advantage = 0;
  double loss = 0;  // first inner epoch
  long generation_calls = 0;
  std::optional<double> valid_reward;
  long wall_ms = 0;
};

RLStepLog rl_train_step(Model<float>& model, AdamW<float>& optimizer,
                        std::span<const PromptSample> batch, const RLConfig& config, Rng& rng,
                        const Model<float>* reference = nullptr);

// Mean sample-0 reward over a split, using the configured reward mode.
double validation_reward(const Model<float>& model, const std::vector<PromptSample>& split,
                         const RLConfig& config);

struct RLEpochLog {
  int epoch = 0;
  int steps = 0;
  double train_baseline = 0;  // mean over the epoch's steps
  double valid_reward = 0;
  long wall_ms = 0;
};

struct RLResult {
  Model<float> model;  // best by validation reward
  int best_epoch = 0;  // 0 = the input checkpoint
  double best_valid_reward = 0;
  double initial_valid_reward = 0;
  std::vector<RLEpochLog> epochs;
  std::vector<RLStepLog> steps;
  std::string rng_state;
};

// True when the model has no latent attention parameters in use, so the
// stage has nothing to update.
bool rl_is_noop(const ModelConfig& config);

RLResult train_rl(const Model<float>& sft_model, const std::vector<PromptSample>& train,
                  const std::vector<PromptSample>& valid, const RLConfig& config,
                  const std::function<void(const RLStepLog&)>& on_step = {},
                  const std::function<void(const RLEpochLog&)>& on_epoch = {});

}  // namespace latentrec

#endif  // LATENTREC_TRAIN_RL_HPP_
