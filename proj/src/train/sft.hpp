// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Supervised warm-up: next-token loss on target titles, gradients through
// both the prediction path and latent generation.

#ifndef LATENTREC_TRAIN_SFT_HPP_
#define LATENTREC_TRAIN_SFT_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "corpus/corpus.hpp"
#include "model/adamw.hpp"
#include "model/transformer.hpp"

namespace latentrec {

struct SFTConfig {
  double learning_rate = 3e-3;
  int batch_size = 16;
  int max_epochs = 10;
  int early_stop_patience = 1;
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  int threads = 1;

  void validate() const;
};

struct SFTEpochLog {
  int epoch = 0;
  double train_loss = 0;  // mean per sample
  double valid_loss = 0;  // mean per sample
  double lr = 0;
  long wall_ms = 0;
};

struct SFTResult {
  Model<float> model;  // best by validation loss
  int best_epoch = 0;  // 0 = initial parameters
  double best_valid_loss = 0;
  std::vector<SFTEpochLog> epochs;
  std::string rng_state;
};

// -sum_i log P(y_i | x, r, y_<i) for one sample on a tape.
template <typename T>
ad::Var sft_sample_loss(TapedModel<T>& model, const PromptSample& sample);

// Batch loss (sum over samples) without a tape.
template <typename T>
T sft_loss(const Model<T>& model, std::span<const PromptSample> batch, int threads = 1);

// Loss and gradient of the batch sum; per-sample gradients are reduced in
// sample order.
template <typename T>
GradientResult<T> sft_gradient(const Model<T>& model, std::span<const PromptSample> batch,
                               GradScope scope = GradScope::kAll, int threads = 1);

SFTResult train_sft(const Model<float>& init, const std::vector<PromptSample>& train,
                    const std::vector<PromptSample>& valid, const SFTConfig& config,
                    const std::function<void(const SFTEpochLog&)>& on_epoch = {});

struct LrCandidate {
  double learning_rate = 0;
  bool diverged = false;
  double valid_loss = 0;
};

struct LrSearchResult {
  double best_learning_rate = 0;
  std::vector<LrCandidate> candidates;
};

// Trains one model per candidate with identical seeds; lowest validation
// loss wins, ties go to the smaller rate, diverged runs are excluded.
LrSearchResult lr_search(const Model<float>& init, const std::vector<PromptSample>& train,
                         const std::vector<PromptSample>& valid, const SFTConfig& config,
                         const std::vector<double>& candidates);

}  // namespace latentrec

#endif  // LATENTREC_TRAIN_SFT_HPP_
