// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "train/sft.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "common/error.hpp"
#include "common/parallel.hpp"
#include "common/rng.hpp"

namespace latentrec {

void SFTConfig::validate() const {
  auto fail = [](const std::string& m) { throw Error(ErrorKind::kConfig, "sft", m); };
  if (!(learning_rate > 0)) fail("learning_rate must be > 0");
  if (batch_size < 1) fail("batch_size must be >= 1");
  if (max_epochs < 0) fail("max_epochs must be >= 0");
  if (early_stop_patience < 1) fail("early_stop_patience must be >= 1");
  if (threads < 1) fail("threads must be >= 1");
}

template <typename T>
ad::Var sft_sample_loss(TapedModel<T>& tm, const PromptSample& sample) {
  auto& tape = tm.tape();
  TapeCache cache = tm.empty_cache();
  tm.extend(cache, tm.embed(sample.x));
  ad::Var lp;
  if (tm.model().config().latent_len == 0) {
    lp = tm.target_log_probs(cache, {}, sample.y);
  } else {
    auto run = tm.generate_latent(cache);
    lp = tm.target_log_probs(run.before_last, {run.tokens.back()}, sample.y);
  }
  return ad::scale(tape, ad::sum(tape, lp), T(-1));
}

template <typename T>
T sft_loss(const Model<T>& model, std::span<const PromptSample> batch, int threads) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidArgument, "sft", "empty batch");
  std::vector<T> per(batch.size());
  parallel_for(static_cast<int>(batch.size()), threads, [&](int i) {
    const auto& s = batch[i];
    const Matrix<T> r = generate_latent(model, std::span<const int>(s.x));
    T sum = 0;
    for (T v : sequence_logprob(model, std::span<const int>(s.x), r, std::span<const int>(s.y))) sum += v;
    per[i] = -sum;
  });
  T total = 0;
  for (T v : per) total += v;
  return total;
}

template <typename T>
GradientResult<T> sft_gradient(const Model<T>& model, std::span<const PromptSample> batch,
                               GradScope scope, int threads) {
  if (batch.empty()) throw Error(ErrorKind::kInvalidArgument, "sft", "empty batch");
  std::vector<GradientResult<T>> per(batch.size());
  parallel_for(static_cast<int>(batch.size()), threads, [&](int i) {
    per[i] = gradient<T>(model, scope, [&](TapedModel<T>& tm) { return sft_sample_loss(tm, batch[i]); });
  });
  GradientResult<T> out{T(0), Gradients<T>::for_model(model, scope)};
  for (const auto& p : per) {
    out.loss += p.loss;
    out.grads.add(p.grads);
  }
  return out;
}

namespace {

long elapsed_ms(std::chrono::steady_clock::time_point since) {
  return static_cast<long>(std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::steady_clock::now() - since)
                               .count());
}

double mean_loss(const Model<float>& model, const std::vector<PromptSample>& split, int threads) {
  return double(sft_loss(model, std::span<const PromptSample>(split), threads)) / double(split.size());
}

}  // namespace

SFTResult train_sft(const Model<float>& init, const std::vector<PromptSample>& train,
                    const std::vector<PromptSample>& valid, const SFTConfig& config,
                    const std::function<void(const SFTEpochLog&)>& on_epoch) {
  config.validate();
  if (train.empty() || valid.empty()) throw Error(ErrorKind::kInvalidArgument, "sft", "empty split");
  Model<float> model = init;
  AdamW<float> opt(AdamWConfig{config.learning_rate, 0.9, 0.999, 1e-8, config.weight_decay});
  Rng rng(config.seed);
  SFTResult result;
  result.model = model;
  result.best_valid_loss = config.max_epochs > 0 ? mean_loss(model, valid, config.threads) : 0.0;
  int stale = 0;
  std::vector<int> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  long batch_index = 0;
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double train_total = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<PromptSample> batch;
      for (std::size_t j = start; j < end; ++j) batch.push_back(train[order[j]]);
      GradientResult<float> g;
      try {
        g = sft_gradient(model, std::span<const PromptSample>(batch), GradScope::kAll, config.threads);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNumeric) throw;
        throw Error(ErrorKind::kNumeric, "sft", "divergence at batch " + std::to_string(batch_index) + ": " + e.what());
      }
      if (!std::isfinite(g.loss)) {
        throw Error(ErrorKind::kNumeric, "sft", "non-finite loss at batch " + std::to_string(batch_index));
      }
      opt.step(model, g.grads);
      train_total += g.loss;
      ++batch_index;
    }
    SFTEpochLog log;
    log.epoch = epoch;
    log.train_loss = train_total / double(train.size());
    log.valid_loss = mean_loss(model, valid, config.threads);
    log.lr = config.learning_rate;
    if (!std::isfinite(log.valid_loss)) {
      throw Error(ErrorKind::kNumeric, "sft", "non-finite validation loss after batch " + std::to_string(batch_index - 1));
    }
    log.wall_ms = elapsed_ms(t0);
    result.epochs.push_back(log);
    if (on_epoch) on_epoch(log);
    if (log.valid_loss < result.best_valid_loss) {
      result.best_valid_loss = log.valid_loss;
      result.best_epoch = epoch;
      result.model = model;
      stale = 0;
    } else if (++stale >= config.early_stop_patience) {
      break;
    }
  }
  result.rng_state = rng.state();
  return result;
}

LrSearchResult lr_search(const Model<float>& init, const std::vector<PromptSample>& train,
                         const std::vector<PromptSample>& valid, const SFTConfig& config,
                         const std::vector<double>& candidates) {
  if (candidates.empty()) throw Error(ErrorKind::kInvalidArgument, "lr_search", "no candidates");
  LrSearchResult out;
  bool found = false;
  double best_loss = std::numeric_limits<double>::infinity();
  for (double lr : candidates) {
    SFTConfig c = config;
    c.learning_rate = lr;
    LrCandidate cand{lr, false, 0};
    try {
      cand.valid_loss = train_sft(init, train, valid, c).best_valid_loss;
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNumeric) throw;
      cand.diverged = true;
    }
    if (!cand.diverged && std::isfinite(cand.valid_loss)) {
      if (!found || cand.valid_loss < best_loss ||
          (cand.valid_loss == best_loss && lr < out.best_learning_rate)) {
        best_loss = cand.valid_loss;
        out.best_learning_rate = lr;
        found = true;
      }
    }
    out.candidates.push_back(cand);
  }
  if (!found) throw Error(ErrorKind::kNumeric, "lr_search", "every candidate diverged");
  return out;
}

template ad::Var sft_sample_loss(TapedModel<float>&, const PromptSample&);
template ad::Var sft_sample_loss(TapedModel<double>&, const PromptSample&);
template float sft_loss(const Model<float>&, std::span<const PromptSample>, int);
template double sft_loss(const Model<double>&, std::span<const PromptSample>, int);
template GradientResult<float> sft_gradient(const Model<float>&, std::span<const PromptSample>, GradScope, int);
template GradientResult<double> sft_gradient(const Model<double>&, std::span<const PromptSample>, GradScope, int);

}  // namespace latentrec
