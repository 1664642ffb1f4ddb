// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <vector>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "common/tokens.hpp"
#include "doctest.h"
#include "model/transformer.hpp"

using namespace latentrec;

namespace {

ModelConfig tiny_config(int latent_len = 2) {
  ModelConfig c;
  c.d_model = 8;
  c.n_layers = 1;
  c.n_heads = 2;
  c.vocab_size = 20;
  c.max_seq_len = 32;
  c.latent_len = latent_len;
  return c;
}

// Larger weights than the default init so gradients are not vanishingly small.
template <typename T>
Model<T> noisy_model(const ModelConfig& c, std::uint64_t seed, double scale = 0.3) {
  Model<T> m = Model<T>::initialize(c, seed);
  Rng rng(seed + 7);
  for (auto& p : m.params())
    for (T& v : p.value.data) v += T(rng.normal() * scale);
  return m;
}

template <typename T>
ad::Var sft_like_loss(TapedModel<T>& tm, const std::vector<int>& x, const std::vector<int>& y) {
  auto& tape = tm.tape();
  TapeCache cache = tm.empty_cache();
  tm.extend(cache, tm.embed(x));
  ad::Var lp;
  if (tm.model().config().latent_len == 0) {
    lp = tm.target_log_probs(cache, {}, y);
  } else {
    auto run = tm.generate_latent(cache);
    lp = tm.target_log_probs(run.before_last, {run.tokens.back()}, y);
  }
  return ad::scale(tape, ad::sum(tape, lp), T(-1));
}

double decode_loss(const Model<double>& m, const std::vector<int>& x, const std::vector<int>& y) {
  Matrix<double> r = generate_latent(m, std::span<const int>(x));
  double s = 0;
  for (double v : sequence_logprob(m, std::span<const int>(x), r, std::span<const int>(y))) s -= v;
  return s;
}

}  // namespace

TEST_CASE("parameter groups partition the parameter set") {
  auto m = Model<float>::initialize(tiny_config(), 1);
  int latent = 0;
  for (const auto& p : m.params()) {
    CHECK(m.find(p.name) >= 0);
    if (p.group == ParamGroup::kLatent) {
      ++latent;
      CHECK(p.name.starts_with("latent."));
    }
  }
  CHECK(latent == 10);
}

TEST_CASE("taped and cached forwards agree bit for bit") {
  const auto c = tiny_config(3);
  auto m = noisy_model<float>(c, 3);
  const std::vector<int> x = {1, 5, 6, 3, 7, 8};
  const std::vector<int> y = {9, 10, 2};

  ad::Tape<float> tape(false);
  TapedModel<float> tm(tape, m, nullptr);
  TapeCache cache = tm.empty_cache();
  tm.extend(cache, tm.embed(x));
  auto run = tm.generate_latent(cache);
  ad::Var lp = tm.target_log_probs(run.before_last, {run.tokens.back()}, y);

  Matrix<float> r = generate_latent(m, std::span<const int>(x));
  for (int i = 0; i < c.latent_len; ++i) {
    const auto& tv = tape.value(run.tokens[i]);
    for (int j = 0; j < c.d_model; ++j) CHECK(tv(0, j) == r(i, j));
  }
  auto lp2 = sequence_logprob(m, std::span<const int>(x), r, std::span<const int>(y));
  for (std::size_t i = 0; i < y.size(); ++i) CHECK(tape.value(lp)(int(i), 0) == lp2[i]);

  // one-token-at-a-time oracle
  DecodeState<float> st(c.n_layers);
  std::vector<float> row(c.d_model), h(c.d_model), logits(c.vocab_size);
  for (int t : x) {
    token_embedding(m, t, row.data());
    decode_extend(m, st, row.data(), 1, h.data());
  }
  for (int i = 0; i < r.rows; ++i) decode_extend(m, st, r.row(i), 1, h.data());
  for (std::size_t i = 0; i < y.size(); ++i) {
    decode_logits(m, h.data(), logits.data());
    double z = 0;
    for (float l : logits) z += std::exp(double(l));
    CHECK(lp2[i] == doctest::Approx(double(logits[y[i]]) - std::log(z)).epsilon(1e-5));
    token_embedding(m, y[i], row.data());
    decode_extend(m, st, row.data(), 1, h.data());
  }
}

TEST_CASE("catalog scoring matches per-item scoring exactly") {
  const auto c = tiny_config(1);
  auto m = noisy_model<float>(c, 5);
  std::vector<std::vector<int>> titles = {{4, 5, 2}, {4, 6, 2}, {7, 2}, {4, 5, 8, 2}, {9, 2}};
  auto trie = TitleTrie::build(titles);
  const std::vector<int> x = {1, 11, 12, 3, 13};
  auto r = generate_latent(m, std::span<const int>(x));
  auto scores = score_catalog(m, std::span<const int>(x), r, trie);
  for (std::size_t i = 0; i < titles.size(); ++i) {
    CHECK(scores[i] == score_item(m, std::span<const int>(x), r, std::span<const int>(titles[i])));
  }
  auto ranked = rank_by_score(std::vector<double>{0.5, 1.0, 0.5, 1.0});
  CHECK(ranked == std::vector<int>{1, 3, 0, 2});
}

TEST_CASE("last_hidden mode returns the last hidden row exactly") {
  auto c = tiny_config(1);
  c.latent_mode = LatentMode::kLastHidden;
  auto m = noisy_model<float>(c, 2);
  const std::vector<int> x = {1, 4, 5};
  auto h = llm_last_hidden(m, std::span<const int>(x), Matrix<float>());
  auto r = latentratt_step(m, h);
  for (int j = 0; j < c.d_model; ++j) CHECK(r(0, j) == h(2, j));
}

TEST_CASE("perturbing the first latent changes the second") {
  const auto c = tiny_config(2);
  auto m = noisy_model<double>(c, 4);
  const std::vector<int> x = {1, 4, 5};
  auto r = generate_latent(m, std::span<const int>(x));
  Matrix<double> first(1, c.d_model);
  std::copy(r.row(0), r.row(0) + c.d_model, first.row(0));
  auto h = llm_last_hidden(m, std::span<const int>(x), first);
  auto r2 = latentratt_step(m, h);
  for (int j = 0; j < c.d_model; ++j) CHECK(r2(0, j) == r(1, j));
  first(0, 0) += 1e-2;
  auto r2p = latentratt_step(m, llm_last_hidden(m, std::span<const int>(x), first));
  double diff = 0;
  for (int j = 0; j < c.d_model; ++j) diff += std::abs(r2p(0, j) - r2(0, j));
  CHECK(diff > 0);
}

TEST_CASE("sequence too long is rejected") {
  auto c = tiny_config(2);
  c.max_seq_len = 6;
  auto m = Model<float>::initialize(c, 1);
  const std::vector<int> x = {1, 4, 5};
  const std::vector<int> y = {6, 2};
  auto r = generate_latent(m, std::span<const int>(x));
  CHECK_THROWS_AS(sequence_logprob(m, std::span<const int>(x), r, std::span<const int>(y)), Error);
}

TEST_CASE("full-model gradient matches central differences") {
  const auto c = tiny_config(2);
  auto m = noisy_model<double>(c, 9);
  const std::vector<int> x = {1, 4, 5, 3, 6};
  const std::vector<int> y = {7, 8, 2};
  auto res = gradient<double>(m, GradScope::kAll, [&](TapedModel<double>& tm) {
    return sft_like_loss(tm, x, y);
  });
  CHECK(res.loss == doctest::Approx(decode_loss(m, x, y)).epsilon(1e-12));
  const double h = 1e-5;
  for (std::size_t pi = 0; pi < m.params().size(); ++pi) {
    auto& p = m.params()[pi].value;
    double num2 = 0, diff2 = 0, ana2 = 0;
    for (std::size_t j = 0; j < p.data.size(); ++j) {
      const double keep = p.data[j];
      p.data[j] = keep + h;
      const double up = decode_loss(m, x, y);
      p.data[j] = keep - h;
      const double down = decode_loss(m, x, y);
      p.data[j] = keep;
      const double num = (up - down) / (2 * h);
      const double ana = res.grads.grads[pi].data[j];
      num2 += num * num;
      ana2 += ana * ana;
      diff2 += (num - ana) * (num - ana);
    }
    INFO(m.params()[pi].name);
    // Key biases cancel in the softmax, so their true gradient is zero.
    if (std::max(num2, ana2) < 1e-14) continue;
    const double rel = std::sqrt(diff2) / std::max(std::sqrt(num2), std::sqrt(ana2));
    CHECK(rel < 1e-4);
  }
}

TEST_CASE("latent-only scope leaves base gradients empty") {
  const auto c = tiny_config(1);
  auto m = noisy_model<double>(c, 9);
  const std::vector<int> x = {1, 4, 5};
  const std::vector<int> y = {7, 2};
  auto res = gradient<double>(m, GradScope::kLatentOnly,
                              [&](TapedModel<double>& tm) { return sft_like_loss(tm, x, y); });
  for (std::size_t i = 0; i < m.params().size(); ++i) {
    CHECK(res.grads.has(int(i)) == (m.params()[i].group == ParamGroup::kLatent));
  }
}

TEST_CASE("generation counter and greedy decoding") {
  const auto c = tiny_config(0);
  auto m = Model<float>::initialize(c, 1);
  auto& hb = m.p(m.layout().head_b);
  hb.fill(0);
  hb(0, tokens::kEos) = 100;
  reset_generation_call_count();
  const std::vector<int> x = {1, 4};
  CHECK(generate_answer(m, std::span<const int>(x), Matrix<float>(), 5).empty());
  CHECK(generation_call_count() == 1);
}

TEST_CASE("gradient of a constant and of half the squared norm") {
  const auto c = tiny_config(1);
  auto m = noisy_model<double>(c, 2);
  auto zero = gradient<double>(m, GradScope::kAll, [](TapedModel<double>& tm) {
    Matrix<double> v(1, 1);
    v.data[0] = 3;
    return tm.tape().constant(std::move(v));
  });
  CHECK(zero.loss == 3);
  CHECK(zero.grads.squared_norm() == 0);

  auto quad = gradient<double>(m, GradScope::kAll, [&](TapedModel<double>& tm) {
    auto& tape = tm.tape();
    std::vector<ad::Var> terms;
    for (std::size_t i = 0; i < m.params().size(); ++i) {
      const ad::Var p = tm.param(int(i));
      Matrix<double> v(1, 1);
      for (double x : tape.value(p).data) v.data[0] += 0.5 * x * x;
      terms.push_back(tape.make(std::move(v), {p}, [p](ad::Tape<double>& t, const Matrix<double>& g) {
        const auto& val = t.value(p);
        auto& out = t.grad(p);
        for (std::size_t j = 0; j < val.data.size(); ++j) out.data[j] += g.data[0] * val.data[j];
      }));
    }
    return ad::sum_scalars(tape, terms);
  });
  for (std::size_t i = 0; i < m.params().size(); ++i) CHECK(quad.grads.grads[i].data == m.params()[i].value.data);
}

TEST_CASE("hidden-state shapes, determinism and empty latents") {
  const auto c = tiny_config(0);
  auto m = noisy_model<float>(c, 6);
  const std::vector<int> x = {1, 4, 5, 6};
  auto h = llm_last_hidden(m, std::span<const int>(x), Matrix<float>());
  CHECK(h.rows == 4);
  CHECK(h.cols == c.d_model);
  Matrix<float> one(1, c.d_model);
  one.fill(0.1f);
  auto h1 = llm_last_hidden(m, std::span<const int>(x), one);
  CHECK(h1.rows == 5);
  CHECK(llm_last_hidden(m, std::span<const int>(x), one).data == h1.data);
  CHECK(generate_latent(m, std::span<const int>(x)).rows == 0);

  auto c2 = tiny_config(1);
  auto m2 = noisy_model<float>(c2, 6);
  auto r = latentratt_step(m2, h1);
  CHECK(r.rows == 1);
  CHECK(r.cols == c.d_model);
  // With a single row the attention weight is one, so other rows cannot matter.
  Matrix<float> single(1, c.d_model);
  std::copy(h1.row(4), h1.row(4) + c.d_model, single.row(0));
  auto alone = latentratt_step(m2, single);
  Matrix<float> moved = single;
  moved(0, 0) += 1;
  CHECK(latentratt_step(m2, moved).data != alone.data);
}

TEST_CASE("uniform and delta heads") {
  const auto c = tiny_config(1);
  auto m = noisy_model<double>(c, 8);
  m.p(m.layout().head_w).fill(0);
  m.p(m.layout().head_b).fill(0);
  const std::vector<int> x = {1, 4, 5};
  const auto r = generate_latent(m, std::span<const int>(x));
  const double logv = std::log(double(c.vocab_size));
  for (double lp : sequence_logprob(m, std::span<const int>(x), r, std::span<const int>(std::vector<int>{6, 7, 2})))
    CHECK(lp == doctest::Approx(-logv).epsilon(1e-12));
  CHECK(score_item(m, std::span<const int>(x), r, std::span<const int>(std::vector<int>{6, 2})) ==
        doctest::Approx(-logv).epsilon(1e-12));
  CHECK(score_item(m, std::span<const int>(x), r, std::span<const int>(std::vector<int>{6, 7, 8, 9, 2})) ==
        doctest::Approx(-logv).epsilon(1e-12));

  auto& b = m.p(m.layout().head_b);
  b(0, 6) = 300;
  for (double lp : sequence_logprob(m, std::span<const int>(x), r, std::span<const int>(std::vector<int>{6, 6})))
    CHECK(lp == 0);
  CHECK(score_item(m, std::span<const int>(x), r, std::span<const int>(std::vector<int>{6})) == 0);

  // Two titles under a hand-built logit table: higher geometric mean wins.
  b.fill(0);
  b(0, 6) = 2;
  b(0, 7) = 1;
  b(0, 2) = 1.5;
  const std::vector<std::vector<int>> titles = {{7, 2}, {6, 2}};
  const auto trie = TitleTrie::build(titles);
  CHECK(rank_catalog(m, std::span<const int>(x), r, trie) == std::vector<int>{1, 0});
  const auto lone = TitleTrie::build({{7, 2}});
  CHECK(rank_catalog(m, std::span<const int>(x), r, lone) == std::vector<int>{0});
  const auto tied = TitleTrie::build({{7, 2}, {7, 2}});
  CHECK(rank_catalog(m, std::span<const int>(x), r, tied) == std::vector<int>{0, 1});

  auto eos = noisy_model<float>(c, 8);
  eos.p(eos.layout().head_w).fill(0);
  eos.p(eos.layout().head_b).fill(0);
  eos.p(eos.layout().head_b)(0, tokens::kEos) = 50;
  const auto rf = generate_latent(eos, std::span<const int>(x));
  CHECK(generate_answer(eos, std::span<const int>(x), rf, 8).empty());
}
