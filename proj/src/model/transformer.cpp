// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "model/transformer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/rng.hpp"
#include "common/tokens.hpp"
#include "model/kernels.hpp"

namespace latentrec {

namespace {

std::atomic<long> g_generation_calls{0};

void check_length(const ModelConfig& config, std::size_t total) {
  if (total > static_cast<std::size_t>(config.max_seq_len)) {
    throw Error(ErrorKind::kInvalidArgument, "model",
                "sequence too long: " + std::to_string(total) + " > max_seq_len " +
                    std::to_string(config.max_seq_len));
  }
}

}  // namespace

const char* to_string(ParamGroup group) {
  return group == ParamGroup::kBase ? "base" : "latent";
}

long generation_call_count() { return g_generation_calls.load(); }
void reset_generation_call_count() { g_generation_calls.store(0); }

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

template <typename T>
Model<T> Model<T>::zeros(const ModelConfig& config) {
  config.validate();
  Model m;
  m.config_ = config;
  const int d = config.d_model;
  const int v = config.vocab_size;
  auto add = [&](std::string name, ParamGroup group, int rows, int cols) {
    m.params_.push_back({std::move(name), group, Matrix<T>(rows, cols)});
  };
  add("tok_emb", ParamGroup::kBase, v, d);
  add("pos_emb", ParamGroup::kBase, config.max_seq_len, d);
  for (int l = 0; l < config.n_layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    add(p + "ln1.g", ParamGroup::kBase, 1, d);
    add(p + "ln1.b", ParamGroup::kBase, 1, d);
    for (const char* w : {"q", "k", "v", "o"}) {
      add(p + "attn.w" + w, ParamGroup::kBase, d, d);
      add(p + "attn.b" + w, ParamGroup::kBase, 1, d);
    }
    add(p + "ln2.g", ParamGroup::kBase, 1, d);
    add(p + "ln2.b", ParamGroup::kBase, 1, d);
    add(p + "mlp.w_fc", ParamGroup::kBase, d, 4 * d);
    add(p + "mlp.b_fc", ParamGroup::kBase, 1, 4 * d);
    add(p + "mlp.w_proj", ParamGroup::kBase, 4 * d, d);
    add(p + "mlp.b_proj", ParamGroup::kBase, 1, d);
  }
  add("ln_f.g", ParamGroup::kBase, 1, d);
  add("ln_f.b", ParamGroup::kBase, 1, d);
  add("head.w", ParamGroup::kBase, d, v);
  add("head.b", ParamGroup::kBase, 1, v);
  add("latent.ln.g", ParamGroup::kLatent, 1, d);
  add("latent.ln.b", ParamGroup::kLatent, 1, d);
  for (const char* w : {"q", "k", "v", "o"}) {
    add(std::string("latent.w") + w, ParamGroup::kLatent, d, d);
    add(std::string("latent.b") + w, ParamGroup::kLatent, 1, d);
  }
  m.build_layout();
  return m;
}

template <typename T>
Model<T> Model<T>::initialize(const ModelConfig& config, std::uint64_t seed) {
  Model m = zeros(config);
  Rng rng(seed);
  const T residual_std = T(0.02) / std::sqrt(T(2 * config.n_layers));
  for (auto& param : m.params_) {
    const std::string& n = param.name;
    if (n.ends_with(".g")) {
      param.value.fill(T(1));
    } else if (param.value.rows == 1) {
      param.value.fill(T(0));
    } else {
      const bool residual = n.ends_with("attn.wo") || n.ends_with("mlp.w_proj");
      const T stddev = residual ? residual_std : T(0.02);
      for (T& w : param.value.data) w = T(rng.normal()) * stddev;
    }
  }
  return m;
}

template <typename T>
void Model<T>::build_layout() {
  auto idx = [&](const std::string& name) {
    const int i = find(name);
    if (i < 0) throw Error(ErrorKind::kState, "model", "missing parameter " + name);
    return i;
  };
  layout_ = ModelLayout{};
  layout_.tok_emb = idx("tok_emb");
  layout_.pos_emb = idx("pos_emb");
  for (int l = 0; l < config_.n_layers; ++l) {
    const std::string p = "blocks." + std::to_string(l) + ".";
    BlockLayout b{};
    b.ln1_g = idx(p + "ln1.g");
    b.ln1_b = idx(p + "ln1.b");
    b.wq = idx(p + "attn.wq");
    b.bq = idx(p + "attn.bq");
    b.wk = idx(p + "attn.wk");
    b.bk = idx(p + "attn.bk");
    b.wv = idx(p + "attn.wv");
    b.bv = idx(p + "attn.bv");
    b.wo = idx(p + "attn.wo");
    b.bo = idx(p + "attn.bo");
    b.ln2_g = idx(p + "ln2.g");
    b.ln2_b = idx(p + "ln2.b");
    b.w_fc = idx(p + "mlp.w_fc");
    b.b_fc = idx(p + "mlp.b_fc");
    b.w_proj = idx(p + "mlp.w_proj");
    b.b_proj = idx(p + "mlp.b_proj");
    layout_.blocks.push_back(b);
  }
  layout_.lnf_g = idx("ln_f.g");
  layout_.lnf_b = idx("ln_f.b");
  layout_.head_w = idx("head.w");
  layout_.head_b = idx("head.b");
  LatentLayout& lat = layout_.latent;
  lat.ln_g = idx("latent.ln.g");
  lat.ln_b = idx("latent.ln.b");
  lat.wq = idx("latent.wq");
  lat.bq = idx("latent.bq");
  lat.wk = idx("latent.wk");
  lat.bk = idx("latent.bk");
  lat.wv = idx("latent.wv");
  lat.bv = idx("latent.bv");
  lat.wo = idx("latent.wo");
  lat.bo = idx("latent.bo");
}

template <typename T>
int Model<T>::find(std::string_view name) const {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (params_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

template <typename T>
std::uint64_t Model<T>::group_hash(ParamGroup group) const {
  Fnv1a h;
  for (const auto& param : params_) {
    if (param.group != group) continue;
    h.update(param.name);
    for (T v : param.value.data) {
      const std::uint32_t bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
      const unsigned char le[4] = {static_cast<unsigned char>(bits),
                                   static_cast<unsigned char>(bits >> 8),
                                   static_cast<unsigned char>(bits >> 16),
                                   static_cast<unsigned char>(bits >> 24)};
      h.update(le, 4);
    }
  }
  return h.digest();
}

template <typename T>
Gradients<T> Gradients<T>::for_model(const Model<T>& model, GradScope scope) {
  Gradients g;
  for (const auto& param : model.params()) {
    const bool wanted = scope == GradScope::kAll || param.group == ParamGroup::kLatent;
    g.grads.push_back(wanted ? Matrix<T>(param.value.rows, param.value.cols) : Matrix<T>());
  }
  return g;
}

template <typename T>
void Gradients<T>::add(const Gradients& other) {
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (grads[i].empty()) continue;
    for (std::size_t j = 0; j < grads[i].size(); ++j) grads[i].data[j] += other.grads[i].data[j];
  }
}

template <typename T>
T Gradients<T>::squared_norm() const {
  T s = 0;
  for (const auto& g : grads)
    for (T v : g.data) s += v * v;
  return s;
}

// ---------------------------------------------------------------------------
// Taped forward
// ---------------------------------------------------------------------------

template <typename T>
TapedModel<T>::TapedModel(ad::Tape<T>& tape, const Model<T>& model, Gradients<T>* grads)
    : tape_(tape), model_(model) {
  const auto& params = model.params();
  vars_.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix<T>* g = (grads && grads->has(static_cast<int>(i))) ? &grads->grads[i] : nullptr;
    vars_.push_back(tape.parameter(&params[i].value, g));
  }
}

template <typename T>
TapeCache TapedModel<T>::empty_cache() const {
  TapeCache c;
  c.keys.resize(model_.config().n_layers);
  c.values.resize(model_.config().n_layers);
  return c;
}

template <typename T>
ad::Var TapedModel<T>::embed(std::span<const int> ids) {
  const int v = model_.config().vocab_size;
  for (int id : ids) {
    if (id < 0 || id >= v) {
      throw Error(ErrorKind::kInvalidArgument, "model", "token id out of range");
    }
  }
  return ad::gather_rows(tape_, vars_[model_.layout().tok_emb],
                         std::vector<int>(ids.begin(), ids.end()));
}

template <typename T>
ad::Var TapedModel<T>::extend(TapeCache& cache, ad::Var rows) {
  const ModelConfig& cfg = model_.config();
  const ModelLayout& lay = model_.layout();
  const int n = tape_.value(rows).rows;
  check_length(cfg, std::size_t(cache.length) + n);
  std::vector<int> positions(n);
  std::iota(positions.begin(), positions.end(), cache.length);
  ad::Var x = ad::add(tape_, rows, ad::gather_rows(tape_, vars_[lay.pos_emb], positions));
  for (int l = 0; l < cfg.n_layers; ++l) {
    const BlockLayout& b = lay.blocks[l];
    ad::Var a = ad::layer_norm(tape_, x, vars_[b.ln1_g], vars_[b.ln1_b]);
    ad::Var q = ad::linear(tape_, a, vars_[b.wq], vars_[b.bq]);
    ad::Var k = ad::linear(tape_, a, vars_[b.wk], vars_[b.bk]);
    ad::Var v = ad::linear(tape_, a, vars_[b.wv], vars_[b.bv]);
    cache.keys[l].push_back(k);
    cache.values[l].push_back(v);
    ad::Var att = ad::attention(tape_, q, cache.keys[l], cache.values[l], cfg.n_heads, cache.length);
    x = ad::add(tape_, x, ad::linear(tape_, att, vars_[b.wo], vars_[b.bo]));
    ad::Var m = ad::layer_norm(tape_, x, vars_[b.ln2_g], vars_[b.ln2_b]);
    ad::Var f = ad::gelu(tape_, ad::linear(tape_, m, vars_[b.w_fc], vars_[b.b_fc]));
    x = ad::add(tape_, x, ad::linear(tape_, f, vars_[b.w_proj], vars_[b.b_proj]));
  }
  cache.hidden.push_back(x);
  cache.length += n;
  return x;
}

template <typename T>
ad::Var TapedModel<T>::latent_step(TapeCache& cache) {
  if (cache.hidden.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "model", "latent step on an empty sequence");
  }
  const ModelConfig& cfg = model_.config();
  const LatentLayout& lat = model_.layout().latent;
  ad::Var last_chunk = cache.hidden.back();
  ad::Var last_row = ad::slice_rows(tape_, last_chunk, tape_.value(last_chunk).rows - 1, 1);
  if (cfg.latent_mode == LatentMode::kLastHidden) return last_row;

  while (cache.latent_keys.size() < cache.hidden.size()) {
    ad::Var chunk = cache.hidden[cache.latent_keys.size()];
    ad::Var a = ad::layer_norm(tape_, chunk, vars_[lat.ln_g], vars_[lat.ln_b]);
    cache.latent_keys.push_back(ad::linear(tape_, a, vars_[lat.wk], vars_[lat.bk]));
    cache.latent_values.push_back(ad::linear(tape_, a, vars_[lat.wv], vars_[lat.bv]));
    cache.latent_normed_last = a;
  }
  const int normed_rows = tape_.value(cache.latent_normed_last).rows;
  ad::Var q_in = ad::slice_rows(tape_, cache.latent_normed_last, normed_rows - 1, 1);
  ad::Var q = ad::linear(tape_, q_in, vars_[lat.wq], vars_[lat.bq]);
  ad::Var att = ad::attention(tape_, q, cache.latent_keys, cache.latent_values, cfg.n_heads,
                              cache.length - 1);
  ad::Var out = ad::linear(tape_, att, vars_[lat.wo], vars_[lat.bo]);
  if (cfg.latent_residual) out = ad::add(tape_, out, last_row);
  return out;
}

template <typename T>
typename TapedModel<T>::LatentRun TapedModel<T>::generate_latent(const TapeCache& prompt_cache) {
  LatentRun run;
  TapeCache cache = prompt_cache;
  const int n = model_.config().latent_len;
  for (int i = 0; i < n; ++i) {
    if (i > 0) extend(cache, run.tokens.back());
    run.tokens.push_back(latent_step(cache));
  }
  run.before_last = std::move(cache);
  return run;
}

template <typename T>
typename TapedModel<T>::LatentRun TapedModel<T>::continue_latent(const TapeCache& prompt_cache,
                                                                 ad::Var first, int total) {
  LatentRun run;
  TapeCache cache = prompt_cache;
  run.tokens.push_back(first);
  for (int i = 1; i < total; ++i) {
    extend(cache, run.tokens.back());
    run.tokens.push_back(latent_step(cache));
  }
  run.before_last = std::move(cache);
  return run;
}

template <typename T>
ad::Var TapedModel<T>::target_log_probs(const TapeCache& cache, const std::vector<ad::Var>& tail,
                                        std::span<const int> y) {
  if (y.empty()) throw Error(ErrorKind::kInvalidArgument, "model", "empty target sequence");
  std::size_t tail_rows = 0;
  for (ad::Var t : tail) tail_rows += tape_.value(t).rows;
  check_length(model_.config(), cache.length + tail_rows + y.size());

  std::vector<ad::Var> pieces;
  if (cache.length > 0) {
    ad::Var last_chunk = cache.hidden.back();
    pieces.push_back(ad::slice_rows(tape_, last_chunk, tape_.value(last_chunk).rows - 1, 1));
  }
  std::vector<ad::Var> inputs = tail;
  if (y.size() > 1) inputs.push_back(embed(y.first(y.size() - 1)));
  if (!inputs.empty()) {
    TapeCache c = cache;
    ad::Var rows = inputs.size() == 1 ? inputs[0] : ad::concat_rows(tape_, inputs);
    pieces.push_back(extend(c, rows));
  }
  ad::Var all = pieces.size() == 1 ? pieces[0] : ad::concat_rows(tape_, pieces);
  const int total = tape_.value(all).rows;
  if (total < static_cast<int>(y.size())) {
    throw Error(ErrorKind::kInvalidArgument, "model", "no position predicts the first target");
  }
  ad::Var pred = total == static_cast<int>(y.size())
                     ? all
                     : ad::slice_rows(tape_, all, total - static_cast<int>(y.size()),
                                      static_cast<int>(y.size()));
  const ModelLayout& lay = model_.layout();
  ad::Var normed = ad::layer_norm(tape_, pred, vars_[lay.lnf_g], vars_[lay.lnf_b]);
  ad::Var logits = ad::linear(tape_, normed, vars_[lay.head_w], vars_[lay.head_b]);
  return ad::pick_log_probs(tape_, logits, std::vector<int>(y.begin(), y.end()));
}

template <typename T>
GradientResult<T> gradient(const Model<T>& model, GradScope scope,
                           const std::function<ad::Var(TapedModel<T>&)>& loss_fn) {
  ad::Tape<T> tape(true);
  GradientResult<T> result{T(0), Gradients<T>::for_model(model, scope)};
  TapedModel<T> taped(tape, model, &result.grads);
  ad::Var loss = loss_fn(taped);
  result.loss = tape.value(loss).data.at(0);
  tape.backward(loss);
  return result;
}

// ---------------------------------------------------------------------------
// Cached inference
// ---------------------------------------------------------------------------

template <typename T>
void DecodeState<T>::truncate(int n, int d) {
  if (n >= length) return;
  for (auto& k : keys) k.resize(std::size_t(n) * d);
  for (auto& v : values) v.resize(std::size_t(n) * d);
  hidden.resize(std::size_t(n) * d);
  if (latent_done > n) {
    latent_done = n;
    latent_keys.resize(std::size_t(n) * d);
    latent_values.resize(std::size_t(n) * d);
  }
  length = n;
}

template <typename T>
void token_embedding(const Model<T>& model, int token, T* out) {
  if (token < 0 || token >= model.config().vocab_size) {
    throw Error(ErrorKind::kInvalidArgument, "model", "token id out of range");
  }
  const Matrix<T>& emb = model.p(model.layout().tok_emb);
  std::copy(emb.row(token), emb.row(token) + emb.cols, out);
}

template <typename T>
void decode_extend(const Model<T>& model, DecodeState<T>& state, const T* rows, int n,
                   T* hidden_out) {
  if (n == 0) return;
  const ModelConfig& cfg = model.config();
  const ModelLayout& lay = model.layout();
  const int d = cfg.d_model;
  check_length(cfg, std::size_t(state.length) + n);
  if (static_cast<int>(state.keys.size()) != cfg.n_layers) {
    state.keys.resize(cfg.n_layers);
    state.values.resize(cfg.n_layers);
  }
  const std::size_t nd = std::size_t(n) * d;
  std::vector<T> x(nd), a(nd), q(nd), k(nd), v(nd), att(nd), o(nd), f(nd * 4);
  const Matrix<T>& pos = model.p(lay.pos_emb);
  for (int i = 0; i < n; ++i) {
    const T* in = rows + std::size_t(i) * d;
    const T* pe = pos.row(state.length + i);
    T* xi = x.data() + std::size_t(i) * d;
    for (int j = 0; j < d; ++j) xi[j] = in[j] + pe[j];
  }
  for (int l = 0; l < cfg.n_layers; ++l) {
    const BlockLayout& b = lay.blocks[l];
    for (int i = 0; i < n; ++i) {
      kernels::layer_norm_row(x.data() + std::size_t(i) * d, d, model.p(b.ln1_g).data.data(),
                              model.p(b.ln1_b).data.data(), a.data() + std::size_t(i) * d);
    }
    kernels::linear_forward(a.data(), n, d, model.p(b.wq).data.data(), model.p(b.bq).data.data(), d, q.data());
    kernels::linear_forward(a.data(), n, d, model.p(b.wk).data.data(), model.p(b.bk).data.data(), d, k.data());
    kernels::linear_forward(a.data(), n, d, model.p(b.wv).data.data(), model.p(b.bv).data.data(), d, v.data());
    state.keys[l].insert(state.keys[l].end(), k.begin(), k.end());
    state.values[l].insert(state.values[l].end(), v.begin(), v.end());
    for (int i = 0; i < n; ++i) {
      kernels::attention_row(q.data() + std::size_t(i) * d, state.keys[l].data(),
                             state.values[l].data(), state.length + i + 1, d, cfg.n_heads,
                             att.data() + std::size_t(i) * d, static_cast<T*>(nullptr));
    }
    kernels::linear_forward(att.data(), n, d, model.p(b.wo).data.data(), model.p(b.bo).data.data(), d, o.data());
    for (std::size_t j = 0; j < nd; ++j) x[j] = x[j] + o[j];
    for (int i = 0; i < n; ++i) {
      kernels::layer_norm_row(x.data() + std::size_t(i) * d, d, model.p(b.ln2_g).data.data(),
                              model.p(b.ln2_b).data.data(), a.data() + std::size_t(i) * d);
    }
    kernels::linear_forward(a.data(), n, d, model.p(b.w_fc).data.data(), model.p(b.b_fc).data.data(), 4 * d, f.data());
    for (T& fv : f) fv = kernels::gelu(fv);
    kernels::linear_forward(f.data(), n, 4 * d, model.p(b.w_proj).data.data(), model.p(b.b_proj).data.data(), d, o.data());
    for (std::size_t j = 0; j < nd; ++j) x[j] = x[j] + o[j];
  }
  state.hidden.insert(state.hidden.end(), x.begin(), x.end());
  if (hidden_out) std::copy(x.begin(), x.end(), hidden_out);
  state.length += n;
}

template <typename T>
void decode_latent_step(const Model<T>& model, DecodeState<T>& state, T* out) {
  if (state.length == 0) {
    throw Error(ErrorKind::kInvalidArgument, "model", "latent step on an empty sequence");
  }
  const ModelConfig& cfg = model.config();
  const LatentLayout& lat = model.layout().latent;
  const int d = cfg.d_model;
  const T* last = state.hidden.data() + std::size_t(state.length - 1) * d;
  if (cfg.latent_mode == LatentMode::kLastHidden) {
    std::copy(last, last + d, out);
  } else {
    const int pending = state.length - state.latent_done;
    std::vector<T> a(std::size_t(pending) * d), k(a.size()), v(a.size());
    for (int i = 0; i < pending; ++i) {
      kernels::layer_norm_row(state.hidden.data() + std::size_t(state.latent_done + i) * d, d,
                              model.p(lat.ln_g).data.data(), model.p(lat.ln_b).data.data(),
                              a.data() + std::size_t(i) * d);
    }
    kernels::linear_forward(a.data(), pending, d, model.p(lat.wk).data.data(), model.p(lat.bk).data.data(), d, k.data());
    kernels::linear_forward(a.data(), pending, d, model.p(lat.wv).data.data(), model.p(lat.bv).data.data(), d, v.data());
    state.latent_keys.insert(state.latent_keys.end(), k.begin(), k.end());
    state.latent_values.insert(state.latent_values.end(), v.begin(), v.end());
    state.latent_done = state.length;

    std::vector<T> normed(d), q(d), att(d);
    kernels::layer_norm_row(last, d, model.p(lat.ln_g).data.data(), model.p(lat.ln_b).data.data(),
                            normed.data());
    kernels::linear_forward(normed.data(), 1, d, model.p(lat.wq).data.data(), model.p(lat.bq).data.data(), d, q.data());
    kernels::attention_row(q.data(), state.latent_keys.data(), state.latent_values.data(),
                           state.length, d, cfg.n_heads, att.data(), static_cast<T*>(nullptr));
    kernels::linear_forward(att.data(), 1, d, model.p(lat.wo).data.data(), model.p(lat.bo).data.data(), d, out);
    if (cfg.latent_residual) {
      for (int j = 0; j < d; ++j) out[j] = out[j] + last[j];
    }
  }
  for (int j = 0; j < d; ++j) {
    if (!std::isfinite(out[j])) {
      throw Error(ErrorKind::kNumeric, "model", "non-finite latent token");
    }
  }
}

template <typename T>
void decode_logits(const Model<T>& model, const T* hidden, T* logits) {
  const ModelLayout& lay = model.layout();
  thread_local std::vector<T> normed;
  normed.resize(model.config().d_model);
  kernels::layer_norm_row(hidden, model.config().d_model, model.p(lay.lnf_g).data.data(),
                          model.p(lay.lnf_b).data.data(), normed.data());
  kernels::linear_forward(normed.data(), 1, model.config().d_model, model.p(lay.head_w).data.data(),
                          model.p(lay.head_b).data.data(), model.config().vocab_size, logits);
}

namespace {

template <typename T>
std::vector<T> embed_tokens(const Model<T>& model, std::span<const int> ids) {
  const int d = model.config().d_model;
  std::vector<T> rows(ids.size() * d);
  for (std::size_t i = 0; i < ids.size(); ++i) token_embedding(model, ids[i], rows.data() + i * d);
  return rows;
}

template <typename T>
void extend_prompt(const Model<T>& model, DecodeState<T>& state, std::span<const int> x,
                   const Matrix<T>& latent) {
  if (latent.rows > 0 && latent.cols != model.config().d_model) {
    throw Error(ErrorKind::kInvalidArgument, "model", "latent width differs from d_model");
  }
  const std::vector<T> rows = embed_tokens(model, x);
  decode_extend(model, state, rows.data(), static_cast<int>(x.size()), static_cast<T*>(nullptr));
  decode_extend(model, state, latent.data.data(), latent.rows, static_cast<T*>(nullptr));
}

}  // namespace

// ---------------------------------------------------------------------------
// Model operations
// ---------------------------------------------------------------------------

template <typename T>
Matrix<T> llm_last_hidden(const Model<T>& model, std::span<const int> x, const Matrix<T>& latents) {
  check_length(model.config(), x.size() + latents.rows);
  DecodeState<T> state(model.config().n_layers);
  extend_prompt(model, state, x, latents);
  Matrix<T> h(state.length, model.config().d_model);
  h.data = state.hidden;
  return h;
}

template <typename T>
Matrix<T> latentratt_step(const Model<T>& model, const Matrix<T>& hidden) {
  if (hidden.rows == 0) throw Error(ErrorKind::kInvalidArgument, "model", "empty hidden states");
  DecodeState<T> state(model.config().n_layers);
  state.hidden = hidden.data;
  state.length = hidden.rows;
  Matrix<T> r(1, model.config().d_model);
  decode_latent_step(model, state, r.data.data());
  return r;
}

template <typename T>
Matrix<T> generate_latent(const Model<T>& model, std::span<const int> x) {
  const ModelConfig& cfg = model.config();
  const int n = cfg.latent_len;
  Matrix<T> r(n, cfg.d_model);
  if (n == 0) return r;
  check_length(cfg, x.size() + n);
  DecodeState<T> state(cfg.n_layers);
  const std::vector<T> rows = embed_tokens(model, x);
  decode_extend(model, state, rows.data(), static_cast<int>(x.size()), static_cast<T*>(nullptr));
  for (int i = 0; i < n; ++i) {
    if (i > 0) decode_extend(model, state, r.row(i - 1), 1, static_cast<T*>(nullptr));
    decode_latent_step(model, state, r.row(i));
  }
  return r;
}

template <typename T>
std::vector<T> sequence_logprob(const Model<T>& model, std::span<const int> x,
                                const Matrix<T>& latent, std::span<const int> y) {
  const ModelConfig& cfg = model.config();
  if (y.empty()) throw Error(ErrorKind::kInvalidArgument, "model", "empty target sequence");
  if (x.empty() && latent.rows == 0) {
    throw Error(ErrorKind::kInvalidArgument, "model", "no position predicts the first target");
  }
  check_length(cfg, x.size() + latent.rows + y.size());
  const int d = cfg.d_model;
  const int vocab = cfg.vocab_size;
  DecodeState<T> state(cfg.n_layers);
  extend_prompt(model, state, x, latent);
  std::vector<T> pred(y.size() * d);
  std::copy(state.hidden.end() - d, state.hidden.end(), pred.begin());
  if (y.size() > 1) {
    const std::vector<T> rows = embed_tokens(model, y.first(y.size() - 1));
    decode_extend(model, state, rows.data(), static_cast<int>(y.size() - 1), pred.data() + d);
  }
  std::vector<T> out(y.size());
  std::vector<T> logits(vocab);
  for (std::size_t i = 0; i < y.size(); ++i) {
    decode_logits(model, pred.data() + i * d, logits.data());
    out[i] = logits[y[i]] - kernels::log_sum_exp_row(logits.data(), vocab);
  }
  return out;
}

template <typename T>
T score_item(const Model<T>& model, std::span<const int> x, const Matrix<T>& latent,
             std::span<const int> title) {
  const std::vector<T> lp = sequence_logprob(model, x, latent, title);
  T s = 0;
  for (T v : lp) s += v;
  return s / T(lp.size());
}

TitleTrie TitleTrie::build(const std::vector<std::vector<int>>& titles) {
  TitleTrie trie;
  trie.nodes.emplace_back();
  trie.item_count = static_cast<int>(titles.size());
  for (std::size_t item = 0; item < titles.size(); ++item) {
    if (titles[item].empty()) {
      throw Error(ErrorKind::kInvalidArgument, "model", "empty catalog title");
    }
    int node = 0;
    for (int tok : titles[item]) {
      int next = -1;
      for (auto [t, c] : trie.nodes[node].children) {
        if (t == tok) next = c;
      }
      if (next < 0) {
        next = static_cast<int>(trie.nodes.size());
        trie.nodes[node].children.emplace_back(tok, next);
        trie.nodes.emplace_back();
      }
      node = next;
    }
    trie.nodes[node].items.push_back(static_cast<int>(item));
  }
  return trie;
}

namespace {

template <typename T>
struct CatalogScorer {
  const Model<T>& model;
  const TitleTrie& trie;
  DecodeState<T>& state;
  std::vector<T>& scores;

  void visit(int node, const std::vector<T>& hidden, T sum, int depth) {
    const int vocab = model.config().vocab_size;
    const int d = model.config().d_model;
    std::vector<T> logits(vocab);
    decode_logits(model, hidden.data(), logits.data());
    const T lse = kernels::log_sum_exp_row(logits.data(), vocab);
    for (auto [tok, child] : trie.nodes[node].children) {
      const T s = sum + (logits[tok] - lse);
      const int depth_child = depth + 1;
      for (int item : trie.nodes[child].items) scores[item] = s / T(depth_child);
      if (trie.nodes[child].children.empty()) continue;
      std::vector<T> emb(d), h(d);
      token_embedding(model, tok, emb.data());
      const int mark = state.length;
      decode_extend(model, state, emb.data(), 1, h.data());
      visit(child, h, s, depth_child);
      state.truncate(mark, d);
    }
  }
};

}  // namespace

template <typename T>
std::vector<T> score_catalog(const Model<T>& model, std::span<const int> x,
                             const Matrix<T>& latent, const TitleTrie& trie) {
  const ModelConfig& cfg = model.config();
  if (x.empty() && latent.rows == 0) {
    throw Error(ErrorKind::kInvalidArgument, "model", "no position predicts the first target");
  }
  DecodeState<T> state(cfg.n_layers);
  extend_prompt(model, state, x, latent);
  std::vector<T> hidden(state.hidden.end() - cfg.d_model, state.hidden.end());
  std::vector<T> scores(trie.item_count, T(0));
  CatalogScorer<T> scorer{model, trie, state, scores};
  scorer.visit(0, hidden, T(0), 0);
  return scores;
}

template <typename T>
std::vector<int> rank_by_score(const std::vector<T>& scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  return order;
}

template <typename T>
std::vector<int> rank_catalog(const Model<T>& model, std::span<const int> x,
                              const Matrix<T>& latent, const TitleTrie& trie) {
  if (trie.item_count == 0) throw Error(ErrorKind::kInvalidArgument, "model", "empty catalog");
  return rank_by_score(score_catalog(model, x, latent, trie));
}

template <typename T>
std::vector<int> generate_answer(const Model<T>& model, std::span<const int> x,
                                 const Matrix<T>& latent, int max_len) {
  if (max_len < 1) throw Error(ErrorKind::kInvalidArgument, "model", "max_len must be >= 1");
  g_generation_calls.fetch_add(1);
  const ModelConfig& cfg = model.config();
  std::vector<int> answer;
  std::vector<T> logits(cfg.vocab_size);
  for (int step = 0; step < max_len; ++step) {
    if (x.size() + latent.rows + answer.size() >= static_cast<std::size_t>(cfg.max_seq_len)) break;
    DecodeState<T> state(cfg.n_layers);
    extend_prompt(model, state, x, latent);
    const std::vector<T> rows = embed_tokens(model, std::span<const int>(answer));
    decode_extend(model, state, rows.data(), static_cast<int>(answer.size()),
                  static_cast<T*>(nullptr));
    decode_logits(model, state.hidden.data() + state.hidden.size() - cfg.d_model, logits.data());
    const int next = static_cast<int>(std::max_element(logits.begin(), logits.end()) - logits.begin());
    if (next == tokens::kEos) break;
    answer.push_back(next);
  }
  return answer;
}

// ---------------------------------------------------------------------------
// Instantiations
// ---------------------------------------------------------------------------

#define LATENTREC_INSTANTIATE(T)                                                                   \
  template class Model<T>;                                                                         \
  template struct Gradients<T>;                                                                    \
  template class TapedModel<T>;                                                                    \
  template struct DecodeState<T>;                                                                  \
  template GradientResult<T> gradient(const Model<T>&, GradScope,                                  \
                                      const std::function<ad::Var(TapedModel<T>&)>&);              \
  template void decode_extend(const Model<T>&, DecodeState<T>&, const T*, int, T*);                \
  template void decode_latent_step(const Model<T>&, DecodeState<T>&, T*);                          \
  template void decode_logits(const Model<T>&, const T*, T*);                                      \
  template void token_embedding(const Model<T>&, int, T*);                                         \
  template Matrix<T> llm_last_hidden(const Model<T>&, std::span<const int>, const Matrix<T>&);     \
  template Matrix<T> latentratt_step(const Model<T>&, const Matrix<T>&);                           \
  template Matrix<T> generate_latent(const Model<T>&, std::span<const int>);                       \
  template std::vector<T> sequence_logprob(const Model<T>&, std::span<const int>,                  \
                                           const Matrix<T>&, std::span<const int>);                \
  template T score_item(const Model<T>&, std::span<const int>, const Matrix<T>&,                   \
                        std::span<const int>);                                                     \
  template std::vector<T> score_catalog(const Model<T>&, std::span<const int>, const Matrix<T>&,   \
                                        const TitleTrie&);                                         \
  template std::vector<int> rank_by_score(const std::vector<T>&);                                  \
  template std::vector<int> rank_catalog(const Model<T>&, std::span<const int>, const Matrix<T>&,  \
                                         const TitleTrie&);                                        \
  template std::vector<int> generate_answer(const Model<T>&, std::span<const int>,                 \
                                            const Matrix<T>&, int);

LATENTREC_INSTANTIATE(float)
LATENTREC_INSTANTIATE(double)

#undef LATENTREC_INSTANTIATE

}  // namespace latentrec
