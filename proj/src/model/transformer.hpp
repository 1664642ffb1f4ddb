// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Decoder-only language model with a latent attention block that turns the
// final-layer hidden states into continuous reasoning tokens.
//
// Two forward paths share the row kernels in kernels.hpp:
//   * TapedModel records onto an autodiff tape (training, gradient checks);
//   * DecodeState/decode_* run without a tape and keep a truncatable
//     key/value cache (scoring, ranking, generation, rewards).
// Both produce bit-identical values for the same inputs.

#ifndef LATENTREC_MODEL_TRANSFORMER_HPP_
#define LATENTREC_MODEL_TRANSFORMER_HPP_

#include <atomic>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "model/autodiff.hpp"
#include "model/config.hpp"
#include "model/matrix.hpp"

namespace latentrec {

enum class ParamGroup { kBase, kLatent };
const char* to_string(ParamGroup group);

template <typename T>
struct Parameter {
  std::string name;
  ParamGroup group;
  Matrix<T> value;
};

struct BlockLayout {
  int ln1_g, ln1_b;
  int wq, bq, wk, bk, wv, bv, wo, bo;
  int ln2_g, ln2_b;
  int w_fc, b_fc, w_proj, b_proj;
};

struct LatentLayout {
  int ln_g, ln_b;
  int wq, bq, wk, bk, wv, bv, wo, bo;
};

// Index of every parameter inside Model::params().
struct ModelLayout {
  int tok_emb = -1;
  int pos_emb = -1;
  std::vector<BlockLayout> blocks;
  int lnf_g = -1, lnf_b = -1;
  int head_w = -1, head_b = -1;
  LatentLayout latent{};
};

template <typename T>
class Model {
 public:
  Model() = default;

  static Model initialize(const ModelConfig& config, std::uint64_t seed);
  // All-zero parameters with the configured shapes.
  static Model zeros(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  const ModelLayout& layout() const { return layout_; }
  std::vector<Parameter<T>>& params() { return params_; }
  const std::vector<Parameter<T>>& params() const { return params_; }
  Matrix<T>& p(int index) { return params_[index].value; }
  const Matrix<T>& p(int index) const { return params_[index].value; }
  int find(std::string_view name) const;

  // Hash of the float32 bytes of every parameter in `group`.
  std::uint64_t group_hash(ParamGroup group) const;

  template <typename U>
  Model<U> cast() const {
    Model<U> out = Model<U>::zeros(config_);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      out.params()[i].value = params_[i].value.template cast<U>();
    }
    return out;
  }

 private:
  void build_layout();

  ModelConfig config_;
  ModelLayout layout_;
  std::vector<Parameter<T>> params_;
};

enum class GradScope { kAll, kLatentOnly };

// One gradient matrix per parameter, in Model::params() order; parameters
// outside the requested scope have an empty matrix.
template <typename T>
struct Gradients {
  std::vector<Matrix<T>> grads;

  static Gradients for_model(const Model<T>& model, GradScope scope);
  bool has(int index) const { return !grads[index].empty(); }
  void add(const Gradients& other);
  T squared_norm() const;
};

// ---------------------------------------------------------------------------
// Taped forward
// ---------------------------------------------------------------------------

// Incremental state of a taped forward: per-layer key/value chunks plus
// final hidden-state chunks and the latent block's keys/values over them.
// Copies share the underlying tape nodes, so branching is cheap.
struct TapeCache {
  int length = 0;
  std::vector<std::vector<ad::Var>> keys;
  std::vector<std::vector<ad::Var>> values;
  std::vector<ad::Var> hidden;
  std::vector<ad::Var> latent_keys;
  std::vector<ad::Var> latent_values;
  ad::Var latent_normed_last;
};

template <typename T>
class TapedModel {
 public:
  // grads == nullptr freezes every parameter.
  TapedModel(ad::Tape<T>& tape, const Model<T>& model, Gradients<T>* grads);

  ad::Tape<T>& tape() { return tape_; }
  const Model<T>& model() const { return model_; }
  ad::Var param(int index) const { return vars_[index]; }

  TapeCache empty_cache() const;
  ad::Var embed(std::span<const int> ids);
  // Appends `rows` (n x d input embeddings, positions added here) and
  // returns their final hidden states.
  ad::Var extend(TapeCache& cache, ad::Var rows);
  // Next latent token (1 x d) from everything in the cache.
  ad::Var latent_step(TapeCache& cache);

  struct LatentRun {
    std::vector<ad::Var> tokens;  // r_1..r_N, each 1 x d
    TapeCache before_last;        // cache over [x; r_1..r_{N-1}]
  };
  // Autoregressive latent generation from a cache holding the prompt.
  LatentRun generate_latent(const TapeCache& prompt_cache);
  // Given the first latent token(s) already fixed, regenerates the rest:
  // returns the cache over [x; fixed...; generated except last] and the
  // full token list of length N.
  LatentRun continue_latent(const TapeCache& prompt_cache, ad::Var first, int total);

  // Teacher-forced log-probabilities of y (|y| x 1) for the sequence
  // [cache contents; tail rows; y], where y_1 is predicted at the last
  // position before y.
  ad::Var target_log_probs(const TapeCache& cache, const std::vector<ad::Var>& tail,
                           std::span<const int> y);

 private:
  ad::Tape<T>& tape_;
  const Model<T>& model_;
  std::vector<ad::Var> vars_;
};

// Runs `loss_fn` on a recording tape and returns the loss and the gradient
// of every parameter in `scope`.
template <typename T>
struct GradientResult {
  T loss;
  Gradients<T> grads;
};

template <typename T>
GradientResult<T> gradient(const Model<T>& model, GradScope scope,
                           const std::function<ad::Var(TapedModel<T>&)>& loss_fn);

// ---------------------------------------------------------------------------
// Cached inference
// ---------------------------------------------------------------------------

template <typename T>
struct DecodeState {
  int length = 0;
  std::vector<std::vector<T>> keys;    // [layer][length * d]
  std::vector<std::vector<T>> values;  // [layer][length * d]
  std::vector<T> hidden;               // length * d
  int latent_done = 0;
  std::vector<T> latent_keys;
  std::vector<T> latent_values;

  explicit DecodeState(int n_layers = 0) : keys(n_layers), values(n_layers) {}
  // Forgets everything past the first n positions.
  void truncate(int n, int d);
};

// Appends n input rows; writes their final hidden states to hidden_out
// (n x d) when non-null.
template <typename T>
void decode_extend(const Model<T>& model, DecodeState<T>& state, const T* rows, int n,
                   T* hidden_out);
template <typename T>
void decode_latent_step(const Model<T>& model, DecodeState<T>& state, T* out);
// Output-head logits (V) for one hidden row.
template <typename T>
void decode_logits(const Model<T>& model, const T* hidden, T* logits);
template <typename T>
void token_embedding(const Model<T>& model, int token, T* out);

// ---------------------------------------------------------------------------
// Model operations
// ---------------------------------------------------------------------------

// Final-layer hidden states of [embed(x); latents].
template <typename T>
Matrix<T> llm_last_hidden(const Model<T>& model, std::span<const int> x,
                          const Matrix<T>& latents);

// One latent token from a full hidden-state matrix.
template <typename T>
Matrix<T> latentratt_step(const Model<T>& model, const Matrix<T>& hidden);

// N x d latent thought for prompt x.
template <typename T>
Matrix<T> generate_latent(const Model<T>& model, std::span<const int> x);

template <typename T>
std::vector<T> sequence_logprob(const Model<T>& model, std::span<const int> x,
                                const Matrix<T>& latent, std::span<const int> y);

// Length-normalised log-likelihood of a title.
template <typename T>
T score_item(const Model<T>& model, std::span<const int> x, const Matrix<T>& latent,
             std::span<const int> title);

// Prefix tree over catalog titles; items are referred to by index.
struct TitleTrie {
  struct Node {
    std::vector<std::pair<int, int>> children;  // (token, node)
    std::vector<int> items;                     // titles ending here
  };
  std::vector<Node> nodes;
  int item_count = 0;

  static TitleTrie build(const std::vector<std::vector<int>>& titles);
};

// score_item for every catalog entry, sharing prompt and title prefixes.
template <typename T>
std::vector<T> score_catalog(const Model<T>& model, std::span<const int> x,
                             const Matrix<T>& latent, const TitleTrie& trie);

// Item indices by descending score; equal scores keep ascending index.
template <typename T>
std::vector<int> rank_by_score(const std::vector<T>& scores);

template <typename T>
std::vector<int> rank_catalog(const Model<T>& model, std::span<const int> x,
                              const Matrix<T>& latent, const TitleTrie& trie);

// Greedy decoding without a key/value cache; the trailing EOS is dropped.
template <typename T>
std::vector<int> generate_answer(const Model<T>& model, std::span<const int> x,
                                 const Matrix<T>& latent, int max_len);

// Number of generate_answer calls since start (or the last reset).
long generation_call_count();
void reset_generation_call_count();

}  // namespace latentrec

#endif  // LATENTREC_MODEL_TRANSFORMER_HPP_
