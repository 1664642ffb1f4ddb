// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#ifndef LATENTREC_MODEL_CONFIG_HPP_
#define LATENTREC_MODEL_CONFIG_HPP_

#include <cstdint>
#include <string>

namespace latentrec {

enum class LatentMode {
  kAttention,   // latent tokens come from the latent attention block
  kLastHidden,  // latent token is the last final-layer hidden state
};

const char* to_string(LatentMode mode);
LatentMode parse_latent_mode(const std::string& text);

struct ModelConfig {
  int d_model = 64;
  int n_layers = 2;
  int n_heads = 4;
  int vocab_size = 0;
  int max_seq_len = 256;
  // Number of latent reasoning tokens generated before prediction.
  int latent_len = 1;
  LatentMode latent_mode = LatentMode::kAttention;
  // Residual from the last hidden row into the latent attention output.
  bool latent_residual = true;

  void validate() const;
  // Sorted key=value lines; the hash covers exactly this text.
  std::string canonical() const;
  std::uint64_t hash() const;
  static ModelConfig parse(const std::string& canonical_text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

}  // namespace latentrec

#endif  // LATENTREC_MODEL_CONFIG_HPP_
