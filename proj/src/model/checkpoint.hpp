// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint. Layout (all integers little-endian):
//   "LR3CKPT1" u32 version
//   u32 n_params, then per parameter:
//     u32 name_len, name, u32 group, u32 ndim, u32 dims[ndim], f32 data
//   u32 len + model config text
//   u32 len + metadata text (sorted key=value lines)
//   u32 len + RNG state text
//   u64 hash of the model config text

#ifndef LATENTREC_MODEL_CHECKPOINT_HPP_
#define LATENTREC_MODEL_CHECKPOINT_HPP_

#include <cstdint>
#include <map>
#include <string>

#include "model/transformer.hpp"

namespace latentrec {

struct Checkpoint {
  Model<float> model;
  std::map<std::string, std::string> metadata;
  std::string rng_state;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);
  // FNV-1a of serialize().
  std::uint64_t hash() const;

  std::string meta(const std::string& key) const;
};

void save_checkpoint(const std::string& path, const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::string& path);
// Also fails unless the stored config hashes to `expected.hash()`.
Checkpoint load_checkpoint(const std::string& path, const ModelConfig& expected);

}  // namespace latentrec

#endif  // LATENTREC_MODEL_CHECKPOINT_HPP_
