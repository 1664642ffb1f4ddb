// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Flat key=value run configuration covering every stage.

#ifndef LATENTREC_RUN_RUN_CONFIG_HPP_
#define LATENTREC_RUN_RUN_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "corpus/dataset.hpp"
#include "model/config.hpp"
#include "train/rl.hpp"
#include "train/sft.hpp"

namespace latentrec {

struct RunConfig {
  std::uint64_t seed = 1;
  int threads = 1;

  SynthConfig synth;
  DataConfig data;
  ModelConfig model;
  SFTConfig sft;
  std::vector<double> sft_lr_candidates;  // empty: no search
  RLConfig rl;
  std::string eval_split = "test";
  int bench_batch = 16;

  struct Key {
    std::string name;
    std::string help;
    // Keys that cannot change results (threads) stay out of the hash.
    bool hashed = true;
  };
  static const std::vector<Key>& keys();

  // Throws kConfig for unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  std::string get(const std::string& key) const;

  // "key = value" lines; '#' starts a comment.
  void load_text(const std::string& text, const std::string& origin = "<text>");
  void load_file(const std::string& path);

  // Sorted key=value lines over the hashed keys.
  std::string canonical() const;
  std::string hash() const;

  void validate() const;

  // Stage configurations with seeds derived from `seed`.
  SynthConfig synth_config() const;
  std::uint64_t init_seed() const;
  SFTConfig sft_config() const;
  RLConfig rl_config() const;
};

}  // namespace latentrec

#endif  // LATENTREC_RUN_RUN_CONFIG_HPP_
