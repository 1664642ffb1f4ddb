// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// End-to-end data preparation and the on-disk dataset directory.

#ifndef LATENTREC_CORPUS_DATASET_HPP_
#define LATENTREC_CORPUS_DATASET_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "json.hpp"

namespace latentrec {

struct DataConfig {
  std::int64_t end_time = 0;  // 0: latest timestamp in the log
  int window_months = 12;
  int step_months = 3;
  int min_items = 100;
  int k_core = 5;
  int max_history = 10;
};

struct Dataset {
  std::vector<InteractionRecord> records;
  std::int64_t chosen_start = 0;
  Vocabulary vocab;
  Splits splits;
  Catalog catalog;
  std::vector<PromptSample> train;
  std::vector<PromptSample> valid;
  std::vector<PromptSample> test;
  std::string config_hash;

  nlohmann::json manifest() const;
  // Hash over the three split sample lists.
  std::uint64_t splits_hash() const;
  const std::vector<PromptSample>& prompts(const std::string& split) const;
};

// window -> k-core -> vocabulary -> samples -> split -> catalog -> prompts.
Dataset prepare_dataset(const std::vector<InteractionRecord>& records, const DataConfig& config,
                        const std::string& config_hash);

std::vector<PromptSample> build_prompts(const std::vector<Sample>& samples, const Catalog& catalog,
                                        const Vocabulary& vocab);

void write_dataset(const std::string& dir, const Dataset& dataset);
Dataset load_dataset(const std::string& dir);

}  // namespace latentrec

#endif  // LATENTREC_CORPUS_DATASET_HPP_
