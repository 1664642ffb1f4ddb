// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Full-catalog ranking metrics.

#ifndef LATENTREC_EVAL_EVALUATE_HPP_
#define LATENTREC_EVAL_EVALUATE_HPP_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "corpus/corpus.hpp"
#include "json.hpp"
#include "model/transformer.hpp"

namespace latentrec {

inline constexpr int kCutoffs[] = {5, 10};

// Rank of `target` in `ranked`, starting at 1; throws when absent.
int rank_of(std::span<const int> ranked, int target);
double hit_ratio(std::span<const int> ranked, int target, int n);
double ndcg(std::span<const int> ranked, int target, int n);
double ndcg_at_rank(int rank, int n);

struct Metrics {
  std::map<int, double> hr;
  std::map<int, double> ndcg;
  long n_samples = 0;

  // Means from 1-based target ranks, accumulated in order.
  static Metrics from_ranks(std::span<const int> ranks);
  nlohmann::json to_json() const;
  static Metrics from_json(const nlohmann::json& j);
  bool operator==(const Metrics&) const = default;
};

struct MetricReport {
  Metrics overall;
  std::map<std::string, Metrics> per_bucket;  // "popular", "unpopular"
  std::string config_hash;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static MetricReport from_json(const nlohmann::json& j);
};

// Per catalog index: true for the top ceil(quantile * size) items by train
// frequency, ties by ascending item id.
std::vector<bool> popularity_buckets(const Catalog& catalog, double quantile = 0.2);

struct EvalOptions {
  bool use_latent = true;  // false: rank from the prompt alone
  int threads = 1;
  std::string config_hash;
  std::uint64_t seed = 0;
};

struct EvalResult {
  MetricReport report;
  std::vector<int> ranks;  // 1-based target rank per sample
};

EvalResult evaluate(const Model<float>& model, const std::vector<PromptSample>& split,
                    const Catalog& catalog, const EvalOptions& options = {});

// 100 * (a - b) / b per metric name ("hr@5", "ndcg@10", ...); nullopt when b = 0.
std::map<std::string, std::optional<double>> relative_improvement(const Metrics& a, const Metrics& b);
std::optional<double> relative_improvement(double a, double b);

}  // namespace latentrec

#endif  // LATENTREC_EVAL_EVALUATE_HPP_
