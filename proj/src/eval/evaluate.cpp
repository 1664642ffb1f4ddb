// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "common/error.hpp"
#include "common/parallel.hpp"

namespace latentrec {

int rank_of(std::span<const int> ranked, int target) {
  const auto it = std::find(ranked.begin(), ranked.end(), target);
  if (it == ranked.end()) {
    throw Error(ErrorKind::kState, "eval", "target " + std::to_string(target) + " missing from ranking");
  }
  return static_cast<int>(it - ranked.begin()) + 1;
}

double ndcg_at_rank(int rank, int n) {
  return rank <= n ? 1.0 / std::log2(double(rank) + 1.0) : 0.0;
}

double hit_ratio(std::span<const int> ranked, int target, int n) {
  return rank_of(ranked, target) <= n ? 1.0 : 0.0;
}

double ndcg(std::span<const int> ranked, int target, int n) {
  return ndcg_at_rank(rank_of(ranked, target), n);
}

Metrics Metrics::from_ranks(std::span<const int> ranks) {
  Metrics m;
  m.n_samples = static_cast<long>(ranks.size());
  for (int n : kCutoffs) {
    double hr = 0, dg = 0;
    for (int r : ranks) {
      hr += r <= n ? 1.0 : 0.0;
      dg += ndcg_at_rank(r, n);
    }
    m.hr[n] = ranks.empty() ? 0.0 : hr / double(ranks.size());
    m.ndcg[n] = ranks.empty() ? 0.0 : dg / double(ranks.size());
  }
  return m;
}

nlohmann::json Metrics::to_json() const {
  nlohmann::json j;
  for (const auto& [n, v] : hr) j["hr@" + std::to_string(n)] = v;
  for (const auto& [n, v] : ndcg) j["ndcg@" + std::to_string(n)] = v;
  j["n_samples"] = n_samples;
  return j;
}

Metrics Metrics::from_json(const nlohmann::json& j) {
  Metrics m;
  for (int n : kCutoffs) {
    m.hr[n] = j.at("hr@" + std::to_string(n)).get<double>();
    m.ndcg[n] = j.at("ndcg@" + std::to_string(n)).get<double>();
  }
  m.n_samples = j.at("n_samples").get<long>();
  return m;
}

nlohmann::json MetricReport::to_json() const {
  nlohmann::json j = overall.to_json();
  nlohmann::json buckets = nlohmann::json::object();
  for (const auto& [name, m] : per_bucket) buckets[name] = m.to_json();
  j["per_bucket"] = buckets;
  j["config_hash"] = config_hash;
  j["seed"] = seed;
  return j;
}

MetricReport MetricReport::from_json(const nlohmann::json& j) {
  MetricReport r;
  r.overall = Metrics::from_json(j);
  for (const auto& [name, m] : j.at("per_bucket").items()) r.per_bucket[name] = Metrics::from_json(m);
  r.config_hash = j.at("config_hash").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  return r;
}

std::vector<bool> popularity_buckets(const Catalog& catalog, double quantile) {
  const int n = catalog.size();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  // catalog indices follow ascending item id, so a stable sort keeps the tie rule
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return catalog.train_frequency[a] > catalog.train_frequency[b];
  });
  const int top = static_cast<int>(std::ceil(quantile * n - 1e-12));
  std::vector<bool> popular(n, false);
  for (int i = 0; i < std::min(top, n); ++i) popular[order[i]] = true;
  return popular;
}

EvalResult evaluate(const Model<float>& model, const std::vector<PromptSample>& split,
                    const Catalog& catalog, const EvalOptions& options) {
  if (split.empty()) throw Error(ErrorKind::kInvalidArgument, "eval", "empty split");
  const TitleTrie trie = TitleTrie::build(catalog.title_tokens);
  std::vector<int> targets(split.size());
  for (std::size_t i = 0; i < split.size(); ++i) targets[i] = catalog.index_of(split[i].target_item_id);
  EvalResult out;
  out.ranks.resize(split.size());
  parallel_for(static_cast<int>(split.size()), options.threads, [&](int i) {
    const auto& s = split[i];
    const Matrix<float> r = options.use_latent ? generate_latent(model, std::span<const int>(s.x))
                                               : Matrix<float>(0, model.config().d_model);
    const auto ranked = rank_catalog(model, std::span<const int>(s.x), r, trie);
    out.ranks[i] = rank_of(ranked, targets[i]);
  });
  const auto popular = popularity_buckets(catalog);
  std::vector<int> pop_ranks, unpop_ranks;
  for (std::size_t i = 0; i < split.size(); ++i) {
    (popular[targets[i]] ? pop_ranks : unpop_ranks).push_back(out.ranks[i]);
  }
  out.report.overall = Metrics::from_ranks(out.ranks);
  out.report.per_bucket["popular"] = Metrics::from_ranks(pop_ranks);
  out.report.per_bucket["unpopular"] = Metrics::from_ranks(unpop_ranks);
  out.report.config_hash = options.config_hash;
  out.report.seed = options.seed;
  return out;
}

std::optional<double> relative_improvement(double a, double b) {
  if (b == 0) return std::nullopt;
  return 100.0 * (a - b) / b;
}

std::map<std::string, std::optional<double>> relative_improvement(const Metrics& a, const Metrics& b) {
  std::map<std::string, std::optional<double>> out;
  for (int n : kCutoffs) {
    out["hr@" + std::to_string(n)] = relative_improvement(a.hr.at(n), b.hr.at(n));
    out["ndcg@" + std::to_string(n)] = relative_improvement(a.ndcg.at(n), b.ndcg.at(n));
  }
  return out;
}

}  // namespace latentrec
