// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "common/error.hpp"
#include "common/rng.hpp"
#include "corpus/corpus.hpp"

namespace latentrec {

namespace {

const char* const kCategoryWords[] = {"puzzle", "doll",   "robot", "kite",  "train", "ball",
                                      "blocks", "drum",   "truck", "plush", "cards", "boat",
                                      "yoyo",   "crayon", "slime", "rocket", "marble", "piano",
                                      "tent",   "wagon"};
constexpr int kNumCategoryWords = sizeof(kCategoryWords) / sizeof(kCategoryWords[0]);

constexpr std::int64_t kEpochStart = 1500000000;  // mid-2017
constexpr std::int64_t kDay = 86400;

template <typename V>
void shuffle(V& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[rng.below(i)]);
}

}  // namespace

SynthRule::SynthRule(const SynthConfig& c) : num_items_(c.num_items), num_categories_(c.num_categories) {
  if (c.num_items < 50 || c.num_users < 50) {
    throw Error(ErrorKind::kInvalidArgument, "synth", "num_items and num_users must be >= 50");
  }
  if (c.num_categories < 2 || c.num_categories > c.num_items) {
    throw Error(ErrorKind::kInvalidArgument, "synth", "num_categories out of range");
  }
  if (c.num_archetypes < 1) throw Error(ErrorKind::kInvalidArgument, "synth", "num_archetypes must be >= 1");
  if (c.min_cycle < 2 || c.max_cycle < c.min_cycle || c.max_cycle > c.num_categories) {
    throw Error(ErrorKind::kInvalidArgument, "synth", "bad cycle length range");
  }
  Rng rng(derive_seed(c.seed, "synth.rule"));
  for (int a = 0; a < c.num_archetypes; ++a) {
    std::vector<int> order(c.num_categories);
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, rng);
    std::vector<int> perm(c.num_categories);
    int start = 0;
    while (start < c.num_categories) {
      int len = c.min_cycle + static_cast<int>(rng.below(c.max_cycle - c.min_cycle + 1));
      // a short remainder joins the current cycle
      if (c.num_categories - (start + len) < c.min_cycle) len = c.num_categories - start;
      for (int i = 0; i < len; ++i) perm[order[start + i]] = order[start + (i + 1) % len];
      start += len;
    }
    perm_.push_back(std::move(perm));
  }
  popularity_.resize(c.num_items);
  std::iota(popularity_.begin(), popularity_.end(), 0);
  shuffle(popularity_, rng);
}

int SynthRule::item_at(int category, int slot) const {
  const int count = (num_items_ - category + num_categories_ - 1) / num_categories_;
  return (slot % count) * num_categories_ + category;
}

int SynthRule::next_item(int archetype, int last_item) const {
  return item_at(perm_.at(archetype)[category_of(last_item)], slot_of(last_item));
}

std::string SynthRule::item_id(int item) const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "I%05d", item);
  return buf;
}

std::string SynthRule::title(int item) const {
  const int c = category_of(item);
  std::string word = c < kNumCategoryWords ? kCategoryWords[c] : "kind" + std::to_string(c);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "n%04d", item);
  return word + " " + buf;
}

int SynthRule::item_from_id(const std::string& id) const {
  if (id.size() != 6 || id[0] != 'I') return -1;
  int v = 0;
  for (std::size_t i = 1; i < id.size(); ++i) {
    if (id[i] < '0' || id[i] > '9') return -1;
    v = v * 10 + (id[i] - '0');
  }
  return v < num_items_ ? v : -1;
}

std::vector<InteractionRecord> synth_generate(const SynthConfig& c, std::vector<int>* archetypes) {
  if (c.min_seq_len < 2 || c.max_seq_len < c.min_seq_len) {
    throw Error(ErrorKind::kInvalidArgument, "synth", "bad sequence length range");
  }
  if (c.noise_permille < 0 || c.noise_permille > 1000) {
    throw Error(ErrorKind::kInvalidArgument, "synth", "noise_permille must be in [0, 1000]");
  }
  const SynthRule rule(c);
  // Zipf-like weights over the popularity order, integer only.
  std::vector<std::uint64_t> cumulative(c.num_items);
  std::uint64_t total = 0;
  for (int r = 0; r < c.num_items; ++r) {
    total += 1000000 / std::uint64_t(r + 1);
    cumulative[r] = total;
  }
  Rng rng(derive_seed(c.seed, "synth.users"));
  auto popular_draw = [&] {
    const std::uint64_t u = rng.below(total);
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    return rule.popularity_order()[it - cumulative.begin()];
  };
  std::vector<InteractionRecord> out;
  if (archetypes) archetypes->clear();
  for (int u = 0; u < c.num_users; ++u) {
    char uid[16];
    std::snprintf(uid, sizeof(uid), "U%05d", u);
    const int a = static_cast<int>(rng.below(c.num_archetypes));
    if (archetypes) archetypes->push_back(a);
    const int len = c.min_seq_len + static_cast<int>(rng.below(c.max_seq_len - c.min_seq_len + 1));
    std::int64_t t = kEpochStart + static_cast<std::int64_t>(rng.below(90 * kDay));
    int item = popular_draw();
    for (int i = 0; i < len; ++i) {
      if (i > 0) {
        t += 3600 + static_cast<std::int64_t>(rng.below(5 * kDay));
        item = rng.below(1000) < std::uint64_t(c.noise_permille) ? popular_draw()
                                                                : rule.next_item(a, item);
      }
      out.push_back({uid, rule.item_id(item), t, rule.title(item)});
    }
  }
  return out;
}

}  // namespace latentrec
