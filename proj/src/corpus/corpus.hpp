// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0
//
// Interaction logs, filtering, splitting, vocabulary and prompt samples.

#ifndef LATENTREC_CORPUS_CORPUS_HPP_
#define LATENTREC_CORPUS_CORPUS_HPP_

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace latentrec {

struct InteractionRecord {
  std::string user_id;
  std::string item_id;
  std::int64_t timestamp = 0;
  std::string title;

  friend bool operator==(const InteractionRecord&, const InteractionRecord&) = default;
};

// Reads `user_id\titem_id\ttimestamp\ttitle` lines after that exact header.
std::vector<InteractionRecord> ingest_records(const std::string& path);
void write_records(const std::string& path, const std::vector<InteractionRecord>& records);

// Drops users and items with fewer than k interactions until none remain.
std::vector<InteractionRecord> k_core_filter(const std::vector<InteractionRecord>& records, int k);

// Seconds-since-epoch shifted back by whole calendar months (UTC); the day of
// month is clamped to the target month's length.
std::int64_t shift_months(std::int64_t timestamp, int months);

struct WindowSelection {
  std::vector<InteractionRecord> records;
  std::int64_t chosen_start = 0;
};

WindowSelection time_window_select(const std::vector<InteractionRecord>& records,
                                   std::int64_t end_time, std::int64_t initial_start,
                                   int step_months, int min_items, int k = 5);

// One next-item prediction target with the ids of up to max_history
// preceding items of the same user.
struct Sample {
  std::string user_id;
  std::string target_item_id;
  std::int64_t timestamp = 0;
  std::vector<std::string> history;

  friend bool operator==(const Sample&, const Sample&) = default;
};

std::vector<Sample> make_samples(const std::vector<InteractionRecord>& records,
                                 int max_history = 10);

struct Splits {
  std::vector<Sample> train;
  std::vector<Sample> valid;
  std::vector<Sample> test;
};

// 8:1:1 by floor after sorting on (timestamp, user_id, target_item_id).
Splits temporal_split(std::vector<Sample> samples);

class Vocabulary {
 public:
  // Word-level pieces: runs of non-space, non-punctuation bytes, and single
  // ASCII punctuation characters.
  static std::vector<std::string> tokenize(const std::string& text);

  // Specials first, then words of `texts` and then of `extra` in order of
  // first occurrence.
  static Vocabulary build(const std::vector<std::string>& texts,
                          const std::vector<std::string>& extra = {});
  static Vocabulary from_tokens(const std::vector<std::string>& tokens);

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;  // -1 when absent
  const std::string& token(int id) const { return tokens_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }
  // In-vocabulary pieces only.
  std::vector<int> encode(const std::string& text) const;
  std::string decode(const std::vector<int>& ids) const;
  std::uint64_t hash() const;

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

const std::vector<std::string>& prompt_template_words();

struct PromptSample {
  std::vector<int> x;
  std::vector<int> y;  // ends with EOS
  std::string user_id;
  std::string target_item_id;
  std::int64_t timestamp = 0;
};

// x = BOS + "The user has interacted with: t1 <sep> t2 ... . Predict the next item :"
// over the last 10 history titles; y = target title + EOS.
PromptSample build_prompt(const std::vector<std::string>& history_titles,
                          const std::string& target_title, const Vocabulary& vocab);

struct Catalog {
  std::vector<std::string> item_ids;  // ascending
  std::vector<std::string> titles;
  std::vector<std::vector<int>> title_tokens;  // encoded title + EOS
  std::vector<long> train_frequency;

  int size() const { return static_cast<int>(item_ids.size()); }
  int index_of(const std::string& item_id) const;  // throws when absent

  static Catalog build(const std::vector<InteractionRecord>& records, const Vocabulary& vocab,
                       const std::vector<Sample>& train);

 private:
  std::unordered_map<std::string, int> index_;
  void reindex();
};

struct SynthConfig {
  int num_users = 2000;
  int num_items = 200;
  int num_archetypes = 512;
  int num_categories = 20;
  // Archetypes split the categories into cycles of these lengths.
  int min_cycle = 2;
  int max_cycle = 5;
  int min_seq_len = 5;
  int max_seq_len = 12;
  // Per-mille chance that a step ignores the archetype rule.
  int noise_permille = 50;
  std::uint64_t seed = 0;
};

// Deterministic synthetic interaction log with a hidden per-user archetype.
// `archetypes`, when given, receives each user's archetype in user order.
std::vector<InteractionRecord> synth_generate(const SynthConfig& config,
                                             std::vector<int>* archetypes = nullptr);

// The generator's transition rule. Item i has category i % C and slot i / C.
// Archetype a moves to category perm_a(c) and keeps the slot, so a user
// cycles through a few items whose order depends on the archetype.
class SynthRule {
 public:
  explicit SynthRule(const SynthConfig& config);

  int category_of(int item) const { return item % num_categories_; }
  int slot_of(int item) const { return item / num_categories_; }
  int item_at(int category, int slot) const;
  int next_item(int archetype, int last_item) const;
  std::string item_id(int item) const;
  std::string title(int item) const;
  // -1 when the id is not one of ours.
  int item_from_id(const std::string& id) const;
  // Items ordered from most to least popular under the noise distribution.
  const std::vector<int>& popularity_order() const { return popularity_; }

 private:
  int num_items_;
  int num_categories_;
  std::vector<std::vector<int>> perm_;
  std::vector<int> popularity_;
};

}  // namespace latentrec

#endif  // LATENTREC_CORPUS_CORPUS_HPP_
