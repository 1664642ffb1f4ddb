// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cctype>
#include <tuple>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/tokens.hpp"
#include "corpus/corpus.hpp"

namespace latentrec {

std::vector<Sample> make_samples(const std::vector<InteractionRecord>& records, int max_history) {
  if (max_history < 1) throw Error(ErrorKind::kInvalidArgument, "samples", "max_history must be >= 1");
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<const InteractionRecord*>> by_user;
  for (const auto& r : records) {
    auto& list = by_user[r.user_id];
    if (list.empty()) order.push_back(r.user_id);
    list.push_back(&r);
  }
  std::vector<Sample> out;
  for (const auto& user : order) {
    auto& list = by_user[user];
    std::stable_sort(list.begin(), list.end(), [](const auto* a, const auto* b) {
      return a->timestamp < b->timestamp;
    });
    for (std::size_t t = 1; t < list.size(); ++t) {
      Sample s;
      s.user_id = user;
      s.target_item_id = list[t]->item_id;
      s.timestamp = list[t]->timestamp;
      const std::size_t first = t > std::size_t(max_history) ? t - max_history : 0;
      for (std::size_t j = first; j < t; ++j) s.history.push_back(list[j]->item_id);
      out.push_back(std::move(s));
    }
  }
  return out;
}

Splits temporal_split(std::vector<Sample> samples) {
  const std::size_t n = samples.size();
  if (n < 10) {
    throw Error(ErrorKind::kInvalidArgument, "split",
                "need at least 10 samples for an 8:1:1 split, got " + std::to_string(n));
  }
  std::stable_sort(samples.begin(), samples.end(), [](const Sample& a, const Sample& b) {
    return std::tie(a.timestamp, a.user_id, a.target_item_id) <
           std::tie(b.timestamp, b.user_id, b.target_item_id);
  });
  const std::size_t n_train = n * 8 / 10;
  const std::size_t n_valid = n / 10;
  Splits s;
  s.train.assign(samples.begin(), samples.begin() + n_train);
  s.valid.assign(samples.begin() + n_train, samples.begin() + n_train + n_valid);
  s.test.assign(samples.begin() + n_train + n_valid, samples.end());
  return s;
}

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

std::vector<std::string> Vocabulary::tokenize(const std::string& text) {
  std::vector<std::string> out;
  std::string word;
  auto flush = [&] {
    if (!word.empty()) out.push_back(std::move(word));
    word.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isspace(c)) {
      flush();
    } else if (c < 128 && std::ispunct(c)) {
      flush();
      out.emplace_back(1, ch);
    } else {
      word += ch;
    }
  }
  flush();
  return out;
}

Vocabulary Vocabulary::from_tokens(const std::vector<std::string>& tokens) {
  if (tokens.size() < std::size_t(tokens::kNumSpecial)) {
    throw Error(ErrorKind::kFormat, "vocab", "vocabulary lacks special tokens");
  }
  Vocabulary v;
  for (const auto& t : tokens) {
    if (v.index_.count(t)) throw Error(ErrorKind::kFormat, "vocab", "duplicate token '" + t + "'");
    v.index_[t] = static_cast<int>(v.tokens_.size());
    v.tokens_.push_back(t);
  }
  for (int i = 0; i < tokens::kNumSpecial; ++i) {
    if (v.tokens_[i] != tokens::kSpecialText[i]) {
      throw Error(ErrorKind::kFormat, "vocab", "special token " + std::to_string(i) + " misplaced");
    }
  }
  return v;
}

Vocabulary Vocabulary::build(const std::vector<std::string>& texts,
                             const std::vector<std::string>& extra) {
  std::vector<std::string> tokens(tokens::kSpecialText, tokens::kSpecialText + tokens::kNumSpecial);
  std::unordered_map<std::string, int> seen;
  for (const auto& t : tokens) seen[t] = 1;
  auto add = [&](const std::string& text) {
    for (auto& piece : tokenize(text)) {
      if (seen.emplace(piece, 1).second) tokens.push_back(piece);
    }
  };
  for (const auto& t : texts) add(t);
  for (const auto& t : extra) add(t);
  return from_tokens(tokens);
}

int Vocabulary::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

std::vector<int> Vocabulary::encode(const std::string& text) const {
  std::vector<int> ids;
  for (const auto& piece : tokenize(text)) {
    const int i = id(piece);
    if (i >= tokens::kNumSpecial) ids.push_back(i);
  }
  return ids;
}

std::string Vocabulary::decode(const std::vector<int>& ids) const {
  std::string out;
  for (int i : ids) {
    if (!out.empty()) out += ' ';
    out += token(i);
  }
  return out;
}

std::uint64_t Vocabulary::hash() const {
  Fnv1a h;
  for (const auto& t : tokens_) {
    h.update(t);
    h.update("\n");
  }
  return h.digest();
}

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

namespace {
constexpr const char* kPromptHead = "The user has interacted with:";
constexpr const char* kPromptTail = ". Predict the next item :";
}  // namespace

const std::vector<std::string>& prompt_template_words() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w = Vocabulary::tokenize(kPromptHead);
    for (auto& t : Vocabulary::tokenize(kPromptTail)) w.push_back(t);
    return w;
  }();
  return words;
}

PromptSample build_prompt(const std::vector<std::string>& history_titles,
                          const std::string& target_title, const Vocabulary& vocab) {
  if (history_titles.empty()) throw Error(ErrorKind::kInvalidArgument, "prompt", "empty history");
  auto encode_title = [&](const std::string& title) {
    std::vector<int> ids = vocab.encode(title);
    if (ids.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "prompt", "title has no known token: '" + title + "'");
    }
    return ids;
  };
  auto encode_fixed = [&](const char* text, std::vector<int>& out) {
    for (const auto& piece : Vocabulary::tokenize(text)) {
      const int i = vocab.id(piece);
      if (i < 0) throw Error(ErrorKind::kInvalidArgument, "prompt", "template word '" + piece + "' missing from vocabulary");
      out.push_back(i);
    }
  };
  PromptSample p;
  p.x.push_back(tokens::kBos);
  encode_fixed(kPromptHead, p.x);
  const std::size_t first = history_titles.size() > 10 ? history_titles.size() - 10 : 0;
  for (std::size_t i = first; i < history_titles.size(); ++i) {
    if (i > first) p.x.push_back(tokens::kSep);
    for (int id : encode_title(history_titles[i])) p.x.push_back(id);
  }
  encode_fixed(kPromptTail, p.x);
  p.y = encode_title(target_title);
  p.y.push_back(tokens::kEos);
  return p;
}

// ---------------------------------------------------------------------------
// Catalog
// ---------------------------------------------------------------------------

void Catalog::reindex() {
  index_.clear();
  for (std::size_t i = 0; i < item_ids.size(); ++i) index_[item_ids[i]] = static_cast<int>(i);
}

int Catalog::index_of(const std::string& item_id) const {
  auto it = index_.find(item_id);
  if (it == index_.end()) throw Error(ErrorKind::kState, "catalog", "unknown item '" + item_id + "'");
  return it->second;
}

Catalog Catalog::build(const std::vector<InteractionRecord>& records, const Vocabulary& vocab,
                       const std::vector<Sample>& train) {
  std::unordered_map<std::string, std::string> title_of;
  for (const auto& r : records) title_of.emplace(r.item_id, r.title);
  Catalog c;
  for (const auto& [id, title] : title_of) c.item_ids.push_back(id);
  std::sort(c.item_ids.begin(), c.item_ids.end());
  for (const auto& id : c.item_ids) {
    const std::string& title = title_of[id];
    std::vector<int> ids = vocab.encode(title);
    if (ids.empty()) {
      throw Error(ErrorKind::kInvalidArgument, "catalog", "title has no known token: '" + title + "'");
    }
    ids.push_back(tokens::kEos);
    c.titles.push_back(title);
    c.title_tokens.push_back(std::move(ids));
  }
  c.reindex();
  c.train_frequency.assign(c.item_ids.size(), 0);
  for (const auto& s : train) ++c.train_frequency[c.index_of(s.target_item_id)];
  return c;
}

}  // namespace latentrec
