// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "common/error.hpp"
#include "common/tokens.hpp"
#include "corpus/corpus.hpp"
#include "corpus/dataset.hpp"
#include "doctest.h"

using namespace latentrec;

namespace {

std::string temp_path(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "latentrec_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path) << text;
}

// Removes one violating record at a time, recounting from scratch.
std::vector<InteractionRecord> naive_k_core(std::vector<InteractionRecord> rs, int k) {
  while (true) {
    std::map<std::string, int> u, i;
    for (const auto& r : rs) {
      ++u[r.user_id];
      ++i[r.item_id];
    }
    auto it = std::find_if(rs.begin(), rs.end(),
                           [&](const auto& r) { return u[r.user_id] < k || i[r.item_id] < k; });
    if (it == rs.end()) return rs;
    rs.erase(it);
  }
}

InteractionRecord rec(std::string u, std::string i, std::int64_t t = 0) {
  return {std::move(u), std::move(i), t, "title " + i};
}

}  // namespace

TEST_CASE("ingest reads records and reports line numbers") {
  const auto path = temp_path("ok.tsv");
  write_file(path, "user_id\titem_id\ttimestamp\ttitle\nu1\ti1\t5\tred kite\nu1\ti2\t6\tblue kite\nu2\ti1\t7\tred kite\n");
  auto rs = ingest_records(path);
  REQUIRE(rs.size() == 3);
  CHECK(rs[1] == InteractionRecord{"u1", "i2", 6, "blue kite"});

  write_file(path, "user_id\titem_id\ttimestamp\ttitle\n");
  CHECK(ingest_records(path).empty());

  write_file(path, "user_id\titem_id\ttimestamp\ttitle\nu1\ti1\t5\tok\nu1\ti2\t6\n");
  try {
    ingest_records(path);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find(":3:") != std::string::npos);
  }
  write_file(path, "user_id\titem_id\ttimestamp\ttitle\nu1\ti1\tabc\tok\n");
  CHECK_THROWS_WITH_AS(ingest_records(path), doctest::Contains(":2:"), Error);
  write_file(path, "user_id\titem_id\ttimestamp\ttitle\nu1\ti1\t4\tok\tmore\n");
  CHECK_THROWS_WITH_AS(ingest_records(path), doctest::Contains("embedded tab"), Error);
  write_file(path, "user\titem\ttimestamp\ttitle\n");
  CHECK_THROWS_WITH_AS(ingest_records(path), doctest::Contains("header"), Error);
  CHECK_THROWS_AS(ingest_records(temp_path("missing.tsv")), Error);
}

TEST_CASE("k-core filter reaches the maximal fixpoint") {
  std::vector<InteractionRecord> rs = {rec("a", "x"), rec("a", "y"), rec("b", "x"), rec("b", "y"),
                                       rec("c", "x"), rec("c", "z"), rec("d", "z"), rec("e", "y"),
                                       rec("e", "x"), rec("f", "w")};
  for (int k = 1; k <= 3; ++k) {
    auto got = k_core_filter(rs, k);
    CHECK(got == naive_k_core(rs, k));
    CHECK(k_core_filter(got, k) == got);
  }
  CHECK(k_core_filter(rs, 1) == rs);
  auto two = k_core_filter(rs, 2);
  // c's z-interaction falls with d, then c has one interaction left
  CHECK(std::none_of(two.begin(), two.end(), [](const auto& r) { return r.user_id == "c"; }));
}

TEST_CASE("calendar month shifts") {
  // 2018-10-01T00:00:00Z
  const std::int64_t oct2018 = 1538352000;
  CHECK(shift_months(oct2018, 12) == 1506816000);  // 2017-10-01
  CHECK(shift_months(oct2018, 3) == 1530403200);   // 2018-07-01
  // 2018-05-31 shifted by 3 months clamps to 2018-02-28
  CHECK(shift_months(1527724800 + 3600, 3) == 1519776000 + 3600);
}

TEST_CASE("time window selection shifts back until enough items") {
  const std::int64_t end = 1538352000, start = 1506816000;
  const std::int64_t earlier = shift_months(start, 3) + 86400;
  std::vector<InteractionRecord> rs;
  for (int u = 0; u < 5; ++u) {
    for (int i = 0; i < 5; ++i) rs.push_back(rec("u" + std::to_string(u), "new" + std::to_string(i), start + 1000));
    for (int i = 0; i < 5; ++i) rs.push_back(rec("u" + std::to_string(u), "old" + std::to_string(i), earlier));
  }
  auto first = time_window_select(rs, end, start, 3, 4);
  CHECK(first.chosen_start == start);
  auto second = time_window_select(rs, end, start, 3, 7);
  // brute-force enumeration of candidate windows
  std::int64_t expected = -1;
  for (int j = 0; j < 4 && expected < 0; ++j) {
    const auto s = shift_months(start, 3 * j);
    std::vector<InteractionRecord> w;
    for (const auto& r : rs)
      if (r.timestamp >= s && r.timestamp <= end) w.push_back(r);
    std::set<std::string> items;
    for (const auto& r : naive_k_core(w, 5)) items.insert(r.item_id);
    if (items.size() > 7) expected = s;
  }
  CHECK(second.chosen_start == expected);
  CHECK(second.chosen_start == shift_months(start, 3));
  CHECK(second.records.size() == 50);
  CHECK_THROWS_WITH_AS(time_window_select(rs, end, start, 3, 50), doctest::Contains("achieved 10"), Error);
}

TEST_CASE("temporal split ratios and tie-breaks") {
  std::vector<Sample> s;
  for (int i = 0; i < 20; ++i) s.push_back({"u" + std::to_string(19 - i), "t", 100 - i, {"h"}});
  auto sp = temporal_split(s);
  CHECK(sp.train.size() == 16);
  CHECK(sp.valid.size() == 2);
  CHECK(sp.test.size() == 2);
  CHECK(sp.train.front().timestamp == 81);
  CHECK(sp.test.back().timestamp == 100);

  std::vector<Sample> tied;
  for (int i = 9; i >= 0; --i) tied.push_back({"u" + std::to_string(i), "t", 5, {"h"}});
  auto st = temporal_split(tied);
  CHECK(st.train.front().user_id == "u0");
  CHECK(st.test.front().user_id == "u9");
  tied.pop_back();
  CHECK_THROWS_AS(temporal_split(tied), Error);
}

TEST_CASE("vocabulary and prompts") {
  auto v = Vocabulary::build({"red kite", "kite red", "blue"});
  CHECK(v.size() == 7);
  CHECK(v.id("red") == 4);
  CHECK(v.token(tokens::kEos) == "<eos>");
  CHECK(Vocabulary::build({"red kite", "kite red", "blue"}).tokens() == v.tokens());
  CHECK(Vocabulary::tokenize("Hi, there!") == std::vector<std::string>{"Hi", ",", "there", "!"});
  CHECK(v.decode(v.encode("red  kite")) == "red kite");

  auto full = Vocabulary::build({"red kite", "blue ball"}, prompt_template_words());
  std::vector<std::string> hist;
  for (int i = 0; i < 12; ++i) hist.push_back(i % 2 ? "red kite" : "blue ball");
  auto p = build_prompt(hist, "blue ball", full);
  CHECK(std::count(p.x.begin(), p.x.end(), tokens::kSep) == 9);
  CHECK(p.x.front() == tokens::kBos);
  CHECK(p.y.back() == tokens::kEos);
  CHECK(p.y.size() == 3);
  auto one = build_prompt({"red kite"}, "blue ball", full);
  CHECK(full.decode(one.x) == "<bos> The user has interacted with : red kite . Predict the next item :");
  CHECK(build_prompt(hist, "blue ball", full).x == p.x);
  CHECK_THROWS_WITH_AS(build_prompt({"zebra"}, "blue ball", full), doctest::Contains("zebra"), Error);
}

TEST_CASE("synthetic generator") {
  SynthConfig c;
  c.num_users = 200;
  c.num_items = 200;
  c.seed = 7;
  auto a = synth_generate(c);
  CHECK(a == synth_generate(c));
  std::set<std::string> items;
  std::map<std::string, std::int64_t> last;
  bool increasing = true;
  for (const auto& r : a) {
    items.insert(r.item_id);
    if (last.count(r.user_id) && last[r.user_id] >= r.timestamp) increasing = false;
    last[r.user_id] = r.timestamp;
  }
  CHECK(increasing);
  CHECK(items.size() <= 200);
  SynthRule rule(c);
  std::set<std::string> words;
  for (int i = 0; i < 200; ++i) words.insert(Vocabulary::tokenize(rule.title(i))[1]);
  CHECK(words.size() == 200);
  c.seed = 8;
  CHECK(synth_generate(c) != a);
}

TEST_CASE("archetype oracle reaches HR@5 >= 0.9") {
  SynthConfig c;
  c.seed = 11;
  std::vector<int> arch;
  auto records = synth_generate(c, &arch);
  Dataset d = prepare_dataset(records, DataConfig{}, "test");
  CHECK(d.catalog.size() == c.num_items);
  SynthRule rule(c);
  std::vector<int> by_freq(d.catalog.size());
  for (int i = 0; i < d.catalog.size(); ++i) by_freq[i] = i;
  std::stable_sort(by_freq.begin(), by_freq.end(),
                   [&](int x, int y) { return d.catalog.train_frequency[x] > d.catalog.train_frequency[y]; });
  int hits = 0;
  for (const auto& s : d.splits.test) {
    const int user = std::stoi(s.user_id.substr(1));
    const int guess = rule.next_item(arch[user], rule.item_from_id(s.history.back()));
    std::vector<std::string> top = {rule.item_id(guess)};
    for (int i = 0; top.size() < 5; ++i)
      if (d.catalog.item_ids[by_freq[i]] != top[0]) top.push_back(d.catalog.item_ids[by_freq[i]]);
    hits += std::find(top.begin(), top.end(), s.target_item_id) != top.end();
  }
  const double hr5 = double(hits) / d.splits.test.size();
  MESSAGE("oracle HR@5 = " << hr5);
  CHECK(hr5 >= 0.9);
}

TEST_CASE("dataset directory round trip") {
  SynthConfig c;
  c.num_users = 300;
  c.num_items = 60;
  c.num_categories = 6;
  c.seed = 3;
  DataConfig dc;
  dc.min_items = 20;
  Dataset d = prepare_dataset(synth_generate(c), dc, "abc");
  const auto dir = temp_path("ds");
  write_dataset(dir, d);
  Dataset e = load_dataset(dir);
  CHECK(e.splits_hash() == d.splits_hash());
  CHECK(e.vocab.tokens() == d.vocab.tokens());
  CHECK(e.train.size() == d.train.size());
  CHECK(e.test.back().x == d.test.back().x);
  CHECK(e.manifest() == d.manifest());
  CHECK(d.splits.train.size() + d.splits.valid.size() + d.splits.test.size() ==
        d.records.size() - 300);
}
