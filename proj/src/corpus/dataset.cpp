// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include "corpus/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/error.hpp"
#include "common/hash.hpp"

namespace latentrec {

namespace fs = std::filesystem;

namespace {

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "dataset", "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorKind::kIo, "dataset", "write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "dataset", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string samples_text(const std::vector<Sample>& samples) {
  std::string out;
  for (const auto& s : samples) {
    out += s.user_id + "\t" + s.target_item_id + "\t" + std::to_string(s.timestamp);
    for (const auto& h : s.history) out += "\t" + h;
    out += "\n";
  }
  return out;
}

std::vector<Sample> parse_samples(const fs::path& path) {
  std::istringstream in(read_text(path));
  std::vector<Sample> out;
  std::string line;
  long line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    while (true) {
      const auto tab = line.find('\t', start);
      f.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
      if (tab == std::string::npos) break;
      start = tab + 1;
    }
    if (f.size() < 4) {
      throw Error(ErrorKind::kFormat, "dataset", path.string() + ":" + std::to_string(line_no) + ": short line");
    }
    Sample s;
    s.user_id = f[0];
    s.target_item_id = f[1];
    try {
      s.timestamp = std::stoll(f[2]);
    } catch (const std::logic_error&) {
      throw Error(ErrorKind::kFormat, "dataset", path.string() + ":" + std::to_string(line_no) + ": bad timestamp");
    }
    s.history.assign(f.begin() + 3, f.end());
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace

std::vector<PromptSample> build_prompts(const std::vector<Sample>& samples, const Catalog& catalog,
                                        const Vocabulary& vocab) {
  std::vector<PromptSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    std::vector<std::string> history;
    for (const auto& h : s.history) history.push_back(catalog.titles[catalog.index_of(h)]);
    PromptSample p = build_prompt(history, catalog.titles[catalog.index_of(s.target_item_id)], vocab);
    p.user_id = s.user_id;
    p.target_item_id = s.target_item_id;
    p.timestamp = s.timestamp;
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

Dataset assemble(std::vector<InteractionRecord> records, std::int64_t chosen_start, Vocabulary vocab,
                 Splits splits, std::string config_hash) {
  Dataset d;
  d.records = std::move(records);
  d.chosen_start = chosen_start;
  d.vocab = std::move(vocab);
  d.splits = std::move(splits);
  d.config_hash = std::move(config_hash);
  d.catalog = Catalog::build(d.records, d.vocab, d.splits.train);
  d.train = build_prompts(d.splits.train, d.catalog, d.vocab);
  d.valid = build_prompts(d.splits.valid, d.catalog, d.vocab);
  d.test = build_prompts(d.splits.test, d.catalog, d.vocab);
  return d;
}

}  // namespace

Dataset prepare_dataset(const std::vector<InteractionRecord>& records, const DataConfig& config,
                        const std::string& config_hash) {
  if (records.empty()) throw Error(ErrorKind::kInvalidArgument, "prepare", "no records");
  std::int64_t end_time = config.end_time;
  if (end_time == 0) {
    for (const auto& r : records) end_time = std::max(end_time, r.timestamp);
  }
  const std::int64_t initial_start = shift_months(end_time, config.window_months);
  WindowSelection window = time_window_select(records, end_time, initial_start, config.step_months,
                                              config.min_items, config.k_core);
  std::vector<InteractionRecord> kept = k_core_filter(window.records, config.k_core);
  std::vector<std::string> titles;
  titles.reserve(kept.size());
  for (const auto& r : kept) titles.push_back(r.title);
  Vocabulary vocab = Vocabulary::build(titles, prompt_template_words());
  Splits splits = temporal_split(make_samples(kept, config.max_history));
  return assemble(std::move(kept), window.chosen_start, std::move(vocab), std::move(splits), config_hash);
}

nlohmann::json Dataset::manifest() const {
  nlohmann::json j;
  j["chosen_start"] = chosen_start;
  j["catalog_size"] = catalog.size();
  j["vocab_size"] = vocab.size();
  j["vocab_hash"] = hex64(vocab.hash());
  j["records"] = records.size();
  j["split_counts"] = {{"train", splits.train.size()}, {"valid", splits.valid.size()}, {"test", splits.test.size()}};
  j["splits_hash"] = hex64(splits_hash());
  j["config_hash"] = config_hash;
  return j;
}

std::uint64_t Dataset::splits_hash() const {
  Fnv1a h;
  h.update(samples_text(splits.train));
  h.update("|");
  h.update(samples_text(splits.valid));
  h.update("|");
  h.update(samples_text(splits.test));
  return h.digest();
}

const std::vector<PromptSample>& Dataset::prompts(const std::string& split) const {
  if (split == "train") return train;
  if (split == "valid") return valid;
  if (split == "test") return test;
  throw Error(ErrorKind::kInvalidArgument, "dataset", "unknown split '" + split + "'");
}

void write_dataset(const std::string& dir, const Dataset& d) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorKind::kIo, "dataset", "cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);
  write_records((root / "records.tsv").string(), d.records);
  std::string vocab_text;
  for (const auto& t : d.vocab.tokens()) vocab_text += t + "\n";
  write_text(root / "vocab.txt", vocab_text);
  write_text(root / "train.tsv", samples_text(d.splits.train));
  write_text(root / "valid.tsv", samples_text(d.splits.valid));
  write_text(root / "test.tsv", samples_text(d.splits.test));
  write_text(root / "manifest.json", d.manifest().dump(2) + "\n");
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  const auto manifest = nlohmann::json::parse(read_text(root / "manifest.json"));
  std::vector<std::string> tokens;
  {
    std::istringstream in(read_text(root / "vocab.txt"));
    std::string line;
    while (std::getline(in, line)) tokens.push_back(line);
  }
  Splits splits;
  splits.train = parse_samples(root / "train.tsv");
  splits.valid = parse_samples(root / "valid.tsv");
  splits.test = parse_samples(root / "test.tsv");
  Dataset d = assemble(ingest_records((root / "records.tsv").string()),
                       manifest.at("chosen_start").get<std::int64_t>(), Vocabulary::from_tokens(tokens),
                       std::move(splits), manifest.at("config_hash").get<std::string>());
  if (hex64(d.splits_hash()) != manifest.at("splits_hash").get<std::string>()) {
    throw Error(ErrorKind::kFormat, "dataset", "split files do not match manifest hash");
  }
  if (hex64(d.vocab.hash()) != manifest.at("vocab_hash").get<std::string>()) {
    throw Error(ErrorKind::kFormat, "dataset", "vocabulary does not match manifest hash");
  }
  return d;
}

}  // namespace latentrec
