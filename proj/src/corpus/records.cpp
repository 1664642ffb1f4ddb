// Copyright 2026 The latentrec Authors.
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <charconv>
#include <fstream>
#include <set>
#include <unordered_map>

#include "common/error.hpp"
#include "corpus/corpus.hpp"

namespace latentrec {

namespace {

constexpr const char* kHeader = "user_id\titem_id\ttimestamp\ttitle";

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

}  // namespace

std::vector<InteractionRecord> ingest_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "ingest", "cannot open " + path);
  auto fail = [&](long line_no, const std::string& msg) {
    throw Error(ErrorKind::kFormat, "ingest", path + ":" + std::to_string(line_no) + ": " + msg);
  };
  std::string line;
  if (!std::getline(in, line)) fail(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) fail(1, "malformed header");
  std::vector<InteractionRecord> out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_tabs(line);
    if (fields.size() > 4) fail(line_no, "embedded tab in title");
    if (fields.size() != 4) fail(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    InteractionRecord r;
    r.user_id = fields[0];
    r.item_id = fields[1];
    if (r.user_id.empty() || r.item_id.empty()) fail(line_no, "empty id");
    const std::string& ts = fields[2];
    const auto res = std::from_chars(ts.data(), ts.data() + ts.size(), r.timestamp);
    if (res.ec != std::errc() || res.ptr != ts.data() + ts.size()) {
      fail(line_no, "non-integer timestamp '" + ts + "'");
    }
    if (r.timestamp < 0) fail(line_no, "negative timestamp");
    r.title = fields[3];
    if (blank(r.title)) fail(line_no, "empty title");
    out.push_back(std::move(r));
  }
  return out;
}

void write_records(const std::string& path, const std::vector<InteractionRecord>& records) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorKind::kIo, "write", "cannot write " + path);
  out << kHeader << "\n";
  for (const auto& r : records) {
    if (r.title.find('\t') != std::string::npos) {
      throw Error(ErrorKind::kInvalidArgument, "write", "tab in title of item " + r.item_id);
    }
    out << r.user_id << '\t' << r.item_id << '\t' << r.timestamp << '\t' << r.title << '\n';
  }
  if (!out) throw Error(ErrorKind::kIo, "write", "write failed for " + path);
}

std::vector<InteractionRecord> k_core_filter(const std::vector<InteractionRecord>& records, int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k_core", "k must be >= 1");
  std::vector<char> alive(records.size(), 1);
  std::unordered_map<std::string, long> users, items;
  for (const auto& r : records) {
    ++users[r.user_id];
    ++items[r.item_id];
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!alive[i]) continue;
      const auto& r = records[i];
      if (users[r.user_id] < k || items[r.item_id] < k) {
        alive[i] = 0;
        --users[r.user_id];
        --items[r.item_id];
        changed = true;
      }
    }
  }
  std::vector<InteractionRecord> out;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (alive[i]) out.push_back(records[i]);
  return out;
}

namespace {

// Days since 1970-01-01 for a proleptic Gregorian date and back.
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m > 2 ? m - 3 : m + 9) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

void civil_from_days(std::int64_t z, std::int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y = static_cast<std::int64_t>(yoe) + era * 400 + (m <= 2);
}

unsigned days_in_month(std::int64_t y, unsigned m) {
  static const unsigned kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  const bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
  return m == 2 && leap ? 29 : kDays[m - 1];
}

}  // namespace

std::int64_t shift_months(std::int64_t timestamp, int months) {
  const std::int64_t day = (timestamp >= 0 ? timestamp : timestamp - 86399) / 86400;
  const std::int64_t secs = timestamp - day * 86400;
  std::int64_t y;
  unsigned m, d;
  civil_from_days(day, y, m, d);
  std::int64_t total = y * 12 + (m - 1) - months;
  std::int64_t ny = total >= 0 ? total / 12 : (total - 11) / 12;
  const unsigned nm = static_cast<unsigned>(total - ny * 12) + 1;
  const unsigned nd = std::min(d, days_in_month(ny, nm));
  return days_from_civil(ny, nm, nd) * 86400 + secs;
}

WindowSelection time_window_select(const std::vector<InteractionRecord>& records,
                                   std::int64_t end_time, std::int64_t initial_start,
                                   int step_months, int min_items, int k) {
  if (initial_start >= end_time) {
    throw Error(ErrorKind::kInvalidArgument, "window", "initial_start must precede end_time");
  }
  if (step_months < 1 || min_items < 1) {
    throw Error(ErrorKind::kInvalidArgument, "window", "step_months and min_items must be >= 1");
  }
  std::int64_t earliest = end_time;
  for (const auto& r : records) earliest = std::min(earliest, r.timestamp);
  std::size_t achieved = 0;
  for (int j = 0;; ++j) {
    const std::int64_t start = shift_months(initial_start, j * step_months);
    std::vector<InteractionRecord> window;
    for (const auto& r : records)
      if (r.timestamp >= start && r.timestamp <= end_time) window.push_back(r);
    window = k_core_filter(window, k);
    std::set<std::string> items;
    for (const auto& r : window) items.insert(r.item_id);
    achieved = items.size();
    if (static_cast<long>(achieved) > min_items) return {std::move(window), start};
    // Once the window reaches back past every record it cannot grow.
    if (start <= earliest) break;
  }
  throw Error(ErrorKind::kInvalidArgument, "window",
              "no start time yields more than " + std::to_string(min_items) +
                  " items; achieved " + std::to_string(achieved));
}

}  // namespace latentrec
