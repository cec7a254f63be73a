// Copyright 2026 The FedSeq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedseq/ingest.h"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "absl/strings/strip.h"

namespace fedseq {
namespace {

enum class TimestampFormat { kUnixSeconds, kIso8601 };

absl::string_view Unquote(absl::string_view field) {
  field = absl::StripAsciiWhitespace(field);
  if (field.size() >= 2 && field.front() == '"' && field.back() == '"') {
    field = field.substr(1, field.size() - 2);
  }
  return field;
}

char DetectDelimiter(absl::string_view header) {
  for (char c : {',', '\t', ';', '|'}) {
    if (header.find(c) != absl::string_view::npos) return c;
  }
  return ',';
}

bool LooksLikeInteger(absl::string_view s) {
  if (s.empty()) return false;
  size_t i = (s[0] == '-' || s[0] == '+') ? 1 : 0;
  if (i == s.size()) return false;
  return std::all_of(s.begin() + i, s.end(),
                     [](char c) { return absl::ascii_isdigit(c); });
}

std::optional<int64_t> ParseInt(absl::string_view s) {
  if (!s.empty() && s[0] == '+') s.remove_prefix(1);
  int64_t value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return value;
}

// Parses a fixed-width run of digits at `pos`.
std::optional<int> Digits(absl::string_view s, size_t pos, size_t width) {
  if (pos + width > s.size()) return std::nullopt;
  int value = 0;
  for (size_t i = pos; i < pos + width; ++i) {
    if (!absl::ascii_isdigit(s[i])) return std::nullopt;
    value = value * 10 + (s[i] - '0');
  }
  return value;
}

// Accepts YYYY-MM-DD[(T| )HH:MM[:SS[.frac]]][Z|(+|-)HH[:]MM]. Fractional
// seconds are truncated. A missing offset means UTC.
std::optional<Timestamp> ParseIso8601(absl::string_view s) {
  auto year = Digits(s, 0, 4);
  auto month = Digits(s, 5, 2);
  auto day = Digits(s, 8, 2);
  if (!year || !month || !day || s[4] != '-' || s[7] != '-') {
    return std::nullopt;
  }
  const std::chrono::year_month_day ymd{
      std::chrono::year{*year}, std::chrono::month{static_cast<unsigned>(*month)},
      std::chrono::day{static_cast<unsigned>(*day)}};
  if (!ymd.ok()) return std::nullopt;
  int64_t seconds =
      std::chrono::sys_days{ymd}.time_since_epoch().count() * kSecondsPerDay;
  size_t pos = 10;
  if (pos < s.size() && (s[pos] == 'T' || s[pos] == ' ')) {
    auto hh = Digits(s, pos + 1, 2);
    auto mm = Digits(s, pos + 4, 2);
    if (!hh || !mm || s[pos + 3] != ':' || *hh > 23 || *mm > 59) {
      return std::nullopt;
    }
    seconds += *hh * 3600 + *mm * 60;
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      auto ss = Digits(s, pos + 1, 2);
      if (!ss || *ss > 60) return std::nullopt;
      seconds += *ss;
      pos += 3;
      if (pos < s.size() && (s[pos] == '.' || s[pos] == ',')) {
        ++pos;
        while (pos < s.size() && absl::ascii_isdigit(s[pos])) ++pos;
      }
    }
  }
  if (pos < s.size()) {
    if (s[pos] == 'Z' && pos + 1 == s.size()) return seconds;
    if (s[pos] != '+' && s[pos] != '-') return std::nullopt;
    const int sign = s[pos] == '+' ? 1 : -1;
    auto oh = Digits(s, pos + 1, 2);
    if (!oh) return std::nullopt;
    size_t mpos = pos + 3;
    if (mpos < s.size() && s[mpos] == ':') ++mpos;
    int om = 0;
    if (mpos < s.size()) {
      auto parsed = Digits(s, mpos, 2);
      if (!parsed || mpos + 2 != s.size()) return std::nullopt;
      om = *parsed;
    }
    seconds -= sign * (*oh * 3600 + om * 60);
  }
  return seconds;
}

}  // namespace

int Vocabulary::Intern(absl::string_view raw) {
  auto [it, inserted] =
      index_.try_emplace(std::string(raw), static_cast<int>(names_.size()));
  if (inserted) names_.emplace_back(raw);
  return it->second;
}

std::optional<int> Vocabulary::Find(absl::string_view raw) const {
  auto it = index_.find(raw);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::vector<Event>> EventLog::PerUser() const {
  std::vector<std::vector<Event>> streams(num_users());
  for (const Event& e : events) streams[e.user_id].push_back(e);
  return streams;
}

EventLog EventLog::WithEvents(std::vector<Event> subset) const {
  EventLog out;
  out.apps = apps;
  out.users = users;
  out.events = std::move(subset);
  return out;
}

absl::StatusOr<EventLog> ParseEvents(absl::string_view content) {
  std::vector<absl::string_view> lines = absl::StrSplit(content, '\n');
  size_t line_no = 0;
  // Skip leading blank lines to find the header.
  while (line_no < lines.size() &&
         absl::StripAsciiWhitespace(lines[line_no]).empty()) {
    ++line_no;
  }
  if (line_no == lines.size()) {
    return absl::InvalidArgumentError("empty event log: no header row");
  }
  const absl::string_view header = absl::StripAsciiWhitespace(lines[line_no]);
  const char delim = DetectDelimiter(header);
  int user_col = -1, app_col = -1, ts_col = -1;
  {
    std::vector<absl::string_view> names = absl::StrSplit(header, delim);
    for (int i = 0; i < static_cast<int>(names.size()); ++i) {
      const std::string name = absl::AsciiStrToLower(Unquote(names[i]));
      if (name == "user_id") user_col = i;
      if (name == "app_id") app_col = i;
      if (name == "timestamp") ts_col = i;
    }
  }
  if (user_col < 0 || app_col < 0 || ts_col < 0) {
    return absl::InvalidArgumentError(absl::StrCat(
        "line ", line_no + 1,
        ": header must name user_id, app_id and timestamp columns"));
  }
  const int needed = std::max({user_col, app_col, ts_col}) + 1;

  EventLog log;
  std::optional<TimestampFormat> format;
  for (++line_no; line_no < lines.size(); ++line_no) {
    const absl::string_view line = absl::StripAsciiWhitespace(lines[line_no]);
    if (line.empty()) continue;
    std::vector<absl::string_view> fields = absl::StrSplit(line, delim);
    const std::string where = absl::StrCat("line ", line_no + 1, ": ");
    if (static_cast<int>(fields.size()) < needed) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, "expected at least ", needed, " fields, got ",
                       fields.size()));
    }
    const absl::string_view user = Unquote(fields[user_col]);
    const absl::string_view app = Unquote(fields[app_col]);
    const absl::string_view ts = Unquote(fields[ts_col]);
    if (user.empty() || app.empty()) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, "empty user or app identifier"));
    }
    if (!format.has_value()) {
      format = LooksLikeInteger(ts) ? TimestampFormat::kUnixSeconds
                                    : TimestampFormat::kIso8601;
    }
    std::optional<Timestamp> parsed = *format == TimestampFormat::kUnixSeconds
                                          ? ParseInt(ts)
                                          : ParseIso8601(ts);
    if (!parsed.has_value()) {
      return absl::InvalidArgumentError(
          absl::StrCat(where, "unparseable timestamp '", ts, "'"));
    }
    Event e;
    e.user_id = log.users.Intern(user);
    e.app_id = log.apps.Intern(app);
    e.timestamp = *parsed;
    log.events.push_back(e);
  }
  if (log.events.empty()) {
    return absl::InvalidArgumentError("empty event log: no data rows");
  }
  std::stable_sort(log.events.begin(), log.events.end(),
                   [](const Event& a, const Event& b) {
                     return a.timestamp < b.timestamp;
                   });
  return log;
}

absl::StatusOr<EventLog> ParseEventsFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot open ", path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  auto log = ParseEvents(buffer.str());
  if (!log.ok()) {
    return absl::Status(log.status().code(),
                        absl::StrCat(path, ": ", log.status().message()));
  }
  return log;
}

std::string SerializeEvents(const EventLog& log) {
  std::string out = "user_id,app_id,timestamp\n";
  for (const Event& e : log.events) {
    absl::StrAppend(&out, log.users.Name(e.user_id), ",",
                    log.apps.Name(e.app_id), ",", e.timestamp, "\n");
  }
  return out;
}

absl::Status WriteEventsFile(const EventLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) return absl::UnavailableError(absl::StrCat("cannot write ", path));
  out << SerializeEvents(log);
  return out ? absl::OkStatus()
             : absl::DataLossError(absl::StrCat("short write to ", path));
}

EventLog Deduplicate(const EventLog& log, int64_t window_seconds) {
  struct Last {
    int app = -1;
    Timestamp ts = 0;
  };
  std::vector<Last> last(log.num_users());
  std::vector<Event> kept;
  kept.reserve(log.events.size());
  for (const Event& e : log.events) {
    Last& prev = last[e.user_id];
    const bool burst =
        prev.app == e.app_id && e.timestamp - prev.ts < window_seconds;
    prev = {e.app_id, e.timestamp};
    if (!burst) kept.push_back(e);
  }
  return log.WithEvents(std::move(kept));
}

std::vector<Session> Sessionize(const EventLog& log,
                                int64_t threshold_seconds) {
  std::vector<Session> sessions;
  for (const auto& stream : log.PerUser()) {
    for (size_t i = 0; i < stream.size(); ++i) {
      const Event& e = stream[i];
      if (i == 0 || e.timestamp - stream[i - 1].timestamp > threshold_seconds) {
        sessions.push_back({e.user_id, {}, e.timestamp, e.timestamp});
      }
      sessions.back().apps.push_back(e.app_id);
      sessions.back().end = e.timestamp;
    }
  }
  return sessions;
}

double MeanSessionsPerUser(std::span<const Session> sessions) {
  if (sessions.empty()) return 0.0;
  absl::flat_hash_map<int, int> per_user;
  for (const Session& s : sessions) ++per_user[s.user_id];
  return static_cast<double>(sessions.size()) /
         static_cast<double>(per_user.size());
}

int64_t DayIndex(Timestamp origin, Timestamp t) {
  auto floor_div = [](int64_t a, int64_t b) {
    return a / b - ((a % b != 0) && ((a < 0) != (b < 0)));
  };
  return floor_div(t, kSecondsPerDay) - floor_div(origin, kSecondsPerDay);
}

absl::StatusOr<StaticSplit> SplitStatic(const EventLog& log, SplitDays days) {
  if (days.train <= 0 || days.validation < 0 || days.test < 0) {
    return absl::InvalidArgumentError(
        "split: train days must be positive, validation/test non-negative");
  }
  if (log.empty()) return absl::InvalidArgumentError("split: empty log");
  const Timestamp origin = log.events.front().timestamp;
  const int64_t train_end = days.train;
  const int64_t val_end = train_end + days.validation;
  const int64_t test_end = val_end + days.test;
  std::vector<Event> train, val, test;
  for (const Event& e : log.events) {
    const int64_t day = DayIndex(origin, e.timestamp);
    if (day < train_end) {
      train.push_back(e);
    } else if (day < val_end) {
      val.push_back(e);
    } else if (day < test_end) {
      test.push_back(e);
    } else {
      return absl::InvalidArgumentError(absl::StrCat(
          "split: ", days.train, "+", days.validation, "+", days.test,
          " days do not cover the log (event on day ", day, ")"));
    }
  }
  if (train.empty()) {
    return absl::InvalidArgumentError("split: train subset is empty");
  }
  return StaticSplit{log.WithEvents(std::move(train)),
                     log.WithEvents(std::move(val)),
                     log.WithEvents(std::move(test))};
}

int Cycle::ActiveUsers() const {
  return static_cast<int>(std::count_if(
      per_user.begin(), per_user.end(),
      [](const std::vector<Event>& v) { return !v.empty(); }));
}

size_t Cycle::NumEvents() const {
  size_t n = 0;
  for (const auto& v : per_user) n += v.size();
  return n;
}

double CycleSchedule::FractionWithinTolerance(double tolerance) const {
  if (active_users.empty()) return 0.0;
  const double lo = target_active_users * (1.0 - tolerance);
  const double hi = target_active_users * (1.0 + tolerance);
  const auto within = std::count_if(
      active_users.begin(), active_users.end(),
      [&](int n) { return n >= lo && n <= hi; });
  return static_cast<double>(within) / active_users.size();
}

absl::StatusOr<CycleSchedule> RebalanceCycles(const EventLog& log,
                                              int target_active_users) {
  if (target_active_users <= 0) {
    return absl::InvalidArgumentError(
        "rebalance: target_active_users must be positive");
  }
  if (target_active_users > log.num_users()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "rebalance: target_active_users ", target_active_users,
        " exceeds the number of users ", log.num_users()));
  }
  if (log.empty()) return absl::InvalidArgumentError("rebalance: empty log");

  // Day-level blocks per user, in chronological order.
  struct Block {
    int64_t day;
    std::vector<Event> events;
  };
  const Timestamp origin = log.events.front().timestamp;
  std::vector<std::vector<Block>> blocks(log.num_users());
  for (const auto& stream : log.PerUser()) {
    for (const Event& e : stream) {
      auto& user_blocks = blocks[e.user_id];
      const int64_t day = DayIndex(origin, e.timestamp);
      if (user_blocks.empty() || user_blocks.back().day != day) {
        user_blocks.push_back({day, {}});
      }
      user_blocks.back().events.push_back(e);
    }
  }

  std::vector<size_t> next(log.num_users(), 0);
  CycleSchedule schedule;
  schedule.target_active_users = target_active_users;
  std::vector<int> pending;
  for (;;) {
    pending.clear();
    for (int u = 0; u < log.num_users(); ++u) {
      if (next[u] < blocks[u].size()) pending.push_back(u);
    }
    if (pending.empty()) break;
    auto remaining = [&](int u) { return blocks[u].size() - next[u]; };
    std::sort(pending.begin(), pending.end(), [&](int a, int b) {
      if (remaining(a) != remaining(b)) return remaining(a) > remaining(b);
      const int64_t da = blocks[a][next[a]].day;
      const int64_t db = blocks[b][next[b]].day;
      if (da != db) return da < db;
      return a < b;
    });
    const size_t take =
        std::min(pending.size(), static_cast<size_t>(target_active_users));
    Cycle cycle;
    cycle.index = static_cast<int>(schedule.cycles.size());
    cycle.per_user.resize(log.num_users());
    for (size_t i = 0; i < take; ++i) {
      const int u = pending[i];
      cycle.per_user[u] = std::move(blocks[u][next[u]].events);
      ++next[u];
    }
    schedule.active_users.push_back(cycle.ActiveUsers());
    schedule.cycles.push_back(std::move(cycle));
  }
  return schedule;
}

std::vector<int> ActiveUsersPerDay(const EventLog& log) {
  if (log.empty()) return {};
  const Timestamp origin = log.events.front().timestamp;
  const int64_t last_day = DayIndex(origin, log.events.back().timestamp);
  std::vector<absl::flat_hash_map<int, bool>> seen(last_day + 1);
  for (const Event& e : log.events) {
    seen[DayIndex(origin, e.timestamp)][e.user_id] = true;
  }
  std::vector<int> counts;
  counts.reserve(seen.size());
  for (const auto& day : seen) counts.push_back(static_cast<int>(day.size()));
  return counts;
}

double CoefficientOfVariation(std::span<const int> values) {
  if (values.empty()) return 0.0;
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  if (mean == 0.0) return 0.0;
  double var = 0.0;
  for (int v : values) var += (v - mean) * (v - mean);
  return std::sqrt(var / n) / mean;
}

}  // namespace fedseq
