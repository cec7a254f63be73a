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

#ifndef FEDSEQ_INGEST_H_
#define FEDSEQ_INGEST_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/statusor.h"

namespace fedseq {

// Unix seconds.
using Timestamp = int64_t;

inline constexpr int64_t kSecondsPerDay = 86400;
inline constexpr int64_t kDefaultDedupWindowSeconds = 3;
inline constexpr int64_t kDefaultSessionThresholdSeconds = 15 * 60;

struct Event {
  int user_id = 0;
  int app_id = 0;
  Timestamp timestamp = 0;

  friend bool operator==(const Event&, const Event&) = default;
};

// Bijection between raw identifiers and dense indices. Indices are handed out
// in first-appearance order.
class Vocabulary {
 public:
  int Intern(absl::string_view raw);
  std::optional<int> Find(absl::string_view raw) const;
  const std::string& Name(int index) const { return names_[index]; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  absl::flat_hash_map<std::string, int> index_;
};

// A cleaned, indexed event stream. `events` is ordered by timestamp with ties
// kept in input order, so every per-user projection is chronological.
struct EventLog {
  std::vector<Event> events;
  Vocabulary apps;
  Vocabulary users;

  int num_users() const { return users.size(); }
  int num_apps() const { return apps.size(); }
  bool empty() const { return events.empty(); }

  // Per-user chronological streams, indexed by user id (size num_users()).
  std::vector<std::vector<Event>> PerUser() const;

  // A log sharing this log's vocabularies but holding `subset`.
  EventLog WithEvents(std::vector<Event> subset) const;
};

absl::StatusOr<EventLog> ParseEvents(absl::string_view content);
absl::StatusOr<EventLog> ParseEventsFile(const std::string& path);

// Writes `user_id,app_id,timestamp` rows using the raw identifiers and integer
// Unix seconds. The output parses back into an identical log.
std::string SerializeEvents(const EventLog& log);
absl::Status WriteEventsFile(const EventLog& log, const std::string& path);

// Collapses bursts of the same app: within each user, an event is dropped when
// the user's immediately preceding event is the same app and less than
// `window_seconds` earlier. Chains collapse onto their first event.
EventLog Deduplicate(const EventLog& log,
                     int64_t window_seconds = kDefaultDedupWindowSeconds);

struct Session {
  int user_id = 0;
  std::vector<int> apps;
  Timestamp start = 0;
  Timestamp end = 0;
};

// Splits each user's stream wherever the gap to the previous event exceeds
// `threshold_seconds`. Sessions are grouped by user, chronological per user.
std::vector<Session> Sessionize(
    const EventLog& log,
    int64_t threshold_seconds = kDefaultSessionThresholdSeconds);

// Mean number of sessions over users that have at least one session.
double MeanSessionsPerUser(std::span<const Session> sessions);

struct SplitDays {
  int train = 0;
  int validation = 0;
  int test = 0;
};

struct StaticSplit {
  EventLog train;
  EventLog validation;
  EventLog test;
};

// Day index of `t` counted from the UTC midnight preceding `origin`.
int64_t DayIndex(Timestamp origin, Timestamp t);

// Chronological split by whole UTC days counted from the day of the first
// event. Fails when train would be empty or when events fall outside the
// covered span.
absl::StatusOr<StaticSplit> SplitStatic(const EventLog& log, SplitDays days);

struct Cycle {
  int index = 0;
  // Indexed by user id; empty for users inactive in this cycle.
  std::vector<std::vector<Event>> per_user;

  int ActiveUsers() const;
  size_t NumEvents() const;
};

struct CycleSchedule {
  std::vector<Cycle> cycles;
  int target_active_users = 0;
  std::vector<int> active_users;  // achieved, one per cycle

  // Fraction of cycles whose active-user count is within `tolerance` (relative)
  // of the target.
  double FractionWithinTolerance(double tolerance = 0.2) const;
};

// Regroups day-level activity blocks into cycles with a roughly constant
// number of active users. Each user's blocks keep their order and land in
// strictly increasing cycles. Greedy: every cycle takes the next block of up to
// `target` users, preferring users with the most remaining blocks, then the
// earliest pending day, then the lowest user id.
absl::StatusOr<CycleSchedule> RebalanceCycles(const EventLog& log,
                                              int target_active_users);

// Distinct active users per calendar day (day 0 = first event's UTC day).
std::vector<int> ActiveUsersPerDay(const EventLog& log);

double CoefficientOfVariation(std::span<const int> values);

}  // namespace fedseq

#endif  // FEDSEQ_INGEST_H_
