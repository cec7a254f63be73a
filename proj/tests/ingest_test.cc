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

#include <random>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace fedseq {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

EventLog MakeLog(const std::vector<std::tuple<int, int, Timestamp>>& rows) {
  std::string csv = "user_id,app_id,timestamp\n";
  for (const auto& [u, a, t] : rows) {
    absl::StrAppend(&csv, "u", u, ",a", a, ",", t, "\n");
  }
  auto log = ParseEvents(csv);
  EXPECT_TRUE(log.ok()) << log.status();
  return *log;
}

// Random multi-user log over `days` days with bursts of repeated apps.
EventLog RandomLog(uint64_t seed, int users, int apps, int events, int days) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> user(0, users - 1);
  std::uniform_int_distribution<int> app(0, apps - 1);
  std::uniform_int_distribution<Timestamp> when(0, days * kSecondsPerDay - 1);
  std::uniform_int_distribution<int> small_gap(0, 4);
  std::vector<std::tuple<int, int, Timestamp>> rows;
  while (static_cast<int>(rows.size()) < events) {
    const int u = user(rng);
    const int a = app(rng);
    Timestamp t = when(rng);
    const int burst = 1 + small_gap(rng) % 3;
    for (int b = 0; b < burst; ++b) {
      rows.emplace_back(u, a, t);
      t += small_gap(rng);
    }
  }
  return MakeLog(rows);
}

std::vector<std::vector<Event>> Streams(const EventLog& log) {
  return log.PerUser();
}

TEST(ParseEventsTest, ThreeRowsTwoUsersTwoApps) {
  auto log = ParseEvents("user_id,app_id,timestamp\nu1,x,10\nu2,y,20\nu1,y,30\n");
  ASSERT_TRUE(log.ok()) << log.status();
  EXPECT_EQ(log->num_users(), 2);
  EXPECT_EQ(log->num_apps(), 2);
  EXPECT_EQ(log->events.size(), 3u);
}

TEST(ParseEventsTest, BadTimestampNamesLine) {
  auto log = ParseEvents("user_id,app_id,timestamp\nu1,x,10\nu1,x,oops\n");
  ASSERT_FALSE(log.ok());
  EXPECT_THAT(log.status().message(), HasSubstr("line 3"));
}

TEST(ParseEventsTest, EmptyInputIsError) {
  EXPECT_FALSE(ParseEvents("").ok());
  EXPECT_FALSE(ParseEvents("user_id,app_id,timestamp\n").ok());
}

TEST(ParseEventsTest, MissingColumnIsError) {
  auto log = ParseEvents("user,app_id,timestamp\nu1,x,10\n");
  EXPECT_FALSE(log.ok());
}

TEST(ParseEventsTest, SortsByTimestampKeepingInputOrderOnTies) {
  auto log = ParseEvents(
      "user_id,app_id,timestamp\nu,b,20\nu,a,10\nu,c,10\n");
  ASSERT_TRUE(log.ok());
  std::vector<std::string> order;
  for (const Event& e : log->events) order.push_back(log->apps.Name(e.app_id));
  EXPECT_THAT(order, ElementsAre("a", "c", "b"));
}

TEST(ParseEventsTest, FirstAppearanceVocabulary) {
  auto log = ParseEvents("user_id,app_id,timestamp\nz,q,5\ny,p,6\n");
  ASSERT_TRUE(log.ok());
  EXPECT_EQ(log->users.Name(0), "z");
  EXPECT_EQ(log->apps.Name(1), "p");
}

TEST(ParseEventsTest, Iso8601Timestamps) {
  auto log = ParseEvents(
      "user_id,app_id,timestamp\n"
      "u,a,1970-01-02T00:00:00Z\n"
      "u,b,1970-01-02 00:00:30\n");
  ASSERT_TRUE(log.ok()) << log.status();
  EXPECT_EQ(log->events[0].timestamp, 86400);
  EXPECT_EQ(log->events[1].timestamp, 86430);
}

TEST(ParseEventsTest, FormatIsDetectedPerFileNotPerRow) {
  auto log = ParseEvents(
      "user_id,app_id,timestamp\nu,a,100\nu,b,1970-01-02T00:00:00Z\n");
  EXPECT_FALSE(log.ok());
}

TEST(ParseEventsTest, SerializeRoundTrip) {
  EventLog log = RandomLog(7, 5, 6, 200, 4);
  auto again = ParseEvents(SerializeEvents(log));
  ASSERT_TRUE(again.ok());
  ASSERT_EQ(again->events.size(), log.events.size());
  for (size_t i = 0; i < log.events.size(); ++i) {
    const Event& a = log.events[i];
    const Event& b = again->events[i];
    EXPECT_EQ(again->users.Name(b.user_id), log.users.Name(a.user_id));
    EXPECT_EQ(again->apps.Name(b.app_id), log.apps.Name(a.app_id));
    EXPECT_EQ(b.timestamp, a.timestamp);
  }
  EXPECT_EQ(SerializeEvents(*again), SerializeEvents(log));
}

TEST(DeduplicateTest, ChainCollapsesToFirst) {
  EventLog out = Deduplicate(MakeLog({{0, 0, 0}, {0, 0, 2}, {0, 0, 4}}), 3);
  ASSERT_EQ(out.events.size(), 1u);
  EXPECT_EQ(out.events[0].timestamp, 0);
}

TEST(DeduplicateTest, DifferentAppsNeverMerged) {
  EventLog out = Deduplicate(MakeLog({{0, 0, 0}, {0, 1, 1}, {0, 0, 2}}), 3);
  EXPECT_EQ(out.events.size(), 3u);
}

TEST(DeduplicateTest, GapAtWindowKept) {
  EXPECT_EQ(Deduplicate(MakeLog({{0, 0, 0}, {0, 0, 5}}), 3).events.size(), 2u);
  EXPECT_EQ(Deduplicate(MakeLog({{0, 0, 0}, {0, 0, 3}}), 3).events.size(), 2u);
}

TEST(DeduplicateTest, OtherUsersDoNotBreakChains) {
  EventLog out =
      Deduplicate(MakeLog({{0, 0, 0}, {1, 0, 1}, {0, 0, 2}}), 3);
  EXPECT_EQ(out.events.size(), 2u);
}

TEST(DeduplicateProperty, Idempotent) {
  for (uint64_t seed = 1; seed <= 30; ++seed) {
    EventLog once = Deduplicate(RandomLog(seed, 4, 3, 300, 3));
    EventLog twice = Deduplicate(once);
    EXPECT_EQ(once.events, twice.events) << "seed " << seed;
  }
}

TEST(SessionizeTest, SplitsOnLongGap) {
  auto sessions = Sessionize(
      MakeLog({{0, 0, 0}, {0, 1, 60}, {0, 0, 1060}, {0, 1, 1120}}), 900);
  ASSERT_EQ(sessions.size(), 2u);
  EXPECT_EQ(sessions[0].apps.size(), 2u);
  EXPECT_EQ(sessions[1].apps.size(), 2u);
  EXPECT_EQ(sessions[1].start, 1060);
  EXPECT_EQ(sessions[1].end, 1120);
}

TEST(SessionizeTest, SingleEvent) {
  auto sessions = Sessionize(MakeLog({{0, 0, 5}}));
  ASSERT_EQ(sessions.size(), 1u);
  EXPECT_EQ(sessions[0].apps.size(), 1u);
}

TEST(SessionizeTest, MeanSessionsPerUser) {
  auto sessions = Sessionize(
      MakeLog({{0, 0, 0}, {0, 0, 5000}, {0, 0, 10000}, {1, 1, 0}}), 900);
  EXPECT_DOUBLE_EQ(MeanSessionsPerUser(sessions), 2.0);
}

TEST(SessionizeProperty, NoInternalGapAboveThreshold) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    EventLog log = Deduplicate(RandomLog(seed, 3, 4, 400, 1));
    std::vector<Session> sessions = Sessionize(log, 600);
    size_t total = 0;
    for (const Session& s : sessions) total += s.apps.size();
    EXPECT_EQ(total, log.events.size());
    for (size_t i = 1; i < sessions.size(); ++i) {
      if (sessions[i].user_id == sessions[i - 1].user_id) {
        EXPECT_GT(sessions[i].start - sessions[i - 1].end, 600);
      }
    }
    // One session per user start plus one per gap above the threshold.
    size_t expected = 0;
    for (const auto& stream : Streams(log)) {
      if (stream.empty()) continue;
      ++expected;
      for (size_t k = 1; k < stream.size(); ++k) {
        if (stream[k].timestamp - stream[k - 1].timestamp > 600) ++expected;
      }
    }
    EXPECT_EQ(sessions.size(), expected);
  }
}

TEST(SplitStaticTest, ChronologicalByDay) {
  const Timestamp day = kSecondsPerDay;
  EventLog log = MakeLog({{0, 0, 10}, {0, 1, day + 5}, {1, 0, 2 * day + 7},
                          {1, 1, 3 * day}});
  auto split = SplitStatic(log, {2, 1, 1});
  ASSERT_TRUE(split.ok()) << split.status();
  EXPECT_EQ(split->train.events.size(), 2u);
  EXPECT_EQ(split->validation.events.size(), 1u);
  EXPECT_EQ(split->test.events.size(), 1u);
  EXPECT_EQ(split->test.num_apps(), log.num_apps());
}

TEST(SplitStaticTest, DaysCountFromUtcMidnight) {
  // The log starts late on day 0; day 1 begins at the next midnight.
  EventLog log = MakeLog({{0, 0, kSecondsPerDay - 10}, {0, 1, kSecondsPerDay}});
  auto split = SplitStatic(log, {1, 0, 1});
  ASSERT_TRUE(split.ok());
  EXPECT_EQ(split->train.events.size(), 1u);
  EXPECT_EQ(split->test.events.size(), 1u);
}

TEST(SplitStaticTest, UncoveredDaysIsError) {
  EventLog log = MakeLog({{0, 0, 0}, {0, 1, 5 * kSecondsPerDay}});
  EXPECT_FALSE(SplitStatic(log, {2, 1, 1}).ok());
}

TEST(SplitStaticTest, EmptyTrainIsError) {
  EventLog log = MakeLog({{0, 0, 0}});
  EXPECT_FALSE(SplitStatic(log, {0, 1, 1}).ok());
}

TEST(SplitStaticTest, AllInTrainLeavesTestEmpty) {
  EventLog log = MakeLog({{0, 0, 0}, {0, 1, 9 * kSecondsPerDay}});
  auto split = SplitStatic(log, {10, 0, 0});
  ASSERT_TRUE(split.ok());
  EXPECT_TRUE(split->test.empty());
}

TEST(SplitStaticProperty, Partitions) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    EventLog log = RandomLog(seed, 5, 5, 300, 10);
    const int span = static_cast<int>(
        DayIndex(log.events.front().timestamp, log.events.back().timestamp) +
        1);
    const int train = 1 + static_cast<int>(seed % std::max(1, span - 1));
    const int val = (span - train) / 2;
    auto split = SplitStatic(log, {train, val, span - train - val});
    ASSERT_TRUE(split.ok()) << split.status();
    EXPECT_EQ(split->train.events.size() + split->validation.events.size() +
                  split->test.events.size(),
              log.events.size());
  }
}

TEST(RebalanceCyclesTest, AlreadyBalanced) {
  const Timestamp day = kSecondsPerDay;
  std::vector<std::tuple<int, int, Timestamp>> rows;
  for (int d = 0; d < 4; ++d) {
    rows.emplace_back(0, 0, d * day + 100);
    rows.emplace_back(1, 1, d * day + 200);
  }
  auto schedule = RebalanceCycles(MakeLog(rows), 2);
  ASSERT_TRUE(schedule.ok());
  EXPECT_THAT(schedule->active_users, ElementsAre(2, 2, 2, 2));
}

TEST(RebalanceCyclesTest, HeavyUserInterleavesHandTrace) {
  // User A is active on days 0..2, user B on day 0 only; target 1.
  // Cycle 0: A (3 blocks left beats 1). Cycle 1: A (2 beats 1). Cycle 2: tie on
  // remaining blocks, B's pending day 0 precedes A's day 2. Cycle 3: A.
  const Timestamp day = kSecondsPerDay;
  EventLog log = MakeLog(
      {{0, 0, 10}, {1, 1, 20}, {0, 0, day + 10}, {0, 0, 2 * day + 10}});
  auto schedule = RebalanceCycles(log, 1);
  ASSERT_TRUE(schedule.ok());
  ASSERT_EQ(schedule->cycles.size(), 4u);
  std::vector<int> who;
  for (const Cycle& c : schedule->cycles) {
    for (int u = 0; u < 2; ++u) {
      if (!c.per_user[u].empty()) who.push_back(u);
    }
  }
  EXPECT_THAT(who, ElementsAre(0, 0, 1, 0));
  EXPECT_EQ(schedule->cycles[1].per_user[0][0].timestamp, day + 10);
}

TEST(RebalanceCyclesTest, TargetAboveUsersIsError) {
  EXPECT_FALSE(RebalanceCycles(MakeLog({{0, 0, 0}}), 2).ok());
  EXPECT_FALSE(RebalanceCycles(MakeLog({{0, 0, 0}}), 0).ok());
}

TEST(RebalanceCyclesProperty, PreservesPerUserOrderExactly) {
  for (uint64_t seed = 1; seed <= 20; ++seed) {
    EventLog log = RandomLog(seed, 8, 5, 500, 12);
    auto schedule = RebalanceCycles(log, 1 + static_cast<int>(seed % 8));
    ASSERT_TRUE(schedule.ok());
    std::vector<std::vector<Event>> flattened(log.num_users());
    for (const Cycle& c : schedule->cycles) {
      for (int u = 0; u < log.num_users(); ++u) {
        flattened[u].insert(flattened[u].end(), c.per_user[u].begin(),
                            c.per_user[u].end());
      }
    }
    EXPECT_EQ(flattened, log.PerUser()) << "seed " << seed;
  }
}

TEST(RebalanceCyclesProperty, FlattensActivityHistogram) {
  // Users start on staggered days, so the raw per-day counts ramp up.
  std::vector<std::tuple<int, int, Timestamp>> rows;
  for (int u = 0; u < 20; ++u) {
    for (int d = u / 2; d < 20; ++d) {
      rows.emplace_back(u, d % 3, d * kSecondsPerDay + 60 * u);
    }
  }
  EventLog log = MakeLog(rows);
  auto schedule = RebalanceCycles(log, 10);
  ASSERT_TRUE(schedule.ok());
  const std::vector<int> raw = ActiveUsersPerDay(log);
  EXPECT_LT(CoefficientOfVariation(schedule->active_users),
            CoefficientOfVariation(raw));
}

TEST(ActiveUsersPerDayTest, CountsDistinctUsers) {
  EventLog log = MakeLog({{0, 0, 0}, {0, 1, 10}, {1, 0, 20},
                          {1, 0, kSecondsPerDay + 1}});
  EXPECT_THAT(ActiveUsersPerDay(log), ElementsAre(2, 1));
}

}  // namespace
}  // namespace fedseq
