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

#include "fedseq/synthetic.h"

#include <algorithm>
#include <numeric>
#include <vector>

#include "gtest/gtest.h"

namespace fedseq {
namespace {

TEST(GenerateSyntheticTest, DeterministicPerSeed) {
  SyntheticOptions options;
  options.num_users = 5;
  options.steps_per_user = 50;
  const auto a = GenerateSynthetic(options);
  const auto b = GenerateSynthetic(options);
  EXPECT_EQ(SerializeEvents(a.log), SerializeEvents(b.log));
  options.seed = 2;
  EXPECT_NE(SerializeEvents(GenerateSynthetic(options).log),
            SerializeEvents(a.log));
}

TEST(GenerateSyntheticTest, ShapeAndOrdering) {
  const SyntheticDataset data = GenerateSynthetic(SyntheticOptions{});
  EXPECT_EQ(data.log.events.size(), 50u * 500u);
  EXPECT_EQ(data.log.num_users(), 50);
  EXPECT_EQ(data.log.num_apps(), 40);
  EXPECT_TRUE(std::is_sorted(
      data.log.events.begin(), data.log.events.end(),
      [](const Event& x, const Event& y) { return x.timestamp < y.timestamp; }));
  ASSERT_EQ(data.generators.size(), 50u);
  for (size_t u = 0; u < data.generators.size(); ++u) {
    const UserGenerator& g = data.generators[u];
    EXPECT_TRUE(std::is_sorted(g.installed.begin(), g.installed.end()));
    EXPECT_GE(g.installed.size(), 5u);
    EXPECT_LE(g.installed.size(), 20u);
    EXPECT_NEAR(g.popularity.sum(), 1.0, 1e-12);
    for (Eigen::Index r = 0; r < g.transition.rows(); ++r) {
      EXPECT_NEAR(g.transition.row(r).sum(), 1.0, 1e-12);
    }
  }
  for (const Event& e : data.log.events) {
    const auto& installed = data.generators[e.user_id].installed;
    ASSERT_TRUE(
        std::binary_search(installed.begin(), installed.end(), e.app_id));
  }
}

TEST(GenerateSyntheticTest, MemorylessRowsEqualPopularity) {
  SyntheticOptions options;
  options.num_users = 3;
  options.memoryless = true;
  for (const UserGenerator& g : GenerateSynthetic(options).generators) {
    for (Eigen::Index r = 0; r < g.transition.rows(); ++r) {
      EXPECT_EQ(g.transition.row(r), g.popularity.transpose());
    }
  }
}

// In-session transition frequencies converge to the generator's matrix.
TEST(GenerateSyntheticTest, EmpiricalTransitionsConverge) {
  SyntheticOptions options;
  options.num_users = 1;
  options.num_apps = 12;
  options.steps_per_user = 50000;
  options.seed = 3;
  const SyntheticDataset data = GenerateSynthetic(options);
  const UserGenerator& g = data.generators[0];
  const int size = static_cast<int>(g.installed.size());
  auto position = [&](int app) {
    return static_cast<int>(
        std::lower_bound(g.installed.begin(), g.installed.end(), app) -
        g.installed.begin());
  };
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(size, size);
  const auto& ev = data.log.events;
  for (size_t i = 1; i < ev.size(); ++i) {
    // Breaks between sessions are at least an hour; in-session gaps are not.
    if (ev[i].timestamp - ev[i - 1].timestamp > 120) continue;
    counts(position(ev[i - 1].app_id), position(ev[i].app_id)) += 1.0;
  }
  double weighted_tv = 0.0;
  const double total = counts.sum();
  for (int r = 0; r < size; ++r) {
    const double visits = counts.row(r).sum();
    if (visits == 0.0) continue;
    const double tv =
        0.5 * (counts.row(r) / visits - g.transition.row(r)).cwiseAbs().sum();
    weighted_tv += visits / total * tv;
  }
  EXPECT_LT(weighted_tv, 0.05);
}

TEST(GenerateSyntheticTest, FocusDriftChangesLaunchMix) {
  SyntheticOptions options;
  options.num_users = 1;
  options.steps_per_user = 4000;
  options.focus_strength = 4.0;
  options.focus_period_days = 2;
  const SyntheticDataset data = GenerateSynthetic(options);
  const UserGenerator& g = data.generators[0];
  // Stationary streams keep roughly the same top app in every period; a
  // focus of e^4 reshuffles it across periods.
  std::vector<std::vector<int>> per_period;
  const Timestamp origin = data.log.events.front().timestamp;
  for (const Event& e : data.log.events) {
    const size_t period = DayIndex(origin, e.timestamp) / 2;
    if (per_period.size() <= period) {
      per_period.resize(period + 1, std::vector<int>(g.installed.size(), 0));
    }
    ++per_period[period][std::lower_bound(g.installed.begin(),
                                          g.installed.end(), e.app_id) -
                         g.installed.begin()];
  }
  std::vector<int> top;
  for (const auto& c : per_period) {
    if (std::accumulate(c.begin(), c.end(), 0) < 100) continue;
    top.push_back(std::max_element(c.begin(), c.end()) - c.begin());
  }
  ASSERT_GE(top.size(), 3u);
  std::sort(top.begin(), top.end());
  EXPECT_GT(std::unique(top.begin(), top.end()) - top.begin(), 1);
}

}  // namespace
}  // namespace fedseq
