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

#ifndef FEDSEQ_EVAL_H_
#define FEDSEQ_EVAL_H_

#include <array>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/statusor.h"
#include "fedseq/baselines.h"
#include "fedseq/ingest.h"

namespace fedseq {

inline constexpr std::array<int, 3> kCutoffs = {1, 3, 5};
inline constexpr int kMaxCutoff = 5;

struct PredictionEvent {
  int user = 0;
  int session = 0;
  int step = 0;
  int target = 0;
  std::vector<int> ranked;  // best first, at most n entries
};

// Installed-app candidate set of each user: the apps the user ever launched,
// ascending, indexed by user id.
std::vector<std::vector<int>> InstalledApps(const EventLog& log);

// Iterative revealing: a session of length L yields L-1 events; at step k the
// predictor sees the first k apps and ranks the user's candidates for app
// k+1. Session ids are positions in `sessions`.
absl::StatusOr<std::vector<PredictionEvent>> IterateSessions(
    Predictor& predictor, std::span<const Session> sessions,
    const std::vector<std::vector<int>>& candidates, int n);

enum class Metric { kHitRate, kMrr, kNdcg };

absl::string_view MetricName(Metric metric);

// Per-event credit at cutoff n: HR 1, MRR 1/rank, NDCG 1/log2(rank + 1) when
// the target is within the top n, otherwise 0.
double EventCredit(Metric metric, const PredictionEvent& event, int n);

// Mean over events within a session, then over a user's sessions, then over
// users.
absl::StatusOr<double> ComputeMetric(std::span<const PredictionEvent> events,
                                     Metric metric, int n);

// Plain mean over events; for cross-checking the hierarchical average.
absl::StatusOr<double> ComputePooledMetric(
    std::span<const PredictionEvent> events, Metric metric, int n);

struct MetricSummary {
  // values[metric][cutoff index] for cutoffs 1, 3, 5.
  std::array<std::array<double, 3>, 3> values{};

  double Get(Metric metric, int n) const;
};

// All nine metrics; fails if the identities HR@1 = MRR@1 = NDCG@1 or the
// monotonicity in n are violated.
absl::StatusOr<MetricSummary> Summarize(std::span<const PredictionEvent> events);

absl::Status CheckMetricIdentities(const MetricSummary& summary);

struct MetricRecord {
  std::string environment;  // "static" or "dynamic"
  std::string cycle;        // cycle number or "test"
  std::string model;
  Metric metric = Metric::kHitRate;
  int n = 1;
  double value = 0.0;
};

void AppendRecords(const MetricSummary& summary, absl::string_view environment,
                   absl::string_view cycle, absl::string_view model,
                   std::vector<MetricRecord>& out);

// Header "environment,cycle,model,metric,n,value".
std::string SerializeMetricRecords(std::span<const MetricRecord> records);

}  // namespace fedseq

#endif  // FEDSEQ_EVAL_H_
