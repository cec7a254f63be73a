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

#include "fedseq/eval.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "fedseq/seqmf.h"
#include "fedseq/status_macros.h"

namespace fedseq {
namespace {

int CutoffIndex(int n) {
  for (size_t i = 0; i < kCutoffs.size(); ++i) {
    if (kCutoffs[i] == n) return static_cast<int>(i);
  }
  return -1;
}

constexpr std::array<Metric, 3> kMetrics = {Metric::kHitRate, Metric::kMrr,
                                            Metric::kNdcg};

}  // namespace

std::vector<std::vector<int>> InstalledApps(const EventLog& log) {
  std::vector<std::set<int>> sets(log.num_users());
  for (const Event& e : log.events) sets[e.user_id].insert(e.app_id);
  std::vector<std::vector<int>> out;
  out.reserve(sets.size());
  for (const auto& s : sets) out.emplace_back(s.begin(), s.end());
  return out;
}

absl::StatusOr<std::vector<PredictionEvent>> IterateSessions(
    Predictor& predictor, std::span<const Session> sessions,
    const std::vector<std::vector<int>>& candidates, int n) {
  std::vector<PredictionEvent> events;
  for (size_t s = 0; s < sessions.size(); ++s) {
    const Session& session = sessions[s];
    if (session.user_id < 0 ||
        static_cast<size_t>(session.user_id) >= candidates.size()) {
      return absl::OutOfRangeError(
          absl::StrCat("session of unknown user ", session.user_id));
    }
    const std::vector<int>& user_candidates = candidates[session.user_id];
    const std::span<const int> apps(session.apps);
    for (size_t k = 1; k < apps.size(); ++k) {
      if (!std::binary_search(user_candidates.begin(), user_candidates.end(),
                              apps[k])) {
        return absl::FailedPreconditionError(absl::StrCat(
            "target app ", apps[k], " is not installed for user ",
            session.user_id));
      }
      FEDSEQ_ASSIGN_OR_RETURN(
          std::vector<double> scores,
          predictor.Score(session.user_id, apps.first(k), user_candidates));
      if (scores.size() != user_candidates.size()) {
        return absl::InternalError(absl::StrCat(
            predictor.name(), " returned ", scores.size(), " scores for ",
            user_candidates.size(), " candidates"));
      }
      PredictionEvent event;
      event.user = session.user_id;
      event.session = static_cast<int>(s);
      event.step = static_cast<int>(k);
      event.target = apps[k];
      event.ranked = TopRec(scores, user_candidates, n);
      events.push_back(std::move(event));
    }
  }
  return events;
}

absl::string_view MetricName(Metric metric) {
  switch (metric) {
    case Metric::kHitRate:
      return "HR";
    case Metric::kMrr:
      return "MRR";
    case Metric::kNdcg:
      return "NDCG";
  }
  return "unknown";
}

double EventCredit(Metric metric, const PredictionEvent& event, int n) {
  const size_t limit = std::min(event.ranked.size(), static_cast<size_t>(n));
  for (size_t i = 0; i < limit; ++i) {
    if (event.ranked[i] != event.target) continue;
    const double rank = static_cast<double>(i + 1);
    switch (metric) {
      case Metric::kHitRate:
        return 1.0;
      case Metric::kMrr:
        return 1.0 / rank;
      case Metric::kNdcg:
        return 1.0 / std::log2(rank + 1.0);
    }
  }
  return 0.0;
}

absl::StatusOr<double> ComputeMetric(std::span<const PredictionEvent> events,
                                     Metric metric, int n) {
  if (events.empty()) {
    return absl::FailedPreconditionError("metric undefined: no events");
  }
  struct Mean {
    double sum = 0.0;
    int count = 0;
    double value() const { return sum / count; }
  };
  std::map<int, std::map<int, Mean>> by_user;
  for (const PredictionEvent& e : events) {
    Mean& m = by_user[e.user][e.session];
    m.sum += EventCredit(metric, e, n);
    ++m.count;
  }
  Mean over_users;
  for (const auto& [user, sessions] : by_user) {
    Mean over_sessions;
    for (const auto& [session, mean] : sessions) {
      over_sessions.sum += mean.value();
      ++over_sessions.count;
    }
    over_users.sum += over_sessions.value();
    ++over_users.count;
  }
  return over_users.value();
}

absl::StatusOr<double> ComputePooledMetric(
    std::span<const PredictionEvent> events, Metric metric, int n) {
  if (events.empty()) {
    return absl::FailedPreconditionError("metric undefined: no events");
  }
  double sum = 0.0;
  for (const PredictionEvent& e : events) sum += EventCredit(metric, e, n);
  return sum / static_cast<double>(events.size());
}

double MetricSummary::Get(Metric metric, int n) const {
  const int idx = CutoffIndex(n);
  return idx < 0 ? std::nan("") : values[static_cast<int>(metric)][idx];
}

absl::StatusOr<MetricSummary> Summarize(
    std::span<const PredictionEvent> events) {
  MetricSummary summary;
  for (Metric metric : kMetrics) {
    for (size_t i = 0; i < kCutoffs.size(); ++i) {
      FEDSEQ_ASSIGN_OR_RETURN(summary.values[static_cast<int>(metric)][i],
                              ComputeMetric(events, metric, kCutoffs[i]));
    }
  }
  FEDSEQ_RETURN_IF_ERROR(CheckMetricIdentities(summary));
  return summary;
}

absl::Status CheckMetricIdentities(const MetricSummary& summary) {
  constexpr double kTol = 1e-12;
  const double hr1 = summary.Get(Metric::kHitRate, 1);
  if (std::abs(hr1 - summary.Get(Metric::kMrr, 1)) > kTol ||
      std::abs(hr1 - summary.Get(Metric::kNdcg, 1)) > kTol) {
    return absl::InternalError("metric identity violated: HR@1, MRR@1, NDCG@1 differ");
  }
  for (Metric metric : kMetrics) {
    double previous = -kTol;
    for (int n : kCutoffs) {
      const double v = summary.Get(metric, n);
      if (!(v >= -kTol && v <= 1.0 + kTol)) {
        return absl::InternalError(absl::StrCat(MetricName(metric), "@", n,
                                                " outside [0, 1]: ", v));
      }
      if (v < previous - kTol) {
        return absl::InternalError(absl::StrCat(
            MetricName(metric), " decreases with n at n = ", n));
      }
      previous = v;
    }
  }
  return absl::OkStatus();
}

void AppendRecords(const MetricSummary& summary, absl::string_view environment,
                   absl::string_view cycle, absl::string_view model,
                   std::vector<MetricRecord>& out) {
  for (Metric metric : kMetrics) {
    for (int n : kCutoffs) {
      out.push_back({std::string(environment), std::string(cycle),
                     std::string(model), metric, n, summary.Get(metric, n)});
    }
  }
}

std::string SerializeMetricRecords(std::span<const MetricRecord> records) {
  std::string out = "environment,cycle,model,metric,n,value\n";
  char buf[32];
  for (const MetricRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%.6f", r.value);
    absl::StrAppend(&out, r.environment, ",", r.cycle, ",", r.model, ",",
                    MetricName(r.metric), ",", r.n, ",", buf, "\n");
  }
  return out;
}

}  // namespace fedseq
