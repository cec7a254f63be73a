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

#include "fedseq/baselines.h"

#include <algorithm>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/match.h"
#include "absl/strings/str_cat.h"

namespace fedseq {
namespace {

absl::Status CheckUser(int user, size_t num_users) {
  if (user < 0 || static_cast<size_t>(user) >= num_users) {
    return absl::OutOfRangeError(absl::StrCat("unknown user ", user));
  }
  return absl::OkStatus();
}

}  // namespace

void PairCounts::Add(int from, int to, double count) {
  counts_[{from, to}] += count;
}

double PairCounts::Count(int from, int to) const {
  auto it = counts_.find(std::make_pair(from, to));
  return it == counts_.end() ? 0.0 : it->second;
}

PairCounts& PairCounts::operator+=(const PairCounts& other) {
  for (const auto& [key, value] : other.counts_) counts_[key] += value;
  return *this;
}

std::vector<double> SrScore(const PairCounts& counts,
                            std::optional<int> last_app,
                            std::span<const int> candidates) {
  std::vector<double> scores(candidates.size(), 0.0);
  if (!last_app.has_value()) return scores;
  for (size_t i = 0; i < candidates.size(); ++i) {
    scores[i] = counts.Count(*last_app, candidates[i]);
  }
  return scores;
}

std::vector<double> MruScore(std::span<const int> session,
                             std::span<const int> candidates) {
  absl::flat_hash_map<int, double> recency;
  int distinct = 0;
  for (auto it = session.rbegin(); it != session.rend(); ++it) {
    auto [entry, inserted] = recency.try_emplace(*it, 0.0);
    if (inserted) entry->second = 1.0 / ++distinct;
  }
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (int app : candidates) {
    auto it = recency.find(app);
    scores.push_back(it == recency.end() ? 0.0 : it->second);
  }
  return scores;
}

std::vector<double> MfuScore(const absl::flat_hash_map<int, double>& counts,
                             std::span<const int> candidates) {
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (int app : candidates) {
    auto it = counts.find(app);
    scores.push_back(it == counts.end() ? 0.0 : it->second);
  }
  return scores;
}

std::vector<double> RandomScore(std::span<const int> candidates, Rng& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (size_t i = 0; i < candidates.size(); ++i) scores.push_back(unit(rng));
  return scores;
}

SequentialRulesPredictor::SequentialRulesPredictor(int num_users,
                                                   bool collaborative)
    : collaborative_(collaborative),
      per_user_(collaborative ? 0 : num_users),
      last_app_(num_users, -1) {}

absl::Status SequentialRulesPredictor::Observe(
    const std::vector<std::vector<int>>& new_apps) {
  if (new_apps.size() != last_app_.size()) {
    return absl::InvalidArgumentError("one app list per user expected");
  }
  for (size_t u = 0; u < new_apps.size(); ++u) {
    PairCounts& target = collaborative_ ? pooled_ : per_user_[u];
    for (int app : new_apps[u]) {
      if (last_app_[u] >= 0) target.Add(last_app_[u], app);
      last_app_[u] = app;
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> SequentialRulesPredictor::Score(
    int user, std::span<const int> session, std::span<const int> candidates) {
  if (auto s = CheckUser(user, last_app_.size()); !s.ok()) return s;
  std::optional<int> last;
  if (!session.empty()) last = session.back();
  return SrScore(counts(user), last, candidates);
}

absl::StatusOr<std::vector<double>> MruPredictor::Score(
    int, std::span<const int> session, std::span<const int> candidates) {
  return MruScore(session, candidates);
}

absl::Status MfuPredictor::Observe(
    const std::vector<std::vector<int>>& new_apps) {
  if (new_apps.size() != counts_.size()) {
    return absl::InvalidArgumentError("one app list per user expected");
  }
  for (size_t u = 0; u < new_apps.size(); ++u) {
    for (int app : new_apps[u]) counts_[u][app] += 1.0;
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> MfuPredictor::Score(
    int user, std::span<const int>, std::span<const int> candidates) {
  if (auto s = CheckUser(user, counts_.size()); !s.ok()) return s;
  return MfuScore(counts_[user], candidates);
}

absl::StatusOr<std::vector<double>> RandomPredictor::Score(
    int, std::span<const int>, std::span<const int> candidates) {
  return RandomScore(candidates, rng_);
}

absl::Status SeqMfPredictor::Observe(
    const std::vector<std::vector<int>>& new_apps) {
  return simulator_.RunCycle(next_cycle_++, new_apps);
}

absl::StatusOr<std::vector<double>> SeqMfPredictor::Score(
    int user, std::span<const int> session, std::span<const int> candidates) {
  return simulator_.Score(user, session, candidates);
}

absl::string_view ModelName(ModelKind kind) {
  switch (kind) {
    case ModelKind::kSeqMf:
      return "SeqMF";
    case ModelKind::kMf:
      return "MF";
    case ModelKind::kSr:
      return "SR";
    case ModelKind::kSrOd:
      return "SR-od";
    case ModelKind::kMru:
      return "MRU";
    case ModelKind::kMfu:
      return "MFU";
    case ModelKind::kRandom:
      return "Random";
  }
  return "unknown";
}

absl::StatusOr<ModelKind> ParseModel(absl::string_view name) {
  for (ModelKind kind : AllModels()) {
    if (absl::EqualsIgnoreCase(name, ModelName(kind))) return kind;
  }
  if (absl::EqualsIgnoreCase(name, "SR-od") || absl::EqualsIgnoreCase(name, "SRod") ||
      absl::EqualsIgnoreCase(name, "sr_od")) {
    return ModelKind::kSrOd;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown model '", name, "'"));
}

std::vector<ModelKind> AllModels() {
  return {ModelKind::kSeqMf, ModelKind::kMf,  ModelKind::kSr,
          ModelKind::kSrOd,  ModelKind::kMru, ModelKind::kMfu,
          ModelKind::kRandom};
}

absl::StatusOr<std::unique_ptr<Predictor>> MakeBaseline(ModelKind kind,
                                                        int num_users,
                                                        uint64_t seed) {
  switch (kind) {
    case ModelKind::kSr:
      return std::make_unique<SequentialRulesPredictor>(num_users, true);
    case ModelKind::kSrOd:
      return std::make_unique<SequentialRulesPredictor>(num_users, false);
    case ModelKind::kMru:
      return std::make_unique<MruPredictor>();
    case ModelKind::kMfu:
      return std::make_unique<MfuPredictor>(num_users);
    case ModelKind::kRandom:
      return std::make_unique<RandomPredictor>(seed);
    case ModelKind::kSeqMf:
    case ModelKind::kMf:
      break;
  }
  return absl::InvalidArgumentError(absl::StrCat(
      ModelName(kind), " is a factor model; build it from a simulator"));
}

}  // namespace fedseq
