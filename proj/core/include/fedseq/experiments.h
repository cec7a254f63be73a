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

#ifndef FEDSEQ_EXPERIMENTS_H_
#define FEDSEQ_EXPERIMENTS_H_

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedseq/baselines.h"
#include "fedseq/eval.h"
#include "fedseq/federation.h"
#include "fedseq/ingest.h"

namespace fedseq {

// One point of the factor-model hyperparameter search.
struct GridPoint {
  Hyperparams hyper;
  double learning_rate = 0.05;
};

struct StaticOptions {
  SplitDays split;
  std::vector<ModelKind> models = AllModels();
  TrainingConfig training;
  PretrainConfig pretrain;
  // Searched for SeqMF and MF on validation HR@5. Empty means the settings in
  // `training` / `pretrain` as given.
  std::vector<GridPoint> grid;
  uint64_t seed = 1;
};

struct StaticModelResult {
  std::string model;
  MetricSummary test;
  std::optional<GridPoint> selected;
  std::optional<double> validation_hr5;
};

struct StaticResult {
  std::vector<StaticModelResult> models;
  std::vector<MetricRecord> records;
  // Training rounds of the selected factor models, phase-tagged by model.
  std::vector<RoundLogRow> round_log;
};

// Fits every model on the train days, tunes factor models on validation HR@5
// and reports HR/MRR/NDCG@{1,3,5} on the test days.
absl::StatusOr<StaticResult> RunStatic(const EventLog& log,
                                       const StaticOptions& options);

// Same, on a precomputed split. Candidate sets come from `full`.
absl::StatusOr<StaticResult> RunStaticOnSplit(const StaticSplit& split,
                                              const EventLog& full,
                                              const StaticOptions& options);

// Tables-style layout: one row per model, columns HR@1..NDCG@5.
std::string SerializeStaticTable(const StaticResult& result);

// Split days covering the whole log with the given leading fractions.
SplitDays ProportionalSplitDays(const EventLog& log, double train_fraction,
                                double validation_fraction);

struct SeqMfVariant {
  std::string model = "SeqMF";
  Regime regime = Regime::kFull;
  MechanismConfig privacy;
};

struct DynamicOptions {
  // 0 picks half the users.
  int target_active_users = 0;
  // Trailing cycles with fewer than this fraction of the target active users
  // are dropped: they hold the schedule's leftovers and give noisy metrics.
  double min_tail_fraction = 0.5;
  std::vector<Regime> regimes = {Regime::kFull, Regime::kRare,
                                 Regime::kGlobal};
  std::vector<ModelKind> baselines = {ModelKind::kSrOd};
  // Base settings; each variant overrides regime and privacy.
  TrainingConfig training;
  PretrainConfig pretrain;
  uint64_t seed = 1;
};

struct DynamicSeries {
  std::string model;
  std::string regime;
  std::vector<int> cycles;
  std::vector<double> hr5;
  // Against the reference variant; zero for baselines.
  std::vector<double> delta;
  std::vector<double> cumulative_delta;
};

struct DynamicResult {
  std::vector<MetricRecord> records;
  std::vector<DynamicSeries> seqmf;
  std::vector<DynamicSeries> baselines;
  std::vector<int> active_users;
  std::vector<RoundLogRow> round_log;
  // Pre-training messages, then each SeqMF variant's in order.
  std::string message_log;
  // Item embeddings after pre-training on the first cycle.
  ItemEmbeddings pretrained_q;

  const DynamicSeries* Find(absl::string_view model,
                            absl::string_view regime) const;
};

// Rebalanced cycles for the stream, sparse tail removed.
absl::StatusOr<std::vector<Cycle>> StreamCycles(const EventLog& log,
                                               const DynamicOptions& options);

// Rebalances the log into cycles, pre-trains Q on cycle 1 and then, for every
// later cycle, evaluates each model on that cycle's sessions before feeding it
// the cycle's launches. delta HR@5 is measured against the Full regime.
absl::StatusOr<DynamicResult> RunDynamic(const EventLog& log,
                                         const DynamicOptions& options);

absl::StatusOr<DynamicResult> RunDynamicOnCycles(const EventLog& log,
                                                 std::span<const Cycle> cycles,
                                                 const DynamicOptions& options);

// General form: SeqMF variants evaluated side by side, deltas taken against
// variants[reference].
absl::StatusOr<DynamicResult> RunDynamicVariants(
    const EventLog& log, std::span<const Cycle> cycles,
    std::span<const SeqMfVariant> variants, size_t reference,
    const DynamicOptions& options);

// Full-regime dynamic run once per mechanism, with deltas against the
// non-private run (added when missing from `mechanisms`).
absl::StatusOr<DynamicResult> ComparePrivacy(
    const EventLog& log, std::span<const MechanismConfig> mechanisms,
    const DynamicOptions& options);

// Header "cycle,model,regime,hr5,delta_hr5_cum"; SeqMF variants only.
std::string SerializePlotData(const DynamicResult& result);

}  // namespace fedseq

#endif  // FEDSEQ_EXPERIMENTS_H_
