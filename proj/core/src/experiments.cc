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

#include "fedseq/experiments.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "fedseq/status_macros.h"

namespace fedseq {
namespace {

absl::Status WithContext(const absl::Status& status, absl::string_view context) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      absl::StrCat(context, ": ", status.message()));
}

bool IsFactorModel(ModelKind kind) {
  return kind == ModelKind::kSeqMf || kind == ModelKind::kMf;
}

absl::StatusOr<std::unique_ptr<SeqMfPredictor>> FitFactorModel(
    ModelKind kind, const StaticOptions& options, const GridPoint* point,
    int num_users, int num_apps,
    const std::vector<std::vector<int>>& train_apps) {
  TrainingConfig training = options.training;
  PretrainConfig pretrain = options.pretrain;
  training.sequence_aware = kind == ModelKind::kSeqMf;
  if (point != nullptr) {
    training.hyper = point->hyper;
    training.optimizer.learning_rate = point->learning_rate;
    pretrain.optimizer.learning_rate = point->learning_rate;
  }
  FEDSEQ_ASSIGN_OR_RETURN(
      FederatedSimulator sim,
      FederatedSimulator::Create(num_users, num_apps, training));
  FEDSEQ_RETURN_IF_ERROR(sim.Observe(train_apps));
  FEDSEQ_RETURN_IF_ERROR(sim.Pretrain(pretrain));
  return std::make_unique<SeqMfPredictor>(std::string(ModelName(kind)),
                                          std::move(sim));
}

std::vector<Event> Flatten(const Cycle& cycle) {
  std::vector<Event> events;
  for (const auto& user_events : cycle.per_user) {
    events.insert(events.end(), user_events.begin(), user_events.end());
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) {
                     return a.timestamp < b.timestamp;
                   });
  return events;
}

std::string FormatDouble(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

void FillDeltas(DynamicSeries& series, const DynamicSeries& reference) {
  double cumulative = 0.0;
  series.delta.clear();
  series.cumulative_delta.clear();
  for (size_t i = 0; i < series.hr5.size(); ++i) {
    double d = series.hr5[i] - reference.hr5[i];
    if (std::isnan(d)) d = 0.0;
    cumulative += d;
    series.delta.push_back(d);
    series.cumulative_delta.push_back(cumulative);
  }
}

}  // namespace

absl::StatusOr<StaticResult> RunStatic(const EventLog& log,
                                       const StaticOptions& options) {
  FEDSEQ_ASSIGN_OR_RETURN(StaticSplit split, SplitStatic(log, options.split));
  return RunStaticOnSplit(split, log, options);
}

absl::StatusOr<StaticResult> RunStaticOnSplit(const StaticSplit& split,
                                              const EventLog& full,
                                              const StaticOptions& options) {
  if (split.test.empty()) {
    return absl::FailedPreconditionError("static: empty test split");
  }
  const int num_users = full.num_users();
  const int num_apps = full.num_apps();
  const auto candidates = InstalledApps(full);
  const auto train_apps = LogApps(split.train);
  const std::vector<Session> test_sessions = Sessionize(split.test);
  const std::vector<Session> val_sessions = Sessionize(split.validation);

  StaticResult result;
  for (ModelKind kind : options.models) {
    const std::string name(ModelName(kind));
    StaticModelResult model;
    model.model = name;
    std::unique_ptr<Predictor> predictor;
    if (!IsFactorModel(kind)) {
      FEDSEQ_ASSIGN_OR_RETURN(predictor,
                              MakeBaseline(kind, num_users, options.seed));
      FEDSEQ_RETURN_IF_ERROR(predictor->Observe(train_apps));
    } else if (options.grid.size() <= 1) {
      const GridPoint* point = options.grid.empty() ? nullptr : &options.grid[0];
      auto fitted = FitFactorModel(kind, options, point, num_users, num_apps,
                                   train_apps);
      FEDSEQ_RETURN_IF_ERROR(WithContext(fitted.status(), name));
      if (point != nullptr) model.selected = *point;
      predictor = std::move(fitted).value();
    } else {
      double best = -1.0;
      for (const GridPoint& point : options.grid) {
        auto fitted = FitFactorModel(kind, options, &point, num_users,
                                     num_apps, train_apps);
        FEDSEQ_RETURN_IF_ERROR(WithContext(fitted.status(), name));
        FEDSEQ_ASSIGN_OR_RETURN(
            std::vector<PredictionEvent> val_events,
            IterateSessions(**fitted, val_sessions, candidates, kMaxCutoff));
        if (val_events.empty()) {
          return absl::FailedPreconditionError(
              "static: validation split has no prediction events to tune on");
        }
        FEDSEQ_ASSIGN_OR_RETURN(
            double hr5, ComputeMetric(val_events, Metric::kHitRate, 5));
        if (hr5 > best) {
          best = hr5;
          model.selected = point;
          model.validation_hr5 = hr5;
          predictor = std::move(fitted).value();
        }
      }
    }
    if (IsFactorModel(kind)) {
      for (RoundLogRow row :
           static_cast<SeqMfPredictor&>(*predictor).simulator().round_log()) {
        row.phase = absl::StrCat(name, ":", row.phase);
        result.round_log.push_back(std::move(row));
      }
    }
    FEDSEQ_ASSIGN_OR_RETURN(
        std::vector<PredictionEvent> events,
        IterateSessions(*predictor, test_sessions, candidates, kMaxCutoff));
    auto summary = Summarize(events);
    FEDSEQ_RETURN_IF_ERROR(WithContext(summary.status(), name));
    model.test = *summary;
    AppendRecords(model.test, "static", "test", name, result.records);
    result.models.push_back(std::move(model));
  }
  return result;
}

std::string SerializeStaticTable(const StaticResult& result) {
  std::string out = "model";
  for (Metric metric : {Metric::kHitRate, Metric::kMrr, Metric::kNdcg}) {
    for (int n : kCutoffs) absl::StrAppend(&out, ",", MetricName(metric), "@", n);
  }
  out += "\n";
  for (const StaticModelResult& m : result.models) {
    out += m.model;
    for (Metric metric : {Metric::kHitRate, Metric::kMrr, Metric::kNdcg}) {
      for (int n : kCutoffs) {
        absl::StrAppend(&out, ",", FormatDouble(m.test.Get(metric, n)));
      }
    }
    out += "\n";
  }
  return out;
}

SplitDays ProportionalSplitDays(const EventLog& log, double train_fraction,
                                double validation_fraction) {
  if (log.empty()) return {};
  const int total = static_cast<int>(
      DayIndex(log.events.front().timestamp, log.events.back().timestamp) + 1);
  SplitDays days;
  days.train = std::max(1, static_cast<int>(std::floor(total * train_fraction)));
  days.validation = std::max(
      0, std::min(total - days.train,
                  static_cast<int>(std::floor(total * validation_fraction))));
  days.test = std::max(0, total - days.train - days.validation);
  return days;
}

const DynamicSeries* DynamicResult::Find(absl::string_view model,
                                         absl::string_view regime) const {
  for (const auto* list : {&seqmf, &baselines}) {
    for (const DynamicSeries& s : *list) {
      if (s.model == model && s.regime == regime) return &s;
    }
  }
  return nullptr;
}

absl::StatusOr<DynamicResult> RunDynamicVariants(
    const EventLog& log, std::span<const Cycle> cycles,
    std::span<const SeqMfVariant> variants, size_t reference,
    const DynamicOptions& options) {
  if (cycles.size() < 2) {
    return absl::FailedPreconditionError(absl::StrCat(
        "dynamic: need at least 2 cycles, got ", cycles.size()));
  }
  if (reference >= variants.size()) {
    return absl::InvalidArgumentError("dynamic: bad reference variant");
  }
  const int num_users = log.num_users();
  const int num_apps = log.num_apps();
  const auto candidates = InstalledApps(log);
  const auto first_cycle = CycleApps(cycles[0]);

  DynamicResult result;
  TrainingConfig base_config = options.training;
  base_config.sequence_aware = true;
  FEDSEQ_ASSIGN_OR_RETURN(
      FederatedSimulator base,
      FederatedSimulator::Create(num_users, num_apps, base_config));
  FEDSEQ_RETURN_IF_ERROR(base.Observe(first_cycle));
  FEDSEQ_RETURN_IF_ERROR(
      WithContext(base.Pretrain(options.pretrain), "dynamic pretraining"));
  result.pretrained_q = base.server().q;
  result.round_log = base.round_log();
  result.message_log = base.message_log();

  std::vector<std::unique_ptr<Predictor>> predictors;
  std::vector<DynamicSeries> series;
  for (const SeqMfVariant& v : variants) {
    FEDSEQ_ASSIGN_OR_RETURN(FederatedSimulator sim,
                            base.Fork(v.regime, v.privacy));
    predictors.push_back(std::make_unique<SeqMfPredictor>(
        absl::StrCat(v.model, "/", RegimeName(v.regime)), std::move(sim),
        /*next_cycle=*/2));
    series.push_back({v.model, std::string(RegimeName(v.regime)), {}, {}, {}, {}});
  }
  for (ModelKind kind : options.baselines) {
    FEDSEQ_ASSIGN_OR_RETURN(std::unique_ptr<Predictor> p,
                            MakeBaseline(kind, num_users, options.seed));
    FEDSEQ_RETURN_IF_ERROR(p->Observe(first_cycle));
    series.push_back({p->name(), "NA", {}, {}, {}, {}});
    predictors.push_back(std::move(p));
  }

  for (size_t c = 1; c < cycles.size(); ++c) {
    const int cycle_number = static_cast<int>(c) + 1;
    const std::vector<Session> sessions =
        Sessionize(log.WithEvents(Flatten(cycles[c])));
    for (size_t m = 0; m < predictors.size(); ++m) {
      FEDSEQ_ASSIGN_OR_RETURN(
          std::vector<PredictionEvent> events,
          IterateSessions(*predictors[m], sessions, candidates, kMaxCutoff));
      double hr5 = std::numeric_limits<double>::quiet_NaN();
      if (!events.empty()) {
        auto summary = Summarize(events);
        FEDSEQ_RETURN_IF_ERROR(WithContext(
            summary.status(), absl::StrCat("cycle ", cycle_number)));
        AppendRecords(*summary, "dynamic", absl::StrCat(cycle_number),
                      predictors[m]->name(), result.records);
        hr5 = summary->Get(Metric::kHitRate, 5);
      }
      series[m].cycles.push_back(cycle_number);
      series[m].hr5.push_back(hr5);
    }
    const auto apps = CycleApps(cycles[c]);
    for (auto& p : predictors) {
      FEDSEQ_RETURN_IF_ERROR(WithContext(
          p->Observe(apps),
          absl::StrCat(p->name(), " update after cycle ", cycle_number)));
    }
  }

  const DynamicSeries reference_series = series[reference];
  for (size_t m = 0; m < series.size(); ++m) {
    if (m < variants.size()) {
      FillDeltas(series[m], reference_series);
      const FederatedSimulator& sim =
          static_cast<SeqMfPredictor&>(*predictors[m]).simulator();
      for (RoundLogRow row : sim.round_log()) {
        row.phase = absl::StrCat("stream:", predictors[m]->name());
        result.round_log.push_back(std::move(row));
      }
      absl::StrAppend(&result.message_log, sim.message_log());
      result.seqmf.push_back(std::move(series[m]));
    } else {
      FillDeltas(series[m], series[m]);
      result.baselines.push_back(std::move(series[m]));
    }
  }
  for (const Cycle& cycle : cycles) result.active_users.push_back(cycle.ActiveUsers());
  return result;
}

absl::StatusOr<DynamicResult> RunDynamicOnCycles(const EventLog& log,
                                                 std::span<const Cycle> cycles,
                                                 const DynamicOptions& options) {
  std::vector<SeqMfVariant> variants;
  size_t reference = 0;
  bool has_full = false;
  for (Regime r : options.regimes) has_full |= r == Regime::kFull;
  if (!has_full) variants.push_back({"SeqMF", Regime::kFull, options.training.privacy});
  for (Regime r : options.regimes) {
    if (r == Regime::kFull) reference = variants.size();
    variants.push_back({"SeqMF", r, options.training.privacy});
  }
  return RunDynamicVariants(log, cycles, variants, reference, options);
}

absl::StatusOr<std::vector<Cycle>> StreamCycles(const EventLog& log,
                                               const DynamicOptions& options) {
  const int target = options.target_active_users > 0
                         ? options.target_active_users
                         : std::max(1, log.num_users() / 2);
  FEDSEQ_ASSIGN_OR_RETURN(CycleSchedule schedule, RebalanceCycles(log, target));
  std::vector<Cycle> cycles = std::move(schedule.cycles);
  while (cycles.size() > 2 &&
         cycles.back().ActiveUsers() < options.min_tail_fraction * target) {
    cycles.pop_back();
  }
  return cycles;
}

absl::StatusOr<DynamicResult> RunDynamic(const EventLog& log,
                                         const DynamicOptions& options) {
  FEDSEQ_ASSIGN_OR_RETURN(std::vector<Cycle> cycles, StreamCycles(log, options));
  return RunDynamicOnCycles(log, cycles, options);
}

absl::StatusOr<DynamicResult> ComparePrivacy(
    const EventLog& log, std::span<const MechanismConfig> mechanisms,
    const DynamicOptions& options) {
  FEDSEQ_ASSIGN_OR_RETURN(std::vector<Cycle> cycles, StreamCycles(log, options));
  std::vector<SeqMfVariant> variants;
  size_t reference = 0;
  bool has_none = false;
  for (const MechanismConfig& m : mechanisms) {
    has_none |= m.mechanism == Mechanism::kNone;
  }
  if (!has_none) {
    variants.push_back({"SeqMF+none", Regime::kFull, MechanismConfig{}});
  }
  for (const MechanismConfig& m : mechanisms) {
    if (m.mechanism == Mechanism::kNone) reference = variants.size();
    variants.push_back(
        {absl::StrCat("SeqMF+", MechanismName(m.mechanism)), Regime::kFull, m});
  }
  return RunDynamicVariants(log, cycles, variants, reference, options);
}

std::string SerializePlotData(const DynamicResult& result) {
  std::string out = "cycle,model,regime,hr5,delta_hr5_cum\n";
  for (const DynamicSeries& s : result.seqmf) {
    for (size_t i = 0; i < s.cycles.size(); ++i) {
      absl::StrAppend(&out, s.cycles[i], ",", s.model, ",", s.regime, ",",
                      FormatDouble(s.hr5[i]), ",",
                      FormatDouble(s.cumulative_delta[i]), "\n");
    }
  }
  return out;
}

}  // namespace fedseq
