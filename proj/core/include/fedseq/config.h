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

#ifndef FEDSEQ_CONFIG_H_
#define FEDSEQ_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "fedseq/experiments.h"
#include "fedseq/synthetic.h"

namespace fedseq {

enum class Environment { kStatic, kDynamic };

absl::string_view EnvironmentName(Environment environment);

// Fully resolved experiment description. Produced only by LoadConfig /
// ParseConfig, which fill every default and validate ranges.
struct ExperimentConfig {
  // Empty when the synthetic generator supplies the data.
  std::string dataset_path;
  SyntheticOptions synthetic;
  int64_t dedup_window_seconds = kDefaultDedupWindowSeconds;
  int64_t session_gap_seconds = kDefaultSessionThresholdSeconds;

  Environment environment = Environment::kStatic;
  std::vector<ModelKind> models;
  std::vector<Regime> regimes;
  std::vector<ModelKind> dynamic_baselines;
  // Mechanisms run side by side by the privacy verb, all at privacy.epsilon
  // and privacy.k.
  std::vector<Mechanism> compare_mechanisms;

  TrainingConfig training;
  PretrainConfig pretrain;
  std::vector<GridPoint> grid;

  // Explicit day counts win when train_days > 0; otherwise fractions apply.
  SplitDays split_days;
  double train_fraction = 0.6;
  double validation_fraction = 0.2;

  int target_active_users = 0;
  double min_tail_fraction = 0.5;
  uint64_t seed = 1;
  std::string out_dir;

  // Canonical JSON of every resolved key, for the run log and manifest.
  std::string resolved_json;
};

struct ConfigOverrides {
  std::optional<uint64_t> seed;
  std::optional<std::string> out_dir;
};

// Parses a JSON config. Unknown keys, type mismatches, bad ranges and missing
// datasets fail with the offending key in the message. Scalar keys can be
// overridden through the environment: "privacy.epsilon" reads
// FEDSEQ_PRIVACY_EPSILON. Relative dataset paths resolve against `base_dir`.
absl::StatusOr<ExperimentConfig> ParseConfig(absl::string_view json_text,
                                             const std::string& base_dir,
                                             const ConfigOverrides& overrides);

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path,
                                            const ConfigOverrides& overrides);

// Every scalar key with its default, as canonical JSON.
std::string DefaultConfigJson();

// Reads or generates the configured event log, deduplicated.
absl::StatusOr<EventLog> LoadDataset(const ExperimentConfig& config);

}  // namespace fedseq

#endif  // FEDSEQ_CONFIG_H_
