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

#ifndef FEDSEQ_RUNNER_H_
#define FEDSEQ_RUNNER_H_

#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "fedseq/config.h"

namespace fedseq {

enum class Verb { kIngest, kStatic, kDynamic, kPrivacy, kSynth };

absl::string_view VerbName(Verb verb);
absl::StatusOr<Verb> ParseVerb(absl::string_view name);

// Git blob object id: SHA-1 over "blob <size>\0" followed by the content.
std::string GitBlobHash(absl::string_view content);

struct WrittenFile {
  std::string name;
  std::string blob_hash;
};

// Runs one verb end to end and writes its artifacts into config.out_dir
// (created when missing). Errors carry a "[phase]" prefix naming the stage
// that failed. Output bytes depend only on the config.
absl::StatusOr<std::vector<WrittenFile>> RunExperiment(
    Verb verb, const ExperimentConfig& config);

// Phase of a status produced by RunExperiment, or "" when untagged.
absl::string_view ErrorPhase(const absl::Status& status);

}  // namespace fedseq

#endif  // FEDSEQ_RUNNER_H_
