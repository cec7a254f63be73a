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

#include "fedseq/runner.h"

#include <openssl/evp.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "fedseq/experiments.h"
#include "fedseq/matrix_io.h"
#include "fedseq/status_macros.h"
#include "json.hpp"

namespace fedseq {
namespace {

using Json = nlohmann::json;

absl::Status Tag(absl::string_view phase, const absl::Status& status) {
  if (status.ok()) return status;
  return absl::Status(status.code(),
                      absl::StrCat("[", phase, "] ", status.message()));
}

class OutputDir {
 public:
  static absl::StatusOr<OutputDir> Open(const std::string& dir) {
    if (dir.empty()) {
      return absl::InvalidArgumentError("no output directory (use --out)");
    }
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      return absl::PermissionDeniedError(
          absl::StrCat("cannot create ", dir, ": ", ec.message()));
    }
    return OutputDir(dir);
  }

  // `name` is a bare file name; nothing is written outside the directory.
  absl::Status Write(absl::string_view name, absl::string_view content) {
    if (name.empty() || name.find('/') != absl::string_view::npos ||
        name == "." || name == "..") {
      return absl::InvalidArgumentError(
          absl::StrCat("refusing output name '", name, "'"));
    }
    const std::filesystem::path path = dir_ / std::string(name);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      return absl::DataLossError(absl::StrCat("cannot write ", path.string()));
    }
    files_.push_back({std::string(name), GitBlobHash(content)});
    return absl::OkStatus();
  }

  const std::vector<WrittenFile>& files() const { return files_; }

 private:
  explicit OutputDir(std::filesystem::path dir) : dir_(std::move(dir)) {}

  std::filesystem::path dir_;
  std::vector<WrittenFile> files_;
};

struct Inputs {
  EventLog log;
  // Blob hash of the raw input bytes (or of the generated event file).
  std::string source;
  std::string source_hash;
};

absl::StatusOr<Inputs> ReadInputs(const ExperimentConfig& config) {
  Inputs in;
  if (config.dataset_path.empty()) {
    const EventLog raw = GenerateSynthetic(config.synthetic).log;
    in.source = "synthetic";
    in.source_hash = GitBlobHash(SerializeEvents(raw));
    in.log = Deduplicate(raw, config.dedup_window_seconds);
  } else {
    std::ifstream file(config.dataset_path, std::ios::binary);
    if (!file) {
      return absl::NotFoundError(
          absl::StrCat("cannot read ", config.dataset_path));
    }
    const std::string bytes((std::istreambuf_iterator<char>(file)),
                            std::istreambuf_iterator<char>());
    auto parsed = ParseEvents(bytes);
    if (!parsed.ok()) {
      return absl::Status(parsed.status().code(),
                          absl::StrCat(config.dataset_path, ": ",
                                       parsed.status().message()));
    }
    in.source = config.dataset_path;
    in.source_hash = GitBlobHash(bytes);
    in.log = Deduplicate(*parsed, config.dedup_window_seconds);
  }
  if (in.log.empty()) return absl::FailedPreconditionError("dataset has no events");
  return in;
}

std::string Fixed(double v) {
  if (std::isnan(v)) return "NA";
  return absl::StrFormat("%.6f", v);
}

std::string IngestSummary(const EventLog& log, int64_t session_gap) {
  const std::vector<Session> sessions = Sessionize(log, session_gap);
  const std::vector<int> per_day = ActiveUsersPerDay(log);
  std::string out = "key,value\n";
  absl::StrAppend(&out, "users,", log.num_users(), "\n");
  absl::StrAppend(&out, "apps,", log.num_apps(), "\n");
  absl::StrAppend(&out, "events,", log.events.size(), "\n");
  absl::StrAppend(&out, "sessions,", sessions.size(), "\n");
  absl::StrAppend(&out, "mean_sessions_per_user,",
                  Fixed(MeanSessionsPerUser(sessions)), "\n");
  absl::StrAppend(&out, "days,", per_day.size(), "\n");
  absl::StrAppend(&out, "active_users_per_day_cv,",
                  Fixed(CoefficientOfVariation(per_day)), "\n");
  return out;
}

DynamicOptions MakeDynamicOptions(const ExperimentConfig& config) {
  DynamicOptions options;
  options.target_active_users = config.target_active_users;
  options.min_tail_fraction = config.min_tail_fraction;
  options.regimes = config.regimes;
  options.baselines = config.dynamic_baselines;
  options.training = config.training;
  options.pretrain = config.pretrain;
  options.seed = config.seed;
  return options;
}

std::string CycleTable(const DynamicResult& result) {
  std::string out = "cycle,users_active\n";
  for (size_t i = 0; i < result.active_users.size(); ++i) {
    absl::StrAppend(&out, i + 1, ",", result.active_users[i], "\n");
  }
  return out;
}

std::string PrivacyTable(const DynamicResult& result,
                         const MechanismConfig& privacy) {
  std::string out =
      "mechanism,epsilon,k,mean_hr5,final_hr5,final_delta_hr5_cum\n";
  for (const DynamicSeries& s : result.seqmf) {
    double sum = 0.0;
    int count = 0;
    for (double v : s.hr5) {
      if (std::isnan(v)) continue;
      sum += v;
      ++count;
    }
    const bool passthrough = s.model == "SeqMF+none";
    absl::StrAppend(&out, s.model, ",",
                    passthrough ? "inf" : Fixed(privacy.epsilon), ",",
                    passthrough ? "NA" : absl::StrCat(privacy.k), ",",
                    Fixed(count > 0 ? sum / count : std::nan("")), ",",
                    Fixed(s.hr5.empty() ? std::nan("") : s.hr5.back()), ",",
                    Fixed(s.cumulative_delta.empty()
                              ? 0.0
                              : s.cumulative_delta.back()),
                    "\n");
  }
  return out;
}

absl::Status WriteDynamicArtifacts(OutputDir& out, const DynamicResult& result,
                                   bool log_messages) {
  FEDSEQ_RETURN_IF_ERROR(
      out.Write("metrics.csv", SerializeMetricRecords(result.records)));
  FEDSEQ_RETURN_IF_ERROR(
      out.Write("round_log.csv", SerializeRoundLog(result.round_log)));
  FEDSEQ_RETURN_IF_ERROR(out.Write("plot_data.csv", SerializePlotData(result)));
  FEDSEQ_RETURN_IF_ERROR(out.Write("cycles.csv", CycleTable(result)));
  if (log_messages) {
    FEDSEQ_RETURN_IF_ERROR(out.Write("messages.log", result.message_log));
  }
  return out.Write("pretrained_q.csv", SerializeMatrix(result.pretrained_q));
}

std::string Manifest(Verb verb, const ExperimentConfig& config,
                     const Inputs* inputs,
                     const std::vector<WrittenFile>& outputs) {
  Json manifest;
  manifest["verb"] = VerbName(verb);
  manifest["config"] = Json::parse(config.resolved_json);
  manifest["seeds"] = {{"run", config.seed}};
  if (config.dataset_path.empty()) {
    manifest["seeds"]["synthetic"] = config.synthetic.seed;
  }
  if (inputs != nullptr) {
    manifest["inputs"] = Json::array(
        {{{"source", inputs->source}, {"git_blob", inputs->source_hash}}});
  }
  Json files = Json::array();
  for (const WrittenFile& f : outputs) {
    files.push_back({{"file", f.name}, {"git_blob", f.blob_hash}});
  }
  manifest["outputs"] = files;
  return manifest.dump(2) + "\n";
}

}  // namespace

absl::string_view VerbName(Verb verb) {
  switch (verb) {
    case Verb::kIngest:
      return "ingest";
    case Verb::kStatic:
      return "static";
    case Verb::kDynamic:
      return "dynamic";
    case Verb::kPrivacy:
      return "privacy";
    case Verb::kSynth:
      return "synth";
  }
  return "unknown";
}

absl::StatusOr<Verb> ParseVerb(absl::string_view name) {
  for (Verb v : {Verb::kIngest, Verb::kStatic, Verb::kDynamic, Verb::kPrivacy,
                 Verb::kSynth}) {
    if (VerbName(v) == name) return v;
  }
  return absl::InvalidArgumentError(absl::StrCat("unknown verb '", name, "'"));
}

std::string GitBlobHash(absl::string_view content) {
  const std::string header = absl::StrCat("blob ", content.size());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(
      EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestInit_ex(ctx.get(), EVP_sha1(), nullptr);
  EVP_DigestUpdate(ctx.get(), header.data(), header.size() + 1);  // with NUL
  EVP_DigestUpdate(ctx.get(), content.data(), content.size());
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  std::string hex;
  for (unsigned int i = 0; i < length; ++i) {
    absl::StrAppend(&hex, absl::Hex(digest[i], absl::kZeroPad2));
  }
  return hex;
}

absl::string_view ErrorPhase(const absl::Status& status) {
  absl::string_view message = status.message();
  if (message.empty() || message.front() != '[') return "";
  const size_t close = message.find(']');
  if (close == absl::string_view::npos) return "";
  return message.substr(1, close - 1);
}

absl::StatusOr<std::vector<WrittenFile>> RunExperiment(
    Verb verb, const ExperimentConfig& config) {
  auto out_or = OutputDir::Open(config.out_dir);
  FEDSEQ_RETURN_IF_ERROR(Tag("output", out_or.status()));
  OutputDir out = std::move(out_or).value();

  auto inputs_or = ReadInputs(config);
  FEDSEQ_RETURN_IF_ERROR(Tag("ingest", inputs_or.status()));
  const Inputs& inputs = *inputs_or;
  const EventLog& log = inputs.log;

  switch (verb) {
    case Verb::kSynth:
    case Verb::kIngest: {
      FEDSEQ_RETURN_IF_ERROR(
          Tag("output", out.Write("events.csv", SerializeEvents(log))));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output", out.Write("ingest_summary.csv",
                              IngestSummary(log, config.session_gap_seconds))));
      break;
    }
    case Verb::kStatic: {
      StaticOptions options;
      options.split = config.split_days.train > 0
                          ? config.split_days
                          : ProportionalSplitDays(log, config.train_fraction,
                                                  config.validation_fraction);
      options.models = config.models;
      options.training = config.training;
      options.pretrain = config.pretrain;
      options.grid = config.grid;
      options.seed = config.seed;
      auto split = SplitStatic(log, options.split);
      FEDSEQ_RETURN_IF_ERROR(Tag("split", split.status()));
      auto result = RunStaticOnSplit(*split, log, options);
      FEDSEQ_RETURN_IF_ERROR(Tag("static", result.status()));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output",
          out.Write("metrics.csv", SerializeMetricRecords(result->records))));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output", out.Write("static_table.csv", SerializeStaticTable(*result))));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output",
          out.Write("round_log.csv", SerializeRoundLog(result->round_log))));
      FEDSEQ_RETURN_IF_ERROR(
          Tag("output", out.Write("plot_data.csv", SerializePlotData({}))));
      break;
    }
    case Verb::kDynamic: {
      auto result = RunDynamic(log, MakeDynamicOptions(config));
      FEDSEQ_RETURN_IF_ERROR(Tag("dynamic", result.status()));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output",
          WriteDynamicArtifacts(out, *result, config.training.log_messages)));
      break;
    }
    case Verb::kPrivacy: {
      std::vector<MechanismConfig> mechanisms;
      for (Mechanism m : config.compare_mechanisms) {
        MechanismConfig mc = config.training.privacy;
        mc.mechanism = m;
        mechanisms.push_back(mc);
      }
      auto result =
          ComparePrivacy(log, mechanisms, MakeDynamicOptions(config));
      FEDSEQ_RETURN_IF_ERROR(Tag("privacy", result.status()));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output",
          WriteDynamicArtifacts(out, *result, config.training.log_messages)));
      FEDSEQ_RETURN_IF_ERROR(Tag(
          "output", out.Write("privacy_table.csv",
                              PrivacyTable(*result, config.training.privacy))));
      break;
    }
  }
  std::vector<WrittenFile> files = out.files();
  FEDSEQ_RETURN_IF_ERROR(
      Tag("output",
          out.Write("manifest.json", Manifest(verb, config, &inputs, files))));
  return out.files();
}

}  // namespace fedseq
