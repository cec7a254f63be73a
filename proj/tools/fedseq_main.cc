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

// Command-line driver: fedseq <verb> --config <file> [--seed N] [--out DIR].

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "fedseq/config.h"
#include "fedseq/runner.h"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitIngest = 3;
constexpr int kExitRun = 4;
constexpr int kExitOutput = 5;

int ExitCodeFor(absl::string_view phase) {
  if (phase == "ingest" || phase == "split") return kExitIngest;
  if (phase == "output") return kExitOutput;
  return kExitRun;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated sequence-aware next-app prediction experiments"};
  app.require_subcommand(1, 1);
  app.set_help_all_flag("--help-all", "Show help for every verb");

  bool print_defaults = false;
  app.add_flag("--print-defaults", print_defaults,
               "Print the default configuration and exit");

  std::string config_path;
  std::optional<uint64_t> seed;
  std::string out_dir;
  const std::pair<const char*, const char*> verbs[] = {
      {"ingest", "Clean a dataset and write events plus summary statistics"},
      {"static", "Train on leading days and evaluate every model on the rest"},
      {"dynamic", "Stream rebalanced cycles and compare update regimes"},
      {"privacy", "Compare privacy mechanisms in the Full regime"},
      {"synth", "Write a synthetic Markov event log"},
  };
  for (const auto& [name, help] : verbs) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "JSON config file")
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Run seed (overrides the config)");
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
  }
  // `fedseq --print-defaults` needs no verb.
  for (int i = 1; i < argc; ++i) {
    if (absl::string_view(argv[i]) == "--print-defaults") {
      app.require_subcommand(0, 1);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  if (print_defaults) {
    std::cout << fedseq::DefaultConfigJson() << "\n";
    return 0;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  const auto verb = fedseq::ParseVerb(chosen->get_name());
  if (!verb.ok()) {
    std::cerr << "fedseq: [config] " << verb.status().message() << "\n";
    return kExitConfig;
  }

  fedseq::ConfigOverrides overrides;
  overrides.seed = seed;
  if (!out_dir.empty()) overrides.out_dir = out_dir;
  absl::StatusOr<fedseq::ExperimentConfig> config =
      config_path.empty() ? fedseq::ParseConfig("{}", "", overrides)
                          : fedseq::LoadConfig(config_path, overrides);
  if (!config.ok()) {
    std::cerr << "fedseq " << chosen->get_name() << ": [config] "
              << config.status().message() << "\n";
    return kExitConfig;
  }
  std::cerr << "resolved config:\n" << config->resolved_json << "\n";

  const auto files = fedseq::RunExperiment(*verb, *config);
  if (!files.ok()) {
    std::cerr << "fedseq " << chosen->get_name() << ": "
              << files.status().message() << "\n";
    return ExitCodeFor(fedseq::ErrorPhase(files.status()));
  }
  for (const fedseq::WrittenFile& f : *files) {
    std::cout << f.blob_hash << "  " << config->out_dir << "/" << f.name
              << "\n";
  }
  return 0;
}
