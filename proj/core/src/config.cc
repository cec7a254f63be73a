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

#include "fedseq/config.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_replace.h"
#include "fedseq/status_macros.h"
#include "json.hpp"

namespace fedseq {
namespace {

using Json = nlohmann::json;
using FlatConfig = std::map<std::string, Json>;

Json Defaults() {
  const SyntheticOptions syn;
  const Hyperparams hyper;
  const OptimizerConfig opt;
  return Json{
      {"dataset",
       {{"path", ""},
        {"dedup_window_seconds", kDefaultDedupWindowSeconds},
        {"session_gap_seconds", kDefaultSessionThresholdSeconds}}},
      {"synthetic",
       {{"users", syn.num_users},
        {"apps", syn.num_apps},
        {"latent_dim", syn.latent_dim},
        {"steps_per_user", syn.steps_per_user},
        {"seed", 0},
        {"memoryless", syn.memoryless},
        {"sequence_strength", syn.sequence_strength},
        {"preference_strength", syn.preference_strength},
        {"transition_noise", syn.transition_noise},
        {"mean_session_length", syn.mean_session_length},
        {"max_start_day_offset", syn.max_start_day_offset},
        {"focus_strength", syn.focus_strength},
        {"focus_period_days", syn.focus_period_days}}},
      {"environment", "static"},
      {"models", Json::array({"SeqMF", "MF", "SR", "SR-od", "MRU", "MFU",
                              "Random"})},
      {"regimes", Json::array({"Full", "Rare", "Global"})},
      {"baselines", Json::array({"SR-od"})},
      {"privacy",
       {{"mechanism", "none"},
        {"epsilon", 1.0},
        {"k", 1},
        {"fmax_mode", "signed"},
        {"log_messages", false},
        {"compare", Json::array({"none", "qharmony", "kharmony", "laplace"})}}},
      {"model",
       {{"dim", hyper.dim},
        {"lambda", hyper.lambda},
        {"alpha", hyper.alpha},
        {"gamma", hyper.gamma},
        {"recency", hyper.recency},
        {"history_window", 0}}},
      {"optimizer",
       {{"kind", "adam"},
        {"learning_rate", opt.learning_rate},
        {"momentum", opt.momentum},
        {"max_grad_norm", opt.max_grad_norm}}},
      {"pretrain",
       {{"rounds", 100},
        {"optimizer", "adam"},
        {"learning_rate", opt.learning_rate},
        {"private", false}}},
      {"grid", Json::array()},
      {"split",
       {{"train_days", 0},
        {"validation_days", 0},
        {"test_days", 0},
        {"train_fraction", 0.6},
        {"validation_fraction", 0.2}}},
      {"dynamic",
       {{"target_active_users", 0},
        {"q_update_period", 1},
        {"participation", 1.0},
        {"server_steps", 1},
        {"min_tail_fraction", 0.5}}},
      {"seed", 1},
      {"out_dir", ""},
  };
}

void Flatten(const Json& node, const std::string& prefix, FlatConfig& out) {
  if (node.is_object()) {
    for (const auto& [key, value] : node.items()) {
      Flatten(value, prefix.empty() ? key : absl::StrCat(prefix, ".", key), out);
    }
    return;
  }
  out[prefix] = node;
}

Json Unflatten(const FlatConfig& flat) {
  Json out = Json::object();
  for (const auto& [key, value] : flat) {
    out[Json::json_pointer("/" + absl::StrReplaceAll(key, {{".", "/"}}))] =
        value;
  }
  return out;
}

bool SameKind(const Json& expected, const Json& actual) {
  if (expected.is_number_float()) return actual.is_number();
  if (expected.is_number_integer()) return actual.is_number_integer();
  if (expected.is_array()) return actual.is_array();
  return expected.type() == actual.type();
}

std::string EnvName(absl::string_view key) {
  return absl::StrCat(
      "FEDSEQ_", absl::AsciiStrToUpper(absl::StrReplaceAll(key, {{".", "_"}})));
}

absl::StatusOr<Json> ParseEnvValue(const Json& expected, absl::string_view key,
                                   const std::string& raw) {
  const std::string env = EnvName(key);
  if (expected.is_string()) return Json(raw);
  if (expected.is_boolean()) {
    const std::string lower = absl::AsciiStrToLower(raw);
    if (lower == "true" || lower == "1") return Json(true);
    if (lower == "false" || lower == "0") return Json(false);
  } else if (expected.is_number_integer()) {
    int64_t v;
    if (absl::SimpleAtoi(raw, &v)) return Json(v);
  } else if (expected.is_number_float()) {
    double v;
    if (absl::SimpleAtod(raw, &v)) return Json(v);
  }
  return absl::InvalidArgumentError(
      absl::StrCat(env, " (", key, "): cannot parse '", raw, "'"));
}

absl::Status RangeError(absl::string_view key, absl::string_view requirement,
                        const Json& value) {
  return absl::OutOfRangeError(absl::StrCat(key, " must be ", requirement,
                                            ", got ", value.dump()));
}

class Resolver {
 public:
  explicit Resolver(const FlatConfig& flat) : flat_(flat) {}

  int64_t Int(const std::string& key) const { return flat_.at(key).get<int64_t>(); }
  double Double(const std::string& key) const { return flat_.at(key).get<double>(); }
  bool Bool(const std::string& key) const { return flat_.at(key).get<bool>(); }
  std::string String(const std::string& key) const {
    return flat_.at(key).get<std::string>();
  }
  const Json& Raw(const std::string& key) const { return flat_.at(key); }

  absl::StatusOr<int> IntAtLeast(const std::string& key, int64_t min) const {
    const int64_t v = Int(key);
    if (v < min) return RangeError(key, absl::StrCat(">= ", min), Raw(key));
    return static_cast<int>(v);
  }
  absl::StatusOr<double> Positive(const std::string& key) const {
    const double v = Double(key);
    if (!(v > 0.0) || !std::isfinite(v)) return RangeError(key, "> 0", Raw(key));
    return v;
  }
  absl::StatusOr<double> Unit(const std::string& key, bool allow_zero) const {
    const double v = Double(key);
    if (!(allow_zero ? v >= 0.0 : v > 0.0) || v > 1.0) {
      return RangeError(key, allow_zero ? "in [0, 1]" : "in (0, 1]", Raw(key));
    }
    return v;
  }

  template <typename T, typename ParseFn>
  absl::StatusOr<std::vector<T>> List(const std::string& key,
                                      ParseFn parse) const {
    std::vector<T> out;
    for (const Json& item : Raw(key)) {
      if (!item.is_string()) {
        return absl::InvalidArgumentError(
            absl::StrCat(key, ": expected strings, got ", item.dump()));
      }
      auto parsed = parse(item.get<std::string>());
      if (!parsed.ok()) {
        return absl::InvalidArgumentError(
            absl::StrCat(key, ": ", parsed.status().message()));
      }
      out.push_back(*parsed);
    }
    if (out.empty()) return absl::InvalidArgumentError(key + " must not be empty");
    return out;
  }

 private:
  const FlatConfig& flat_;
};

absl::Status CheckHyper(const Hyperparams& h, absl::string_view prefix) {
  if (h.dim < 1) return RangeError(absl::StrCat(prefix, "dim"), ">= 1", h.dim);
  if (!(h.lambda >= 0.0)) {
    return RangeError(absl::StrCat(prefix, "lambda"), ">= 0", h.lambda);
  }
  if (!(h.alpha >= 0.0 && h.alpha <= 1.0)) {
    return RangeError(absl::StrCat(prefix, "alpha"), "in [0, 1]", h.alpha);
  }
  if (!(h.gamma >= 0.0 && h.gamma <= 1.0)) {
    return RangeError(absl::StrCat(prefix, "gamma"), "in [0, 1]", h.gamma);
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<GridPoint>> ParseGrid(const Json& grid,
                                                 const Hyperparams& base,
                                                 double base_rate) {
  std::vector<GridPoint> out;
  for (size_t i = 0; i < grid.size(); ++i) {
    const Json& item = grid[i];
    const std::string where = absl::StrCat("grid[", i, "]");
    if (!item.is_object()) {
      return absl::InvalidArgumentError(where + " must be an object");
    }
    GridPoint point{base, base_rate};
    for (const auto& [key, value] : item.items()) {
      const std::string name = absl::StrCat(where, ".", key);
      if (!value.is_number()) {
        return absl::InvalidArgumentError(name + " must be a number");
      }
      if (key == "dim") {
        if (!value.is_number_integer()) {
          return absl::InvalidArgumentError(name + " must be an integer");
        }
        point.hyper.dim = value.get<int>();
      } else if (key == "lambda") {
        point.hyper.lambda = value.get<double>();
      } else if (key == "alpha") {
        point.hyper.alpha = value.get<double>();
      } else if (key == "gamma") {
        point.hyper.gamma = value.get<double>();
      } else if (key == "learning_rate") {
        point.learning_rate = value.get<double>();
        if (!(point.learning_rate > 0.0)) return RangeError(name, "> 0", value);
      } else {
        return absl::InvalidArgumentError(absl::StrCat("unknown key '", name, "'"));
      }
    }
    FEDSEQ_RETURN_IF_ERROR(CheckHyper(point.hyper, where + "."));
    out.push_back(point);
  }
  return out;
}

absl::StatusOr<Environment> ParseEnvironment(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "static") return Environment::kStatic;
  if (lower == "dynamic") return Environment::kDynamic;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown environment '", name, "'"));
}

absl::StatusOr<ExperimentConfig> Resolve(const FlatConfig& flat,
                                         const std::string& base_dir) {
  const Resolver r(flat);
  ExperimentConfig c;

  c.dataset_path = r.String("dataset.path");
  if (!c.dataset_path.empty()) {
    std::filesystem::path p(c.dataset_path);
    if (p.is_relative() && !base_dir.empty()) p = std::filesystem::path(base_dir) / p;
    if (!std::filesystem::is_regular_file(p)) {
      return absl::NotFoundError(
          absl::StrCat("dataset.path: no such file '", p.string(), "'"));
    }
    c.dataset_path = p.lexically_normal().string();
  }
  FEDSEQ_ASSIGN_OR_RETURN(int dedup, r.IntAtLeast("dataset.dedup_window_seconds", 0));
  FEDSEQ_ASSIGN_OR_RETURN(int gap, r.IntAtLeast("dataset.session_gap_seconds", 1));
  c.dedup_window_seconds = dedup;
  c.session_gap_seconds = gap;

  c.seed = static_cast<uint64_t>(r.Int("seed"));
  if (r.Int("seed") < 0) return RangeError("seed", ">= 0", r.Raw("seed"));

  SyntheticOptions& syn = c.synthetic;
  FEDSEQ_ASSIGN_OR_RETURN(syn.num_users, r.IntAtLeast("synthetic.users", 1));
  FEDSEQ_ASSIGN_OR_RETURN(syn.num_apps, r.IntAtLeast("synthetic.apps", 5));
  FEDSEQ_ASSIGN_OR_RETURN(syn.latent_dim, r.IntAtLeast("synthetic.latent_dim", 1));
  FEDSEQ_ASSIGN_OR_RETURN(syn.steps_per_user,
                          r.IntAtLeast("synthetic.steps_per_user", 2));
  FEDSEQ_ASSIGN_OR_RETURN(syn.max_start_day_offset,
                          r.IntAtLeast("synthetic.max_start_day_offset", 0));
  syn.focus_strength = r.Double("synthetic.focus_strength");
  FEDSEQ_ASSIGN_OR_RETURN(syn.focus_period_days,
                          r.IntAtLeast("synthetic.focus_period_days", 1));
  const int64_t syn_seed = r.Int("synthetic.seed");
  if (syn_seed < 0) return RangeError("synthetic.seed", ">= 0", r.Raw("synthetic.seed"));
  // 0 ties the data to the run seed.
  syn.seed = syn_seed == 0 ? c.seed : static_cast<uint64_t>(syn_seed);
  syn.memoryless = r.Bool("synthetic.memoryless");
  syn.sequence_strength = r.Double("synthetic.sequence_strength");
  syn.preference_strength = r.Double("synthetic.preference_strength");
  FEDSEQ_ASSIGN_OR_RETURN(syn.mean_session_length,
                          r.Positive("synthetic.mean_session_length"));
  syn.transition_noise = r.Double("synthetic.transition_noise");
  if (!(syn.transition_noise >= 0.0)) {
    return RangeError("synthetic.transition_noise", ">= 0",
                      r.Raw("synthetic.transition_noise"));
  }

  {
    auto env = ParseEnvironment(r.String("environment"));
    if (!env.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("environment: ", env.status().message()));
    }
    c.environment = *env;
  }
  FEDSEQ_ASSIGN_OR_RETURN(c.models, r.List<ModelKind>("models", ParseModel));
  FEDSEQ_ASSIGN_OR_RETURN(c.regimes, r.List<Regime>("regimes", ParseRegime));
  FEDSEQ_ASSIGN_OR_RETURN(c.dynamic_baselines,
                          r.List<ModelKind>("baselines", ParseModel));
  for (ModelKind kind : c.dynamic_baselines) {
    if (kind == ModelKind::kSeqMf || kind == ModelKind::kMf) {
      return absl::InvalidArgumentError(
          "baselines: factor models run as regimes, not baselines");
    }
  }
  FEDSEQ_ASSIGN_OR_RETURN(
      c.compare_mechanisms,
      r.List<Mechanism>("privacy.compare", ParseMechanism));

  TrainingConfig& t = c.training;
  t.seed = c.seed;
  t.hyper.dim = static_cast<int>(r.Int("model.dim"));
  t.hyper.lambda = r.Double("model.lambda");
  t.hyper.alpha = r.Double("model.alpha");
  t.hyper.gamma = r.Double("model.gamma");
  FEDSEQ_RETURN_IF_ERROR(CheckHyper(t.hyper, "model."));
  FEDSEQ_ASSIGN_OR_RETURN(t.hyper.recency, r.IntAtLeast("model.recency", 1));
  FEDSEQ_ASSIGN_OR_RETURN(t.history_window, r.IntAtLeast("model.history_window", 0));

  {
    auto mech = ParseMechanism(r.String("privacy.mechanism"));
    if (!mech.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("privacy.mechanism: ", mech.status().message()));
    }
    t.privacy.mechanism = *mech;
  }
  FEDSEQ_ASSIGN_OR_RETURN(t.privacy.epsilon, r.Positive("privacy.epsilon"));
  FEDSEQ_ASSIGN_OR_RETURN(t.privacy.k, r.IntAtLeast("privacy.k", 1));
  const std::string fmax = absl::AsciiStrToLower(r.String("privacy.fmax_mode"));
  if (fmax == "signed") {
    t.privacy.fmax_mode = FmaxMode::kSigned;
  } else if (fmax == "absolute") {
    t.privacy.fmax_mode = FmaxMode::kAbsolute;
  } else {
    return absl::InvalidArgumentError(
        absl::StrCat("privacy.fmax_mode: unknown mode '", fmax, "'"));
  }
  t.log_messages = r.Bool("privacy.log_messages");

  {
    auto kind = ParseOptimizer(r.String("optimizer.kind"));
    if (!kind.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("optimizer.kind: ", kind.status().message()));
    }
    t.optimizer.kind = *kind;
  }
  FEDSEQ_ASSIGN_OR_RETURN(t.optimizer.learning_rate,
                          r.Positive("optimizer.learning_rate"));
  FEDSEQ_ASSIGN_OR_RETURN(t.optimizer.momentum, r.Unit("optimizer.momentum", true));
  t.optimizer.max_grad_norm = r.Double("optimizer.max_grad_norm");
  if (!(t.optimizer.max_grad_norm >= 0.0)) {
    return RangeError("optimizer.max_grad_norm", ">= 0",
                      r.Raw("optimizer.max_grad_norm"));
  }

  FEDSEQ_ASSIGN_OR_RETURN(t.q_update_period, r.IntAtLeast("dynamic.q_update_period", 1));
  FEDSEQ_ASSIGN_OR_RETURN(t.participation, r.Unit("dynamic.participation", false));
  FEDSEQ_ASSIGN_OR_RETURN(t.server_steps_per_update,
                          r.IntAtLeast("dynamic.server_steps", 1));
  FEDSEQ_ASSIGN_OR_RETURN(c.target_active_users,
                          r.IntAtLeast("dynamic.target_active_users", 0));
  FEDSEQ_ASSIGN_OR_RETURN(c.min_tail_fraction,
                          r.Unit("dynamic.min_tail_fraction", true));

  FEDSEQ_ASSIGN_OR_RETURN(c.pretrain.rounds, r.IntAtLeast("pretrain.rounds", 0));
  {
    auto kind = ParseOptimizer(r.String("pretrain.optimizer"));
    if (!kind.ok()) {
      return absl::InvalidArgumentError(
          absl::StrCat("pretrain.optimizer: ", kind.status().message()));
    }
    c.pretrain.optimizer = t.optimizer;
    c.pretrain.optimizer.kind = *kind;
  }
  FEDSEQ_ASSIGN_OR_RETURN(c.pretrain.optimizer.learning_rate,
                          r.Positive("pretrain.learning_rate"));
  if (r.Bool("pretrain.private")) c.pretrain.privacy = t.privacy;

  FEDSEQ_ASSIGN_OR_RETURN(
      c.grid, ParseGrid(r.Raw("grid"), t.hyper, t.optimizer.learning_rate));

  FEDSEQ_ASSIGN_OR_RETURN(c.split_days.train, r.IntAtLeast("split.train_days", 0));
  FEDSEQ_ASSIGN_OR_RETURN(c.split_days.validation,
                          r.IntAtLeast("split.validation_days", 0));
  FEDSEQ_ASSIGN_OR_RETURN(c.split_days.test, r.IntAtLeast("split.test_days", 0));
  FEDSEQ_ASSIGN_OR_RETURN(c.train_fraction, r.Unit("split.train_fraction", false));
  FEDSEQ_ASSIGN_OR_RETURN(c.validation_fraction,
                          r.Unit("split.validation_fraction", true));
  if (c.train_fraction + c.validation_fraction >= 1.0) {
    return absl::InvalidArgumentError(
        "split.train_fraction + split.validation_fraction must be < 1");
  }

  c.out_dir = r.String("out_dir");
  return c;
}

// Number of apps the configured dataset will have, without the full load when
// the generator is used.
absl::StatusOr<int> DatasetApps(const ExperimentConfig& c) {
  if (c.dataset_path.empty()) return c.synthetic.num_apps;
  FEDSEQ_ASSIGN_OR_RETURN(EventLog log, ParseEventsFile(c.dataset_path));
  return log.num_apps();
}

absl::Status CheckSparsity(const ExperimentConfig& c) {
  bool harmony = c.training.privacy.mechanism == Mechanism::kQHarmony ||
                 c.training.privacy.mechanism == Mechanism::kKHarmony;
  for (Mechanism m : c.compare_mechanisms) {
    harmony |= m == Mechanism::kQHarmony || m == Mechanism::kKHarmony;
  }
  if (!harmony) return absl::OkStatus();
  // An unreadable dataset is reported by the ingest phase instead.
  const absl::StatusOr<int> dataset_apps = DatasetApps(c);
  if (!dataset_apps.ok()) return absl::OkStatus();
  const int apps = *dataset_apps;
  int dim = c.training.hyper.dim;
  for (const GridPoint& g : c.grid) dim = std::min(dim, g.hyper.dim);
  const int64_t entries = static_cast<int64_t>(apps) * dim;
  if (c.training.privacy.k > entries) {
    return absl::InvalidArgumentError(absl::StrCat(
        "privacy.k = ", c.training.privacy.k, " exceeds N*d = ", apps, "*",
        dim, " = ", entries, " for the configured dataset"));
  }
  return absl::OkStatus();
}

}  // namespace

absl::string_view EnvironmentName(Environment environment) {
  return environment == Environment::kStatic ? "static" : "dynamic";
}

absl::StatusOr<ExperimentConfig> ParseConfig(absl::string_view json_text,
                                             const std::string& base_dir,
                                             const ConfigOverrides& overrides) {
  Json user = Json::parse(json_text, nullptr, /*allow_exceptions=*/false,
                          /*ignore_comments=*/true);
  if (user.is_discarded()) {
    return absl::InvalidArgumentError("config is not valid JSON");
  }
  if (!user.is_object()) {
    return absl::InvalidArgumentError("config must be a JSON object");
  }
  FlatConfig flat;
  Flatten(Defaults(), "", flat);
  FlatConfig given;
  Flatten(user, "", given);
  for (auto& [key, value] : given) {
    auto it = flat.find(key);
    if (it == flat.end()) {
      return absl::InvalidArgumentError(absl::StrCat("unknown key '", key, "'"));
    }
    if (!SameKind(it->second, value)) {
      return absl::InvalidArgumentError(absl::StrCat(
          key, ": expected ", it->second.type_name(), ", got ", value.dump()));
    }
    it->second = value;
  }
  for (auto& [key, value] : flat) {
    if (value.is_array() || value.is_object()) continue;
    if (const char* env = std::getenv(EnvName(key).c_str()); env != nullptr) {
      FEDSEQ_ASSIGN_OR_RETURN(value, ParseEnvValue(value, key, env));
    }
  }
  if (overrides.seed) flat["seed"] = *overrides.seed;
  if (overrides.out_dir) flat["out_dir"] = *overrides.out_dir;

  FEDSEQ_ASSIGN_OR_RETURN(ExperimentConfig config, Resolve(flat, base_dir));
  FEDSEQ_RETURN_IF_ERROR(CheckSparsity(config));
  // The echo reports what the run used, so derived values replace inputs.
  flat["synthetic.seed"] = config.synthetic.seed;
  flat["dataset.path"] = config.dataset_path;
  config.resolved_json = Unflatten(flat).dump(2);
  return config;
}

absl::StatusOr<ExperimentConfig> LoadConfig(const std::string& path,
                                            const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(absl::StrCat("cannot read config ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string dir = std::filesystem::path(path).parent_path().string();
  return ParseConfig(buffer.str(), dir, overrides);
}

std::string DefaultConfigJson() { return Defaults().dump(2); }

absl::StatusOr<EventLog> LoadDataset(const ExperimentConfig& config) {
  if (config.dataset_path.empty()) {
    return Deduplicate(GenerateSynthetic(config.synthetic).log,
                       config.dedup_window_seconds);
  }
  FEDSEQ_ASSIGN_OR_RETURN(EventLog log, ParseEventsFile(config.dataset_path));
  return Deduplicate(log, config.dedup_window_seconds);
}

}  // namespace fedseq
