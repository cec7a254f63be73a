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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "json.hpp"

namespace fedseq {
namespace {

using ::testing::HasSubstr;
using Json = nlohmann::json;

absl::StatusOr<ExperimentConfig> Parse(absl::string_view text) {
  return ParseConfig(text, "", {});
}

// Sets an environment variable for the lifetime of the object.
class ScopedEnv {
 public:
  ScopedEnv(const char* name, const char* value) : name_(name) {
    setenv(name, value, 1);
  }
  ~ScopedEnv() { unsetenv(name_); }

 private:
  const char* name_;
};

TEST(ParseConfigTest, EmptyObjectGivesDefaults) {
  auto config = Parse("{}");
  ASSERT_TRUE(config.ok()) << config.status();
  EXPECT_EQ(config->environment, Environment::kStatic);
  EXPECT_EQ(config->models.size(), 7u);
  EXPECT_EQ(config->regimes.size(), 3u);
  EXPECT_EQ(config->compare_mechanisms.size(), 4u);
  EXPECT_EQ(config->training.privacy.mechanism, Mechanism::kNone);
  EXPECT_EQ(config->seed, 1u);
  EXPECT_EQ(config->synthetic.seed, config->seed);
  EXPECT_TRUE(config->dataset_path.empty());
}

TEST(ParseConfigTest, EchoContainsEveryDefaultKey) {
  auto config = Parse("{}");
  ASSERT_TRUE(config.ok());
  const Json echo = Json::parse(config->resolved_json);
  const Json defaults = Json::parse(DefaultConfigJson());
  for (const auto& [section, value] : defaults.items()) {
    ASSERT_TRUE(echo.contains(section)) << section;
    if (!value.is_object()) continue;
    for (const auto& [key, unused] : value.items()) {
      EXPECT_TRUE(echo[section].contains(key)) << section << "." << key;
    }
  }
  EXPECT_EQ(echo["synthetic"]["seed"], 1);
}

TEST(ParseConfigTest, ValuesOverrideDefaults) {
  auto config = Parse(R"({"model": {"dim": 7, "lambda": 0.5},
                          "privacy": {"mechanism": "kharmony", "epsilon": 2,
                                      "k": 3},
                          "environment": "dynamic",
                          "regimes": ["Rare"]})");
  ASSERT_TRUE(config.ok()) << config.status();
  EXPECT_EQ(config->training.hyper.dim, 7);
  EXPECT_EQ(config->training.hyper.lambda, 0.5);
  EXPECT_EQ(config->training.privacy.mechanism, Mechanism::kKHarmony);
  EXPECT_EQ(config->training.privacy.epsilon, 2.0);
  EXPECT_EQ(config->training.privacy.k, 3);
  EXPECT_EQ(config->environment, Environment::kDynamic);
  EXPECT_THAT(config->regimes, ::testing::ElementsAre(Regime::kRare));
}

TEST(ParseConfigTest, NegativeEpsilonNamesTheKey) {
  auto config = Parse(R"({"privacy": {"epsilon": -1}})");
  ASSERT_FALSE(config.ok());
  EXPECT_EQ(config.status().code(), absl::StatusCode::kOutOfRange);
  EXPECT_THAT(config.status().message(), HasSubstr("privacy.epsilon"));
}

TEST(ParseConfigTest, MessageSizeAboveEmbeddingEntriesIsRejected) {
  // Default synthetic data has 40 apps; 40 * 2 = 80 entries.
  auto config = Parse(R"({"model": {"dim": 2},
                          "privacy": {"mechanism": "qharmony", "k": 81}})");
  ASSERT_FALSE(config.ok());
  EXPECT_THAT(config.status().message(), HasSubstr("privacy.k"));
  EXPECT_TRUE(Parse(R"({"model": {"dim": 2},
                        "privacy": {"mechanism": "qharmony", "k": 80}})")
                  .ok());
}

TEST(ParseConfigTest, RejectsUnknownKeysAndWrongTypes) {
  auto unknown = Parse(R"({"model": {"dimension": 3}})");
  ASSERT_FALSE(unknown.ok());
  EXPECT_THAT(unknown.status().message(), HasSubstr("model.dimension"));
  auto typed = Parse(R"({"model": {"dim": "three"}})");
  ASSERT_FALSE(typed.ok());
  EXPECT_THAT(typed.status().message(), HasSubstr("model.dim"));
  EXPECT_FALSE(Parse(R"({"model": {"dim": 2.5}})").ok());
  EXPECT_FALSE(Parse("[1, 2]").ok());
  EXPECT_FALSE(Parse("{not json").ok());
  EXPECT_FALSE(Parse(R"({"models": ["SeqMF", "knn"]})").ok());
  EXPECT_FALSE(Parse(R"({"models": []})").ok());
}

TEST(ParseConfigTest, RangeChecks) {
  EXPECT_FALSE(Parse(R"({"dynamic": {"participation": 0.0}})").ok());
  EXPECT_FALSE(Parse(R"({"dynamic": {"participation": 1.5}})").ok());
  EXPECT_FALSE(Parse(R"({"model": {"alpha": 2.0}})").ok());
  EXPECT_FALSE(Parse(R"({"optimizer": {"learning_rate": 0}})").ok());
  EXPECT_FALSE(Parse(R"({"split": {"train_fraction": 0.9,
                                    "validation_fraction": 0.1}})")
                   .ok());
  auto grid = Parse(R"({"grid": [{"lambda": 0.1}, {"color": 1}]})");
  ASSERT_FALSE(grid.ok());
  EXPECT_THAT(grid.status().message(), HasSubstr("grid[1].color"));
}

TEST(ParseConfigTest, GridInheritsBaseSettings) {
  auto config = Parse(R"({"model": {"dim": 6},
                          "grid": [{"lambda": 0.01}, {"dim": 3}]})");
  ASSERT_TRUE(config.ok()) << config.status();
  ASSERT_EQ(config->grid.size(), 2u);
  EXPECT_EQ(config->grid[0].hyper.dim, 6);
  EXPECT_EQ(config->grid[0].hyper.lambda, 0.01);
  EXPECT_EQ(config->grid[1].hyper.dim, 3);
}

TEST(ParseConfigTest, EnvironmentOverridesFileValues) {
  ScopedEnv dim("FEDSEQ_MODEL_DIM", "11");
  ScopedEnv mech("FEDSEQ_PRIVACY_MECHANISM", "laplace");
  auto config = Parse(R"({"model": {"dim": 3}})");
  ASSERT_TRUE(config.ok()) << config.status();
  EXPECT_EQ(config->training.hyper.dim, 11);
  EXPECT_EQ(config->training.privacy.mechanism, Mechanism::kLaplace);
  EXPECT_EQ(Json::parse(config->resolved_json)["model"]["dim"], 11);
}

TEST(ParseConfigTest, MalformedEnvironmentValueNamesVariable) {
  ScopedEnv bad("FEDSEQ_PRIVACY_EPSILON", "lots");
  auto config = Parse("{}");
  ASSERT_FALSE(config.ok());
  EXPECT_THAT(config.status().message(), HasSubstr("FEDSEQ_PRIVACY_EPSILON"));
}

TEST(ParseConfigTest, CommandLineOverridesWinOverEnvironment) {
  ScopedEnv seed("FEDSEQ_SEED", "5");
  auto from_env = Parse("{}");
  ASSERT_TRUE(from_env.ok());
  EXPECT_EQ(from_env->seed, 5u);
  ConfigOverrides overrides;
  overrides.seed = 9;
  overrides.out_dir = "/tmp/x";
  auto config = ParseConfig("{}", "", overrides);
  ASSERT_TRUE(config.ok());
  EXPECT_EQ(config->seed, 9u);
  EXPECT_EQ(config->synthetic.seed, 9u);
  EXPECT_EQ(config->out_dir, "/tmp/x");
}

TEST(LoadConfigTest, DatasetPathIsRelativeToConfigFile) {
  const auto dir = std::filesystem::path(::testing::TempDir()) / "cfg_rel";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "events.csv") << "user_id,app_id,timestamp\nu,a,1\n";
  std::ofstream(dir / "c.json") << R"({"dataset": {"path": "events.csv"}})";
  auto config = LoadConfig((dir / "c.json").string(), {});
  ASSERT_TRUE(config.ok()) << config.status();
  EXPECT_EQ(config->dataset_path, (dir / "events.csv").string());
  std::ofstream(dir / "missing.json") << R"({"dataset": {"path": "nope.csv"}})";
  auto missing = LoadConfig((dir / "missing.json").string(), {});
  ASSERT_FALSE(missing.ok());
  EXPECT_THAT(missing.status().message(), HasSubstr("dataset.path"));
  EXPECT_FALSE(LoadConfig((dir / "absent.json").string(), {}).ok());
}

}  // namespace
}  // namespace fedseq
