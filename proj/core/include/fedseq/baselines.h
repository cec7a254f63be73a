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

#ifndef FEDSEQ_BASELINES_H_
#define FEDSEQ_BASELINES_H_

#include <memory>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/statusor.h"
#include "fedseq/federation.h"
#include "fedseq/privacy.h"

namespace fedseq {

// Common interface of every next-app predictor: learn from launches, then
// score a user's candidate apps given the current session prefix.
class Predictor {
 public:
  virtual ~Predictor() = default;

  virtual std::string name() const = 0;

  // Per-user launch sequences, indexed by user id. Sequences continue the
  // user's previously observed stream.
  virtual absl::Status Observe(
      const std::vector<std::vector<int>>& new_apps) = 0;

  // One score per candidate, in candidate order.
  virtual absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) = 0;
};

// Immediate successor counts, source -> target.
class PairCounts {
 public:
  void Add(int from, int to, double count = 1.0);
  double Count(int from, int to) const;
  PairCounts& operator+=(const PairCounts& other);
  size_t size() const { return counts_.size(); }

 private:
  absl::flat_hash_map<std::pair<int, int>, double> counts_;
};

// score(i) = counts[last_app -> i]; all zeros when there is no last app.
std::vector<double> SrScore(const PairCounts& counts,
                            std::optional<int> last_app,
                            std::span<const int> candidates);

// The j-th most recent distinct app of the session scores 1/j; others 0.
std::vector<double> MruScore(std::span<const int> session,
                             std::span<const int> candidates);

// Lifetime launch count of each candidate.
std::vector<double> MfuScore(const absl::flat_hash_map<int, double>& counts,
                             std::span<const int> candidates);

// i.i.d. uniform(0, 1) per candidate.
std::vector<double> RandomScore(std::span<const int> candidates, Rng& rng);

// Sequential rules. `collaborative` pools counts over users (SR); otherwise
// each user only sees their own counts (SR-od).
class SequentialRulesPredictor : public Predictor {
 public:
  SequentialRulesPredictor(int num_users, bool collaborative);

  std::string name() const override { return collaborative_ ? "SR" : "SR-od"; }
  absl::Status Observe(const std::vector<std::vector<int>>& new_apps) override;
  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) override;

  const PairCounts& counts(int user) const {
    return collaborative_ ? pooled_ : per_user_[user];
  }

 private:
  bool collaborative_;
  PairCounts pooled_;
  std::vector<PairCounts> per_user_;
  std::vector<int> last_app_;
};

class MruPredictor : public Predictor {
 public:
  std::string name() const override { return "MRU"; }
  absl::Status Observe(const std::vector<std::vector<int>>&) override {
    return absl::OkStatus();
  }
  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) override;
};

class MfuPredictor : public Predictor {
 public:
  explicit MfuPredictor(int num_users) : counts_(num_users) {}

  std::string name() const override { return "MFU"; }
  absl::Status Observe(const std::vector<std::vector<int>>& new_apps) override;
  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) override;

 private:
  std::vector<absl::flat_hash_map<int, double>> counts_;
};

class RandomPredictor : public Predictor {
 public:
  explicit RandomPredictor(uint64_t seed) : rng_(seed) {}

  std::string name() const override { return "Random"; }
  absl::Status Observe(const std::vector<std::vector<int>>&) override {
    return absl::OkStatus();
  }
  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) override;

 private:
  Rng rng_;
};

// SeqMF (or plain MF when the simulator is not sequence-aware) backed by the
// federated simulator. Each Observe call is one training cycle.
class SeqMfPredictor : public Predictor {
 public:
  SeqMfPredictor(std::string name, FederatedSimulator simulator,
                 int next_cycle = 1)
      : name_(std::move(name)),
        simulator_(std::move(simulator)),
        next_cycle_(next_cycle) {}

  std::string name() const override { return name_; }
  absl::Status Observe(const std::vector<std::vector<int>>& new_apps) override;
  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> session,
      std::span<const int> candidates) override;

  FederatedSimulator& simulator() { return simulator_; }
  const FederatedSimulator& simulator() const { return simulator_; }

 private:
  std::string name_;
  FederatedSimulator simulator_;
  int next_cycle_;
};

enum class ModelKind { kSeqMf, kMf, kSr, kSrOd, kMru, kMfu, kRandom };

absl::string_view ModelName(ModelKind kind);
absl::StatusOr<ModelKind> ParseModel(absl::string_view name);
std::vector<ModelKind> AllModels();

// SR, SR-od, MRU, MFU or Random. Factor models need a trained simulator and
// are built by the experiment harness instead.
absl::StatusOr<std::unique_ptr<Predictor>> MakeBaseline(ModelKind kind,
                                                        int num_users,
                                                        uint64_t seed);

}  // namespace fedseq

#endif  // FEDSEQ_BASELINES_H_
