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

#ifndef FEDSEQ_FEDERATION_H_
#define FEDSEQ_FEDERATION_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"
#include "absl/strings/string_view.h"
#include "fedseq/ingest.h"
#include "fedseq/privacy.h"
#include "fedseq/seqmf.h"

namespace fedseq {

// When user embeddings are refreshed on the device.
enum class Regime {
  kFull,    // every cycle
  kRare,    // only on cycles that also update Q
  kGlobal,  // never; p keeps its random initialization
};

absl::string_view RegimeName(Regime regime);
absl::StatusOr<Regime> ParseRegime(absl::string_view name);

// Whether a client in `regime` recomputes p on a cycle.
bool UpdatesUserEmbedding(Regime regime, bool q_update_cycle);

enum class Optimizer { kGradientDescent, kMomentum, kAdam };

absl::string_view OptimizerName(Optimizer optimizer);
absl::StatusOr<Optimizer> ParseOptimizer(absl::string_view name);

struct OptimizerConfig {
  Optimizer kind = Optimizer::kAdam;
  double learning_rate = 0.05;
  double momentum = 0.9;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // When positive, the aggregated gradient is rescaled to at most this
  // Frobenius norm before lambda Q is added. 0 disables clipping.
  double max_grad_norm = 0.0;
};

struct ServerState {
  ItemEmbeddings q;
  // Velocity for momentum, first moment for Adam.
  Eigen::MatrixXd first_moment;
  Eigen::MatrixXd second_moment;
  int64_t step = 0;
  double lambda = 0.0;
  OptimizerConfig optimizer;

  static ServerState Create(ItemEmbeddings q, double lambda,
                            OptimizerConfig optimizer);
  void ResetOptimizer(OptimizerConfig optimizer);
};

// Applies one optimizer step with G = clip(aggregated) + lambda Q. Plain gradient
// descent is exactly Q := Q - learning_rate * G. Rejects non-finite input
// without touching the state.
absl::Status ServerUpdate(ServerState& server,
                          const Eigen::MatrixXd& aggregated);

struct ClientConfig {
  int num_apps = 0;
  double alpha = 0.1;
  double gamma = 0.5;
  double lambda = 0.1;
  bool sequence_aware = true;
  // Most recent launches kept for the statistics; 0 keeps everything.
  int history_window = 0;
};

// Device-side state. Only uploads derived from it leave the device.
struct ClientState {
  int user_id = 0;
  UserEmbedding p;
  std::vector<int> history;
  // Empty until the device has enough history to define its statistics.
  std::optional<UserStatistics> stats;
  int64_t q_version = -1;
};

ClientState CreateClient(int user_id, int dim, uint64_t seed);

// Appends `new_apps`, rebuilds a/C/S from the (windowed) history and, when
// `update_embedding` is set and statistics exist, re-solves p against `q`.
absl::Status ClientLocalStep(ClientState& client, const ItemEmbeddings& q,
                             int64_t q_version, std::span<const int> new_apps,
                             const ClientConfig& config, bool update_embedding);

// Computes F(u) on the device and runs it through the privacy mechanism.
absl::StatusOr<ClientUpload> ClientUploadFor(const ClientState& client,
                                             const ItemEmbeddings& q,
                                             const MechanismConfig& privacy,
                                             Rng& rng);

// Deterministic per-client stream, independent of processing order.
Rng ClientRng(uint64_t seed, int64_t round, int user_id);

struct Aggregate {
  Eigen::MatrixXd gradient;
  double inf_norm = 0.0;
  // Harmony-family uploads in participant order, when requested.
  std::vector<UserMessage> messages;
};

// Gathers uploads from `participants` and aggregates them with the
// mechanism's server rule. Every participant must have statistics.
absl::StatusOr<Aggregate> CollectGradients(
    std::span<const ClientState* const> participants, const ItemEmbeddings& q,
    const MechanismConfig& privacy, uint64_t seed, int64_t round,
    bool keep_messages = false);

struct TrainingConfig {
  Hyperparams hyper;
  bool sequence_aware = true;
  Regime regime = Regime::kFull;
  // Q is updated on cycles whose 1-based number is a multiple of this.
  int q_update_period = 1;
  // Fraction of the cycle's active users sampled into U_b.
  double participation = 1.0;
  int server_steps_per_update = 1;
  int history_window = 0;
  MechanismConfig privacy;
  OptimizerConfig optimizer;
  uint64_t seed = 1;
  // Record the exact loss in the round log when no privacy is applied.
  bool log_loss = true;
  // Keep every perturbed message in the simulator's message log.
  bool log_messages = false;
};

absl::Status ValidateTrainingConfig(const TrainingConfig& config,
                                    int num_apps);

struct RoundLogRow {
  int cycle = 0;
  std::string phase;
  int users_active = 0;
  Mechanism mechanism = Mechanism::kNone;
  double epsilon = 0.0;
  double grad_inf_norm = 0.0;
  std::optional<double> loss;
};

// Header "cycle,phase,users_active,mechanism,epsilon,grad_inf_norm,loss_or_NA".
std::string SerializeRoundLog(std::span<const RoundLogRow> rows);

struct PretrainConfig {
  int rounds = 100;
  OptimizerConfig optimizer;
  MechanismConfig privacy;
};

// Single-process emulation of the hybrid protocol: ALS on devices, privatized
// gradient aggregation and an optimizer step on the server.
class FederatedSimulator {
 public:
  static absl::StatusOr<FederatedSimulator> Create(
      int num_users, int num_apps, const TrainingConfig& config,
      std::optional<ItemEmbeddings> initial_q = std::nullopt);

  // Feeds the cycle's launches to every device, refreshes p per the regime
  // and, on Q-update cycles, runs the configured number of server rounds over
  // a sample of the cycle's active users. `cycle_number` is 1-based.
  absl::Status RunCycle(int cycle_number,
                        const std::vector<std::vector<int>>& new_apps);

  // Appends launches and rebuilds statistics without touching p or Q.
  absl::Status Observe(const std::vector<std::vector<int>>& new_apps);

  // Re-solves p on every device that has statistics.
  absl::Status UpdateUserEmbeddings();

  // One aggregation + optimizer step over `participants` (user ids).
  absl::Status ServerRound(std::span<const int> participants, int cycle,
                           absl::string_view phase,
                           const MechanismConfig& privacy);

  // Full-participation alternating optimization, then restores the training
  // optimizer with a fresh state.
  absl::Status Pretrain(const PretrainConfig& pretrain);

  // Copy of the current state (Q, every device's history and p) that continues
  // under another regime and mechanism, with a fresh optimizer state and an
  // empty round log. Under Global every p goes back to its initialization,
  // since that regime never fits user embeddings.
  absl::StatusOr<FederatedSimulator> Fork(Regime regime,
                                          const MechanismConfig& privacy) const;

  // Redraws every p from its initialization distribution.
  void ResetUserEmbeddings(uint64_t seed);

  // Exact loss over devices with statistics.
  absl::StatusOr<double> CurrentLoss() const;

  absl::StatusOr<std::vector<double>> Score(
      int user, std::span<const int> recent,
      std::span<const int> candidates) const;

  const ServerState& server() const { return server_; }
  const std::vector<ClientState>& clients() const { return clients_; }
  const std::vector<RoundLogRow>& round_log() const { return round_log_; }
  // Perturbed messages in wire format, in round then participant order.
  // Empty unless `log_messages` is set.
  const std::string& message_log() const { return message_log_; }
  const TrainingConfig& config() const { return config_; }
  ClientConfig client_config() const;
  std::vector<int> UsersWithStatistics() const;

 private:
  FederatedSimulator(TrainingConfig config, int num_apps, ServerState server,
                     std::vector<ClientState> clients)
      : config_(std::move(config)),
        num_apps_(num_apps),
        server_(std::move(server)),
        clients_(std::move(clients)) {}

  TrainingConfig config_;
  int num_apps_;
  ServerState server_;
  std::vector<ClientState> clients_;
  std::vector<RoundLogRow> round_log_;
  std::string message_log_;
  int64_t rounds_ = 0;
  int64_t q_version_ = 0;
};

// Uniform draw in [-0.01, 0.01] per entry.
ItemEmbeddings InitialItemEmbeddings(int num_apps, int dim, uint64_t seed);

struct TrainingResult {
  ServerState server;
  std::vector<ClientState> clients;
  std::vector<RoundLogRow> round_log;
};

// Drives a simulator over consecutive cycles (numbered from 1).
absl::StatusOr<TrainingResult> RunTraining(
    std::span<const Cycle> cycles, int num_users, int num_apps,
    const TrainingConfig& config,
    std::optional<ItemEmbeddings> initial_q = std::nullopt);

// Per-user app id sequences of a cycle.
std::vector<std::vector<int>> CycleApps(const Cycle& cycle);
std::vector<std::vector<int>> LogApps(const EventLog& log);

}  // namespace fedseq

#endif  // FEDSEQ_FEDERATION_H_
