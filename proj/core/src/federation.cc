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

#include "fedseq/federation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <utility>

#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "fedseq/status_macros.h"

namespace fedseq {
namespace {

std::span<const int> Window(const std::vector<int>& history, int window) {
  std::span<const int> all(history);
  if (window <= 0 || static_cast<size_t>(window) >= all.size()) return all;
  return all.subspan(all.size() - window);
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

}  // namespace

absl::string_view RegimeName(Regime regime) {
  switch (regime) {
    case Regime::kFull:
      return "Full";
    case Regime::kRare:
      return "Rare";
    case Regime::kGlobal:
      return "Global";
  }
  return "unknown";
}

absl::StatusOr<Regime> ParseRegime(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "full") return Regime::kFull;
  if (lower == "rare") return Regime::kRare;
  if (lower == "global") return Regime::kGlobal;
  return absl::InvalidArgumentError(absl::StrCat("unknown regime '", name, "'"));
}

bool UpdatesUserEmbedding(Regime regime, bool q_update_cycle) {
  switch (regime) {
    case Regime::kFull:
      return true;
    case Regime::kRare:
      return q_update_cycle;
    case Regime::kGlobal:
      return false;
  }
  return false;
}

absl::string_view OptimizerName(Optimizer optimizer) {
  switch (optimizer) {
    case Optimizer::kGradientDescent:
      return "gd";
    case Optimizer::kMomentum:
      return "momentum";
    case Optimizer::kAdam:
      return "adam";
  }
  return "unknown";
}

absl::StatusOr<Optimizer> ParseOptimizer(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "gd" || lower == "sgd") return Optimizer::kGradientDescent;
  if (lower == "momentum") return Optimizer::kMomentum;
  if (lower == "adam") return Optimizer::kAdam;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown optimizer '", name, "'"));
}

ServerState ServerState::Create(ItemEmbeddings q, double lambda,
                                OptimizerConfig optimizer) {
  ServerState s;
  s.q = std::move(q);
  s.lambda = lambda;
  s.ResetOptimizer(optimizer);
  return s;
}

void ServerState::ResetOptimizer(OptimizerConfig config) {
  optimizer = config;
  first_moment = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  second_moment = Eigen::MatrixXd::Zero(q.rows(), q.cols());
  step = 0;
}

absl::Status ServerUpdate(ServerState& server,
                          const Eigen::MatrixXd& aggregated) {
  if (aggregated.rows() != server.q.rows() ||
      aggregated.cols() != server.q.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "aggregated gradient is ", aggregated.rows(), "x", aggregated.cols(),
        ", Q is ", server.q.rows(), "x", server.q.cols()));
  }
  if (!aggregated.allFinite()) {
    return absl::FailedPreconditionError(
        "aggregated gradient has non-finite entries; round aborted");
  }
  const OptimizerConfig& opt = server.optimizer;
  double clip = 1.0;
  if (opt.max_grad_norm > 0.0) {
    const double norm = aggregated.norm();
    if (norm > opt.max_grad_norm) clip = opt.max_grad_norm / norm;
  }
  const Eigen::MatrixXd grad = clip * aggregated + server.lambda * server.q;
  ++server.step;
  switch (opt.kind) {
    case Optimizer::kGradientDescent:
      server.q -= opt.learning_rate * grad;
      break;
    case Optimizer::kMomentum:
      server.first_moment = opt.momentum * server.first_moment + grad;
      server.q -= opt.learning_rate * server.first_moment;
      break;
    case Optimizer::kAdam: {
      server.first_moment =
          opt.beta1 * server.first_moment + (1.0 - opt.beta1) * grad;
      server.second_moment =
          opt.beta2 * server.second_moment +
          (1.0 - opt.beta2) * grad.cwiseProduct(grad);
      const double t = static_cast<double>(server.step);
      const double c1 = 1.0 - std::pow(opt.beta1, t);
      const double c2 = 1.0 - std::pow(opt.beta2, t);
      server.q.array() -=
          opt.learning_rate * (server.first_moment.array() / c1) /
          ((server.second_moment.array() / c2).sqrt() + opt.epsilon);
      break;
    }
  }
  return absl::OkStatus();
}

ClientState CreateClient(int user_id, int dim, uint64_t seed) {
  ClientState client;
  client.user_id = user_id;
  Rng rng = ClientRng(seed, -1, user_id);
  std::uniform_real_distribution<double> init(-0.01, 0.01);
  client.p.resize(dim);
  for (int k = 0; k < dim; ++k) client.p[k] = init(rng);
  return client;
}

absl::Status ClientLocalStep(ClientState& client, const ItemEmbeddings& q,
                             int64_t q_version, std::span<const int> new_apps,
                             const ClientConfig& config,
                             bool update_embedding) {
  if (!new_apps.empty() || !client.stats.has_value()) {
    client.history.insert(client.history.end(), new_apps.begin(),
                          new_apps.end());
    if (!client.history.empty()) {
      FEDSEQ_ASSIGN_OR_RETURN(
          client.stats,
          BuildUserStatistics(Window(client.history, config.history_window),
                              config.num_apps, config.alpha, config.gamma,
                              config.sequence_aware));
    }
  }
  if (update_embedding && client.stats.has_value()) {
    FEDSEQ_ASSIGN_OR_RETURN(client.p,
                            AlsUserUpdate(q, *client.stats, config.lambda));
    client.q_version = q_version;
  }
  return absl::OkStatus();
}

absl::StatusOr<ClientUpload> ClientUploadFor(const ClientState& client,
                                             const ItemEmbeddings& q,
                                             const MechanismConfig& privacy,
                                             Rng& rng) {
  if (!client.stats.has_value()) {
    return absl::FailedPreconditionError(
        absl::StrCat("client ", client.user_id, " has no statistics"));
  }
  FEDSEQ_ASSIGN_OR_RETURN(Eigen::MatrixXd gradient,
                          LocalGradient(q, client.p, *client.stats));
  return PrivatizeGradient(gradient, privacy, rng);
}

Rng ClientRng(uint64_t seed, int64_t round, int user_id) {
  const uint64_t r = static_cast<uint64_t>(round);
  std::seed_seq seq{static_cast<uint32_t>(seed), static_cast<uint32_t>(seed >> 32),
                    static_cast<uint32_t>(r), static_cast<uint32_t>(r >> 32),
                    static_cast<uint32_t>(user_id), 0x5eedu};
  return Rng(seq);
}

absl::StatusOr<Aggregate> CollectGradients(
    std::span<const ClientState* const> participants, const ItemEmbeddings& q,
    const MechanismConfig& privacy, uint64_t seed, int64_t round,
    bool keep_messages) {
  if (participants.empty()) {
    return absl::InvalidArgumentError("U_b is empty: no participating clients");
  }
  std::vector<ClientUpload> uploads;
  uploads.reserve(participants.size());
  for (const ClientState* client : participants) {
    Rng rng = ClientRng(seed, round, client->user_id);
    FEDSEQ_ASSIGN_OR_RETURN(ClientUpload upload,
                            ClientUploadFor(*client, q, privacy, rng));
    uploads.push_back(std::move(upload));
  }
  Aggregate out;
  if (keep_messages) {
    for (size_t i = 0; i < uploads.size(); ++i) {
      if (const auto* m = std::get_if<PerturbedGradientMessage>(&uploads[i])) {
        out.messages.push_back({participants[i]->user_id, *m});
      }
    }
  }
  FEDSEQ_ASSIGN_OR_RETURN(
      out.gradient,
      AggregateUploads(uploads, static_cast<int>(q.rows()),
                       static_cast<int>(q.cols()), privacy));
  out.inf_norm = out.gradient.size() == 0 ? 0.0
                                          : out.gradient.cwiseAbs().maxCoeff();
  return out;
}

absl::Status ValidateTrainingConfig(const TrainingConfig& config,
                                    int num_apps) {
  const Hyperparams& h = config.hyper;
  if (h.dim < 1) return absl::InvalidArgumentError("dim must be >= 1");
  if (!(h.lambda >= 0.0)) {
    return absl::InvalidArgumentError("lambda must be >= 0");
  }
  if (!(h.alpha >= 0.0 && h.alpha <= 1.0) ||
      !(h.gamma >= 0.0 && h.gamma <= 1.0)) {
    return absl::InvalidArgumentError("alpha and gamma must lie in [0, 1]");
  }
  if (h.recency < 1) return absl::InvalidArgumentError("recency must be >= 1");
  if (!(config.optimizer.learning_rate > 0.0)) {
    return absl::InvalidArgumentError("learning_rate must be positive");
  }
  if (config.q_update_period < 1) {
    return absl::InvalidArgumentError("q_update_period must be >= 1");
  }
  if (!(config.participation > 0.0 && config.participation <= 1.0)) {
    return absl::InvalidArgumentError("participation must lie in (0, 1]");
  }
  if (config.server_steps_per_update < 1) {
    return absl::InvalidArgumentError("server_steps_per_update must be >= 1");
  }
  if (config.privacy.mechanism != Mechanism::kNone) {
    if (!(config.privacy.epsilon > 0.0)) {
      return absl::InvalidArgumentError("epsilon must be positive");
    }
    const int64_t entries = static_cast<int64_t>(num_apps) * h.dim;
    if (config.privacy.k < 1 || config.privacy.k > entries) {
      return absl::InvalidArgumentError(
          absl::StrCat("k must lie in [1, N*d = ", entries, "]"));
    }
  }
  return absl::OkStatus();
}

std::string SerializeRoundLog(std::span<const RoundLogRow> rows) {
  std::string out =
      "cycle,phase,users_active,mechanism,epsilon,grad_inf_norm,loss_or_NA\n";
  for (const RoundLogRow& r : rows) {
    absl::StrAppend(&out, r.cycle, ",", r.phase, ",", r.users_active, ",",
                    MechanismName(r.mechanism), ",",
                    r.mechanism == Mechanism::kNone ? "NA"
                                                    : FormatDouble(r.epsilon),
                    ",", FormatDouble(r.grad_inf_norm), ",",
                    r.loss.has_value() ? FormatDouble(*r.loss) : "NA", "\n");
  }
  return out;
}

ItemEmbeddings InitialItemEmbeddings(int num_apps, int dim, uint64_t seed) {
  Rng rng = ClientRng(seed, -2, 0);
  std::uniform_real_distribution<double> init(-0.01, 0.01);
  ItemEmbeddings q(num_apps, dim);
  for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = init(rng);
  return q;
}

absl::StatusOr<FederatedSimulator> FederatedSimulator::Create(
    int num_users, int num_apps, const TrainingConfig& config,
    std::optional<ItemEmbeddings> initial_q) {
  FEDSEQ_RETURN_IF_ERROR(ValidateTrainingConfig(config, num_apps));
  ItemEmbeddings q = initial_q.has_value()
                         ? std::move(*initial_q)
                         : InitialItemEmbeddings(num_apps, config.hyper.dim,
                                                 config.seed);
  if (q.rows() != num_apps || q.cols() != config.hyper.dim) {
    return absl::InvalidArgumentError(absl::StrCat(
        "initial Q is ", q.rows(), "x", q.cols(), ", expected ", num_apps,
        "x", config.hyper.dim));
  }
  std::vector<ClientState> clients;
  clients.reserve(num_users);
  for (int u = 0; u < num_users; ++u) {
    clients.push_back(CreateClient(u, config.hyper.dim, config.seed));
  }
  return FederatedSimulator(
      config, num_apps,
      ServerState::Create(std::move(q), config.hyper.lambda, config.optimizer),
      std::move(clients));
}

ClientConfig FederatedSimulator::client_config() const {
  ClientConfig c;
  c.num_apps = num_apps_;
  c.alpha = config_.hyper.alpha;
  c.gamma = config_.hyper.gamma;
  c.lambda = config_.hyper.lambda;
  c.sequence_aware = config_.sequence_aware;
  c.history_window = config_.history_window;
  return c;
}

std::vector<int> FederatedSimulator::UsersWithStatistics() const {
  std::vector<int> users;
  for (const ClientState& c : clients_) {
    if (c.stats.has_value()) users.push_back(c.user_id);
  }
  return users;
}

absl::Status FederatedSimulator::Observe(
    const std::vector<std::vector<int>>& new_apps) {
  if (new_apps.size() != clients_.size()) {
    return absl::InvalidArgumentError("one app list per user expected");
  }
  const ClientConfig cc = client_config();
  for (ClientState& client : clients_) {
    FEDSEQ_RETURN_IF_ERROR(ClientLocalStep(client, server_.q, q_version_,
                                           new_apps[client.user_id], cc,
                                           /*update_embedding=*/false));
  }
  return absl::OkStatus();
}

absl::Status FederatedSimulator::UpdateUserEmbeddings() {
  const ClientConfig cc = client_config();
  for (ClientState& client : clients_) {
    FEDSEQ_RETURN_IF_ERROR(ClientLocalStep(client, server_.q, q_version_, {},
                                           cc, /*update_embedding=*/true));
  }
  return absl::OkStatus();
}

absl::Status FederatedSimulator::ServerRound(std::span<const int> participants,
                                             int cycle, absl::string_view phase,
                                             const MechanismConfig& privacy) {
  std::vector<const ClientState*> reporting;
  reporting.reserve(participants.size());
  for (int u : participants) {
    if (u < 0 || u >= static_cast<int>(clients_.size())) {
      return absl::OutOfRangeError(absl::StrCat("unknown user ", u));
    }
    if (clients_[u].stats.has_value()) reporting.push_back(&clients_[u]);
  }
  FEDSEQ_ASSIGN_OR_RETURN(
      Aggregate aggregate,
      CollectGradients(reporting, server_.q, privacy, config_.seed, rounds_,
                       config_.log_messages));
  for (const UserMessage& m : aggregate.messages) {
    absl::StrAppend(&message_log_, SerializeMessage(m.user, m.message));
  }
  absl::Status updated = ServerUpdate(server_, aggregate.gradient);
  if (!updated.ok()) {
    return absl::Status(updated.code(),
                        absl::StrCat("cycle ", cycle, " ", phase, " round ",
                                     rounds_, ": ", updated.message()));
  }
  ++rounds_;
  ++q_version_;
  RoundLogRow row;
  row.cycle = cycle;
  row.phase = std::string(phase);
  row.users_active = static_cast<int>(reporting.size());
  row.mechanism = privacy.mechanism;
  row.epsilon = privacy.epsilon;
  row.grad_inf_norm = aggregate.inf_norm;
  if (config_.log_loss && privacy.mechanism == Mechanism::kNone) {
    FEDSEQ_ASSIGN_OR_RETURN(row.loss, CurrentLoss());
  }
  round_log_.push_back(std::move(row));
  return absl::OkStatus();
}

absl::Status FederatedSimulator::Pretrain(const PretrainConfig& pretrain) {
  const std::vector<int> users = UsersWithStatistics();
  if (users.empty()) {
    return absl::FailedPreconditionError("pretraining needs observed data");
  }
  server_.ResetOptimizer(pretrain.optimizer);
  for (int r = 0; r < pretrain.rounds; ++r) {
    FEDSEQ_RETURN_IF_ERROR(UpdateUserEmbeddings());
    FEDSEQ_RETURN_IF_ERROR(ServerRound(users, 0, "pretrain", pretrain.privacy));
  }
  FEDSEQ_RETURN_IF_ERROR(UpdateUserEmbeddings());
  server_.ResetOptimizer(config_.optimizer);
  return absl::OkStatus();
}

absl::Status FederatedSimulator::RunCycle(
    int cycle_number, const std::vector<std::vector<int>>& new_apps) {
  if (new_apps.size() != clients_.size()) {
    return absl::InvalidArgumentError("one app list per user expected");
  }
  const bool q_update = cycle_number % config_.q_update_period == 0;
  const bool refresh_p = UpdatesUserEmbedding(config_.regime, q_update);
  const ClientConfig cc = client_config();
  std::vector<int> active;
  for (ClientState& client : clients_) {
    const auto& apps = new_apps[client.user_id];
    FEDSEQ_RETURN_IF_ERROR(ClientLocalStep(client, server_.q, q_version_,
                                           apps, cc, refresh_p));
    if (!apps.empty() && client.stats.has_value()) {
      active.push_back(client.user_id);
    }
  }
  if (!q_update || active.empty()) return absl::OkStatus();

  if (config_.participation < 1.0) {
    Rng rng = ClientRng(config_.seed, rounds_, -1);
    std::shuffle(active.begin(), active.end(), rng);
    const size_t keep = std::max<size_t>(
        1, static_cast<size_t>(std::lround(config_.participation *
                                           static_cast<double>(active.size()))));
    active.resize(std::min(keep, active.size()));
    std::sort(active.begin(), active.end());
  }
  for (int s = 0; s < config_.server_steps_per_update; ++s) {
    FEDSEQ_RETURN_IF_ERROR(
        ServerRound(active, cycle_number, "stream", config_.privacy));
  }
  return absl::OkStatus();
}

absl::StatusOr<FederatedSimulator> FederatedSimulator::Fork(
    Regime regime, const MechanismConfig& privacy) const {
  TrainingConfig config = config_;
  config.regime = regime;
  config.privacy = privacy;
  FEDSEQ_RETURN_IF_ERROR(ValidateTrainingConfig(config, num_apps_));
  FederatedSimulator fork = *this;
  fork.config_ = std::move(config);
  fork.server_.ResetOptimizer(fork.config_.optimizer);
  fork.round_log_.clear();
  fork.message_log_.clear();
  if (regime == Regime::kGlobal) fork.ResetUserEmbeddings(fork.config_.seed);
  return fork;
}

void FederatedSimulator::ResetUserEmbeddings(uint64_t seed) {
  for (ClientState& client : clients_) {
    client.p = CreateClient(client.user_id, config_.hyper.dim, seed).p;
    client.q_version = -1;
  }
}

absl::StatusOr<double> FederatedSimulator::CurrentLoss() const {
  std::vector<UserEmbedding> ps;
  std::vector<UserStatistics> stats;
  for (const ClientState& c : clients_) {
    if (!c.stats.has_value()) continue;
    ps.push_back(c.p);
    stats.push_back(*c.stats);
  }
  return Loss(server_.q, ps, stats, config_.hyper.lambda);
}

absl::StatusOr<std::vector<double>> FederatedSimulator::Score(
    int user, std::span<const int> recent,
    std::span<const int> candidates) const {
  if (user < 0 || user >= static_cast<int>(clients_.size())) {
    return absl::OutOfRangeError(absl::StrCat("unknown user ", user));
  }
  if (!config_.sequence_aware) recent = {};
  if (recent.size() > static_cast<size_t>(config_.hyper.recency)) {
    recent = recent.subspan(recent.size() - config_.hyper.recency);
  }
  return RelevanceInfer(server_.q, clients_[user].p, recent, candidates);
}

absl::StatusOr<TrainingResult> RunTraining(
    std::span<const Cycle> cycles, int num_users, int num_apps,
    const TrainingConfig& config, std::optional<ItemEmbeddings> initial_q) {
  FEDSEQ_ASSIGN_OR_RETURN(
      FederatedSimulator sim,
      FederatedSimulator::Create(num_users, num_apps, config,
                                 std::move(initial_q)));
  for (size_t i = 0; i < cycles.size(); ++i) {
    FEDSEQ_RETURN_IF_ERROR(
        sim.RunCycle(static_cast<int>(i) + 1, CycleApps(cycles[i])));
  }
  return TrainingResult{sim.server(), sim.clients(), sim.round_log()};
}

std::vector<std::vector<int>> CycleApps(const Cycle& cycle) {
  std::vector<std::vector<int>> out(cycle.per_user.size());
  for (size_t u = 0; u < cycle.per_user.size(); ++u) {
    for (const Event& e : cycle.per_user[u]) out[u].push_back(e.app_id);
  }
  return out;
}

std::vector<std::vector<int>> LogApps(const EventLog& log) {
  std::vector<std::vector<int>> out(log.num_users());
  for (const Event& e : log.events) out[e.user_id].push_back(e.app_id);
  return out;
}

}  // namespace fedseq
