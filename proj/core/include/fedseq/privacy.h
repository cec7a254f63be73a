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

#ifndef FEDSEQ_PRIVACY_H_
#define FEDSEQ_PRIVACY_H_

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include "absl/strings/string_view.h"
#include <variant>
#include <vector>

#include "Eigen/Dense"
#include "absl/status/statusor.h"

namespace fedseq {

using Rng = std::mt19937_64;

enum class Mechanism { kNone, kLaplace, kKHarmony, kQHarmony };

absl::string_view MechanismName(Mechanism mechanism);
absl::StatusOr<Mechanism> ParseMechanism(absl::string_view name);

// How a client reports the largest gradient entry alongside its triples.
// kSigned takes the plain maximum, as QHarmony prescribes. kAbsolute takes the
// maximum magnitude instead; it is an opt-in deviation that keeps the server
// scale positive when every entry is negative.
enum class FmaxMode { kSigned, kAbsolute };

struct MechanismConfig {
  Mechanism mechanism = Mechanism::kNone;
  double epsilon = 1.0;  // +inf is accepted and means "no noise"
  int k = 1;
  FmaxMode fmax_mode = FmaxMode::kSigned;
};

struct NormalizedGradient {
  Eigen::MatrixXd values;  // entries in [-1, 1]
  double scale = 1.0;
};

// Divides by the max-abs entry. An all-zero gradient is returned unchanged
// with scale 1. NaN or infinite entries are rejected.
absl::StatusOr<NormalizedGradient> NormalizeGradient(const Eigen::MatrixXd& f);
Eigen::MatrixXd Denormalize(const NormalizedGradient& g);

// One transmitted coordinate: a randomized sign at (row, col).
struct PerturbedEntry {
  int value = 0;  // -1 or +1
  int row = 0;
  int col = 0;

  friend bool operator==(const PerturbedEntry&, const PerturbedEntry&) = default;
};

// What a Harmony-family client sends: k distinct coordinates plus f_max.
struct PerturbedGradientMessage {
  std::vector<PerturbedEntry> entries;
  double f_max = 0.0;

  friend bool operator==(const PerturbedGradientMessage&,
                         const PerturbedGradientMessage&) = default;
};

// P[+1 | f] = (f (e^x - 1) + e^x + 1) / (2 (e^x + 1)) with x = epsilon / k,
// evaluated as (1 + f tanh(x/2)) / 2, which stays finite for x = +inf.
double PlusProbability(double f, double epsilon_per_coordinate);

// P[y | f] for y in {-1, +1}; P[-1] = 1 - P[+1].
double OutputProbability(int y, double f, double epsilon_per_coordinate);

// E[perturbed value | f] = f (e^x - 1) / (e^x + 1).
double ExpectedPerturbedValue(double f, double epsilon_per_coordinate);

// Client side shared by QHarmony and k-Harmony. Samples k distinct (row, col)
// pairs uniformly without replacement, in sampling order, and replaces each
// selected entry by a randomized sign. f_max is the maximum of
// `f_norm * scale`; with the default scale of 1 that is the maximum of f_norm
// itself, otherwise it is the maximum of the raw gradient.
absl::StatusOr<PerturbedGradientMessage> HarmonyClient(
    const Eigen::MatrixXd& f_norm, double epsilon, int k, Rng& rng,
    double scale = 1.0, FmaxMode fmax_mode = FmaxMode::kSigned);

inline absl::StatusOr<PerturbedGradientMessage> QHarmonyClient(
    const Eigen::MatrixXd& f_norm, double epsilon, int k, Rng& rng,
    double scale = 1.0, FmaxMode fmax_mode = FmaxMode::kSigned) {
  return HarmonyClient(f_norm, epsilon, k, rng, scale, fmax_mode);
}

inline absl::StatusOr<PerturbedGradientMessage> KHarmonyClient(
    const Eigen::MatrixXd& f_norm, double epsilon, int k, Rng& rng,
    double scale = 1.0, FmaxMode fmax_mode = FmaxMode::kSigned) {
  return HarmonyClient(f_norm, epsilon, k, rng, scale, fmax_mode);
}

// QHarmony server aggregation. Accumulates the reported signs into S and the
// count of positive reports into Z, then returns (max_u f_max(u) / max Z) S.
// Returns zeros when no client reported a positive sign.
absl::StatusOr<Eigen::MatrixXd> QHarmonyServer(
    std::span<const PerturbedGradientMessage> messages, int rows, int cols);

// (rows * cols / k) (e^x + 1) / (e^x - 1), x = epsilon / k.
double KHarmonyDebiasFactor(int rows, int cols, double epsilon, int k);

// Unbiased estimate of the mean normalized gradient: each received sign is
// multiplied by the debias factor, placed at its coordinate, and the densified
// matrices are averaged over clients.
absl::StatusOr<Eigen::MatrixXd> KHarmonyAggregate(
    std::span<const PerturbedGradientMessage> messages, int rows, int cols,
    double epsilon, int k);

// Laplace scale b with per-element variance 2 b^2 = 4 N^2 d^2 / epsilon^2.
double LaplaceScale(int rows, int cols, double epsilon);

// Adds i.i.d. Laplace noise of scale LaplaceScale(...) to every entry.
absl::StatusOr<Eigen::MatrixXd> LaplaceMechanism(const Eigen::MatrixXd& f_norm,
                                                 double epsilon, Rng& rng);

struct LdpReport {
  double max_ratio = 0.0;
  double bound = 0.0;  // e^{epsilon / k}
  bool satisfied = false;
};

// Worst-case per-coordinate probability ratio of a discrete-output mechanism,
// maximized over outputs y and inputs v, v' in [-1, 1]. Continuous-output and
// deterministic mechanisms are rejected as unsupported.
absl::StatusOr<LdpReport> LdpRatioCheck(Mechanism mechanism, double epsilon,
                                        int k);

// P[y | v] / P[y | v'] for one Harmony coordinate.
double HarmonyRatio(int y, double v, double v_prime,
                    double epsilon_per_coordinate);

// The client-to-server boundary. Nothing else crosses it.
struct PassthroughUpload {
  Eigen::MatrixXd gradient;  // raw F(u); only with Mechanism::kNone
};

struct LaplaceUpload {
  Eigen::MatrixXd noisy;  // normalized gradient plus Laplace noise
  double f_max = 0.0;
};

using ClientUpload =
    std::variant<PassthroughUpload, PerturbedGradientMessage, LaplaceUpload>;

// Runs the configured mechanism on a raw local gradient.
absl::StatusOr<ClientUpload> PrivatizeGradient(const Eigen::MatrixXd& gradient,
                                               const MechanismConfig& config,
                                               Rng& rng);

// Server-side estimate of the summed gradient over the reporting clients.
// kNone sums exactly; kQHarmony is QHarmonyServer; k-Harmony and Laplace
// return |U_b| times their mean estimate, rescaled by max_u f_max(u).
absl::StatusOr<Eigen::MatrixXd> AggregateUploads(
    std::span<const ClientUpload> uploads, int rows, int cols,
    const MechanismConfig& config);

// Log format: "u,f_max,k" then k lines "value,row,col" in sampling order.
std::string SerializeMessage(int user, const PerturbedGradientMessage& message);

struct UserMessage {
  int user = 0;
  PerturbedGradientMessage message;
};

// Parses a concatenation of serialized messages.
absl::StatusOr<std::vector<UserMessage>> ParseMessages(absl::string_view text);

}  // namespace fedseq

#endif  // FEDSEQ_PRIVACY_H_
