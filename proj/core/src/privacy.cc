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

#include "fedseq/privacy.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/strings/ascii.h"
#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_split.h"
#include "fedseq/status_macros.h"

namespace fedseq {
namespace {

absl::Status CheckBudget(double epsilon, int k, int64_t entries) {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", epsilon));
  }
  if (k < 1 || k > entries) {
    return absl::InvalidArgumentError(absl::StrCat(
        "k must lie in [1, N*d = ", entries, "], got ", k));
  }
  return absl::OkStatus();
}

absl::Status CheckMessages(std::span<const PerturbedGradientMessage> messages,
                           int rows, int cols) {
  if (messages.empty()) {
    return absl::InvalidArgumentError("aggregation needs at least one message");
  }
  for (const auto& m : messages) {
    for (const auto& e : m.entries) {
      if (e.row < 0 || e.row >= rows || e.col < 0 || e.col >= cols) {
        return absl::OutOfRangeError(absl::StrCat(
            "message coordinate (", e.row, ",", e.col, ") outside ", rows,
            "x", cols));
      }
      if (e.value != 1 && e.value != -1) {
        return absl::InvalidArgumentError("message value must be +1 or -1");
      }
    }
  }
  return absl::OkStatus();
}

double MaxFmax(std::span<const PerturbedGradientMessage> messages) {
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& m : messages) best = std::max(best, m.f_max);
  return best;
}

std::string FormatDouble(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

absl::string_view MechanismName(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::kNone:
      return "none";
    case Mechanism::kLaplace:
      return "laplace";
    case Mechanism::kKHarmony:
      return "kharmony";
    case Mechanism::kQHarmony:
      return "qharmony";
  }
  return "unknown";
}

absl::StatusOr<Mechanism> ParseMechanism(absl::string_view name) {
  const std::string lower = absl::AsciiStrToLower(name);
  if (lower == "none" || lower == "passthrough") return Mechanism::kNone;
  if (lower == "laplace") return Mechanism::kLaplace;
  if (lower == "kharmony" || lower == "k-harmony") return Mechanism::kKHarmony;
  if (lower == "qharmony") return Mechanism::kQHarmony;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown privacy mechanism '", name, "'"));
}

absl::StatusOr<NormalizedGradient> NormalizeGradient(const Eigen::MatrixXd& f) {
  if (!f.allFinite()) {
    return absl::InvalidArgumentError("gradient has non-finite entries");
  }
  const double max_abs = f.size() == 0 ? 0.0 : f.cwiseAbs().maxCoeff();
  if (max_abs == 0.0) return NormalizedGradient{f, 1.0};
  return NormalizedGradient{f / max_abs, max_abs};
}

Eigen::MatrixXd Denormalize(const NormalizedGradient& g) {
  return g.values * g.scale;
}

double PlusProbability(double f, double epsilon_per_coordinate) {
  return 0.5 * (1.0 + f * std::tanh(0.5 * epsilon_per_coordinate));
}

double OutputProbability(int y, double f, double epsilon_per_coordinate) {
  const double plus = PlusProbability(f, epsilon_per_coordinate);
  return y > 0 ? plus : 1.0 - plus;
}

double ExpectedPerturbedValue(double f, double epsilon_per_coordinate) {
  return f * std::tanh(0.5 * epsilon_per_coordinate);
}

absl::StatusOr<PerturbedGradientMessage> HarmonyClient(
    const Eigen::MatrixXd& f_norm, double epsilon, int k, Rng& rng,
    double scale, FmaxMode fmax_mode) {
  const int64_t total = f_norm.size();
  FEDSEQ_RETURN_IF_ERROR(CheckBudget(epsilon, k, total));
  if (!f_norm.allFinite() || f_norm.cwiseAbs().maxCoeff() > 1.0) {
    return absl::InvalidArgumentError(
        "normalized gradient entries must lie in [-1, 1]");
  }
  PerturbedGradientMessage message;
  message.f_max = scale * (fmax_mode == FmaxMode::kSigned
                               ? f_norm.maxCoeff()
                               : f_norm.cwiseAbs().maxCoeff());
  const double per_coordinate = epsilon / k;
  const int64_t cols = f_norm.cols();

  // Partial Fisher-Yates over the virtual array [0, total): position l holds
  // the l-th sampled flat index.
  absl::flat_hash_map<int64_t, int64_t> swapped;
  auto at = [&](int64_t i) {
    auto it = swapped.find(i);
    return it == swapped.end() ? i : it->second;
  };
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  message.entries.reserve(k);
  for (int64_t l = 0; l < k; ++l) {
    std::uniform_int_distribution<int64_t> pick(l, total - 1);
    const int64_t j = pick(rng);
    const int64_t chosen = at(j);
    swapped[j] = at(l);
    swapped[l] = chosen;
    const int row = static_cast<int>(chosen / cols);
    const int col = static_cast<int>(chosen % cols);
    const bool plus =
        unit(rng) < PlusProbability(f_norm(row, col), per_coordinate);
    message.entries.push_back({plus ? 1 : -1, row, col});
  }
  return message;
}

absl::StatusOr<Eigen::MatrixXd> QHarmonyServer(
    std::span<const PerturbedGradientMessage> messages, int rows, int cols) {
  FEDSEQ_RETURN_IF_ERROR(CheckMessages(messages, rows, cols));
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::MatrixXi positives = Eigen::MatrixXi::Zero(rows, cols);
  for (const auto& m : messages) {
    for (const auto& e : m.entries) {
      sum(e.row, e.col) += e.value;
      positives(e.row, e.col) += e.value > 0 ? 1 : 0;
    }
  }
  const int z_max = positives.maxCoeff();
  if (z_max == 0) return Eigen::MatrixXd::Zero(rows, cols);
  return (MaxFmax(messages) / z_max) * sum;
}

double KHarmonyDebiasFactor(int rows, int cols, double epsilon, int k) {
  const double coverage = static_cast<double>(rows) * cols / k;
  return coverage / std::tanh(0.5 * epsilon / k);
}

absl::StatusOr<Eigen::MatrixXd> KHarmonyAggregate(
    std::span<const PerturbedGradientMessage> messages, int rows, int cols,
    double epsilon, int k) {
  FEDSEQ_RETURN_IF_ERROR(CheckMessages(messages, rows, cols));
  FEDSEQ_RETURN_IF_ERROR(
      CheckBudget(epsilon, k, static_cast<int64_t>(rows) * cols));
  const double factor = KHarmonyDebiasFactor(rows, cols, epsilon, k);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(rows, cols);
  for (const auto& m : messages) {
    for (const auto& e : m.entries) mean(e.row, e.col) += factor * e.value;
  }
  return mean / static_cast<double>(messages.size());
}

double LaplaceScale(int rows, int cols, double epsilon) {
  return std::sqrt(2.0) * rows * cols / epsilon;
}

absl::StatusOr<Eigen::MatrixXd> LaplaceMechanism(const Eigen::MatrixXd& f_norm,
                                                 double epsilon, Rng& rng) {
  if (!(epsilon > 0.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", epsilon));
  }
  const double b = LaplaceScale(static_cast<int>(f_norm.rows()),
                                static_cast<int>(f_norm.cols()), epsilon);
  std::uniform_real_distribution<double> centered(-0.5, 0.5);
  Eigen::MatrixXd out = f_norm;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    double u = centered(rng);
    // Inverse CDF; u = -0.5 would map to -inf.
    while (u == -0.5) u = centered(rng);
    const double noise =
        b == 0.0 ? 0.0
                 : -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
    out.data()[i] += noise;
  }
  return out;
}

double HarmonyRatio(int y, double v, double v_prime,
                    double epsilon_per_coordinate) {
  return OutputProbability(y, v, epsilon_per_coordinate) /
         OutputProbability(y, v_prime, epsilon_per_coordinate);
}

absl::StatusOr<LdpReport> LdpRatioCheck(Mechanism mechanism, double epsilon,
                                        int k) {
  if (mechanism != Mechanism::kQHarmony && mechanism != Mechanism::kKHarmony) {
    return absl::UnimplementedError(absl::StrCat(
        "ratio check needs an enumerable output space; '",
        MechanismName(mechanism), "' is unsupported"));
  }
  if (!(epsilon > 0.0) || k < 1) {
    return absl::InvalidArgumentError("epsilon must be positive and k >= 1");
  }
  const double x = epsilon / k;
  // P[y | v] is affine in v, so the ratio is extremal at v, v' in {-1, 1}.
  LdpReport report;
  for (int y : {-1, 1}) {
    for (double v : {-1.0, 1.0}) {
      for (double v_prime : {-1.0, 1.0}) {
        report.max_ratio = std::max(report.max_ratio, HarmonyRatio(y, v, v_prime, x));
      }
    }
  }
  report.bound = std::exp(x);
  report.satisfied = report.max_ratio <= report.bound * (1.0 + 1e-12);
  return report;
}

absl::StatusOr<ClientUpload> PrivatizeGradient(const Eigen::MatrixXd& gradient,
                                               const MechanismConfig& config,
                                               Rng& rng) {
  if (config.mechanism == Mechanism::kNone) {
    if (!gradient.allFinite()) {
      return absl::InvalidArgumentError("gradient has non-finite entries");
    }
    return PassthroughUpload{gradient};
  }
  FEDSEQ_ASSIGN_OR_RETURN(NormalizedGradient normalized,
                          NormalizeGradient(gradient));
  switch (config.mechanism) {
    case Mechanism::kQHarmony:
    case Mechanism::kKHarmony: {
      FEDSEQ_ASSIGN_OR_RETURN(
          PerturbedGradientMessage message,
          HarmonyClient(normalized.values, config.epsilon, config.k, rng,
                        normalized.scale, config.fmax_mode));
      return message;
    }
    case Mechanism::kLaplace: {
      LaplaceUpload upload;
      FEDSEQ_ASSIGN_OR_RETURN(
          upload.noisy, LaplaceMechanism(normalized.values, config.epsilon, rng));
      upload.f_max = normalized.scale * (config.fmax_mode == FmaxMode::kSigned
                                             ? normalized.values.maxCoeff()
                                             : normalized.values.cwiseAbs().maxCoeff());
      return upload;
    }
    case Mechanism::kNone:
      break;
  }
  return absl::InternalError("unreachable mechanism");
}

absl::StatusOr<Eigen::MatrixXd> AggregateUploads(
    std::span<const ClientUpload> uploads, int rows, int cols,
    const MechanismConfig& config) {
  if (uploads.empty()) {
    return absl::InvalidArgumentError("aggregation needs at least one upload");
  }
  const double clients = static_cast<double>(uploads.size());
  switch (config.mechanism) {
    case Mechanism::kNone: {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
      for (const auto& upload : uploads) {
        const auto* p = std::get_if<PassthroughUpload>(&upload);
        if (p == nullptr || p->gradient.rows() != rows ||
            p->gradient.cols() != cols) {
          return absl::InvalidArgumentError("malformed passthrough upload");
        }
        sum += p->gradient;
      }
      return sum;
    }
    case Mechanism::kQHarmony:
    case Mechanism::kKHarmony: {
      std::vector<PerturbedGradientMessage> messages;
      messages.reserve(uploads.size());
      for (const auto& upload : uploads) {
        const auto* m = std::get_if<PerturbedGradientMessage>(&upload);
        if (m == nullptr) {
          return absl::InvalidArgumentError("expected a Harmony message");
        }
        messages.push_back(*m);
      }
      if (config.mechanism == Mechanism::kQHarmony) {
        return QHarmonyServer(messages, rows, cols);
      }
      FEDSEQ_ASSIGN_OR_RETURN(
          Eigen::MatrixXd mean,
          KHarmonyAggregate(messages, rows, cols, config.epsilon, config.k));
      return (clients * MaxFmax(messages)) * mean;
    }
    case Mechanism::kLaplace: {
      Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(rows, cols);
      double f_max = -std::numeric_limits<double>::infinity();
      for (const auto& upload : uploads) {
        const auto* l = std::get_if<LaplaceUpload>(&upload);
        if (l == nullptr || l->noisy.rows() != rows || l->noisy.cols() != cols) {
          return absl::InvalidArgumentError("malformed Laplace upload");
        }
        sum += l->noisy;
        f_max = std::max(f_max, l->f_max);
      }
      return f_max * sum;
    }
  }
  return absl::InternalError("unreachable mechanism");
}

std::string SerializeMessage(int user, const PerturbedGradientMessage& message) {
  std::string out = absl::StrCat(user, ",", FormatDouble(message.f_max), ",",
                                 message.entries.size(), "\n");
  for (const auto& e : message.entries) {
    absl::StrAppend(&out, e.value, ",", e.row, ",", e.col, "\n");
  }
  return out;
}

absl::StatusOr<std::vector<UserMessage>> ParseMessages(absl::string_view text) {
  std::vector<absl::string_view> lines =
      absl::StrSplit(text, '\n', absl::SkipWhitespace());
  std::vector<UserMessage> out;
  size_t i = 0;
  auto fields_of = [&](size_t line) -> std::vector<absl::string_view> {
    std::vector<absl::string_view> f = absl::StrSplit(lines[line], ',');
    for (auto& s : f) s = absl::StripAsciiWhitespace(s);
    return f;
  };
  while (i < lines.size()) {
    const auto head = fields_of(i);
    UserMessage um;
    int64_t k = 0;
    if (head.size() != 3 || !absl::SimpleAtoi(head[0], &um.user) ||
        !absl::SimpleAtod(head[1], &um.message.f_max) ||
        !absl::SimpleAtoi(head[2], &k) || k < 0) {
      return absl::InvalidArgumentError(
          absl::StrCat("message line ", i + 1, ": expected 'u,f_max,k'"));
    }
    ++i;
    for (int64_t l = 0; l < k; ++l, ++i) {
      if (i >= lines.size()) {
        return absl::InvalidArgumentError("message truncated");
      }
      const auto f = fields_of(i);
      PerturbedEntry e;
      if (f.size() != 3 || !absl::SimpleAtoi(f[0], &e.value) ||
          !absl::SimpleAtoi(f[1], &e.row) || !absl::SimpleAtoi(f[2], &e.col)) {
        return absl::InvalidArgumentError(
            absl::StrCat("message line ", i + 1, ": expected 'value,row,col'"));
      }
      um.message.entries.push_back(e);
    }
    out.push_back(std::move(um));
  }
  return out;
}

}  // namespace fedseq
