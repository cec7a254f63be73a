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

#include "fedseq/seqmf.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "absl/status/status.h"
#include "absl/strings/str_cat.h"
#include "fedseq/status_macros.h"

namespace fedseq {
namespace {

absl::Status CheckHistory(std::span<const int> history, int num_apps) {
  if (num_apps <= 0) {
    return absl::InvalidArgumentError("num_apps must be positive");
  }
  for (int app : history) {
    if (app < 0 || app >= num_apps) {
      return absl::OutOfRangeError(
          absl::StrCat("app index ", app, " outside [0, ", num_apps, ")"));
    }
  }
  return absl::OkStatus();
}

absl::Status CheckShapes(const ItemEmbeddings& q, const UserEmbedding& p,
                         const UserStatistics& stats) {
  const auto n = q.rows();
  if (p.size() != q.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "user embedding has dimension ", p.size(), ", Q has ", q.cols()));
  }
  if (stats.interactions.size() != n || stats.confidence.values.size() != n ||
      stats.transitions.values.rows() != n ||
      stats.transitions.values.cols() != n) {
    return absl::InvalidArgumentError(
        absl::StrCat("user statistics do not match N = ", n));
  }
  return absl::OkStatus();
}

Eigen::VectorXd Relevance(const ItemEmbeddings& q, const UserEmbedding& p,
                          const TransitionMatrix& s) {
  return q * p + SequenceTerm(q, s);
}

}  // namespace

TransitionMatrix TransitionMatrix::Zero(int num_apps) {
  return {SparseRowMatrix(num_apps, num_apps)};
}

absl::StatusOr<TransitionMatrix> BuildTransitionMatrix(
    std::span<const int> history, int num_apps) {
  FEDSEQ_RETURN_IF_ERROR(CheckHistory(history, num_apps));
  TransitionMatrix out = TransitionMatrix::Zero(num_apps);
  if (history.size() < 2) return out;

  std::vector<double> source_count(num_apps, 0.0);
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(history.size() - 1);
  for (size_t k = 1; k < history.size(); ++k) {
    source_count[history[k - 1]] += 1.0;
    triplets.emplace_back(history[k - 1], history[k], 1.0);
  }
  // Duplicates are summed into pair counts.
  out.values.setFromTriplets(triplets.begin(), triplets.end());
  for (int row = 0; row < num_apps; ++row) {
    for (SparseRowMatrix::InnerIterator it(out.values, row); it; ++it) {
      it.valueRef() /= source_count[row];
    }
  }
  return out;
}

absl::StatusOr<ConfidenceWeights> BuildConfidence(std::span<const int> history,
                                                  double alpha, double gamma,
                                                  int num_apps) {
  FEDSEQ_RETURN_IF_ERROR(CheckHistory(history, num_apps));
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(gamma >= 0.0 && gamma <= 1.0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha and gamma must lie in [0, 1], got alpha=", alpha,
                     " gamma=", gamma));
  }
  std::vector<double> counts(num_apps, 0.0);
  for (int app : history) counts[app] += 1.0;
  Eigen::VectorXd weights(num_apps);
  for (int i = 0; i < num_apps; ++i) {
    weights[i] = (counts[i] > 0.0 ? std::pow(counts[i], gamma) : 0.0) + alpha;
  }
  const double total = weights.sum();
  if (total <= 0.0) {
    return absl::InvalidArgumentError(
        "confidence weights undefined: empty history with alpha = 0");
  }
  return ConfidenceWeights{weights / total};
}

absl::StatusOr<Eigen::VectorXd> BuildInteractionVector(
    std::span<const int> history, int num_apps) {
  FEDSEQ_RETURN_IF_ERROR(CheckHistory(history, num_apps));
  Eigen::VectorXd a = Eigen::VectorXd::Zero(num_apps);
  for (int app : history) a[app] = 1.0;
  return a;
}

absl::StatusOr<UserStatistics> BuildUserStatistics(std::span<const int> history,
                                                   int num_apps, double alpha,
                                                   double gamma,
                                                   bool sequence_aware) {
  UserStatistics stats;
  FEDSEQ_ASSIGN_OR_RETURN(stats.interactions,
                          BuildInteractionVector(history, num_apps));
  FEDSEQ_ASSIGN_OR_RETURN(stats.confidence,
                          BuildConfidence(history, alpha, gamma, num_apps));
  if (sequence_aware) {
    FEDSEQ_ASSIGN_OR_RETURN(stats.transitions,
                            BuildTransitionMatrix(history, num_apps));
  } else {
    stats.transitions = TransitionMatrix::Zero(num_apps);
  }
  return stats;
}

Eigen::VectorXd SequenceTerm(const ItemEmbeddings& q,
                             const TransitionMatrix& s) {
  Eigen::VectorXd h = Eigen::VectorXd::Zero(q.rows());
  for (int i = 0; i < s.values.outerSize(); ++i) {
    double acc = 0.0;
    for (SparseRowMatrix::InnerIterator it(s.values, i); it; ++it) {
      acc += it.value() * q.row(i).dot(q.row(it.col()));
    }
    h[i] = acc;
  }
  return h;
}

absl::StatusOr<Eigen::VectorXd> RelevanceTrain(const ItemEmbeddings& q,
                                               const UserEmbedding& p,
                                               const TransitionMatrix& s) {
  if (p.size() != q.cols() || s.values.rows() != q.rows() ||
      s.values.cols() != q.rows()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "dimension mismatch: Q is ", q.rows(), "x", q.cols(), ", p has ",
        p.size(), ", S is ", s.values.rows(), "x", s.values.cols()));
  }
  return Relevance(q, p, s);
}

absl::StatusOr<std::vector<double>> RelevanceInfer(
    const ItemEmbeddings& q, const UserEmbedding& p,
    std::span<const int> recent, std::span<const int> candidates) {
  if (candidates.empty()) {
    return absl::InvalidArgumentError("no candidate apps to score");
  }
  if (p.size() != q.cols()) {
    return absl::InvalidArgumentError(absl::StrCat(
        "user embedding has dimension ", p.size(), ", Q has ", q.cols()));
  }
  const auto in_range = [&](int app) { return app >= 0 && app < q.rows(); };
  if (!std::all_of(recent.begin(), recent.end(), in_range) ||
      !std::all_of(candidates.begin(), candidates.end(), in_range)) {
    return absl::OutOfRangeError("app index outside the embedding table");
  }
  Eigen::VectorXd context = p;
  for (int app : recent) context += q.row(app).transpose();
  std::vector<double> scores;
  scores.reserve(candidates.size());
  for (int app : candidates) scores.push_back(q.row(app).dot(context));
  return scores;
}

std::vector<int> TopRec(std::span<const double> scores,
                        std::span<const int> candidates, int n) {
  if (n < 1 || candidates.empty()) return {};
  std::vector<size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), 0);
  const size_t take = std::min(order.size(), static_cast<size_t>(n));
  std::partial_sort(order.begin(), order.begin() + take, order.end(),
                    [&](size_t a, size_t b) {
                      if (scores[a] != scores[b]) return scores[a] > scores[b];
                      return candidates[a] < candidates[b];
                    });
  std::vector<int> top;
  top.reserve(take);
  for (size_t i = 0; i < take; ++i) top.push_back(candidates[order[i]]);
  return top;
}

absl::StatusOr<double> Loss(const ItemEmbeddings& q,
                            std::span<const UserEmbedding> users,
                            std::span<const UserStatistics> stats,
                            double lambda) {
  if (users.size() != stats.size()) {
    return absl::InvalidArgumentError(
        "loss: user embeddings and statistics differ in count");
  }
  double total = 0.0;
  for (size_t u = 0; u < users.size(); ++u) {
    FEDSEQ_RETURN_IF_ERROR(CheckShapes(q, users[u], stats[u]));
    const Eigen::VectorXd residual =
        Relevance(q, users[u], stats[u].transitions) - stats[u].interactions;
    total += 0.5 * residual.dot(
                       stats[u].confidence.values.cwiseProduct(residual));
    total += 0.5 * lambda * users[u].squaredNorm();
  }
  total += 0.5 * lambda * q.squaredNorm();
  return total;
}

absl::StatusOr<UserEmbedding> AlsUserUpdate(const ItemEmbeddings& q,
                                            const UserStatistics& stats,
                                            double lambda) {
  FEDSEQ_RETURN_IF_ERROR(
      CheckShapes(q, UserEmbedding::Zero(q.cols()), stats));
  const Eigen::VectorXd& c = stats.confidence.values;
  const Eigen::MatrixXd weighted = c.asDiagonal() * q;
  Eigen::MatrixXd normal = q.transpose() * weighted;
  normal.diagonal().array() += lambda;
  const Eigen::VectorXd rhs =
      weighted.transpose() *
      (stats.interactions - SequenceTerm(q, stats.transitions));
  Eigen::LLT<Eigen::MatrixXd> llt(normal);
  if (llt.info() != Eigen::Success || llt.rcond() < 1e-14) {
    return absl::FailedPreconditionError(
        "ALS normal matrix is singular; increase lambda");
  }
  return UserEmbedding(llt.solve(rhs));
}

Eigen::VectorXd UserEmbeddingGradient(const ItemEmbeddings& q,
                                      const UserEmbedding& p,
                                      const UserStatistics& stats,
                                      double lambda) {
  const Eigen::VectorXd residual =
      Relevance(q, p, stats.transitions) - stats.interactions;
  return q.transpose() * stats.confidence.values.cwiseProduct(residual) +
         lambda * p;
}

absl::StatusOr<Eigen::MatrixXd> LocalGradient(const ItemEmbeddings& q,
                                              const UserEmbedding& p,
                                              const UserStatistics& stats) {
  FEDSEQ_RETURN_IF_ERROR(CheckShapes(q, p, stats));
  const SparseRowMatrix& s = stats.transitions.values;
  const Eigen::VectorXd weighted_residual = stats.confidence.values.cwiseProduct(
      Relevance(q, p, stats.transitions) - stats.interactions);
  Eigen::MatrixXd grad = weighted_residual * p.transpose();
  if (s.nonZeros() > 0) {
    grad.noalias() += weighted_residual.asDiagonal() * (s * q);
    grad.noalias() += s.transpose() * (weighted_residual.asDiagonal() * q);
  }
  return grad;
}

}  // namespace fedseq
