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

#ifndef FEDSEQ_SEQMF_H_
#define FEDSEQ_SEQMF_H_

#include <span>
#include <vector>

#include "Eigen/Dense"
#include "Eigen/SparseCore"
#include "absl/status/statusor.h"

namespace fedseq {

// App embeddings q_i stored row-wise, N x d. Lives on the server.
using ItemEmbeddings = Eigen::MatrixXd;
// User embedding p_u, length d. Never leaves the device.
using UserEmbedding = Eigen::VectorXd;

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

// Row-stochastic app-to-app transition frequencies of one user. Row = source
// app, column = the app launched immediately after it. Rows of apps that never
// act as a source are zero.
struct TransitionMatrix {
  SparseRowMatrix values;

  int size() const { return static_cast<int>(values.rows()); }
  static TransitionMatrix Zero(int num_apps);
};

// Diagonal of the per-user confidence matrix; a probability vector.
struct ConfidenceWeights {
  Eigen::VectorXd values;
};

struct Hyperparams {
  int dim = 32;
  double lambda = 0.1;
  // Laplace smoothing and frequency exponent of the confidence weights.
  double alpha = 0.1;
  double gamma = 0.5;
  // Number of most recent in-session apps used at inference.
  int recency = 10;
};

// Everything a device derives from its own history for training.
struct UserStatistics {
  Eigen::VectorXd interactions;  // binary a_u
  ConfidenceWeights confidence;
  TransitionMatrix transitions;
};

absl::StatusOr<TransitionMatrix> BuildTransitionMatrix(
    std::span<const int> history, int num_apps);

// c_i = (n_i^gamma + alpha) / (sum_j n_j^gamma + alpha * N), where n_i is the
// launch count of app i and 0^gamma is taken as 0 for every gamma.
absl::StatusOr<ConfidenceWeights> BuildConfidence(std::span<const int> history,
                                                  double alpha, double gamma,
                                                  int num_apps);

absl::StatusOr<Eigen::VectorXd> BuildInteractionVector(
    std::span<const int> history, int num_apps);

// Bundles the three builders. With `sequence_aware` false the transition
// matrix is all zeros, which reduces the model to plain weighted MF.
absl::StatusOr<UserStatistics> BuildUserStatistics(std::span<const int> history,
                                                   int num_apps, double alpha,
                                                   double gamma,
                                                   bool sequence_aware = true);

// h_i = sum_j S_ij q_i.q_j, i.e. diag(S Q Q^T), in O(nnz(S) d).
Eigen::VectorXd SequenceTerm(const ItemEmbeddings& q, const TransitionMatrix& s);

// Training-time relevance r = Q p + diag(S Q Q^T).
absl::StatusOr<Eigen::VectorXd> RelevanceTrain(const ItemEmbeddings& q,
                                               const UserEmbedding& p,
                                               const TransitionMatrix& s);

// Inference-time relevance for each candidate, in candidate order:
// q_i.p + q_i.(sum of q_k over `recent`). Reads only the embedding rows of
// candidates and recent apps.
absl::StatusOr<std::vector<double>> RelevanceInfer(
    const ItemEmbeddings& q, const UserEmbedding& p,
    std::span<const int> recent, std::span<const int> candidates);

// The min(|candidates|, n) candidates with the highest scores, best first.
// Equal scores are ordered by ascending app index.
std::vector<int> TopRec(std::span<const double> scores,
                        std::span<const int> candidates, int n);

// 1/2 sum_u ||r_u - a_u||^2_{C_u} + lambda/2 (sum_u ||p_u||^2 + ||Q||_F^2).
absl::StatusOr<double> Loss(const ItemEmbeddings& q,
                            std::span<const UserEmbedding> users,
                            std::span<const UserStatistics> stats,
                            double lambda);

// Closed-form minimizer of the loss in p_u with Q fixed:
// p = (Q^T C Q + lambda I)^{-1} Q^T C (a - h(Q)).
absl::StatusOr<UserEmbedding> AlsUserUpdate(const ItemEmbeddings& q,
                                            const UserStatistics& stats,
                                            double lambda);

// dLoss/dp_u = Q^T C (r - a) + lambda p.
Eigen::VectorXd UserEmbeddingGradient(const ItemEmbeddings& q,
                                      const UserEmbedding& p,
                                      const UserStatistics& stats,
                                      double lambda);

// One user's contribution to dLoss/dQ:
// F(u) = D e p^T + (D S + S^T D) Q with D = diag(C (r - a)).
// The lambda Q term is the server's responsibility.
absl::StatusOr<Eigen::MatrixXd> LocalGradient(const ItemEmbeddings& q,
                                              const UserEmbedding& p,
                                              const UserStatistics& stats);

}  // namespace fedseq

#endif  // FEDSEQ_SEQMF_H_
