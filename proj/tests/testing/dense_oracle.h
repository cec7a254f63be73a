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

// Independent dense re-implementations used as test oracles. Everything here
// is written with explicit loops over dense matrices and shares no code with
// the library beyond its data types.

#ifndef FEDSEQ_TESTS_TESTING_DENSE_ORACLE_H_
#define FEDSEQ_TESTS_TESTING_DENSE_ORACLE_H_

#include <cstdint>
#include <vector>

#include "Eigen/Dense"
#include "fedseq/seqmf.h"

namespace fedseq::testing {

struct DenseUser {
  Eigen::VectorXd p;
  Eigen::VectorXd a;  // binary
  Eigen::VectorXd c;  // positive, sums to 1
  Eigen::MatrixXd s;  // row-stochastic or zero rows
};

struct DenseInstance {
  Eigen::MatrixXd q;
  std::vector<DenseUser> users;
  double lambda = 0.0;
};

// Random instance with M users, N apps, dimension d. Q and p entries are
// uniform in [-scale, scale]; about half of each S row is zero.
DenseInstance RandomInstance(int m, int n, int d, uint64_t seed,
                             double scale = 0.5);

UserStatistics ToStatistics(const DenseUser& user);
std::vector<UserStatistics> ToStatistics(const DenseInstance& instance);
std::vector<UserEmbedding> Embeddings(const DenseInstance& instance);

// r_i = sum_k Q_ik p_k + sum_j S_ij sum_k Q_ik Q_jk.
Eigen::VectorXd DenseRelevance(const Eigen::MatrixXd& q, const DenseUser& u);

double DenseLoss(const Eigen::MatrixXd& q, const std::vector<DenseUser>& users,
                 double lambda);

// Central differences of DenseLoss with respect to every entry of Q.
Eigen::MatrixXd FiniteDifferenceQ(const DenseInstance& instance, double step);

// Central differences of one user's loss block with respect to p.
Eigen::VectorXd FiniteDifferenceP(const Eigen::MatrixXd& q, const DenseUser& u,
                                  double lambda, double step);

// Analytic dLoss/dQ summed over users plus lambda Q, written entrywise.
Eigen::MatrixXd DenseGradientQ(const Eigen::MatrixXd& q,
                               const std::vector<DenseUser>& users,
                               double lambda);

}  // namespace fedseq::testing

#endif  // FEDSEQ_TESTS_TESTING_DENSE_ORACLE_H_
