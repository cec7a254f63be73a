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

#ifndef FEDSEQ_SYNTHETIC_H_
#define FEDSEQ_SYNTHETIC_H_

#include <cstdint>
#include <vector>

#include "Eigen/Dense"
#include "fedseq/ingest.h"

namespace fedseq {

struct SyntheticOptions {
  int num_users = 50;
  int num_apps = 40;
  // Dimension of the latent app/user vectors the generator draws from.
  int latent_dim = 4;
  int steps_per_user = 500;
  uint64_t seed = 1;

  // When set, every transition row equals the user's popularity prior, so the
  // stream is i.i.d. per user and carries no sequential signal.
  bool memoryless = false;
  // Weight of app-app latent similarity in the transition logits.
  double sequence_strength = 6.0;
  // Weight of the user's own taste in transition and popularity logits.
  double preference_strength = 1.5;
  // Scale of per-user idiosyncratic transition noise.
  double transition_noise = 0.5;
  // Mean of the geometric session length (in launches).
  double mean_session_length = 8.0;
  // Users start on a uniformly drawn day in [0, max_start_day_offset], which
  // makes the per-day active-user histogram uneven.
  int max_start_day_offset = 6;
  // Non-stationary taste: every `focus_period_days` each user redraws a focus
  // subset (each installed app joins with probability 1/3) whose launch
  // probabilities are multiplied by exp(focus_strength). 0 keeps the stream
  // stationary.
  double focus_strength = 0.0;
  int focus_period_days = 3;
};

// The stationary generating process behind one user's stream (before any
// focus reweighting).
struct UserGenerator {
  // Installed apps, ascending. Matrix/vector indices refer to positions here.
  std::vector<int> installed;
  // Row-stochastic |installed| x |installed| transition matrix (source rows).
  Eigen::MatrixXd transition;
  // Distribution of the first app of every session.
  Eigen::VectorXd popularity;
};

struct SyntheticDataset {
  EventLog log;
  std::vector<UserGenerator> generators;
};

// Per-user Markov streams over a random installed subset of 5..min(N, 20)
// apps. Sessions have geometric length and are separated by gaps longer than
// the default session threshold; within a session consecutive launches are
// 5..120 s apart. Exactly `steps_per_user` events per user; app and user ids
// coincide with generator indices. Deterministic for a given seed.
SyntheticDataset GenerateSynthetic(const SyntheticOptions& options);

EventLog GenerateSynthetic(int num_users, int num_apps, int latent_dim,
                           int steps_per_user, uint64_t seed);

}  // namespace fedseq

#endif  // FEDSEQ_SYNTHETIC_H_
