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

#include "fedseq/synthetic.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "absl/strings/str_cat.h"

namespace fedseq {
namespace {

// 2023-01-01T00:00:00Z, keeps day boundaries aligned with generator days.
constexpr Timestamp kEpochStart = 1672531200;

Eigen::VectorXd Softmax(const Eigen::VectorXd& logits) {
  const double peak = logits.maxCoeff();
  Eigen::VectorXd w = (logits.array() - peak).exp();
  return w / w.sum();
}

int SampleCategorical(const Eigen::Ref<const Eigen::VectorXd>& probs,
                      std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double u = unit(rng);
  double acc = 0.0;
  for (int i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace

SyntheticDataset GenerateSynthetic(const SyntheticOptions& options) {
  const int num_users = std::max(options.num_users, 2);
  const int num_apps = std::max(options.num_apps, 2);
  const int dim = std::max(options.latent_dim, 1);
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  Eigen::MatrixXd app_vectors(num_apps, dim);
  for (int i = 0; i < num_apps; ++i) {
    for (int k = 0; k < dim; ++k) app_vectors(i, k) = normal(rng);
    app_vectors.row(i).normalize();
  }

  SyntheticDataset data;
  for (int i = 0; i < num_apps; ++i) data.log.apps.Intern(absl::StrCat("app_", i));
  for (int u = 0; u < num_users; ++u) data.log.users.Intern(absl::StrCat("user_", u));

  const int min_installed = std::min(5, num_apps);
  const int max_installed = std::min(num_apps, 20);
  std::vector<int> all_apps(num_apps);
  std::iota(all_apps.begin(), all_apps.end(), 0);

  const double session_continue =
      options.mean_session_length > 1.0 ? 1.0 - 1.0 / options.mean_session_length
                                        : 0.0;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int64_t> in_session_gap(5, 120);
  std::uniform_int_distribution<int64_t> break_gap(3600, 10 * 3600);
  std::uniform_int_distribution<int> start_day(
      0, std::max(options.max_start_day_offset, 0));
  std::uniform_int_distribution<int> size_dist(min_installed, max_installed);

  for (int u = 0; u < num_users; ++u) {
    UserGenerator gen;
    std::shuffle(all_apps.begin(), all_apps.end(), rng);
    gen.installed.assign(all_apps.begin(), all_apps.begin() + size_dist(rng));
    std::sort(gen.installed.begin(), gen.installed.end());
    const int size = static_cast<int>(gen.installed.size());

    Eigen::VectorXd taste(dim);
    for (int k = 0; k < dim; ++k) taste[k] = normal(rng);
    Eigen::MatrixXd local(size, dim);
    for (int a = 0; a < size; ++a) local.row(a) = app_vectors.row(gen.installed[a]);
    Eigen::VectorXd preference = options.preference_strength * (local * taste);
    Eigen::VectorXd pop_logits = preference;
    for (int a = 0; a < size; ++a) pop_logits[a] += 0.5 * normal(rng);
    gen.popularity = Softmax(pop_logits);

    gen.transition.resize(size, size);
    if (options.memoryless) {
      for (int a = 0; a < size; ++a) gen.transition.row(a) = gen.popularity.transpose();
    } else {
      const Eigen::MatrixXd similarity = local * local.transpose();
      for (int a = 0; a < size; ++a) {
        Eigen::VectorXd logits = options.sequence_strength * similarity.row(a).transpose() + preference;
        for (int b = 0; b < size; ++b) logits[b] += options.transition_noise * normal(rng);
        gen.transition.row(a) = Softmax(logits).transpose();
      }
    }

    Timestamp t = kEpochStart + start_day(rng) * kSecondsPerDay +
                  static_cast<Timestamp>(unit(rng) * 8 * 3600);
    const bool drifting = options.focus_strength != 0.0;
    const int64_t period =
        std::max(options.focus_period_days, 1) * kSecondsPerDay;
    int64_t focus_epoch = -1;
    Eigen::VectorXd boost = Eigen::VectorXd::Ones(size);
    auto draw = [&](const Eigen::VectorXd& probs) {
      if (!drifting) return SampleCategorical(probs, rng);
      const int64_t epoch = (t - kEpochStart) / period;
      if (epoch != focus_epoch) {
        focus_epoch = epoch;
        for (int a = 0; a < size; ++a) {
          boost[a] = unit(rng) < 1.0 / 3.0 ? std::exp(options.focus_strength)
                                            : 1.0;
        }
      }
      const Eigen::VectorXd weighted = probs.cwiseProduct(boost);
      return SampleCategorical(weighted / weighted.sum(), rng);
    };

    int current = -1;
    for (int step = 0; step < options.steps_per_user; ++step) {
      if (current < 0) {
        current = draw(gen.popularity);
      } else if (unit(rng) < session_continue) {
        t += in_session_gap(rng);
        current = draw(gen.transition.row(current).transpose());
      } else {
        t += break_gap(rng);
        current = draw(gen.popularity);
      }
      data.log.events.push_back({u, gen.installed[current], t});
    }
    data.generators.push_back(std::move(gen));
  }
  std::stable_sort(data.log.events.begin(), data.log.events.end(),
                   [](const Event& a, const Event& b) {
                     return a.timestamp < b.timestamp;
                   });
  return data;
}

EventLog GenerateSynthetic(int num_users, int num_apps, int latent_dim,
                           int steps_per_user, uint64_t seed) {
  SyntheticOptions options;
  options.num_users = num_users;
  options.num_apps = num_apps;
  options.latent_dim = latent_dim;
  options.steps_per_user = steps_per_user;
  options.seed = seed;
  return GenerateSynthetic(options).log;
}

}  // namespace fedseq
