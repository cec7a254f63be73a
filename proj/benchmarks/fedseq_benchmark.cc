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

#include <random>
#include <vector>

#include "benchmark/benchmark.h"
#include "fedseq/privacy.h"
#include "fedseq/seqmf.h"

namespace fedseq {
namespace {

std::vector<int> RandomHistory(int length, int num_apps, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> app(0, num_apps - 1);
  std::vector<int> history(length);
  for (int& a : history) a = app(rng);
  return history;
}

ItemEmbeddings RandomQ(int num_apps, int dim, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.1);
  ItemEmbeddings q(num_apps, dim);
  for (int i = 0; i < q.size(); ++i) q.data()[i] = normal(rng);
  return q;
}

// Scoring one prediction: cost grows with the recency window, not with N.
void BM_RelevanceInfer(benchmark::State& state) {
  const int num_apps = static_cast<int>(state.range(0));
  const ItemEmbeddings q = RandomQ(num_apps, 32, 1);
  const UserEmbedding p = q.row(0).transpose();
  const std::vector<int> recent = RandomHistory(10, num_apps, 2);
  std::vector<int> candidates(std::min(num_apps, 40));
  for (size_t i = 0; i < candidates.size(); ++i) candidates[i] = i;
  for (auto _ : state) {
    benchmark::DoNotOptimize(RelevanceInfer(q, p, recent, candidates));
  }
}
BENCHMARK(BM_RelevanceInfer)->Arg(100)->Arg(1000)->Arg(10000);

void BM_RelevanceTrain(benchmark::State& state) {
  const int num_apps = static_cast<int>(state.range(0));
  const ItemEmbeddings q = RandomQ(num_apps, 32, 1);
  const UserEmbedding p = q.row(0).transpose();
  const auto s = BuildTransitionMatrix(RandomHistory(500, num_apps, 2), num_apps);
  for (auto _ : state) {
    benchmark::DoNotOptimize(RelevanceTrain(q, p, *s));
  }
}
BENCHMARK(BM_RelevanceTrain)->Arg(100)->Arg(1000)->Arg(10000);

void BM_AlsUserUpdate(benchmark::State& state) {
  const int num_apps = static_cast<int>(state.range(0));
  const ItemEmbeddings q = RandomQ(num_apps, 32, 1);
  const auto stats = BuildUserStatistics(RandomHistory(500, num_apps, 2),
                                         num_apps, 0.1, 0.5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(AlsUserUpdate(q, *stats, 0.1));
  }
}
BENCHMARK(BM_AlsUserUpdate)->Arg(100)->Arg(1000);

void BM_LocalGradient(benchmark::State& state) {
  const int num_apps = static_cast<int>(state.range(0));
  const ItemEmbeddings q = RandomQ(num_apps, 32, 1);
  const auto stats = BuildUserStatistics(RandomHistory(500, num_apps, 2),
                                         num_apps, 0.1, 0.5);
  const UserEmbedding p = *AlsUserUpdate(q, *stats, 0.1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(LocalGradient(q, p, *stats));
  }
}
BENCHMARK(BM_LocalGradient)->Arg(100)->Arg(1000);

void BM_QHarmonyClient(benchmark::State& state) {
  const int k = static_cast<int>(state.range(0));
  const ItemEmbeddings f = RandomQ(1000, 32, 3);
  const auto normalized = NormalizeGradient(f);
  Rng rng(4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(QHarmonyClient(normalized->values, 1.0, k, rng));
  }
}
BENCHMARK(BM_QHarmonyClient)->Arg(1)->Arg(32)->Arg(1024);

void BM_QHarmonyServer(benchmark::State& state) {
  const int clients = static_cast<int>(state.range(0));
  const ItemEmbeddings f = RandomQ(1000, 32, 3);
  const auto normalized = NormalizeGradient(f);
  Rng rng(4);
  std::vector<PerturbedGradientMessage> messages;
  for (int u = 0; u < clients; ++u) {
    messages.push_back(*QHarmonyClient(normalized->values, 1.0, 32, rng));
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(QHarmonyServer(messages, 1000, 32));
  }
}
BENCHMARK(BM_QHarmonyServer)->Arg(10)->Arg(100)->Arg(1000);

}  // namespace
}  // namespace fedseq

BENCHMARK_MAIN();
