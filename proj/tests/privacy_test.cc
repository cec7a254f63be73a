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

#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"

namespace fedseq {
namespace {

using ::testing::HasSubstr;

constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd Grad2x2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

TEST(NormalizeGradientTest, DividesByMaxAbs) {
  auto g = NormalizeGradient(Grad2x2(1, -4, 2, 0));
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(g->scale, 4.0);
  EXPECT_EQ(g->values, Grad2x2(0.25, -1, 0.5, 0));
}

TEST(NormalizeGradientTest, ZeroIsUnchanged) {
  auto g = NormalizeGradient(Eigen::MatrixXd::Zero(3, 2));
  ASSERT_TRUE(g.ok());
  EXPECT_EQ(g->scale, 1.0);
  EXPECT_TRUE(g->values.isZero(0.0));
}

TEST(NormalizeGradientTest, NanIsError) {
  EXPECT_FALSE(NormalizeGradient(Grad2x2(1, std::nan(""), 0, 0)).ok());
}

TEST(NormalizeGradientProperty, RoundTrip) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::MatrixXd f =
        Eigen::MatrixXd::NullaryExpr(5, 3, [&] { return normal(rng); });
    auto g = NormalizeGradient(f);
    ASSERT_TRUE(g.ok());
    EXPECT_LE(g->values.cwiseAbs().maxCoeff(), 1.0);
    EXPECT_LT((Denormalize(*g) - f).norm() / f.norm(), 1e-12);
  }
}

TEST(PlusProbabilityTest, ClosedForms) {
  EXPECT_EQ(PlusProbability(0.0, 0.7), 0.5);
  EXPECT_EQ(PlusProbability(0.0, kInf), 0.5);
  for (double x : {0.1, 1.0, 3.0}) {
    EXPECT_NEAR(PlusProbability(1.0, x), std::exp(x) / (std::exp(x) + 1.0),
                1e-15);
    // The printed form (f (e^x - 1) + e^x + 1) / (2 (e^x + 1)).
    for (double f : {-1.0, -0.3, 0.6}) {
      const double e = std::exp(x);
      EXPECT_NEAR(PlusProbability(f, x),
                  (f * (e - 1.0) + e + 1.0) / (2.0 * (e + 1.0)), 1e-15);
    }
  }
}

TEST(PlusProbabilityTest, ExpectedValueByExactProbabilities) {
  for (double x : {0.1, 0.5, 1.0, 2.0, 4.5}) {
    const double e = std::exp(x);
    for (double f : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
      const double exact =
          OutputProbability(1, f, x) - OutputProbability(-1, f, x);
      EXPECT_NEAR(exact, f * (e - 1.0) / (e + 1.0), 1e-15);
      EXPECT_NEAR(ExpectedPerturbedValue(f, x), exact, 1e-15);
    }
  }
}

TEST(PlusProbabilityProperty, ValidDistribution) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> f(-1.0, 1.0);
  std::uniform_real_distribution<double> x(1e-3, 20.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double v = f(rng);
    const double eps = x(rng);
    const double plus = OutputProbability(1, v, eps);
    const double minus = OutputProbability(-1, v, eps);
    EXPECT_GT(plus, 0.0);
    EXPECT_LT(plus, 1.0);
    EXPECT_EQ(plus + minus, 1.0);
  }
}

TEST(PlusProbabilityProperty, LargeBudgetIsStochasticQuantizer) {
  for (double f = -1.0; f <= 1.0; f += 0.125) {
    EXPECT_NEAR(PlusProbability(f, 50.0), (f + 1.0) / 2.0, 1e-10);
  }
}

TEST(HarmonyClientTest, DistinctInRangeCoordinates) {
  Rng rng(3);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Constant(4, 3, 0.2);
  for (int k : {1, 5, 12}) {
    auto m = QHarmonyClient(f, 1.0, k, rng);
    ASSERT_TRUE(m.ok());
    ASSERT_EQ(m->entries.size(), static_cast<size_t>(k));
    std::set<std::pair<int, int>> seen;
    for (const auto& e : m->entries) {
      EXPECT_TRUE(e.value == 1 || e.value == -1);
      EXPECT_GE(e.row, 0);
      EXPECT_LT(e.row, 4);
      EXPECT_GE(e.col, 0);
      EXPECT_LT(e.col, 3);
      seen.insert({e.row, e.col});
    }
    EXPECT_EQ(seen.size(), static_cast<size_t>(k));
  }
}

TEST(HarmonyClientTest, BudgetErrors) {
  Rng rng(4);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2, 2);
  EXPECT_FALSE(QHarmonyClient(f, 1.0, 5, rng).ok());
  EXPECT_FALSE(QHarmonyClient(f, 1.0, 0, rng).ok());
  EXPECT_FALSE(QHarmonyClient(f, 0.0, 1, rng).ok());
  EXPECT_FALSE(QHarmonyClient(f, -1.0, 1, rng).ok());
  EXPECT_FALSE(QHarmonyClient(Grad2x2(2, 0, 0, 0), 1.0, 1, rng).ok());
}

TEST(HarmonyClientTest, SignedAndAbsoluteFmax) {
  Rng rng(5);
  const Eigen::MatrixXd f = Grad2x2(-1.0, -0.5, -0.25, -0.75);
  auto signed_max = QHarmonyClient(f, 1.0, 1, rng, 8.0);
  ASSERT_TRUE(signed_max.ok());
  EXPECT_EQ(signed_max->f_max, -2.0);
  auto abs_max = QHarmonyClient(f, 1.0, 1, rng, 8.0, FmaxMode::kAbsolute);
  ASSERT_TRUE(abs_max.ok());
  EXPECT_EQ(abs_max->f_max, 8.0);
}

TEST(HarmonyClientTest, MessageSizeIndependentOfShape) {
  Rng rng(6);
  for (int n : {3, 30, 300}) {
    auto m = QHarmonyClient(Eigen::MatrixXd::Zero(n, 8), 2.0, 3, rng);
    ASSERT_TRUE(m.ok());
    EXPECT_EQ(m->entries.size(), 3u);
  }
}

TEST(HarmonyClientTest, DeterministicGivenSeed) {
  const Eigen::MatrixXd f = Eigen::MatrixXd::Constant(5, 4, -0.3);
  Rng a(77), b(77);
  auto ma = QHarmonyClient(f, 1.5, 6, a);
  auto mb = QHarmonyClient(f, 1.5, 6, b);
  ASSERT_TRUE(ma.ok() && mb.ok());
  EXPECT_EQ(*ma, *mb);
}

TEST(HarmonyClientTest, SamplingIsUniform) {
  // 12 coordinates, k = 3: each is picked with probability 1/4.
  Rng rng(8);
  const Eigen::MatrixXd f = Eigen::MatrixXd::Zero(4, 3);
  std::vector<int> hits(12, 0);
  const int draws = 40000;
  for (int t = 0; t < draws; ++t) {
    auto m = QHarmonyClient(f, 1.0, 3, rng);
    ASSERT_TRUE(m.ok());
    for (const auto& e : m->entries) ++hits[e.row * 3 + e.col];
  }
  const double mean = draws * 0.25;
  const double sigma = std::sqrt(draws * 0.25 * 0.75);
  for (int h : hits) EXPECT_NEAR(h, mean, 5.0 * sigma);
}

TEST(QHarmonyServerTest, SingleMessage) {
  PerturbedGradientMessage m{{{1, 1, 0}}, 0.5};
  auto f = QHarmonyServer({&m, 1}, 2, 2);
  ASSERT_TRUE(f.ok());
  EXPECT_EQ(*f, Grad2x2(0, 0, 0.5, 0));
}

TEST(QHarmonyServerTest, AllNegativeReportsGiveZero) {
  std::vector<PerturbedGradientMessage> ms = {{{{-1, 0, 0}}, 0.3},
                                              {{{-1, 1, 1}}, 0.9}};
  auto f = QHarmonyServer(ms, 2, 2);
  ASSERT_TRUE(f.ok());
  EXPECT_TRUE(f->isZero(0.0));
}

TEST(QHarmonyServerTest, ThreeClientHandTrace) {
  std::vector<PerturbedGradientMessage> ms = {
      {{{1, 0, 0}, {-1, 1, 1}}, 0.8},
      {{{1, 0, 0}, {1, 0, 1}}, 0.5},
      {{{-1, 0, 0}, {1, 1, 0}}, 0.9},
  };
  // S = [[1, 1], [1, -1]], Z = [[2, 1], [1, 0]], scale 0.9 / 2.
  auto f = QHarmonyServer(ms, 2, 2);
  ASSERT_TRUE(f.ok());
  EXPECT_LE((*f - Grad2x2(0.45, 0.45, 0.45, -0.45)).cwiseAbs().maxCoeff(),
            1e-15);
}

TEST(QHarmonyServerTest, Errors) {
  EXPECT_FALSE(QHarmonyServer({}, 2, 2).ok());
  PerturbedGradientMessage bad{{{1, 2, 0}}, 0.5};
  EXPECT_FALSE(QHarmonyServer({&bad, 1}, 2, 2).ok());
}

// Every equally likely ordered draw of k distinct flat indices out of n.
void ForEachOrderedSample(int n, int k,
                          const std::function<void(const std::vector<int>&)>& fn) {
  std::vector<int> current;
  std::vector<bool> used(n, false);
  std::function<void()> rec = [&] {
    if (static_cast<int>(current.size()) == k) {
      fn(current);
      return;
    }
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      used[i] = true;
      current.push_back(i);
      rec();
      current.pop_back();
      used[i] = false;
    }
  };
  rec();
}

struct Outcome {
  PerturbedGradientMessage message;
  double probability = 0.0;
};

// Exact output distribution of one Harmony client.
std::vector<Outcome> ClientOutcomes(const Eigen::MatrixXd& f, double epsilon,
                                    int k) {
  const int n = static_cast<int>(f.size());
  const int cols = static_cast<int>(f.cols());
  double orderings = 1.0;
  for (int i = 0; i < k; ++i) orderings *= n - i;
  std::vector<Outcome> out;
  ForEachOrderedSample(n, k, [&](const std::vector<int>& sample) {
    for (int signs = 0; signs < (1 << k); ++signs) {
      Outcome o;
      o.probability = 1.0 / orderings;
      o.message.f_max = f.maxCoeff();
      for (int l = 0; l < k; ++l) {
        const int row = sample[l] / cols;
        const int col = sample[l] % cols;
        const int value = (signs >> l) & 1 ? 1 : -1;
        o.probability *= OutputProbability(value, f(row, col), epsilon / k);
        o.message.entries.push_back({value, row, col});
      }
      out.push_back(std::move(o));
    }
  });
  return out;
}

TEST(KHarmonyTest, DebiasFactorLimit) {
  EXPECT_NEAR(KHarmonyDebiasFactor(2, 3, 1e3, 1), 6.0, 1e-12);
  EXPECT_NEAR(KHarmonyDebiasFactor(2, 3, kInf, 2), 3.0, 1e-12);
}

TEST(KHarmonyTest, ExactExpectationIsMeanGradient) {
  const Eigen::MatrixXd f1 = Grad2x2(1.0, -0.5, 0.25, 0.0);
  const Eigen::MatrixXd f2 = Grad2x2(-0.75, 1.0, -1.0, 0.5);
  const Eigen::MatrixXd mean = 0.5 * (f1 + f2);
  for (int k : {1, 2}) {
    for (double epsilon : {0.1, 1.0, 4.5, 20.0}) {
      const auto o1 = ClientOutcomes(f1, epsilon, k);
      const auto o2 = ClientOutcomes(f2, epsilon, k);
      Eigen::MatrixXd expectation = Eigen::MatrixXd::Zero(2, 2);
      double total = 0.0;
      for (const auto& a : o1) {
        for (const auto& b : o2) {
          std::vector<PerturbedGradientMessage> ms = {a.message, b.message};
          auto agg = KHarmonyAggregate(ms, 2, 2, epsilon, k);
          ASSERT_TRUE(agg.ok());
          expectation += a.probability * b.probability * *agg;
          total += a.probability * b.probability;
        }
      }
      EXPECT_NEAR(total, 1.0, 1e-12);
      EXPECT_LE((expectation - mean).cwiseAbs().maxCoeff(), 1e-12)
          << "k=" << k << " eps=" << epsilon;
    }
  }
}

TEST(LaplaceTest, ScaleMatchesStatedVariance) {
  const double b = LaplaceScale(4, 2, 1.0);
  EXPECT_NEAR(2.0 * b * b, 4.0 * 16.0 * 4.0, 1e-9);
}

TEST(LaplaceTest, InfiniteBudgetIsIdentity) {
  Rng rng(9);
  const Eigen::MatrixXd f = Grad2x2(0.5, -1, 0.25, 0);
  auto out = LaplaceMechanism(f, kInf, rng);
  ASSERT_TRUE(out.ok());
  EXPECT_EQ(*out, f);
}

TEST(LaplaceTest, NonPositiveBudgetIsError) {
  Rng rng(10);
  EXPECT_FALSE(LaplaceMechanism(Eigen::MatrixXd::Zero(2, 2), 0.0, rng).ok());
}

TEST(LaplaceTest, UnbiasedMean) {
  Rng rng(11);
  const Eigen::MatrixXd f = Grad2x2(0.5, -1, 0.25, 0);
  const int draws = 100000;
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(2, 2);
  for (int t = 0; t < draws; ++t) {
    auto out = LaplaceMechanism(f, 1.0, rng);
    ASSERT_TRUE(out.ok());
    sum += *out;
  }
  const double sigma = std::sqrt(2.0) * LaplaceScale(2, 2, 1.0);
  EXPECT_LE(((sum / draws) - f).cwiseAbs().maxCoeff(),
            3.0 * sigma / std::sqrt(draws));
}

TEST(LdpRatioCheckTest, WorstCaseEqualsBound) {
  for (double x : {0.1, 0.5, 1.0, 2.0}) {
    auto report = LdpRatioCheck(Mechanism::kQHarmony, 3.0 * x, 3);
    ASSERT_TRUE(report.ok());
    EXPECT_NEAR(report->max_ratio, std::exp(x), 1e-12);
    EXPECT_TRUE(report->satisfied);
  }
  EXPECT_NEAR(HarmonyRatio(1, 1.0, -1.0, 1.0), std::exp(1.0), 1e-12);
  EXPECT_EQ(HarmonyRatio(1, 0.3, 0.3, 1.0), 1.0);
}

TEST(LdpRatioCheckTest, DenseGridNeverExceedsBound) {
  for (double x : {0.1, 0.5, 1.0, 2.0}) {
    for (double v = -1.0; v <= 1.0; v += 0.05) {
      for (double w = -1.0; w <= 1.0; w += 0.05) {
        for (int y : {-1, 1}) {
          EXPECT_LE(HarmonyRatio(y, v, w, x), std::exp(x) + 1e-12);
        }
      }
    }
  }
}

TEST(LdpRatioCheckTest, ContinuousMechanismUnsupported) {
  auto report = LdpRatioCheck(Mechanism::kLaplace, 1.0, 1);
  ASSERT_FALSE(report.ok());
  EXPECT_EQ(report.status().code(), absl::StatusCode::kUnimplemented);
  EXPECT_FALSE(LdpRatioCheck(Mechanism::kNone, 1.0, 1).ok());
}

TEST(PrivatizeGradientTest, PassthroughSumsExactly) {
  Rng rng(12);
  std::vector<ClientUpload> uploads;
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(2, 2);
  for (int u = 0; u < 3; ++u) {
    const Eigen::MatrixXd g = Grad2x2(u, -u * 0.5, 1.0 / (u + 1), 3);
    expected += g;
    auto up = PrivatizeGradient(g, MechanismConfig{}, rng);
    ASSERT_TRUE(up.ok());
    uploads.push_back(*up);
  }
  auto agg = AggregateUploads(uploads, 2, 2, MechanismConfig{});
  ASSERT_TRUE(agg.ok());
  EXPECT_EQ(*agg, expected);
}

TEST(PrivatizeGradientTest, UploadTypesMatchMechanism) {
  Rng rng(13);
  const Eigen::MatrixXd g = Grad2x2(4, -2, 1, 0);
  MechanismConfig q{Mechanism::kQHarmony, 1.0, 2};
  MechanismConfig l{Mechanism::kLaplace, 1.0, 1};
  auto uq = PrivatizeGradient(g, q, rng);
  auto ul = PrivatizeGradient(g, l, rng);
  ASSERT_TRUE(uq.ok() && ul.ok());
  ASSERT_TRUE(std::holds_alternative<PerturbedGradientMessage>(*uq));
  EXPECT_EQ(std::get<PerturbedGradientMessage>(*uq).f_max, 4.0);
  ASSERT_TRUE(std::holds_alternative<LaplaceUpload>(*ul));
  std::vector<ClientUpload> mixed = {*uq, *ul};
  EXPECT_FALSE(AggregateUploads(mixed, 2, 2, q).ok());
  EXPECT_FALSE(AggregateUploads({}, 2, 2, q).ok());
}

TEST(MechanismNameTest, RoundTrip) {
  for (Mechanism m : {Mechanism::kNone, Mechanism::kLaplace,
                      Mechanism::kKHarmony, Mechanism::kQHarmony}) {
    auto parsed = ParseMechanism(MechanismName(m));
    ASSERT_TRUE(parsed.ok());
    EXPECT_EQ(*parsed, m);
  }
  EXPECT_FALSE(ParseMechanism("kashin").ok());
}

TEST(MessageWireTest, RoundTrip) {
  Rng rng(14);
  std::string text;
  std::vector<PerturbedGradientMessage> sent;
  for (int u = 0; u < 4; ++u) {
    auto m = QHarmonyClient(Eigen::MatrixXd::Constant(6, 3, 0.1 * u - 0.2),
                            1.0, 1 + u, rng, 1.0 / 3.0);
    ASSERT_TRUE(m.ok());
    sent.push_back(*m);
    text += SerializeMessage(u, *m);
  }
  auto parsed = ParseMessages(text);
  ASSERT_TRUE(parsed.ok()) << parsed.status();
  ASSERT_EQ(parsed->size(), 4u);
  for (int u = 0; u < 4; ++u) {
    EXPECT_EQ((*parsed)[u].user, u);
    EXPECT_EQ((*parsed)[u].message, sent[u]);
  }
}

TEST(MessageWireTest, Layout) {
  PerturbedGradientMessage m{{{1, 2, 0}, {-1, 0, 1}}, 0.5};
  EXPECT_EQ(SerializeMessage(7, m), "7,0.5,2\n1,2,0\n-1,0,1\n");
}

TEST(MessageWireTest, MalformedInput) {
  auto truncated = ParseMessages("1,0.5,2\n1,0,0\n");
  ASSERT_FALSE(truncated.ok());
  EXPECT_THAT(truncated.status().message(), HasSubstr("truncated"));
  EXPECT_FALSE(ParseMessages("1,0.5\n").ok());
  EXPECT_FALSE(ParseMessages("1,0.5,1\nx,0,0\n").ok());
}

}  // namespace
}  // namespace fedseq
