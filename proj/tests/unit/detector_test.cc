// Copyright 2026 The nfp Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "nfp/detector.h"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <set>

#include "nfp/error.h"
#include "test_util.h"

namespace nfp {
namespace {

using testing::MakeFingerprint;
using testing::Stats;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bank of `size` single-neuron fingerprints over N=n with random stats.
ClassBank RandomBank(std::uint64_t seed, std::size_t size, std::size_t n,
                     bool with_attack = true) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> mean(-2, 2), sd(0.2, 2);
  ClassBank bank;
  bank.n_neurons = n;
  bank.config.d = 1;
  bank.config.mode = with_attack ? BankMode::kTwoSample : BankMode::kCleanOnly;
  for (std::size_t i = 0; i < size; ++i) {
    std::optional<GaussianStats> attack;
    if (with_attack) attack = Stats(mean(gen), sd(gen));
    bank.fingerprints.push_back(MakeFingerprint(
        i, {static_cast<std::uint32_t>(gen() % n)}, n, Stats(mean(gen), sd(gen)),
        attack));
  }
  return bank;
}

std::vector<float> RandomVector(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<float> dist(0.0f, 1.5f);
  std::vector<float> v(n);
  for (float& x : v) x = dist(gen);
  return v;
}

FingerprintRefs All(const ClassBank& bank) {
  FingerprintRefs out;
  for (const auto& fp : bank.fingerprints) out.push_back(&fp);
  return out;
}

long double OracleLogDensity(long double x, long double mean, long double sd) {
  const long double z = (x - mean) / sd;
  return -0.5L * std::log(2.0L * std::numbers::pi_v<long double>) - std::log(sd) -
         0.5L * z * z;
}

// --- Names ------------------------------------------------------------------

TEST(RuleTest, NamesRoundTrip) {
  for (Rule r : kAllRules) EXPECT_EQ(ParseRule(RuleName(r)), r);
  EXPECT_EQ(ParseRule("likelihood_ratio"), Rule::kLikelihoodRatio);
  EXPECT_THROW(ParseRule("bayes"), ConfigError);
  EXPECT_TRUE(RuleNeedsAttackStats(Rule::kVote));
  EXPECT_FALSE(RuleNeedsAttackStats(Rule::kAnomaly));
}

// --- SelectFingerprints -----------------------------------------------------

TEST(SelectFingerprintsTest, KEqualsBankReturnsEverything) {
  const ClassBank bank = RandomBank(1, 30, 10);
  Rng rng(5);
  const auto sel = SelectFingerprints(bank, 30, rng);
  ASSERT_EQ(sel.size(), 30u);
  for (std::size_t i = 0; i < 30; ++i) EXPECT_EQ(sel[i], &bank.fingerprints[i]);
}

TEST(SelectFingerprintsTest, TooLargeKIsInsufficientBank) {
  const ClassBank bank = RandomBank(1, 3, 10);
  Rng rng(5);
  EXPECT_THROW(SelectFingerprints(bank, 4, rng), InsufficientBankError);
}

TEST(SelectFingerprintsTest, SameSeedSameSelectionDistinctWithoutDuplicates) {
  const ClassBank bank = RandomBank(2, 100, 10);
  Rng a(9), b(9);
  const auto sa = SelectFingerprints(bank, 20, a);
  EXPECT_EQ(sa, SelectFingerprints(bank, 20, b));
  EXPECT_EQ(std::set<const Fingerprint*>(sa.begin(), sa.end()).size(), 20u);
}

TEST(SelectFingerprintsTest, DistinctSeedsRarelyCollide) {
  // P(two uniform 20-subsets of 1000 coincide) = 1 / C(1000, 20).
  const double log_c = std::lgamma(1001.0) - std::lgamma(21.0) - std::lgamma(981.0);
  ASSERT_GT(log_c, 90.0);  // C(1000,20) > e^90; expected collisions ~ 0
  const ClassBank bank = RandomBank(3, 1000, 10);
  std::set<std::vector<std::uint64_t>> seen;
  for (std::uint64_t s = 0; s < 2000; ++s) {
    Rng rng(MixSeed(123, {s}));
    std::vector<std::uint64_t> ids;
    for (const Fingerprint* fp : SelectFingerprints(bank, 20, rng)) ids.push_back(fp->id);
    EXPECT_TRUE(seen.insert(ids).second) << "collision at seed " << s;
  }
}

TEST(SelectFingerprintsTest, SingleDrawIsUniform) {
  const ClassBank bank = RandomBank(4, 10, 10);
  Rng rng(77);
  std::vector<int> counts(10, 0);
  for (int t = 0; t < 20000; ++t) ++counts[SelectFingerprints(bank, 1, rng)[0]->id];
  const double sd = std::sqrt(20000 * 0.1 * 0.9);
  for (int c : counts) EXPECT_NEAR(c, 2000.0, 5 * sd);
}

// --- GaussianLogDensity -----------------------------------------------------

TEST(GaussianLogDensityTest, HandValues) {
  const double half_log_two_pi = 0.5 * std::log(2 * std::numbers::pi);
  EXPECT_NEAR(GaussianLogDensity(0.0, Stats(0.0, 1.0)), -half_log_two_pi, 1e-15);
  EXPECT_NEAR(GaussianLogDensity(1.0, Stats(0.0, 1.0)), -half_log_two_pi - 0.5, 1e-15);
  EXPECT_NEAR(GaussianLogDensity(3.0, Stats(3.0, 2.0)),
              -half_log_two_pi - std::log(2.0), 1e-15);
}

TEST(GaussianLogDensityTest, MatchesLongDoubleOracle) {
  std::mt19937_64 gen(19);
  std::uniform_real_distribution<double> x(-10, 10), mean(-5, 5), sd(0.05, 5);
  for (int i = 0; i < 1000; ++i) {
    const double xi = x(gen), mi = mean(gen), si = sd(gen);
    const long double expected = OracleLogDensity(xi, mi, si);
    EXPECT_NEAR(GaussianLogDensity(xi, Stats(mi, si)), static_cast<double>(expected),
                1e-12 * std::max(1.0L, std::abs(expected)));
  }
}

// --- Likelihood ratio -------------------------------------------------------

TEST(LikelihoodRatioTest, ClonedStatsScoreZero) {
  ClassBank bank = RandomBank(5, 20, 30);
  for (auto& fp : bank.fingerprints) {
    fp.attack = fp.clean;
    fp.effect_size = 0.0;
  }
  const auto fps = All(bank);
  for (std::uint64_t s = 0; s < 20; ++s) {
    EXPECT_EQ(ScoreLikelihoodRatio(RandomVector(s, 30), fps), 0.0);
  }
}

TEST(LikelihoodRatioTest, HandCase) {
  // x=1: log N(1;1,1) - log N(1;0,1) = 0 - (-1/2) = 0.5.
  ClassBank bank;
  bank.n_neurons = 1;
  bank.fingerprints.push_back(
      MakeFingerprint(0, {0}, 1, Stats(0.0, 1.0), Stats(1.0, 1.0)));
  const std::vector<float> x{1.0f};
  EXPECT_NEAR(ScoreLikelihoodRatio(x, All(bank)), 0.5, 1e-15);
}

TEST(LikelihoodRatioTest, AdditiveOverFingerprints) {
  const ClassBank bank = RandomBank(6, 40, 25);
  const auto fps = All(bank);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = RandomVector(100 + s, 25);
    const std::span<const Fingerprint* const> all(fps);
    const double whole = ScoreLikelihoodRatio(x, all);
    const double parts = ScoreLikelihoodRatio(x, all.first(17)) +
                         ScoreLikelihoodRatio(x, all.subspan(17));
    EXPECT_NEAR(whole, parts, 1e-12 * std::max(1.0, std::abs(whole)));
  }
}

TEST(LikelihoodRatioTest, MatchesOracle) {
  const ClassBank bank = RandomBank(7, 15, 12);
  const auto fps = All(bank);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = RandomVector(200 + s, 12);
    long double expected = 0;
    for (const auto& fp : bank.fingerprints) {
      const long double f = x[fp.indices.indices()[0]];
      expected += OracleLogDensity(f, fp.attack->mean, fp.attack->std) -
                  OracleLogDensity(f, fp.clean.mean, fp.clean.std);
    }
    EXPECT_NEAR(ScoreLikelihoodRatio(x, fps), static_cast<double>(expected),
                1e-11 * std::max(1.0L, std::abs(expected)));
  }
}

// --- Vote -------------------------------------------------------------------

TEST(VoteTest, TiesVoteAttack) {
  ClassBank bank = RandomBank(8, 12, 10);
  for (auto& fp : bank.fingerprints) fp.attack = fp.clean;
  EXPECT_EQ(ScoreVote(RandomVector(1, 10), All(bank)), 12u);
}

TEST(VoteTest, FarFromAttackRegionScoresZero) {
  ClassBank bank;
  bank.n_neurons = 4;
  for (std::uint32_t j = 0; j < 4; ++j) {
    bank.fingerprints.push_back(
        MakeFingerprint(j, {j}, 4, Stats(0.0, 1.0), Stats(5.0, 1.0)));
  }
  const std::vector<float> x{-3.0f, 0.0f, 0.5f, -10.0f};
  EXPECT_EQ(ScoreVote(x, All(bank)), 0u);
  const std::vector<float> y{5.0f, 0.0f, 9.0f, 3.0f};
  EXPECT_EQ(ScoreVote(y, All(bank)), 3u);
}

TEST(VoteTest, MatchesOracle) {
  const ClassBank bank = RandomBank(9, 25, 12);
  const auto fps = All(bank);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = RandomVector(300 + s, 12);
    std::size_t expected = 0;
    for (const auto& fp : bank.fingerprints) {
      const long double f = x[fp.indices.indices()[0]];
      if (OracleLogDensity(f, fp.attack->mean, fp.attack->std) >=
          OracleLogDensity(f, fp.clean.mean, fp.clean.std)) {
        ++expected;
      }
    }
    EXPECT_EQ(ScoreVote(x, fps), expected);
  }
}

// --- Anomaly ----------------------------------------------------------------

TEST(AnomalyTest, AtTheMeanOfUnitGaussians) {
  ClassBank bank;
  bank.n_neurons = 3;
  for (std::uint32_t j = 0; j < 3; ++j) {
    bank.fingerprints.push_back(
        MakeFingerprint(j, {j}, 3, Stats(1.0, 1.0), std::nullopt));
  }
  const std::vector<float> x{1.0f, 1.0f, 1.0f};
  EXPECT_NEAR(ScoreAnomaly(x, All(bank)), 3 * 0.5 * std::log(2 * std::numbers::pi),
              1e-14);
  EXPECT_NEAR(ScoreAnomaly(x, All(bank)), 3 * 0.918938533, 1e-8);
}

TEST(AnomalyTest, GrowsWithDistanceFromCleanMean) {
  ClassBank bank;
  bank.n_neurons = 1;
  bank.fingerprints.push_back(
      MakeFingerprint(0, {0}, 1, Stats(0.0, 1.0), std::nullopt));
  double prev = -kInf;
  for (float x = 0.0f; x < 10.0f; x += 0.5f) {
    const std::vector<float> v{x};
    const double s = ScoreAnomaly(v, All(bank));
    EXPECT_GT(s, prev);
    prev = s;
  }
}

TEST(AnomalyTest, MatchesOracleAndIgnoresAttackStats) {
  const ClassBank bank = RandomBank(10, 20, 12);
  const ClassBank clean_only = RandomBank(10, 20, 12, /*with_attack=*/false);
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto x = RandomVector(400 + s, 12);
    long double expected = 0;
    for (const auto& fp : bank.fingerprints) {
      expected -= OracleLogDensity(x[fp.indices.indices()[0]], fp.clean.mean,
                                   fp.clean.std);
    }
    EXPECT_NEAR(ScoreAnomaly(x, All(bank)), static_cast<double>(expected),
                1e-11 * std::max(1.0L, std::abs(expected)));
  }
  EXPECT_NO_THROW(ScoreAnomaly(RandomVector(1, 12), All(clean_only)));
}

TEST(ScoreTest, MissingAttackStatsAndLengthMismatch) {
  const ClassBank clean_only = RandomBank(11, 5, 12, false);
  EXPECT_THROW(ScoreLikelihoodRatio(RandomVector(1, 12), All(clean_only)),
               RuleUnavailableError);
  EXPECT_THROW(ScoreVote(RandomVector(1, 12), All(clean_only)), RuleUnavailableError);
  EXPECT_THROW(ScoreAnomaly(RandomVector(1, 11), All(clean_only)), PairingError);
}

// --- Detect -----------------------------------------------------------------

TEST(DetectTest, InfiniteThresholdsNeverOrAlwaysFlag) {
  const ClassBank bank = RandomBank(12, 50, 20);
  for (Rule rule : kAllRules) {
    for (std::uint64_t s = 0; s < 20; ++s) {
      const auto x = RandomVector(s, 20);
      Rng r1(s), r2(s);
      EXPECT_FALSE(Detect(x, bank, {rule, 10, kInf, s}, r1).is_attack);
      EXPECT_TRUE(Detect(x, bank, {rule, 10, -kInf, s}, r2).is_attack);
    }
  }
}

TEST(DetectTest, FlagsStrictlyAboveThreshold) {
  const ClassBank bank = RandomBank(13, 50, 20);
  const auto x = RandomVector(1, 20);
  Rng r1(3), r2(3);
  const Verdict v = Detect(x, bank, {Rule::kLikelihoodRatio, 10, 0.0, 3}, r1);
  const Verdict at = Detect(x, bank, {Rule::kLikelihoodRatio, 10, v.attack_score, 3}, r2);
  EXPECT_FALSE(at.is_attack);
}

TEST(DetectTest, DeterministicForSameSeed) {
  const ClassBank bank = RandomBank(14, 200, 20);
  const auto x = RandomVector(2, 20);
  Rng a(55), b(55);
  const Verdict va = Detect(x, bank, {Rule::kVote, 20, 5.0, 55}, a);
  const Verdict vb = Detect(x, bank, {Rule::kVote, 20, 5.0, 55}, b);
  EXPECT_EQ(va.attack_score, vb.attack_score);
  EXPECT_EQ(va.is_attack, vb.is_attack);
  EXPECT_EQ(va.fingerprint_ids, vb.fingerprint_ids);
  EXPECT_EQ(va.fingerprint_ids.size(), 20u);
  EXPECT_EQ(va.rule, Rule::kVote);
}

TEST(DetectTest, Rejections) {
  const ClassBank bank = RandomBank(15, 10, 20);
  Rng rng(1);
  EXPECT_THROW(Detect(RandomVector(1, 19), bank, {}, rng), PairingError);
  EXPECT_THROW(Detect(RandomVector(1, 20), bank, {Rule::kVote, 11, 0, 0}, rng),
               InsufficientBankError);
  EXPECT_THROW(Detect(RandomVector(1, 20), bank, {Rule::kVote, 0, 0, 0}, rng),
               ConfigError);
  EXPECT_THROW(Detect(RandomVector(1, 20), bank, {Rule::kVote, 1, NAN, 0}, rng),
               ConfigError);
  const ClassBank clean_only = RandomBank(16, 10, 20, false);
  EXPECT_THROW(Detect(RandomVector(1, 20), clean_only, {Rule::kLikelihoodRatio, 5, 0, 0}, rng),
               RuleUnavailableError);
  EXPECT_NO_THROW(Detect(RandomVector(1, 20), clean_only, {Rule::kAnomaly, 5, 0, 0}, rng));
}

}  // namespace
}  // namespace nfp
