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

#include "nfp/synth.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "nfp/error.h"
#include "nfp/fingerprints.h"

namespace nfp {
namespace {

SynthConfig Small(std::uint64_t seed = 1) {
  SynthConfig c;
  c.n_neurons = 1000;
  c.n_classes = 2;
  c.m_train_clean = c.m_train_attacked = 400;
  c.m_test_clean = c.m_test_attacked = 50;
  c.seed = seed;
  return c;
}

double ColumnMean(const ActivationTable& t, std::size_t c) {
  double s = 0;
  for (std::size_t r = 0; r < t.n_samples(); ++r) s += t.At(r, c);
  return s / static_cast<double>(t.n_samples());
}

TEST(SynthTest, ShapesAndLabels) {
  const auto classes = SynthTables(Small());
  ASSERT_EQ(classes.size(), 2u);
  for (std::uint32_t k = 0; k < 2; ++k) {
    const ClassSplits& s = classes[k].tables;
    EXPECT_EQ(s.class_id(), k);
    EXPECT_EQ(s.clean_train.kind(), TableKind::kClean);
    EXPECT_EQ(s.attacked_train.kind(), TableKind::kAttacked);
    EXPECT_EQ(s.clean_train.n_samples(), 400u);
    EXPECT_EQ(s.attacked_test.n_samples(), 50u);
    EXPECT_EQ(s.clean_test.n_neurons(), 1000u);
    EXPECT_EQ(classes[k].informative.size(), 100u);
    EXPECT_TRUE(std::is_sorted(classes[k].informative.begin(),
                               classes[k].informative.end()));
  }
  EXPECT_NE(classes[0].informative, classes[1].informative);
}

TEST(SynthTest, DeterministicPerSeed) {
  const SynthClass a = SynthClassTables(Small(5), 1);
  const SynthClass b = SynthClassTables(Small(5), 1);
  EXPECT_EQ(a.tables.clean_train, b.tables.clean_train);
  EXPECT_EQ(a.tables.attacked_test, b.tables.attacked_test);
  EXPECT_EQ(a.informative, b.informative);
  EXPECT_FALSE(a.tables.clean_train == SynthClassTables(Small(6), 1).tables.clean_train);
  // A class does not depend on how many classes were requested.
  SynthConfig more = Small(5);
  more.n_classes = 4;
  EXPECT_EQ(SynthTables(more)[1].tables.clean_train, a.tables.clean_train);
}

TEST(SynthTest, SplitsAreIndependentDraws) {
  const SynthClass a = SynthClassTables(Small(), 0);
  const auto& tr = a.tables.clean_train.values();
  const auto& te = a.tables.clean_test.values();
  // The test table is not a prefix or copy of the training table.
  EXPECT_FALSE(std::equal(te.begin(), te.end(), tr.begin()));
  std::set<float> train_values(tr.begin(), tr.end());
  std::size_t shared = 0;
  for (float v : te) shared += train_values.count(v);
  EXPECT_LT(shared, te.size() / 100);
}

TEST(SynthTest, ShiftOnlyOnInformativeColumnsOfAttackedTables) {
  const SynthClass a = SynthClassTables(Small(2), 0);
  const std::set<std::uint32_t> inf(a.informative.begin(), a.informative.end());
  const double tol = 4.0 / std::sqrt(400.0);
  for (std::size_t c = 0; c < 1000; c += 7) {
    const double expected = inf.count(static_cast<std::uint32_t>(c)) ? 1.0 : 0.0;
    EXPECT_NEAR(ColumnMean(a.tables.attacked_train, c), expected, tol) << c;
    EXPECT_NEAR(ColumnMean(a.tables.clean_train, c), 0.0, tol) << c;
  }
  for (std::uint32_t c : a.informative) {
    EXPECT_NEAR(ColumnMean(a.tables.attacked_train, c), 1.0, tol) << c;
  }
}

TEST(SynthTest, ZeroShiftMakesAttackedLookClean) {
  SynthConfig c = Small(3);
  c.shift = 0.0;
  const SynthClass a = SynthClassTables(c, 0);
  const double tol = 4.0 / std::sqrt(400.0);
  for (std::uint32_t col : a.informative) {
    EXPECT_NEAR(ColumnMean(a.tables.attacked_train, col), 0.0, tol);
  }
}

TEST(SynthTest, NoInformativeNeuronsGivesEmptyBank) {
  SynthConfig c = Small(4);
  c.p_informative = 0.0;
  const SynthClass a = SynthClassTables(c, 0);
  EXPECT_TRUE(a.informative.empty());
  BankConfig b;
  b.d = 50;
  b.num_candidates = 5000;
  b.effect_threshold = 1.0;
  EXPECT_TRUE(
      GenerateBank(a.tables.clean_train, &a.tables.attacked_train, b).fingerprints.empty());
}

TEST(SynthTest, MeanCandidateEffectMatchesAnalyticValue) {
  // A d=50 candidate holds ~Hypergeometric(50; p=0.1) informative neurons,
  // each shifting the mean by 1/50; the fingerprint std is 1/sqrt(50), so
  // E[d] = (5/50) * sqrt(50) = 0.707 in magnitude (negative sign: attacked
  // is larger).
  SynthConfig c = Small(7);
  c.n_neurons = 2000;
  const SynthClass a = SynthClassTables(c, 0);
  BankConfig b;
  b.d = 50;
  b.num_candidates = 3000;
  b.effect_threshold = 0.0;
  const ClassBank bank = GenerateBank(a.tables.clean_train, &a.tables.attacked_train, b);
  ASSERT_GT(bank.fingerprints.size(), 2900u);
  double sum = 0;
  for (const auto& fp : bank.fingerprints) sum += *fp.effect_size;
  EXPECT_NEAR(sum / static_cast<double>(bank.fingerprints.size()), -1.0 / std::sqrt(2.0),
              0.05);

  // The |d| >= 1 tail needs >= 8 informative neurons, which has
  // probability ~0.12: 20k candidates always leave a non-empty bank.
  b.num_candidates = 20000;
  b.effect_threshold = 1.0;
  EXPECT_GT(GenerateBank(a.tables.clean_train, &a.tables.attacked_train, b)
                .fingerprints.size(),
            1000u);
}

TEST(SynthTest, ConfigValidation) {
  SynthConfig c = Small();
  c.p_informative = 1.5;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = Small();
  c.n_neurons = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = Small();
  c.m_train_clean = 1;
  EXPECT_THROW(c.Validate(), ConfigError);
}

}  // namespace
}  // namespace nfp
