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

#include "nfp/bank_store.h"

#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "json.hpp"
#include "nfp/error.h"
#include "nfp/synth.h"
#include "test_util.h"

namespace nfp {
namespace {

using json = nlohmann::json;
using testing::MakeFingerprint;
using testing::Stats;

std::string Save(const BankFile& b) {
  std::ostringstream os;
  SaveBank(b, os);
  return os.str();
}

BankFile Load(const std::string& s) {
  std::istringstream is(s);
  return LoadBank(is);
}

BankFile GeneratedBank() {
  SynthConfig sc;
  sc.n_neurons = 300;
  sc.n_classes = 2;
  sc.m_train_clean = sc.m_train_attacked = 120;
  sc.m_test_clean = sc.m_test_attacked = 2;
  sc.p_informative = 0.2;
  sc.seed = 3;
  BankFile file;
  file.model = "toy-model";
  file.n_neurons = 300;
  BankConfig c;
  c.d = 10;
  c.num_candidates = 400;
  c.effect_threshold = 0.8;
  for (const SynthClass& cls : SynthTables(sc)) {
    c.master_seed = cls.tables.class_id() + 100;
    ClassBank b = GenerateBank(cls.tables.clean_train, &cls.tables.attacked_train, c);
    file.classes.emplace(b.class_id, std::move(b));
  }
  BankConfig co = c;
  co.mode = BankMode::kCleanOnly;
  co.num_candidates = 30;
  const SynthClass extra = SynthClassTables(sc, 7);
  ClassBank b = GenerateBank(extra.tables.clean_train, nullptr, co);
  file.classes.emplace(7, std::move(b));
  return file;
}

template <typename E>
void ExpectThrowContaining(const std::string& bytes, const std::string& needle) {
  try {
    Load(bytes);
    FAIL() << "expected exception mentioning " << needle;
  } catch (const E& e) {
    EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
  }
}

TEST(BankStoreTest, EmptyBankRoundTrips) {
  BankFile b;
  b.model = "m";
  b.n_neurons = 4;
  EXPECT_EQ(Load(Save(b)), b);
}

TEST(BankStoreTest, GeneratedBankRoundTripsExactly) {
  const BankFile b = GeneratedBank();
  ASSERT_GT(b.classes.at(0).fingerprints.size(), 0u);
  const std::string bytes = Save(b);
  const BankFile loaded = Load(bytes);
  EXPECT_EQ(loaded, b);
  EXPECT_EQ(Save(loaded), bytes);
  EXPECT_EQ(CanonicalBankBytes(loaded), CanonicalBankBytes(b));
}

TEST(BankStoreTest, FileRoundTrip) {
  testing::TempDir dir;
  const BankFile b = GeneratedBank();
  SaveBankFile(b, dir.path() / "bank.json");
  EXPECT_EQ(LoadBankFile(dir.path() / "bank.json"), b);
  EXPECT_THROW(LoadBankFile(dir.path() / "missing.json"), IoError);
}

TEST(BankStoreTest, DigestIsSha256OfCanonicalBytes) {
  const BankFile b = GeneratedBank();
  const std::string digest = BankDigest(b);
  ASSERT_EQ(digest.rfind("sha256:", 0), 0u);
  EXPECT_EQ(digest.size(), 7u + 64u);
  const json doc = json::parse(Save(b));
  EXPECT_EQ(doc.at("digest").get<std::string>(), digest);
  json stripped = doc;
  stripped.erase("digest");
  EXPECT_EQ(stripped.dump(), CanonicalBankBytes(b));
}

TEST(BankStoreTest, TamperedDigestIsIntegrityError) {
  json doc = json::parse(Save(GeneratedBank()));
  std::string d = doc["digest"];
  d.back() = d.back() == '0' ? '1' : '0';
  doc["digest"] = d;
  EXPECT_THROW(Load(doc.dump()), IntegrityError);
}

TEST(BankStoreTest, TamperedPayloadIsIntegrityError) {
  json doc = json::parse(Save(GeneratedBank()));
  doc["model"] = "other";
  EXPECT_THROW(Load(doc.dump()), IntegrityError);
}

TEST(BankStoreTest, MissingIndicesNamesThePath) {
  json doc = json::parse(Save(GeneratedBank()));
  doc["classes"]["0"]["fingerprints"][0].erase("indices");
  ExpectThrowContaining<SchemaError>(doc.dump(), "$.classes.0.fingerprints[0]");
  ExpectThrowContaining<SchemaError>(doc.dump(), "indices");
}

TEST(BankStoreTest, WrongTypesAreSchemaErrors) {
  json doc = json::parse(Save(GeneratedBank()));
  doc["n_neurons"] = "300";
  EXPECT_THROW(Load(doc.dump()), SchemaError);
  EXPECT_THROW(Load("not json"), SchemaError);
  EXPECT_THROW(Load("[]"), SchemaError);
}

TEST(BankStoreTest, UnknownVersionIsVersionError) {
  json doc = json::parse(Save(GeneratedBank()));
  doc["version"] = 2;
  EXPECT_THROW(Load(doc.dump()), VersionError);
}

TEST(BankStoreTest, OutOfRangeIndexIsRangeError) {
  json doc = json::parse(Save(GeneratedBank()));
  auto& idx = doc["classes"]["0"]["fingerprints"][0]["indices"];
  idx[idx.size() - 1] = 300;
  EXPECT_THROW(Load(doc.dump()), RangeError);
}

TEST(BankStoreTest, EffectMismatchIsIntegrityError) {
  json doc = json::parse(Save(GeneratedBank()));
  auto& fp = doc["classes"]["0"]["fingerprints"][0];
  fp["effect_size"] = fp["effect_size"].get<double>() * (1 + 1e-6);
  // The effect check runs before the digest check.
  ExpectThrowContaining<IntegrityError>(doc.dump(), "effect");
}

TEST(BankStoreTest, SaveRejectsInvalidBank) {
  BankFile b;
  b.n_neurons = 10;
  ClassBank cb;
  cb.n_neurons = 10;
  cb.config.d = 2;
  cb.fingerprints.push_back(
      MakeFingerprint(0, {1, 2}, 10, Stats(0, 1), Stats(1, 1)));
  cb.fingerprints[0].effect_size = 42.0;
  b.classes.emplace(0, cb);
  std::ostringstream os;
  EXPECT_THROW(SaveBank(b, os), Error);
}

// --- Summary ----------------------------------------------------------------

TEST(BankSummaryTest, EmptyBankIsAllZero) {
  BankFile b;
  b.n_neurons = 10;
  EXPECT_TRUE(BankSummary(b).classes.empty());
  ClassBank cb;
  cb.n_neurons = 10;
  b.classes.emplace(0, cb);
  const ClassSummary s = BankSummary(b).classes.at(0);
  EXPECT_EQ(s.count, 0u);
  EXPECT_EQ(s.effect_min, 0.0);
  EXPECT_EQ(s.effect_median, 0.0);
  EXPECT_EQ(s.effect_max, 0.0);
  EXPECT_EQ(s.max_neuron_reuse, 0u);
}

TEST(BankSummaryTest, SingleFingerprint) {
  BankFile b;
  b.n_neurons = 10;
  ClassBank cb;
  cb.n_neurons = 10;
  cb.config.d = 2;
  cb.fingerprints.push_back(MakeFingerprint(0, {1, 2}, 10, Stats(1.5, 1), Stats(0, 1)));
  b.classes.emplace(0, cb);
  const ClassSummary s = BankSummary(b).classes.at(0);
  EXPECT_DOUBLE_EQ(s.effect_min, 1.5);
  EXPECT_DOUBLE_EQ(s.effect_median, 1.5);
  EXPECT_DOUBLE_EQ(s.effect_max, 1.5);
  EXPECT_EQ(s.max_neuron_reuse, 1u);
}

TEST(BankSummaryTest, HandCase) {
  BankFile b;
  b.model = "m";
  b.n_neurons = 10;
  ClassBank cb;
  cb.n_neurons = 10;
  cb.config.d = 2;
  // |d| = 1, 2, 3 (signs mixed); neuron 1 is used three times.
  cb.fingerprints.push_back(MakeFingerprint(0, {1, 2}, 10, Stats(1, 1), Stats(0, 1)));
  cb.fingerprints.push_back(MakeFingerprint(1, {1, 3}, 10, Stats(0, 1), Stats(2, 1)));
  cb.fingerprints.push_back(MakeFingerprint(2, {1, 4}, 10, Stats(3, 1), Stats(0, 1)));
  b.classes.emplace(0, cb);
  ClassBank empty;
  empty.class_id = 5;
  empty.n_neurons = 10;
  empty.config.d = 2;
  b.classes.emplace(5, empty);

  const BankSummaryReport r = BankSummary(b);
  ASSERT_EQ(r.classes.size(), 2u);
  EXPECT_EQ(r.classes[0].count, 3u);
  EXPECT_DOUBLE_EQ(r.classes[0].effect_min, 1.0);
  EXPECT_DOUBLE_EQ(r.classes[0].effect_median, 2.0);
  EXPECT_DOUBLE_EQ(r.classes[0].effect_max, 3.0);
  EXPECT_EQ(r.classes[0].max_neuron_reuse, 3u);
  EXPECT_EQ(r.classes[1].class_id, 5u);
  EXPECT_EQ(r.classes[1].count, 0u);
  EXPECT_EQ(r.classes[1].max_neuron_reuse, 0u);
  EXPECT_NE(FormatBankSummary(r).find("class"), std::string::npos);
}

TEST(BankSummaryTest, MatchesBruteForce) {
  const BankFile b = GeneratedBank();
  const BankSummaryReport r = BankSummary(b);
  ASSERT_EQ(r.classes.size(), b.classes.size());
  for (const ClassSummary& s : r.classes) {
    const ClassBank& cb = b.classes.at(s.class_id);
    EXPECT_EQ(s.count, cb.fingerprints.size());
    std::vector<int> hist(b.n_neurons, 0);
    std::vector<double> eff;
    for (const auto& fp : cb.fingerprints) {
      for (auto j : fp.indices.indices()) ++hist[j];
      if (fp.effect_size) eff.push_back(std::abs(*fp.effect_size));
    }
    EXPECT_EQ(s.max_neuron_reuse,
              static_cast<std::size_t>(*std::max_element(hist.begin(), hist.end())));
    if (eff.empty()) continue;
    std::sort(eff.begin(), eff.end());
    const std::size_t n = eff.size();
    const double median = n % 2 ? eff[n / 2] : 0.5 * (eff[n / 2 - 1] + eff[n / 2]);
    EXPECT_EQ(s.effect_min, eff.front());
    EXPECT_EQ(s.effect_max, eff.back());
    EXPECT_DOUBLE_EQ(s.effect_median, median);
  }
}

}  // namespace
}  // namespace nfp
