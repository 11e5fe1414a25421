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

// Randomized attack detection. For every input a fresh set of K fingerprints
// is drawn from the bank of the predicted class and combined by one of three
// rules. All rules produce an "attack score" where larger means more
// suspicious, and an input is flagged when score > threshold:
//
//   likelihood_ratio  sum_i log P_attack(F_i) - log P_clean(F_i)
//                     (the negated clean-vs-attack log ratio, so flagging on
//                     score > t is the same as ratio < exp(-t))
//   vote              #{i : P_attack(F_i) >= P_clean(F_i)}, ties vote attack
//   anomaly           -sum_i log P_clean(F_i)

#ifndef NFP_DETECTOR_H_
#define NFP_DETECTOR_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "nfp/fingerprints.h"
#include "nfp/rng.h"

namespace nfp {

enum class Rule { kLikelihoodRatio, kVote, kAnomaly };

inline constexpr Rule kAllRules[] = {Rule::kLikelihoodRatio, Rule::kVote,
                                     Rule::kAnomaly};

// "likelihood", "vote", "anomaly".
std::string_view RuleName(Rule rule);
// Accepts the names above plus "likelihood_ratio". Throws ConfigError.
Rule ParseRule(std::string_view name);

// True if the rule needs attack statistics.
bool RuleNeedsAttackStats(Rule rule);

struct DetectorConfig {
  Rule rule = Rule::kLikelihoodRatio;
  std::size_t k = 20;
  // +/-infinity are allowed (never / always flag); NaN is not.
  double threshold = 0.0;
  // Seed the caller uses to build the Rng passed to Detect. The library
  // itself never draws ambient entropy.
  std::uint64_t seed = 0;

  void Validate() const;
};

struct Verdict {
  double attack_score = 0.0;
  bool is_attack = false;
  std::vector<std::uint64_t> fingerprint_ids;
  Rule rule = Rule::kLikelihoodRatio;
};

using FingerprintRefs = std::vector<const Fingerprint*>;

// k distinct fingerprints, uniform without replacement, returned in bank
// order. Throws InsufficientBankError if the bank holds fewer than k.
FingerprintRefs SelectFingerprints(const ClassBank& bank, std::size_t k,
                                   Rng& rng);

// log N(value; mean, std^2).
double GaussianLogDensity(double value, const GaussianStats& stats);

// The scorers throw RuleUnavailableError if a fingerprint lacks attack stats
// (likelihood ratio and vote only) and PairingError on a length mismatch.
double ScoreLikelihoodRatio(std::span<const float> activations,
                            std::span<const Fingerprint* const> fps);
std::size_t ScoreVote(std::span<const float> activations,
                      std::span<const Fingerprint* const> fps);
double ScoreAnomaly(std::span<const float> activations,
                    std::span<const Fingerprint* const> fps);

// Dispatches to the scorer for `rule`.
double Score(Rule rule, std::span<const float> activations,
             std::span<const Fingerprint* const> fps);

// Full detection for one activation vector. Checks the vector length and
// the rule/bank compatibility before drawing from `rng`.
Verdict Detect(std::span<const float> activations, const ClassBank& bank,
               const DetectorConfig& config, Rng& rng);

}  // namespace nfp

#endif  // NFP_DETECTOR_H_
