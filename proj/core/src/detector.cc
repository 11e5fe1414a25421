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

#include <cmath>
#include <numbers>
#include <string>

#include "nfp/error.h"

namespace nfp {
namespace {

const double kHalfLogTwoPi = 0.5 * std::log(2.0 * std::numbers::pi);

void CheckLength(std::span<const float> activations,
                 std::span<const Fingerprint* const> fps) {
  for (const Fingerprint* fp : fps) {
    if (fp->indices.n_neurons() != activations.size()) {
      throw PairingError("n_neurons: activation vector has length " +
                         std::to_string(activations.size()) +
                         " but fingerprint " + std::to_string(fp->id) +
                         " indexes N=" +
                         std::to_string(fp->indices.n_neurons()));
    }
  }
}

const GaussianStats& AttackStats(const Fingerprint& fp) {
  if (!fp.attack) {
    throw RuleUnavailableError("fingerprint " + std::to_string(fp.id) +
                               " has no attack statistics (clean-only bank)");
  }
  return *fp.attack;
}

}  // namespace

std::string_view RuleName(Rule rule) {
  switch (rule) {
    case Rule::kLikelihoodRatio: return "likelihood";
    case Rule::kVote: return "vote";
    case Rule::kAnomaly: return "anomaly";
  }
  return "unknown";
}

Rule ParseRule(std::string_view name) {
  if (name == "likelihood" || name == "likelihood_ratio") return Rule::kLikelihoodRatio;
  if (name == "vote") return Rule::kVote;
  if (name == "anomaly") return Rule::kAnomaly;
  throw ConfigError("unknown rule '" + std::string(name) + "'");
}

bool RuleNeedsAttackStats(Rule rule) { return rule != Rule::kAnomaly; }

void DetectorConfig::Validate() const {
  if (k < 1) throw ConfigError("k must be >= 1");
  if (std::isnan(threshold)) throw ConfigError("threshold must not be NaN");
}

FingerprintRefs SelectFingerprints(const ClassBank& bank, std::size_t k,
                                   Rng& rng) {
  const std::size_t size = bank.fingerprints.size();
  if (k > size) {
    throw InsufficientBankError("class " + std::to_string(bank.class_id) +
                                " bank holds " + std::to_string(size) +
                                " fingerprints, " + std::to_string(k) +
                                " requested");
  }
  FingerprintRefs out;
  out.reserve(k);
  for (std::uint32_t pos : SampleWithoutReplacement(size, k, rng)) {
    out.push_back(&bank.fingerprints[pos]);
  }
  return out;
}

double GaussianLogDensity(double value, const GaussianStats& stats) {
  const double z = (value - stats.mean) / stats.std;
  return -kHalfLogTwoPi - std::log(stats.std) - 0.5 * z * z;
}

double ScoreLikelihoodRatio(std::span<const float> activations,
                            std::span<const Fingerprint* const> fps) {
  CheckLength(activations, fps);
  double score = 0.0;
  for (const Fingerprint* fp : fps) {
    const GaussianStats& attack = AttackStats(*fp);
    const double f = FingerprintValue(fp->indices, activations);
    score += GaussianLogDensity(f, attack) - GaussianLogDensity(f, fp->clean);
  }
  return score;
}

std::size_t ScoreVote(std::span<const float> activations,
                      std::span<const Fingerprint* const> fps) {
  CheckLength(activations, fps);
  std::size_t votes = 0;
  for (const Fingerprint* fp : fps) {
    const GaussianStats& attack = AttackStats(*fp);
    const double f = FingerprintValue(fp->indices, activations);
    if (GaussianLogDensity(f, attack) >= GaussianLogDensity(f, fp->clean)) ++votes;
  }
  return votes;
}

double ScoreAnomaly(std::span<const float> activations,
                    std::span<const Fingerprint* const> fps) {
  CheckLength(activations, fps);
  double score = 0.0;
  for (const Fingerprint* fp : fps) {
    score -= GaussianLogDensity(FingerprintValue(fp->indices, activations),
                                fp->clean);
  }
  return score;
}

double Score(Rule rule, std::span<const float> activations,
             std::span<const Fingerprint* const> fps) {
  switch (rule) {
    case Rule::kLikelihoodRatio: return ScoreLikelihoodRatio(activations, fps);
    case Rule::kVote: return static_cast<double>(ScoreVote(activations, fps));
    case Rule::kAnomaly: return ScoreAnomaly(activations, fps);
  }
  throw ConfigError("unknown rule");
}

Verdict Detect(std::span<const float> activations, const ClassBank& bank,
               const DetectorConfig& config, Rng& rng) {
  config.Validate();
  if (activations.size() != bank.n_neurons) {
    throw PairingError("n_neurons: activation vector has length " +
                       std::to_string(activations.size()) + ", bank for class " +
                       std::to_string(bank.class_id) + " expects " +
                       std::to_string(bank.n_neurons));
  }
  if (RuleNeedsAttackStats(config.rule) && bank.config.mode == BankMode::kCleanOnly) {
    throw RuleUnavailableError(std::string(RuleName(config.rule)) +
                               " rule needs a two-sample bank; class " +
                               std::to_string(bank.class_id) + " is clean-only");
  }
  const FingerprintRefs fps = SelectFingerprints(bank, config.k, rng);
  Verdict v;
  v.rule = config.rule;
  v.attack_score = Score(config.rule, activations, fps);
  v.is_attack = v.attack_score > config.threshold;
  v.fingerprint_ids.reserve(fps.size());
  for (const Fingerprint* fp : fps) v.fingerprint_ids.push_back(fp->id);
  return v;
}

}  // namespace nfp
