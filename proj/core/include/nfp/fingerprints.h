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

// Neural fingerprints: a fingerprint is a set of d neuron indices whose value
// on a sample is the plain mean of the selected activations. A bank of
// fingerprints for one class is produced by sampling random candidates,
// fitting a Gaussian to the fingerprint value under clean and attacked data,
// and keeping candidates whose Cohen's d clears a threshold.

#ifndef NFP_FINGERPRINTS_H_
#define NFP_FINGERPRINTS_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfp/tables.h"

namespace nfp {

// Lower bound applied to every fitted standard deviation.
inline constexpr double kStdFloor = 1e-8;

// Sorted, strictly increasing neuron indices into a length-N activation
// vector. Always non-empty.
class FingerprintIndices {
 public:
  // Throws ValidationError if `indices` is empty, not strictly increasing,
  // or RangeError if an index is >= n_neurons.
  FingerprintIndices(std::vector<std::uint32_t> indices,
                     std::size_t n_neurons);

  std::span<const std::uint32_t> indices() const { return indices_; }
  std::size_t d() const { return indices_.size(); }
  std::size_t n_neurons() const { return n_neurons_; }

  friend bool operator==(const FingerprintIndices&,
                         const FingerprintIndices&) = default;

 private:
  std::vector<std::uint32_t> indices_;
  std::size_t n_neurons_;
};

struct GaussianStats {
  double mean = 0.0;
  double std = 1.0;
  std::uint64_t count = 2;

  // Throws ValidationError unless mean/std are finite, std >= kStdFloor and
  // count >= 2.
  void Validate() const;

  friend bool operator==(const GaussianStats&, const GaussianStats&) = default;
};

struct Fingerprint {
  std::uint64_t id = 0;
  FingerprintIndices indices;
  GaussianStats clean;
  std::optional<GaussianStats> attack;
  std::optional<double> effect_size;

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

enum class BankMode { kTwoSample, kCleanOnly };

std::string_view BankModeName(BankMode mode);
// Throws ConfigError on an unknown name.
BankMode ParseBankMode(std::string_view name);

struct BankConfig {
  std::size_t d = 50;
  std::size_t num_candidates = 100000;
  double effect_threshold = 1.0;
  std::optional<std::size_t> max_bank_size;
  std::optional<std::size_t> max_neuron_reuse;
  std::uint64_t master_seed = 0;
  BankMode mode = BankMode::kTwoSample;

  // Checks the N-independent invariants; throws ConfigError.
  void Validate() const;

  friend bool operator==(const BankConfig&, const BankConfig&) = default;
};

struct ClassBank {
  std::uint32_t class_id = 0;
  std::size_t n_neurons = 0;
  BankConfig config;
  std::vector<Fingerprint> fingerprints;
  std::map<std::string, std::string> provenance;

  friend bool operator==(const ClassBank&, const ClassBank&) = default;
};

// The d-subset for candidate `candidate_index`. Depends only on
// (config.master_seed, candidate_index, config.d, n_neurons), never on
// evaluation order. Throws ConfigError if d > n_neurons or d == 0.
FingerprintIndices SampleCandidate(std::uint64_t candidate_index,
                                   const BankConfig& config,
                                   std::size_t n_neurons);

// Mean of the selected activations of one sample.
double FingerprintValue(const FingerprintIndices& indices,
                        std::span<const float> activations);

// One fingerprint value per row of `table`. Throws PairingError if the
// indices were built for a different N.
std::vector<double> FingerprintValues(const FingerprintIndices& indices,
                                      const ActivationTable& table);

// Sample mean and (n-1)-corrected standard deviation floored at kStdFloor.
// Throws InsufficientDataError for fewer than two values, ValidationError
// for non-finite input.
GaussianStats FitGaussian(std::span<const double> values);

// (clean.mean - attack.mean) / pooled std, pooled with weights
// (count - 1). Screening uses the absolute value.
double CohensD(const GaussianStats& clean, const GaussianStats& attack);

// Checks a bank against its structural invariants: indices in range and of
// size config.d, unique ids, mode-consistent attack statistics, stored effect
// sizes matching CohensD to `effect_rel_tol`, and the neuron reuse cap.
// Throws RangeError, ValidationError or IntegrityError.
void ValidateClassBank(const ClassBank& bank, double effect_rel_tol = 1e-12);

struct GenerateOptions {
  // 0 = std::thread::hardware_concurrency().
  unsigned num_threads = 0;
};

// Sample-and-filter bank construction for one class.
//
// Candidates 0..num_candidates-1 are evaluated independently (in parallel
// when num_threads > 1), then accepted serially in candidate order: exact
// duplicate index sets are skipped, the |d| >= threshold screen applies in
// two-sample mode, and the neuron reuse cap is enforced greedily. With
// max_bank_size the largest |effect| (ties: lower candidate index) are kept
// in two-sample mode, the first accepted in clean-only mode. Fingerprint ids
// are candidate indices; fingerprints are returned sorted by id. The result
// is independent of num_threads.
//
// `attacked` must be null iff config.mode == kCleanOnly.
ClassBank GenerateBank(const ActivationTable& clean,
                       const ActivationTable* attacked,
                       const BankConfig& config,
                       const GenerateOptions& options = {});

}  // namespace nfp

#endif  // NFP_FINGERPRINTS_H_
