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

#include "nfp/fingerprints.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

#include "nfp/error.h"
#include "nfp/rng.h"

namespace nfp {
namespace {

// Column-major copy of a table: column j occupies [j*m, (j+1)*m). Summing d
// contiguous columns is what candidate evaluation does in its inner loop.
class ColumnMajor {
 public:
  explicit ColumnMajor(const ActivationTable& t)
      : m_(t.n_samples()), n_(t.n_neurons()), data_(m_ * n_) {
    constexpr std::size_t kBlock = 64;
    auto src = t.values();
    for (std::size_t r0 = 0; r0 < m_; r0 += kBlock) {
      const std::size_t r1 = std::min(m_, r0 + kBlock);
      for (std::size_t c0 = 0; c0 < n_; c0 += kBlock) {
        const std::size_t c1 = std::min(n_, c0 + kBlock);
        for (std::size_t r = r0; r < r1; ++r) {
          for (std::size_t c = c0; c < c1; ++c) {
            data_[c * m_ + r] = src[r * n_ + c];
          }
        }
      }
    }
  }

  std::size_t n_samples() const { return m_; }

  // Same summation order as FingerprintValue: indices ascending, then /d.
  void Values(std::span<const std::uint32_t> idx,
              std::vector<double>& out) const {
    out.assign(m_, 0.0);
    double* acc = out.data();
    for (std::uint32_t j : idx) {
      const float* col = data_.data() + std::size_t{j} * m_;
      for (std::size_t k = 0; k < m_; ++k) acc[k] += col[k];
    }
    const auto d = static_cast<double>(idx.size());
    for (std::size_t k = 0; k < m_; ++k) acc[k] /= d;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::vector<float> data_;
};

struct Candidate {
  std::vector<std::uint32_t> indices;
  GaussianStats clean;
  std::optional<GaussianStats> attack;
  std::optional<double> effect;
};

bool RelClose(double a, double b, double rel_tol) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
  return std::abs(a - b) <= rel_tol * scale;
}

}  // namespace

FingerprintIndices::FingerprintIndices(std::vector<std::uint32_t> indices,
                                       std::size_t n_neurons)
    : indices_(std::move(indices)), n_neurons_(n_neurons) {
  if (indices_.empty()) {
    throw ValidationError("fingerprint must have at least one index");
  }
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    if (indices_[i] >= n_neurons_) {
      throw RangeError("fingerprint index " + std::to_string(indices_[i]) +
                       " out of range for N=" + std::to_string(n_neurons_));
    }
    if (i > 0 && indices_[i] <= indices_[i - 1]) {
      throw ValidationError(
          "fingerprint indices must be strictly increasing (position " +
          std::to_string(i) + ")");
    }
  }
}

void GaussianStats::Validate() const {
  if (!std::isfinite(mean) || !std::isfinite(std)) {
    throw ValidationError("Gaussian statistics must be finite");
  }
  if (std < kStdFloor) {
    throw ValidationError("Gaussian std " + std::to_string(std) +
                          " below floor 1e-8");
  }
  if (count < 2) {
    throw ValidationError("Gaussian statistics need count >= 2");
  }
}

std::string_view BankModeName(BankMode mode) {
  return mode == BankMode::kTwoSample ? "two_sample" : "clean_only";
}

BankMode ParseBankMode(std::string_view name) {
  if (name == "two_sample") return BankMode::kTwoSample;
  if (name == "clean_only") return BankMode::kCleanOnly;
  throw ConfigError("unknown bank mode '" + std::string(name) + "'");
}

void BankConfig::Validate() const {
  if (d < 1) throw ConfigError("fingerprint size d must be >= 1");
  if (!(effect_threshold >= 0.0) || !std::isfinite(effect_threshold)) {
    throw ConfigError("effect threshold must be finite and >= 0");
  }
  if (mode != BankMode::kTwoSample && mode != BankMode::kCleanOnly) {
    throw ConfigError("unknown bank mode");
  }
}

FingerprintIndices SampleCandidate(std::uint64_t candidate_index,
                                   const BankConfig& config,
                                   std::size_t n_neurons) {
  if (config.d == 0 || config.d > n_neurons) {
    throw ConfigError("fingerprint size d=" + std::to_string(config.d) +
                      " must be in [1, N=" + std::to_string(n_neurons) + "]");
  }
  Rng rng(MixSeed(config.master_seed, {candidate_index}));
  return FingerprintIndices(
      SampleWithoutReplacement(n_neurons, config.d, rng), n_neurons);
}

double FingerprintValue(const FingerprintIndices& indices,
                        std::span<const float> activations) {
  if (activations.size() != indices.n_neurons()) {
    throw PairingError("n_neurons: fingerprint indexes N=" +
                       std::to_string(indices.n_neurons()) +
                       " but activation vector has length " +
                       std::to_string(activations.size()));
  }
  double sum = 0.0;
  for (std::uint32_t j : indices.indices()) sum += activations[j];
  return sum / static_cast<double>(indices.d());
}

std::vector<double> FingerprintValues(const FingerprintIndices& indices,
                                      const ActivationTable& table) {
  if (table.n_neurons() != indices.n_neurons()) {
    throw PairingError("n_neurons: fingerprint indexes N=" +
                       std::to_string(indices.n_neurons()) + " but table has N=" +
                       std::to_string(table.n_neurons()));
  }
  std::vector<double> out(table.n_samples());
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = FingerprintValue(indices, table.Row(k));
  }
  return out;
}

GaussianStats FitGaussian(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n < 2) {
    throw InsufficientDataError("Gaussian fit needs >= 2 values, got " +
                                std::to_string(n));
  }
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw ValidationError("non-finite value in Gaussian fit");
    sum += v;
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  return {mean, std::max(sd, kStdFloor), n};
}

double CohensD(const GaussianStats& clean, const GaussianStats& attack) {
  const auto m = static_cast<double>(clean.count);
  const auto mp = static_cast<double>(attack.count);
  const double pooled =
      std::sqrt(((m - 1.0) * clean.std * clean.std +
                 (mp - 1.0) * attack.std * attack.std) /
                (m + mp - 2.0));
  return (clean.mean - attack.mean) / pooled;
}

void ValidateClassBank(const ClassBank& bank, double effect_rel_tol) {
  std::set<std::uint64_t> ids;
  std::vector<std::size_t> usage;
  if (bank.config.max_neuron_reuse) usage.assign(bank.n_neurons, 0);
  const std::string where = "class " + std::to_string(bank.class_id) + ": ";

  for (const Fingerprint& fp : bank.fingerprints) {
    const std::string at = where + "fingerprint " + std::to_string(fp.id) + ": ";
    if (!ids.insert(fp.id).second) {
      throw ValidationError(at + "duplicate id");
    }
    if (fp.indices.n_neurons() != bank.n_neurons) {
      throw PairingError(at + "indexes N=" +
                         std::to_string(fp.indices.n_neurons()) +
                         " but bank has N=" + std::to_string(bank.n_neurons));
    }
    if (fp.indices.d() != bank.config.d) {
      throw ValidationError(at + "has " + std::to_string(fp.indices.d()) +
                            " indices, config d=" +
                            std::to_string(bank.config.d));
    }
    fp.clean.Validate();
    if (bank.config.mode == BankMode::kTwoSample) {
      if (!fp.attack || !fp.effect_size) {
        throw ValidationError(at + "two-sample bank requires attack stats and effect size");
      }
      fp.attack->Validate();
      const double recomputed = CohensD(fp.clean, *fp.attack);
      if (!RelClose(recomputed, *fp.effect_size, effect_rel_tol)) {
        throw IntegrityError(at + "stored effect size " +
                             std::to_string(*fp.effect_size) +
                             " disagrees with recomputed " +
                             std::to_string(recomputed));
      }
    } else if (fp.attack || fp.effect_size) {
      throw ValidationError(at + "clean-only bank must not carry attack stats");
    }
    if (bank.config.max_neuron_reuse) {
      for (std::uint32_t j : fp.indices.indices()) {
        if (++usage[j] > *bank.config.max_neuron_reuse) {
          throw ValidationError(at + "neuron " + std::to_string(j) +
                                " exceeds reuse cap " +
                                std::to_string(*bank.config.max_neuron_reuse));
        }
      }
    }
  }
}

ClassBank GenerateBank(const ActivationTable& clean,
                       const ActivationTable* attacked,
                       const BankConfig& config,
                       const GenerateOptions& options) {
  config.Validate();
  const bool two_sample = config.mode == BankMode::kTwoSample;
  if (two_sample && attacked == nullptr) {
    throw ConfigError("two-sample mode requires an attacked table");
  }
  if (!two_sample && attacked != nullptr) {
    throw ConfigError("clean-only mode takes no attacked table");
  }
  if (clean.kind() != TableKind::kClean) {
    throw PairingError("kind: bank generation needs a clean table");
  }
  if (two_sample) ValidatePair(clean, *attacked);

  const std::size_t n = clean.n_neurons();
  if (n > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("N exceeds 32-bit index range");
  }
  if (config.d > n) {
    throw ConfigError("fingerprint size d=" + std::to_string(config.d) +
                      " exceeds N=" + std::to_string(n));
  }
  if (clean.n_samples() < 2 || (two_sample && attacked->n_samples() < 2)) {
    throw InsufficientDataError("Gaussian fitting needs >= 2 samples per table");
  }

  ClassBank bank;
  bank.class_id = clean.class_id();
  bank.n_neurons = n;
  bank.config = config;

  const std::size_t total = config.num_candidates;
  std::vector<std::optional<Candidate>> results(total);

  if (total > 0) {
    const ColumnMajor clean_cols(clean);
    std::optional<ColumnMajor> attack_cols;
    if (two_sample) attack_cols.emplace(*attacked);

    std::atomic<std::size_t> next{0};
    constexpr std::size_t kChunk = 64;
    std::exception_ptr failure;
    std::mutex failure_mu;

    auto worker = [&] {
      try {
        std::vector<double> buf;
        for (;;) {
          const std::size_t begin = next.fetch_add(kChunk);
          if (begin >= total) break;
          const std::size_t end = std::min(total, begin + kChunk);
          for (std::size_t c = begin; c < end; ++c) {
            Rng rng(MixSeed(config.master_seed, {c}));
            Candidate cand;
            cand.indices = SampleWithoutReplacement(n, config.d, rng);
            clean_cols.Values(cand.indices, buf);
            cand.clean = FitGaussian(buf);
            if (two_sample) {
              attack_cols->Values(cand.indices, buf);
              cand.attack = FitGaussian(buf);
              cand.effect = CohensD(cand.clean, *cand.attack);
              if (!(std::abs(*cand.effect) >= config.effect_threshold)) continue;
            }
            results[c] = std::move(cand);
          }
        }
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    };

    unsigned threads = options.num_threads;
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    threads = static_cast<unsigned>(
        std::min<std::size_t>(threads, (total + kChunk - 1) / kChunk));
    if (threads <= 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      pool.reserve(threads);
      for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failure) std::rethrow_exception(failure);
  }

  // Serial acceptance in candidate order.
  std::set<std::vector<std::uint32_t>> seen;
  std::vector<std::size_t> usage;
  if (config.max_neuron_reuse) usage.assign(n, 0);
  std::size_t passed = 0, duplicates = 0, reuse_rejected = 0;

  for (std::size_t c = 0; c < total; ++c) {
    if (!results[c]) continue;
    Candidate& cand = *results[c];
    ++passed;
    if (!seen.insert(cand.indices).second) {
      ++duplicates;
      continue;
    }
    if (config.max_neuron_reuse) {
      const std::size_t cap = *config.max_neuron_reuse;
      const bool fits = std::all_of(
          cand.indices.begin(), cand.indices.end(),
          [&](std::uint32_t j) { return usage[j] < cap; });
      if (!fits) {
        ++reuse_rejected;
        continue;
      }
      for (std::uint32_t j : cand.indices) ++usage[j];
    }
    bank.fingerprints.push_back(Fingerprint{
        c, FingerprintIndices(std::move(cand.indices), n), cand.clean,
        cand.attack, cand.effect});
    results[c].reset();
  }

  if (config.max_bank_size && bank.fingerprints.size() > *config.max_bank_size) {
    auto& fps = bank.fingerprints;
    if (two_sample) {
      std::stable_sort(fps.begin(), fps.end(),
                       [](const Fingerprint& a, const Fingerprint& b) {
                         return std::abs(*a.effect_size) > std::abs(*b.effect_size);
                       });
      fps.erase(fps.begin() + static_cast<std::ptrdiff_t>(*config.max_bank_size), fps.end());
      std::sort(fps.begin(), fps.end(),
                [](const Fingerprint& a, const Fingerprint& b) { return a.id < b.id; });
    } else {
      fps.erase(fps.begin() + static_cast<std::ptrdiff_t>(*config.max_bank_size), fps.end());
    }
  }

  bank.provenance["candidates_evaluated"] = std::to_string(total);
  bank.provenance["passed_screen"] = std::to_string(passed);
  bank.provenance["duplicates_skipped"] = std::to_string(duplicates);
  bank.provenance["rejected_by_reuse_cap"] = std::to_string(reuse_rejected);
  return bank;
}

}  // namespace nfp
