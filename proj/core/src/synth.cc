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

#include <cmath>
#include <limits>
#include <string>

#include "nfp/error.h"
#include "nfp/rng.h"

namespace nfp {
namespace {

// Substream keys.
enum : std::uint64_t { kInformativeStream = 0, kTableStream = 1 };

ActivationTable DrawTable(const SynthConfig& config, std::uint32_t class_id,
                          TableKind kind, Split split, std::size_t m,
                          const std::vector<char>& shifted) {
  Rng rng(MixSeed(config.seed, {kTableStream, class_id,
                                static_cast<std::uint64_t>(kind),
                                static_cast<std::uint64_t>(split)}));
  const std::size_t n = config.n_neurons;
  std::vector<float> values(m * n);
  const bool attacked = kind == TableKind::kAttacked;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      double v = rng.Normal();
      if (attacked && shifted[c]) v += config.shift;
      values[r * n + c] = static_cast<float>(v);
    }
  }
  return ActivationTable(class_id, kind, m, n, std::move(values));
}

}  // namespace

void SynthConfig::Validate() const {
  if (n_neurons == 0 || n_neurons > std::numeric_limits<std::uint32_t>::max()) {
    throw ConfigError("synth: n_neurons must be in [1, 2^32)");
  }
  if (n_classes == 0) throw ConfigError("synth: n_classes must be >= 1");
  for (std::size_t m : {m_train_clean, m_test_clean, m_train_attacked, m_test_attacked}) {
    if (m < 2) throw ConfigError("synth: every sample count must be >= 2");
  }
  if (!(p_informative >= 0.0 && p_informative <= 1.0)) {
    throw ConfigError("synth: p_informative must be in [0, 1]");
  }
  if (!std::isfinite(shift)) throw ConfigError("synth: shift must be finite");
}

SynthClass SynthClassTables(const SynthConfig& config, std::uint32_t class_id) {
  config.Validate();
  const std::size_t n = config.n_neurons;
  const auto n_informative =
      static_cast<std::size_t>(std::llround(config.p_informative * static_cast<double>(n)));

  Rng pick(MixSeed(config.seed, {kInformativeStream, class_id}));
  std::vector<std::uint32_t> informative =
      SampleWithoutReplacement(n, std::min(n_informative, n), pick);
  std::vector<char> shifted(n, 0);
  for (std::uint32_t j : informative) shifted[j] = 1;

  return SynthClass{
      ClassSplits{
          DrawTable(config, class_id, TableKind::kClean, Split::kTrain,
                    config.m_train_clean, shifted),
          DrawTable(config, class_id, TableKind::kAttacked, Split::kTrain,
                    config.m_train_attacked, shifted),
          DrawTable(config, class_id, TableKind::kClean, Split::kTest,
                    config.m_test_clean, shifted),
          DrawTable(config, class_id, TableKind::kAttacked, Split::kTest,
                    config.m_test_attacked, shifted),
      },
      std::move(informative)};
}

std::vector<SynthClass> SynthTables(const SynthConfig& config) {
  config.Validate();
  std::vector<SynthClass> out;
  out.reserve(config.n_classes);
  for (std::size_t c = 0; c < config.n_classes; ++c) {
    out.push_back(SynthClassTables(config, static_cast<std::uint32_t>(c)));
  }
  return out;
}

}  // namespace nfp
