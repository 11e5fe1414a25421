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

// Planted-signal synthetic activation tables. Clean activations are i.i.d.
// N(0, 1); attacked activations add `shift` on a per-class informative
// subset of round(p * N) neurons. Every table is drawn from its own RNG
// substream keyed by (seed, class, condition, split), so the output is a
// pure function of the config.

#ifndef NFP_SYNTH_H_
#define NFP_SYNTH_H_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "nfp/tables.h"

namespace nfp {

struct SynthConfig {
  std::size_t n_neurons = 10000;
  std::size_t n_classes = 5;
  std::size_t m_train_clean = 400;
  std::size_t m_test_clean = 100;
  std::size_t m_train_attacked = 400;
  std::size_t m_test_attacked = 100;
  double p_informative = 0.1;
  double shift = 1.0;
  std::uint64_t seed = 0;

  // Throws ConfigError.
  void Validate() const;
};

struct SynthClass {
  ClassSplits tables;
  // Sorted neuron indices carrying the attack shift.
  std::vector<std::uint32_t> informative;
};

// Tables for a single class; identical to element `class_id` of SynthTables.
SynthClass SynthClassTables(const SynthConfig& config, std::uint32_t class_id);

std::vector<SynthClass> SynthTables(const SynthConfig& config);

}  // namespace nfp

#endif  // NFP_SYNTH_H_
