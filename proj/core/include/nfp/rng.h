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

#ifndef NFP_RNG_H_
#define NFP_RNG_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace nfp {

// One step of the SplitMix64 generator; advances `state`.
std::uint64_t SplitMix64(std::uint64_t& state);

// Derives an independent substream seed from a base seed and a path of
// stream keys, e.g. MixSeed(master, {candidate_index}). Pure function: the
// same inputs always give the same seed, regardless of call order.
std::uint64_t MixSeed(std::uint64_t seed,
                      std::initializer_list<std::uint64_t> keys);

// xoshiro256** seeded through SplitMix64. All sampling helpers below are
// implemented on top of raw 64-bit output so results are identical across
// standard libraries (std::uniform_int_distribution and
// std::normal_distribution are implementation-defined).
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()();

  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t Uniform(std::uint64_t bound);

  // Uniform double in [0, 1) with 53 random bits.
  double UniformDouble();

  // Standard normal draw (Marsaglia polar method).
  double Normal();

 private:
  std::array<std::uint64_t, 4> s_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// `count` distinct values drawn uniformly from [0, population), returned in
// ascending order. Robert Floyd's algorithm: exactly `count` calls to
// Uniform. Requires count <= population.
std::vector<std::uint32_t> SampleWithoutReplacement(std::uint64_t population,
                                                    std::size_t count,
                                                    Rng& rng);

}  // namespace nfp

#endif  // NFP_RNG_H_
