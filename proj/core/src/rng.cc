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

#include "nfp/rng.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <unordered_set>

#include "nfp/error.h"

namespace nfp {

std::uint64_t SplitMix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t MixSeed(std::uint64_t seed,
                      std::initializer_list<std::uint64_t> keys) {
  std::uint64_t state = seed;
  std::uint64_t out = SplitMix64(state);
  for (std::uint64_t key : keys) {
    state = out ^ (key * 0xd1b54a32d192ed03ULL + 0x8cb92ba72f3d8dd7ULL);
    out = SplitMix64(state);
  }
  return out;
}

Rng::Rng(std::uint64_t seed) {
  std::uint64_t state = seed;
  for (auto& word : s_) word = SplitMix64(state);
}

Rng::result_type Rng::operator()() {
  const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = std::rotl(s_[3], 45);
  return result;
}

// Lemire's multiply-shift with rejection; unbiased.
std::uint64_t Rng::Uniform(std::uint64_t bound) {
  if (bound == 0) throw ConfigError("Rng::Uniform: bound must be positive");
  unsigned __int128 product =
      static_cast<unsigned __int128>((*this)()) * bound;
  auto low = static_cast<std::uint64_t>(product);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      product = static_cast<unsigned __int128>((*this)()) * bound;
      low = static_cast<std::uint64_t>(product);
    }
  }
  return static_cast<std::uint64_t>(product >> 64);
}

double Rng::UniformDouble() {
  return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::Normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u, v, s;
  do {
    u = 2.0 * UniformDouble() - 1.0;
    v = 2.0 * UniformDouble() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double factor = std::sqrt(-2.0 * std::log(s) / s);
  spare_ = v * factor;
  has_spare_ = true;
  return u * factor;
}

std::vector<std::uint32_t> SampleWithoutReplacement(std::uint64_t population,
                                                    std::size_t count,
                                                    Rng& rng) {
  if (count > population) {
    throw ConfigError("cannot sample " + std::to_string(count) +
                      " distinct values from a population of " +
                      std::to_string(population));
  }
  if (population > std::numeric_limits<std::uint32_t>::max() + 1ULL) {
    throw ConfigError("population exceeds 32-bit index range");
  }
  std::vector<std::uint32_t> out;
  out.reserve(count);
  const std::uint64_t first = population - count;

  if (count <= 256) {
    // Sorted vector; insertion cost is negligible at this size.
    for (std::uint64_t j = first; j < population; ++j) {
      auto t = static_cast<std::uint32_t>(rng.Uniform(j + 1));
      auto it = std::lower_bound(out.begin(), out.end(), t);
      if (it != out.end() && *it == t) {
        t = static_cast<std::uint32_t>(j);
        it = std::lower_bound(out.begin(), out.end(), t);
      }
      out.insert(it, t);
    }
    return out;
  }

  if (population <= 64 * static_cast<std::uint64_t>(count)) {
    std::vector<bool> taken(population, false);
    for (std::uint64_t j = first; j < population; ++j) {
      std::uint64_t t = rng.Uniform(j + 1);
      if (taken[t]) t = j;
      taken[t] = true;
    }
    for (std::uint64_t i = 0; i < population; ++i) {
      if (taken[i]) out.push_back(static_cast<std::uint32_t>(i));
    }
    return out;
  }

  std::unordered_set<std::uint32_t> taken;
  taken.reserve(count * 2);
  for (std::uint64_t j = first; j < population; ++j) {
    auto t = static_cast<std::uint32_t>(rng.Uniform(j + 1));
    if (!taken.insert(t).second) taken.insert(static_cast<std::uint32_t>(j));
  }
  out.assign(taken.begin(), taken.end());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace nfp
