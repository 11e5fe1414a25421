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

#include <benchmark/benchmark.h>

#include <sstream>

#include "nfp/detector.h"
#include "nfp/fingerprints.h"
#include "nfp/synth.h"
#include "nfp/tables.h"

namespace {

const nfp::SynthClass& Data() {
  static const nfp::SynthClass data = [] {
    nfp::SynthConfig c;
    c.n_neurons = 10000;
    c.n_classes = 1;
    c.m_train_clean = c.m_train_attacked = 400;
    c.m_test_clean = c.m_test_attacked = 100;
    c.seed = 1;
    return nfp::SynthClassTables(c, 0);
  }();
  return data;
}

const nfp::ClassBank& Bank() {
  static const nfp::ClassBank bank = [] {
    nfp::BankConfig b;
    b.d = 50;
    b.num_candidates = 20000;
    return nfp::GenerateBank(Data().tables.clean_train, &Data().tables.attacked_train, b);
  }();
  return bank;
}

void BM_GenerateBank(benchmark::State& state) {
  nfp::BankConfig b;
  b.d = 50;
  b.num_candidates = 5000;
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(nfp::GenerateBank(Data().tables.clean_train,
                                               &Data().tables.attacked_train, b,
                                               {threads}));
  }
  state.SetItemsProcessed(state.iterations() * b.num_candidates);
}
BENCHMARK(BM_GenerateBank)
    ->Arg(1)
    ->Arg(4)
    ->Arg(8)
    ->UseRealTime()
    ->Unit(benchmark::kMillisecond);

void BM_Detect(benchmark::State& state) {
  const nfp::DetectorConfig dc{static_cast<nfp::Rule>(state.range(0)),
                               static_cast<std::size_t>(state.range(1)), 0.0, 1};
  nfp::Rng rng(dc.seed);
  const nfp::ClassBank& bank = Bank();
  const auto x = Data().tables.attacked_test.Row(0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(nfp::Detect(x, bank, dc, rng));
  }
}
BENCHMARK(BM_Detect)
    ->ArgsProduct({{0, 1, 2}, {1, 20, 40}})
    ->ArgNames({"rule", "k"});

void BM_ReadTable(benchmark::State& state) {
  std::ostringstream os(std::ios::binary);
  nfp::WriteTable(Data().tables.clean_train, os);
  const std::string bytes = os.str();
  for (auto _ : state) {
    std::istringstream is(bytes, std::ios::binary);
    benchmark::DoNotOptimize(nfp::ReadTable(is));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<std::int64_t>(bytes.size()));
}
BENCHMARK(BM_ReadTable)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
