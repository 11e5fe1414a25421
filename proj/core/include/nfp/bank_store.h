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

// Bank files: JSON documents holding the fingerprint banks of every class of
// one model.
//
//   {
//     "version": 1,
//     "model": "<free text>",
//     "n_neurons": N,
//     "digest": "sha256:<hex>",
//     "classes": {
//       "<class id>": {
//         "config": {"d", "num_candidates", "effect_threshold",
//                    "max_bank_size"?, "max_neuron_reuse"?, "master_seed",
//                    "mode"},
//         "provenance": {"<key>": "<value>", ...},
//         "fingerprints": [
//           {"id", "indices": [...], "clean": {"mean", "std", "count"},
//            "attack"?: {...}, "effect_size"?}
//         ]
//       }
//     }
//   }
//
// The digest is SHA-256 over the canonical serialization: the same document
// without the "digest" key, keys sorted, no whitespace, doubles in shortest
// round-trip form.

#ifndef NFP_BANK_STORE_H_
#define NFP_BANK_STORE_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "nfp/fingerprints.h"

namespace nfp {

inline constexpr std::uint32_t kBankFormatVersion = 1;

struct BankFile {
  std::uint32_t format_version = kBankFormatVersion;
  std::string model;
  std::size_t n_neurons = 0;
  std::map<std::uint32_t, ClassBank> classes;

  friend bool operator==(const BankFile&, const BankFile&) = default;
};

// Canonical serialization (no digest). Byte-equal for equal banks.
std::string CanonicalBankBytes(const BankFile& bank);

// "sha256:<hex>" of CanonicalBankBytes.
std::string BankDigest(const BankFile& bank);

// Validates then writes pretty-printed JSON with the digest embedded.
// Throws IoError on sink failure.
void SaveBank(const BankFile& bank, std::ostream& out);
void SaveBankFile(const BankFile& bank, const std::filesystem::path& path);

// Parses and fully validates a bank file. Errors, in checking order:
// SchemaError (malformed JSON or a missing/mistyped field, message names the
// JSON path), VersionError, RangeError (index >= n_neurons),
// ValidationError (other invariants), IntegrityError (stored effect sizes
// off by more than 1e-9 relative, or digest mismatch).
BankFile LoadBank(std::istream& in);
BankFile LoadBankFile(const std::filesystem::path& path);

struct ClassSummary {
  std::uint32_t class_id = 0;
  std::size_t count = 0;
  // Over |effect_size|; zero for empty or clean-only banks.
  double effect_min = 0.0;
  double effect_median = 0.0;
  double effect_max = 0.0;
  // Largest number of fingerprints any single neuron belongs to.
  std::size_t max_neuron_reuse = 0;
};

struct BankSummaryReport {
  std::string model;
  std::size_t n_neurons = 0;
  std::vector<ClassSummary> classes;
};

BankSummaryReport BankSummary(const BankFile& bank);
std::string FormatBankSummary(const BankSummaryReport& report);

}  // namespace nfp

#endif  // NFP_BANK_STORE_H_
