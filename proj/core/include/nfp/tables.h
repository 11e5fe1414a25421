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

// Activation tables and the NFAT binary format.
//
// An activation table holds the activations of N neurons for m samples of
// one class under one condition (clean or attacked). It is the only input the
// statistical pipeline consumes.
//
// NFAT layout, little-endian throughout:
//
//   offset  size  field
//   0       4     magic "NFAT"
//   4       4     version (u32) = 1
//   8       1     kind (0 = clean, 1 = attacked)
//   9       4     class_id (u32)
//   13      8     n_neurons N (u64)
//   21      8     n_samples m (u64)
//   29      4     layer count L (u32, 0 = absent)
//   33      8*L   layer sizes (u64 each)
//   ...     4*m*N IEEE-754 binary32 values, row-major (one sample per row)

#ifndef NFP_TABLES_H_
#define NFP_TABLES_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nfp {

enum class TableKind : std::uint8_t { kClean = 0, kAttacked = 1 };

std::string_view TableKindName(TableKind kind);

inline constexpr char kNfatMagic[4] = {'N', 'F', 'A', 'T'};
inline constexpr std::uint32_t kNfatVersion = 1;
inline constexpr std::size_t kNfatFixedHeaderBytes = 33;

// Immutable m x N matrix of finite activations. Construction validates every
// invariant, so any ActivationTable that exists is well-formed.
class ActivationTable {
 public:
  // Throws ValidationError on empty dimensions, a values size that is not
  // m*N, a non-finite entry (message names row and column), or layer sizes
  // that are non-positive or do not sum to N.
  ActivationTable(std::uint32_t class_id, TableKind kind,
                  std::size_t n_samples, std::size_t n_neurons,
                  std::vector<float> values,
                  std::vector<std::uint64_t> layer_sizes = {});

  std::uint32_t class_id() const { return class_id_; }
  TableKind kind() const { return kind_; }
  std::size_t n_samples() const { return n_samples_; }
  std::size_t n_neurons() const { return n_neurons_; }
  std::span<const std::uint64_t> layer_sizes() const { return layer_sizes_; }
  std::span<const float> values() const { return values_; }

  std::span<const float> Row(std::size_t sample) const {
    return {values_.data() + sample * n_neurons_, n_neurons_};
  }
  float At(std::size_t sample, std::size_t neuron) const {
    return values_[sample * n_neurons_ + neuron];
  }

  // Bit-level equality of every field, including the float payload.
  friend bool operator==(const ActivationTable& a, const ActivationTable& b);

 private:
  std::uint32_t class_id_;
  TableKind kind_;
  std::size_t n_samples_;
  std::size_t n_neurons_;
  std::vector<float> values_;
  std::vector<std::uint64_t> layer_sizes_;
};

// Serialized size in bytes of `table` in NFAT form.
std::size_t NfatByteSize(const ActivationTable& table);

// Throws IoError (with the byte offset reached) if the sink fails.
void WriteTable(const ActivationTable& table, std::ostream& out);
void WriteTableFile(const ActivationTable& table,
                    const std::filesystem::path& path);

// Parses and validates a complete table. Never returns a partial table:
// FormatError on bad magic, bad kind tag or trailing bytes; VersionError on a
// version other than kNfatVersion; TruncationError (expected vs actual byte
// count) on a short header or payload; ValidationError on non-finite values.
ActivationTable ReadTable(std::istream& in);
ActivationTable ReadTableFile(const std::filesystem::path& path);

// Succeeds iff clean is kClean, attacked is kAttacked, and both share
// class_id and n_neurons. Throws PairingError naming the offending field.
void ValidatePair(const ActivationTable& clean, const ActivationTable& attacked);

// The four tables of one class in a train/test experiment.
struct ClassSplits {
  ActivationTable clean_train;
  ActivationTable attacked_train;
  ActivationTable clean_test;
  ActivationTable attacked_test;

  std::uint32_t class_id() const { return clean_train.class_id(); }
};

enum class Split { kTrain, kTest };

// "class<k>_<clean|attacked>_<train|test>.nfat"
std::string SplitFileName(std::uint32_t class_id, TableKind kind, Split split);

void WriteClassSplits(const ClassSplits& splits,
                      const std::filesystem::path& dir);

// Loads every class that has a complete quadruple of split files in `dir`,
// ordered by class id. Validates pairing of each train and test pair.
// Throws IoError if the directory holds no complete class or a class has
// some but not all four files.
std::vector<ClassSplits> LoadClassSplits(const std::filesystem::path& dir);

}  // namespace nfp

#endif  // NFP_TABLES_H_
