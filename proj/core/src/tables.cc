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

#include "nfp/tables.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <regex>

#include "nfp/error.h"

namespace nfp {
namespace {

static_assert(std::numeric_limits<float>::is_iec559);

void PutLe(std::string& buf, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) {
    buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
}

std::uint64_t GetLe(const unsigned char* p, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= std::uint64_t{p[i]} << (8 * i);
  return v;
}

std::string EncodeHeader(const ActivationTable& t) {
  std::string h;
  h.reserve(kNfatFixedHeaderBytes + 8 * t.layer_sizes().size());
  h.append(kNfatMagic, 4);
  PutLe(h, kNfatVersion, 4);
  PutLe(h, static_cast<std::uint8_t>(t.kind()), 1);
  PutLe(h, t.class_id(), 4);
  PutLe(h, t.n_neurons(), 8);
  PutLe(h, t.n_samples(), 8);
  PutLe(h, t.layer_sizes().size(), 4);
  for (std::uint64_t s : t.layer_sizes()) PutLe(h, s, 8);
  return h;
}

// Reads exactly `n` bytes or throws TruncationError describing `what`.
void ReadExact(std::istream& in, char* dst, std::size_t n,
               std::string_view what) {
  in.read(dst, static_cast<std::streamsize>(n));
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got != n) {
    if (in.bad()) throw IoError("read error in " + std::string(what));
    throw TruncationError("truncated " + std::string(what) + ": expected " +
                          std::to_string(n) + " bytes, got " +
                          std::to_string(got));
  }
}

}  // namespace

std::string_view TableKindName(TableKind kind) {
  return kind == TableKind::kClean ? "clean" : "attacked";
}

ActivationTable::ActivationTable(std::uint32_t class_id, TableKind kind,
                                 std::size_t n_samples, std::size_t n_neurons,
                                 std::vector<float> values,
                                 std::vector<std::uint64_t> layer_sizes)
    : class_id_(class_id),
      kind_(kind),
      n_samples_(n_samples),
      n_neurons_(n_neurons),
      values_(std::move(values)),
      layer_sizes_(std::move(layer_sizes)) {
  if (kind_ != TableKind::kClean && kind_ != TableKind::kAttacked) {
    throw ValidationError("table kind must be clean or attacked");
  }
  if (n_samples_ == 0 || n_neurons_ == 0) {
    throw ValidationError("table dimensions must be positive (m=" +
                          std::to_string(n_samples_) +
                          ", N=" + std::to_string(n_neurons_) + ")");
  }
  if (n_samples_ > values_.max_size() / n_neurons_ ||
      values_.size() != n_samples_ * n_neurons_) {
    throw ValidationError("table holds " + std::to_string(values_.size()) +
                          " values but m*N = " + std::to_string(n_samples_) +
                          "*" + std::to_string(n_neurons_));
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) {
      throw ValidationError("non-finite activation at (row " +
                            std::to_string(i / n_neurons_) + ", column " +
                            std::to_string(i % n_neurons_) + ")");
    }
  }
  if (!layer_sizes_.empty()) {
    std::uint64_t sum = 0;
    for (std::uint64_t s : layer_sizes_) {
      if (s == 0) throw ValidationError("layer sizes must be positive");
      sum += s;
    }
    if (sum != n_neurons_) {
      throw ValidationError("layer sizes sum to " + std::to_string(sum) +
                            " but N = " + std::to_string(n_neurons_));
    }
  }
}

bool operator==(const ActivationTable& a, const ActivationTable& b) {
  return a.class_id_ == b.class_id_ && a.kind_ == b.kind_ &&
         a.n_samples_ == b.n_samples_ && a.n_neurons_ == b.n_neurons_ &&
         a.layer_sizes_ == b.layer_sizes_ &&
         std::memcmp(a.values_.data(), b.values_.data(),
                     a.values_.size() * sizeof(float)) == 0;
}

std::size_t NfatByteSize(const ActivationTable& table) {
  return kNfatFixedHeaderBytes + 8 * table.layer_sizes().size() +
         4 * table.values().size();
}

void WriteTable(const ActivationTable& table, std::ostream& out) {
  std::size_t offset = 0;
  auto emit = [&](const char* data, std::size_t n) {
    out.write(data, static_cast<std::streamsize>(n));
    if (!out) {
      throw IoError("write failed at byte offset " + std::to_string(offset));
    }
    offset += n;
  };

  const std::string header = EncodeHeader(table);
  emit(header.data(), header.size());

  constexpr std::size_t kChunkValues = 1 << 16;
  std::string chunk;
  chunk.reserve(4 * kChunkValues);
  auto values = table.values();
  for (std::size_t start = 0; start < values.size(); start += kChunkValues) {
    const std::size_t end = std::min(values.size(), start + kChunkValues);
    chunk.clear();
    for (std::size_t i = start; i < end; ++i) {
      PutLe(chunk, std::bit_cast<std::uint32_t>(values[i]), 4);
    }
    emit(chunk.data(), chunk.size());
  }
  out.flush();
  if (!out) throw IoError("flush failed at byte offset " + std::to_string(offset));
}

void WriteTableFile(const ActivationTable& table,
                    const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  WriteTable(table, out);
}

ActivationTable ReadTable(std::istream& in) {
  unsigned char fixed[kNfatFixedHeaderBytes];
  in.read(reinterpret_cast<char*>(fixed), sizeof fixed);
  const auto got = static_cast<std::size_t>(in.gcount());
  if (got >= 4 && std::memcmp(fixed, kNfatMagic, 4) != 0) {
    throw FormatError("bad magic: not an NFAT stream");
  }
  if (got < sizeof fixed) {
    if (in.bad()) throw IoError("read error in NFAT header");
    throw TruncationError("truncated header: expected " +
                          std::to_string(sizeof fixed) + " bytes, got " +
                          std::to_string(got));
  }
  const auto version = static_cast<std::uint32_t>(GetLe(fixed + 4, 4));
  if (version != kNfatVersion) {
    throw VersionError("unsupported NFAT version " + std::to_string(version) +
                       " (expected " + std::to_string(kNfatVersion) + ")");
  }
  const std::uint8_t kind_tag = fixed[8];
  if (kind_tag > 1) {
    throw FormatError("bad kind tag " + std::to_string(kind_tag));
  }
  const auto class_id = static_cast<std::uint32_t>(GetLe(fixed + 9, 4));
  const std::uint64_t n_neurons = GetLe(fixed + 13, 8);
  const std::uint64_t n_samples = GetLe(fixed + 21, 8);
  const auto n_layers = static_cast<std::uint32_t>(GetLe(fixed + 29, 4));
  if (n_neurons == 0 || n_samples == 0) {
    throw FormatError("NFAT header declares an empty table (m=" +
                      std::to_string(n_samples) +
                      ", N=" + std::to_string(n_neurons) + ")");
  }
  if (n_layers > n_neurons) {
    throw FormatError("layer count " + std::to_string(n_layers) +
                      " exceeds N = " + std::to_string(n_neurons));
  }

  std::vector<std::uint64_t> layer_sizes(n_layers);
  if (n_layers > 0) {
    std::vector<unsigned char> raw(8 * std::size_t{n_layers});
    ReadExact(in, reinterpret_cast<char*>(raw.data()), raw.size(),
              "layer sizes");
    for (std::uint32_t i = 0; i < n_layers; ++i) {
      layer_sizes[i] = GetLe(raw.data() + 8 * i, 8);
    }
  }

  constexpr std::uint64_t kMaxValues =
      std::numeric_limits<std::uint64_t>::max() / 4;
  if (n_samples > kMaxValues / n_neurons) {
    throw FormatError("declared table size overflows");
  }
  const std::uint64_t n_values = n_samples * n_neurons;
  const std::uint64_t payload_bytes = 4 * n_values;

  // Read in bounded chunks so a lying header cannot force a huge allocation
  // before the stream proves it has the bytes.
  std::vector<float> values;
  constexpr std::size_t kChunkBytes = std::size_t{1} << 22;
  std::vector<char> chunk(
      static_cast<std::size_t>(std::min<std::uint64_t>(payload_bytes, kChunkBytes)));
  std::uint64_t done = 0;
  while (done < payload_bytes) {
    const auto want = static_cast<std::size_t>(
        std::min<std::uint64_t>(payload_bytes - done, kChunkBytes));
    in.read(chunk.data(), static_cast<std::streamsize>(want));
    const auto n = static_cast<std::size_t>(in.gcount());
    if (n != want) {
      if (in.bad()) throw IoError("read error in NFAT payload");
      throw TruncationError("truncated payload: expected " +
                            std::to_string(payload_bytes) + " bytes, got " +
                            std::to_string(done + n));
    }
    if (values.empty()) values.reserve(static_cast<std::size_t>(n_values));
    for (std::size_t i = 0; i < n; i += 4) {
      const auto bits = static_cast<std::uint32_t>(
          GetLe(reinterpret_cast<const unsigned char*>(chunk.data()) + i, 4));
      values.push_back(std::bit_cast<float>(bits));
    }
    done += n;
  }
  if (in.peek() != std::char_traits<char>::eof()) {
    throw FormatError("trailing bytes after NFAT payload");
  }

  return ActivationTable(class_id, static_cast<TableKind>(kind_tag),
                         static_cast<std::size_t>(n_samples),
                         static_cast<std::size_t>(n_neurons),
                         std::move(values), std::move(layer_sizes));
}

ActivationTable ReadTableFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return ReadTable(in);
  } catch (const Error& e) {
    // Keep the exception type; prefix the file name.
    const std::string where = path.string() + ": ";
    if (dynamic_cast<const TruncationError*>(&e)) throw TruncationError(where + e.what());
    if (dynamic_cast<const VersionError*>(&e)) throw VersionError(where + e.what());
    if (dynamic_cast<const FormatError*>(&e)) throw FormatError(where + e.what());
    if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(where + e.what());
    throw;
  }
}

void ValidatePair(const ActivationTable& clean,
                  const ActivationTable& attacked) {
  if (clean.kind() != TableKind::kClean) {
    throw PairingError("kind: first table must be clean");
  }
  if (attacked.kind() != TableKind::kAttacked) {
    throw PairingError("kind: second table must be attacked");
  }
  if (clean.class_id() != attacked.class_id()) {
    throw PairingError("class_id: clean table has class " +
                       std::to_string(clean.class_id()) +
                       ", attacked table has class " +
                       std::to_string(attacked.class_id()));
  }
  if (clean.n_neurons() != attacked.n_neurons()) {
    throw PairingError("n_neurons: clean table has N=" +
                       std::to_string(clean.n_neurons()) +
                       ", attacked table has N=" +
                       std::to_string(attacked.n_neurons()));
  }
}

std::string SplitFileName(std::uint32_t class_id, TableKind kind,
                          Split split) {
  return "class" + std::to_string(class_id) + "_" +
         std::string(TableKindName(kind)) + "_" +
         (split == Split::kTrain ? "train" : "test") + ".nfat";
}

void WriteClassSplits(const ClassSplits& s, const std::filesystem::path& dir) {
  const std::uint32_t c = s.class_id();
  WriteTableFile(s.clean_train, dir / SplitFileName(c, TableKind::kClean, Split::kTrain));
  WriteTableFile(s.attacked_train, dir / SplitFileName(c, TableKind::kAttacked, Split::kTrain));
  WriteTableFile(s.clean_test, dir / SplitFileName(c, TableKind::kClean, Split::kTest));
  WriteTableFile(s.attacked_test, dir / SplitFileName(c, TableKind::kAttacked, Split::kTest));
}

std::vector<ClassSplits> LoadClassSplits(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("not a directory: " + dir.string());
  }
  static const std::regex kPattern(
      R"(class(\d+)_(clean|attacked)_(train|test)\.nfat)");
  std::map<std::uint32_t, int> seen;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (std::regex_match(name, m, kPattern)) {
      ++seen[static_cast<std::uint32_t>(std::stoul(m[1].str()))];
    }
  }
  if (seen.empty()) {
    throw IoError("no class<k>_*.nfat files in " + dir.string());
  }
  std::vector<ClassSplits> out;
  for (const auto& [c, count] : seen) {
    if (count != 4) {
      throw IoError("class " + std::to_string(c) + " in " + dir.string() +
                    " has " + std::to_string(count) + " of 4 split files");
    }
    ClassSplits s{
        ReadTableFile(dir / SplitFileName(c, TableKind::kClean, Split::kTrain)),
        ReadTableFile(dir / SplitFileName(c, TableKind::kAttacked, Split::kTrain)),
        ReadTableFile(dir / SplitFileName(c, TableKind::kClean, Split::kTest)),
        ReadTableFile(dir / SplitFileName(c, TableKind::kAttacked, Split::kTest)),
    };
    ValidatePair(s.clean_train, s.attacked_train);
    ValidatePair(s.clean_test, s.attacked_test);
    if (s.clean_train.class_id() != c || s.clean_test.class_id() != c) {
      throw PairingError("class_id: files for class " + std::to_string(c) +
                         " carry a different class id in their header");
    }
    if (s.clean_train.n_neurons() != s.clean_test.n_neurons()) {
      throw PairingError("n_neurons: train and test tables of class " +
                         std::to_string(c) + " differ");
    }
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace nfp
