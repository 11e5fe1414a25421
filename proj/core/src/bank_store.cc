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

#include "nfp/bank_store.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "nfp/digest.h"
#include "nfp/error.h"

namespace nfp {
namespace {

using json = nlohmann::json;

constexpr double kLoadEffectRelTol = 1e-9;

json StatsToJson(const GaussianStats& s) {
  return json{{"mean", s.mean}, {"std", s.std}, {"count", s.count}};
}

json ConfigToJson(const BankConfig& c) {
  json j{{"d", c.d},
         {"num_candidates", c.num_candidates},
         {"effect_threshold", c.effect_threshold},
         {"master_seed", c.master_seed},
         {"mode", std::string(BankModeName(c.mode))}};
  if (c.max_bank_size) j["max_bank_size"] = *c.max_bank_size;
  if (c.max_neuron_reuse) j["max_neuron_reuse"] = *c.max_neuron_reuse;
  return j;
}

json FingerprintToJson(const Fingerprint& fp) {
  json j{{"id", fp.id},
         {"indices", std::vector<std::uint32_t>(fp.indices.indices().begin(),
                                                fp.indices.indices().end())},
         {"clean", StatsToJson(fp.clean)}};
  if (fp.attack) j["attack"] = StatsToJson(*fp.attack);
  if (fp.effect_size) j["effect_size"] = *fp.effect_size;
  return j;
}

json ClassToJson(const ClassBank& cb) {
  json fps = json::array();
  for (const Fingerprint& fp : cb.fingerprints) fps.push_back(FingerprintToJson(fp));
  return json{{"config", ConfigToJson(cb.config)},
              {"provenance", cb.provenance},
              {"fingerprints", std::move(fps)}};
}

json BankToJson(const BankFile& bank) {
  json classes = json::object();
  for (const auto& [id, cb] : bank.classes) {
    classes[std::to_string(id)] = ClassToJson(cb);
  }
  return json{{"version", bank.format_version},
              {"model", bank.model},
              {"n_neurons", bank.n_neurons},
              {"classes", std::move(classes)}};
}

// --- schema-checked accessors -------------------------------------------

const json& Field(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(path + "." + key + ": missing field");
  return *it;
}

double AsDouble(const json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path + ": expected a number");
  return j.get<double>();
}

std::uint64_t AsUnsigned(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw SchemaError(path + ": expected an integer");
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = j.get<std::int64_t>();
  if (v < 0) throw SchemaError(path + ": expected a non-negative integer");
  return static_cast<std::uint64_t>(v);
}

std::string AsString(const json& j, const std::string& path) {
  if (!j.is_string()) throw SchemaError(path + ": expected a string");
  return j.get<std::string>();
}

GaussianStats ParseStats(const json& j, const std::string& path) {
  GaussianStats s;
  s.mean = AsDouble(Field(j, "mean", path), path + ".mean");
  s.std = AsDouble(Field(j, "std", path), path + ".std");
  s.count = AsUnsigned(Field(j, "count", path), path + ".count");
  return s;
}

BankConfig ParseConfig(const json& j, const std::string& path) {
  BankConfig c;
  c.d = AsUnsigned(Field(j, "d", path), path + ".d");
  c.num_candidates = AsUnsigned(Field(j, "num_candidates", path), path + ".num_candidates");
  c.effect_threshold =
      AsDouble(Field(j, "effect_threshold", path), path + ".effect_threshold");
  c.master_seed = AsUnsigned(Field(j, "master_seed", path), path + ".master_seed");
  try {
    c.mode = ParseBankMode(AsString(Field(j, "mode", path), path + ".mode"));
  } catch (const ConfigError& e) {
    throw SchemaError(path + ".mode: " + e.what());
  }
  if (auto it = j.find("max_bank_size"); it != j.end() && !it->is_null()) {
    c.max_bank_size = AsUnsigned(*it, path + ".max_bank_size");
  }
  if (auto it = j.find("max_neuron_reuse"); it != j.end() && !it->is_null()) {
    c.max_neuron_reuse = AsUnsigned(*it, path + ".max_neuron_reuse");
  }
  try {
    c.Validate();
  } catch (const ConfigError& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return c;
}

Fingerprint ParseFingerprint(const json& j, const std::string& path,
                             std::size_t n_neurons) {
  const std::uint64_t id = AsUnsigned(Field(j, "id", path), path + ".id");
  const json& idx = Field(j, "indices", path);
  if (!idx.is_array()) throw SchemaError(path + ".indices: expected an array");
  std::vector<std::uint32_t> indices;
  indices.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const std::string at = path + ".indices[" + std::to_string(i) + "]";
    if (!idx[i].is_number_integer()) throw SchemaError(at + ": expected an integer");
    const bool negative = idx[i].is_number_integer() && !idx[i].is_number_unsigned() &&
                          idx[i].get<std::int64_t>() < 0;
    if (negative || AsUnsigned(idx[i], at) >= n_neurons) {
      throw RangeError(at + ": index " + idx[i].dump() +
                       " out of range for n_neurons=" + std::to_string(n_neurons));
    }
    indices.push_back(static_cast<std::uint32_t>(idx[i].get<std::uint64_t>()));
  }
  GaussianStats clean = ParseStats(Field(j, "clean", path), path + ".clean");
  std::optional<GaussianStats> attack;
  if (auto it = j.find("attack"); it != j.end() && !it->is_null()) {
    attack = ParseStats(*it, path + ".attack");
  }
  std::optional<double> effect;
  if (auto it = j.find("effect_size"); it != j.end() && !it->is_null()) {
    effect = AsDouble(*it, path + ".effect_size");
  }
  try {
    return Fingerprint{id, FingerprintIndices(std::move(indices), n_neurons),
                       clean, attack, effect};
  } catch (const ValidationError& e) {
    throw ValidationError(path + ".indices: " + e.what());
  }
}

void WriteIndented(std::ostream& out, const json& doc) {
  // Classes and fingerprints one per line; small objects inline.
  out << "{\n";
  out << "  \"classes\": {";
  bool first_class = true;
  for (const auto& [key, cb] : doc.at("classes").items()) {
    out << (first_class ? "\n" : ",\n");
    first_class = false;
    out << "    " << json(key).dump() << ": {\n";
    out << "      \"config\": " << cb.at("config").dump() << ",\n";
    out << "      \"fingerprints\": [";
    bool first_fp = true;
    for (const json& fp : cb.at("fingerprints")) {
      out << (first_fp ? "\n" : ",\n") << "        " << fp.dump();
      first_fp = false;
    }
    out << (first_fp ? "],\n" : "\n      ],\n");
    out << "      \"provenance\": " << cb.at("provenance").dump() << "\n";
    out << "    }";
  }
  out << (first_class ? "},\n" : "\n  },\n");
  out << "  \"digest\": " << doc.at("digest").dump() << ",\n";
  out << "  \"model\": " << doc.at("model").dump() << ",\n";
  out << "  \"n_neurons\": " << doc.at("n_neurons").dump() << ",\n";
  out << "  \"version\": " << doc.at("version").dump() << "\n";
  out << "}\n";
}

void ValidateBank(const BankFile& bank, double effect_rel_tol) {
  for (const auto& [id, cb] : bank.classes) {
    if (cb.class_id != id) {
      throw ValidationError("class " + std::to_string(id) +
                            ": class_id field is " + std::to_string(cb.class_id));
    }
    if (cb.n_neurons != bank.n_neurons) {
      throw ValidationError("class " + std::to_string(id) + ": n_neurons " +
                            std::to_string(cb.n_neurons) + " differs from bank N=" +
                            std::to_string(bank.n_neurons));
    }
    cb.config.Validate();
    ValidateClassBank(cb, effect_rel_tol);
  }
}

}  // namespace

std::string CanonicalBankBytes(const BankFile& bank) {
  return BankToJson(bank).dump();
}

std::string BankDigest(const BankFile& bank) {
  return "sha256:" + Sha256Hex(CanonicalBankBytes(bank));
}

void SaveBank(const BankFile& bank, std::ostream& out) {
  ValidateBank(bank, 1e-12);
  json doc = BankToJson(bank);
  doc["digest"] = "sha256:" + Sha256Hex(doc.dump());
  WriteIndented(out, doc);
  out.flush();
  if (!out) throw IoError("failed writing bank file");
}

void SaveBankFile(const BankFile& bank, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  SaveBank(bank, out);
}

BankFile LoadBank(std::istream& in) {
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("$: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw SchemaError("$: expected an object");

  BankFile bank;
  const auto version = AsUnsigned(Field(doc, "version", "$"), "$.version");
  if (version != kBankFormatVersion) {
    throw VersionError("unsupported bank version " + std::to_string(version));
  }
  bank.format_version = static_cast<std::uint32_t>(version);
  bank.model = AsString(Field(doc, "model", "$"), "$.model");
  bank.n_neurons = AsUnsigned(Field(doc, "n_neurons", "$"), "$.n_neurons");
  const std::string stored_digest = AsString(Field(doc, "digest", "$"), "$.digest");

  const json& classes = Field(doc, "classes", "$");
  if (!classes.is_object()) throw SchemaError("$.classes: expected an object");
  for (const auto& [key, cj] : classes.items()) {
    const std::string path = "$.classes." + key;
    std::uint32_t class_id = 0;
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(key, &used);
      if (used != key.size() || v > std::numeric_limits<std::uint32_t>::max()) {
        throw std::invalid_argument(key);
      }
      class_id = static_cast<std::uint32_t>(v);
    } catch (const std::logic_error&) {
      throw SchemaError(path + ": class key must be an unsigned integer");
    }
    ClassBank cb;
    cb.class_id = class_id;
    cb.n_neurons = bank.n_neurons;
    cb.config = ParseConfig(Field(cj, "config", path), path + ".config");
    if (auto it = cj.find("provenance"); it != cj.end() && !it->is_null()) {
      if (!it->is_object()) throw SchemaError(path + ".provenance: expected an object");
      for (const auto& [pk, pv] : it->items()) {
        cb.provenance[pk] = AsString(pv, path + ".provenance." + pk);
      }
    }
    const json& fps = Field(cj, "fingerprints", path);
    if (!fps.is_array()) throw SchemaError(path + ".fingerprints: expected an array");
    cb.fingerprints.reserve(fps.size());
    for (std::size_t i = 0; i < fps.size(); ++i) {
      cb.fingerprints.push_back(ParseFingerprint(
          fps[i], path + ".fingerprints[" + std::to_string(i) + "]", bank.n_neurons));
    }
    bank.classes.emplace(class_id, std::move(cb));
  }

  ValidateBank(bank, kLoadEffectRelTol);

  doc.erase("digest");
  const std::string actual = "sha256:" + Sha256Hex(doc.dump());
  if (actual != stored_digest) {
    throw IntegrityError("bank digest mismatch: stored " + stored_digest +
                         ", computed " + actual);
  }
  return bank;
}

BankFile LoadBankFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return LoadBank(in);
}

BankSummaryReport BankSummary(const BankFile& bank) {
  BankSummaryReport report;
  report.model = bank.model;
  report.n_neurons = bank.n_neurons;
  for (const auto& [id, cb] : bank.classes) {
    ClassSummary s;
    s.class_id = id;
    s.count = cb.fingerprints.size();
    std::vector<double> effects;
    std::map<std::uint32_t, std::size_t> usage;
    for (const Fingerprint& fp : cb.fingerprints) {
      if (fp.effect_size) effects.push_back(std::abs(*fp.effect_size));
      for (std::uint32_t j : fp.indices.indices()) {
        s.max_neuron_reuse = std::max(s.max_neuron_reuse, ++usage[j]);
      }
    }
    if (!effects.empty()) {
      std::sort(effects.begin(), effects.end());
      const std::size_t n = effects.size();
      s.effect_min = effects.front();
      s.effect_max = effects.back();
      s.effect_median = n % 2 == 1 ? effects[n / 2]
                                   : 0.5 * (effects[n / 2 - 1] + effects[n / 2]);
    }
    report.classes.push_back(s);
  }
  return report;
}

std::string FormatBankSummary(const BankSummaryReport& report) {
  std::ostringstream os;
  os << "model: " << (report.model.empty() ? "(unset)" : report.model) << "\n";
  os << "n_neurons: " << report.n_neurons << "\n";
  os << "classes: " << report.classes.size() << "\n";
  if (report.classes.empty()) return os.str();
  os << std::left << std::setw(8) << "class" << std::right << std::setw(10)
     << "count" << std::setw(12) << "|d| min" << std::setw(12) << "|d| med"
     << std::setw(12) << "|d| max" << std::setw(12) << "max reuse" << "\n";
  os << std::fixed << std::setprecision(4);
  for (const ClassSummary& s : report.classes) {
    os << std::left << std::setw(8) << s.class_id << std::right << std::setw(10)
       << s.count << std::setw(12) << s.effect_min << std::setw(12)
       << s.effect_median << std::setw(12) << s.effect_max << std::setw(12)
       << s.max_neuron_reuse << "\n";
  }
  return os.str();
}

}  // namespace nfp
