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

// nf: command-line front end for neural-fingerprint banks.
//
//   nf inspect <table.nfat>          header and value statistics
//   nf inspect --bank <bank.json>    per-class bank summary
//   nf build ...                     sample-and-filter bank generation
//   nf detect ...                    randomized detection, one line per sample
//   nf synth ...                     planted-signal synthetic tables
//   nf eval ...                      train/test experiment report

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nfp/bank_store.h"
#include "nfp/detector.h"
#include "nfp/digest.h"
#include "nfp/error.h"
#include "nfp/eval.h"
#include "nfp/fingerprints.h"
#include "nfp/synth.h"
#include "nfp/tables.h"

namespace fs = std::filesystem;

namespace {

std::string UtcNow() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

bool HasNfatMagic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && std::equal(magic, magic + 4, nfp::kNfatMagic);
}

// One sample per non-empty line; values separated by whitespace or commas.
// Lines starting with '#' are comments.
std::vector<std::vector<float>> ReadRawVectors(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw nfp::IoError("cannot open " + path.string());
  std::vector<std::vector<float>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    std::vector<float> row;
    std::string tok;
    while (ls >> tok) {
      if (row.empty() && tok[0] == '#') break;
      try {
        std::size_t used = 0;
        const float v = std::stof(tok, &used);
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument(tok);
        row.push_back(v);
      } catch (const std::logic_error&) {
        throw nfp::ValidationError(path.string() + ":" + std::to_string(line_no) +
                                   ": bad value '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  return rows;
}

void PrintTableInfo(const fs::path& path) {
  const nfp::ActivationTable t = nfp::ReadTableFile(path);
  auto values = t.values();
  double sum = 0.0, sum_sq = 0.0;
  float lo = values[0], hi = values[0];
  for (float v : values) {
    sum += v;
    sum_sq += static_cast<double>(v) * v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const auto n = static_cast<double>(values.size());
  const double mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sum_sq - n * mean * mean) / (n - 1)) : 0.0;

  std::cout << "file:        " << path.string() << "\n"
            << "format:      NFAT v" << nfp::kNfatVersion << "\n"
            << "kind:        " << nfp::TableKindName(t.kind()) << "\n"
            << "class_id:    " << t.class_id() << "\n"
            << "n_neurons:   " << t.n_neurons() << "\n"
            << "n_samples:   " << t.n_samples() << "\n"
            << "layers:      ";
  if (t.layer_sizes().empty()) {
    std::cout << "(absent)";
  } else {
    for (std::size_t i = 0; i < t.layer_sizes().size(); ++i) {
      std::cout << (i ? " " : "") << t.layer_sizes()[i];
    }
  }
  std::cout << "\n"
            << std::setprecision(6) << "value mean:  " << mean << "\n"
            << "value std:   " << std::sqrt(var) << "\n"
            << "value min:   " << lo << "\n"
            << "value max:   " << hi << "\n";
}

std::vector<nfp::Rule> ParseRules(const std::string& list) {
  if (list == "all") return {std::begin(nfp::kAllRules), std::end(nfp::kAllRules)};
  std::vector<nfp::Rule> rules;
  std::istringstream is(list);
  std::string tok;
  while (std::getline(is, tok, ',')) rules.push_back(nfp::ParseRule(tok));
  return rules;
}

struct BankFlags {
  std::size_t d = 50;
  std::size_t candidates = 100000;
  double effect_threshold = 1.0;
  std::uint64_t seed = 0;
  std::optional<std::size_t> max_bank_size;
  std::optional<std::size_t> max_neuron_reuse;
  unsigned threads = 0;

  void Register(CLI::App* app) {
    app->add_option("--d", d, "Fingerprint size")->capture_default_str();
    app->add_option("--candidates", candidates, "Candidates to sample")
        ->capture_default_str();
    app->add_option("--effect-threshold", effect_threshold, "Minimum |Cohen's d|")
        ->capture_default_str();
    app->add_option("--seed", seed, "Master seed")->capture_default_str();
    app->add_option("--max-bank-size", max_bank_size, "Keep at most M fingerprints");
    app->add_option("--max-neuron-reuse", max_neuron_reuse,
                    "Max fingerprints any neuron may belong to");
    app->add_option("--threads", threads, "Worker threads (0 = all cores)")
        ->capture_default_str();
  }

  nfp::BankConfig ToConfig(bool clean_only) const {
    nfp::BankConfig c;
    c.d = d;
    c.num_candidates = candidates;
    c.effect_threshold = effect_threshold;
    c.master_seed = seed;
    c.max_bank_size = max_bank_size;
    c.max_neuron_reuse = max_neuron_reuse;
    c.mode = clean_only ? nfp::BankMode::kCleanOnly : nfp::BankMode::kTwoSample;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural-fingerprint bank builder and randomized attack detector"};
  app.require_subcommand(1);

  // inspect
  auto* inspect = app.add_subcommand("inspect", "Describe an NFAT table or a bank file");
  std::string inspect_file, inspect_bank;
  inspect->add_option("file", inspect_file, "NFAT table");
  inspect->add_option("--bank", inspect_bank, "Bank file");

  // build
  auto* build = app.add_subcommand("build", "Generate a fingerprint bank for one class");
  std::string build_clean, build_attacked, build_out, build_model;
  bool build_clean_only = false, build_append = false;
  BankFlags build_flags;
  build->add_option("--clean", build_clean, "Clean training table")->required();
  build->add_option("--attacked", build_attacked, "Attacked training table");
  build->add_flag("--clean-only", build_clean_only, "Unscreened bank from clean data only");
  build->add_option("--out", build_out, "Bank file to write")->required();
  build->add_option("--model", build_model, "Model identifier stored in the bank");
  build->add_flag("--append", build_append,
                  "Add or replace this class in an existing bank file at --out");
  build_flags.Register(build);

  // detect
  auto* detect = app.add_subcommand("detect", "Randomized detection per sample");
  std::string detect_bank, detect_input, detect_rule = "likelihood";
  std::size_t detect_k = 20;
  double detect_threshold = 0.0;
  std::uint64_t detect_seed = 0;
  std::optional<std::uint32_t> detect_class;
  detect->add_option("--bank", detect_bank, "Bank file")->required();
  detect->add_option("--activations", detect_input,
                     "NFAT table or text file with one vector per line")
      ->required();
  detect->add_option("--rule", detect_rule, "likelihood|vote|anomaly")
      ->capture_default_str();
  detect->add_option("--k", detect_k, "Fingerprints per decision")->capture_default_str();
  detect->add_option("--threshold", detect_threshold, "Flag when score > threshold")
      ->required();
  detect->add_option("--seed", detect_seed, "RNG seed")->capture_default_str();
  detect->add_option("--class", detect_class,
                     "Predicted class (required for text input; overrides NFAT header)");

  // synth
  auto* synth = app.add_subcommand("synth", "Write planted-signal synthetic tables");
  nfp::SynthConfig synth_cfg;
  std::size_t synth_m_train = 400, synth_m_test = 100;
  std::string synth_out;
  synth->add_option("--n", synth_cfg.n_neurons, "Neurons")->capture_default_str();
  synth->add_option("--classes", synth_cfg.n_classes, "Classes")->capture_default_str();
  synth->add_option("--m-train", synth_m_train, "Training samples per condition")
      ->capture_default_str();
  synth->add_option("--m-test", synth_m_test, "Test samples per condition")
      ->capture_default_str();
  synth->add_option("--p", synth_cfg.p_informative, "Informative fraction")
      ->capture_default_str();
  synth->add_option("--delta", synth_cfg.shift, "Attack shift on informative neurons")
      ->capture_default_str();
  synth->add_option("--seed", synth_cfg.seed, "Seed")->capture_default_str();
  synth->add_option("--out-dir", synth_out, "Output directory")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "Train/test detection experiment");
  std::string eval_dir, eval_rules = "all", eval_out, eval_anomaly_bank = "clean_only";
  std::vector<std::size_t> eval_ks = {1, 5, 10, 20, 40};
  std::vector<double> eval_fprs = {0.01, 0.02, 0.05};
  std::size_t eval_seeds = 10;
  BankFlags eval_flags;
  eval->add_option("--data-dir", eval_dir, "Directory of class<k>_*_{train,test}.nfat")
      ->required();
  eval->add_option("--rules", eval_rules, "all or comma list of likelihood,vote,anomaly")
      ->capture_default_str();
  eval->add_option("--k", eval_ks, "Comma list of K values")->delimiter(',');
  eval->add_option("--fpr", eval_fprs, "Comma list of target FPRs")->delimiter(',');
  eval->add_option("--seeds", eval_seeds, "Number of seeds")->capture_default_str();
  eval->add_option("--out", eval_out, "JSON report path");
  eval->add_option("--anomaly-bank", eval_anomaly_bank,
                   "Bank for the anomaly rule: clean_only|two_sample")
      ->capture_default_str();
  eval_flags.Register(eval);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*inspect) {
      if (inspect_bank.empty() == inspect_file.empty()) {
        std::cerr << "inspect: give exactly one of <file> or --bank\n";
        return 2;
      }
      if (!inspect_file.empty()) {
        PrintTableInfo(inspect_file);
      } else {
        const nfp::BankFile bank = nfp::LoadBankFile(inspect_bank);
        std::cout << "digest: " << nfp::BankDigest(bank) << "\n"
                  << nfp::FormatBankSummary(nfp::BankSummary(bank));
      }
      return 0;
    }

    if (*build) {
      if (build_clean_only == !build_attacked.empty()) {
        std::cerr << "build: pass --attacked, or --clean-only without --attacked\n";
        return 2;
      }
      const nfp::ActivationTable clean = nfp::ReadTableFile(build_clean);
      std::optional<nfp::ActivationTable> attacked;
      if (!build_clean_only) attacked = nfp::ReadTableFile(build_attacked);

      const auto start = std::chrono::steady_clock::now();
      nfp::ClassBank cb = nfp::GenerateBank(
          clean, attacked ? &*attacked : nullptr,
          build_flags.ToConfig(build_clean_only), {build_flags.threads});
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      cb.provenance["clean_sha256"] = nfp::Sha256FileHex(build_clean);
      if (attacked) cb.provenance["attacked_sha256"] = nfp::Sha256FileHex(build_attacked);
      cb.provenance["created_at"] = UtcNow();

      nfp::BankFile bank;
      if (build_append && fs::exists(build_out)) bank = nfp::LoadBankFile(build_out);
      if (!bank.classes.empty() && bank.n_neurons != cb.n_neurons) {
        throw nfp::PairingError("n_neurons: existing bank has N=" +
                                std::to_string(bank.n_neurons) + ", table has N=" +
                                std::to_string(cb.n_neurons));
      }
      if (!build_model.empty()) bank.model = build_model;
      bank.n_neurons = cb.n_neurons;
      const std::uint32_t cls = cb.class_id;
      const std::size_t count = cb.fingerprints.size();
      bank.classes.insert_or_assign(cls, std::move(cb));
      nfp::SaveBankFile(bank, build_out);
      std::cerr << "class " << cls << ": accepted " << count << " of "
                << build_flags.candidates << " candidates in " << std::fixed
                << std::setprecision(2) << secs << " s -> " << build_out << "\n";
      return 0;
    }

    if (*detect) {
      const nfp::BankFile bank = nfp::LoadBankFile(detect_bank);
      nfp::DetectorConfig cfg;
      cfg.rule = nfp::ParseRule(detect_rule);
      cfg.k = detect_k;
      cfg.threshold = detect_threshold;
      cfg.seed = detect_seed;
      cfg.Validate();

      std::vector<std::vector<float>> rows;
      std::optional<nfp::ActivationTable> table;
      std::optional<std::uint32_t> cls = detect_class;
      if (HasNfatMagic(detect_input)) {
        table = nfp::ReadTableFile(detect_input);
        if (!cls) cls = table->class_id();
      } else {
        rows = ReadRawVectors(detect_input);
        if (!cls) {
          std::cerr << "detect: --class is required for text activation files\n";
          return 2;
        }
      }
      auto it = bank.classes.find(*cls);
      if (it == bank.classes.end()) {
        throw nfp::ConfigError("bank has no class " + std::to_string(*cls));
      }
      const nfp::ClassBank& cb = it->second;

      nfp::Rng rng(cfg.seed);
      const std::size_t n = table ? table->n_samples() : rows.size();
      std::cout << std::setprecision(9);
      for (std::size_t i = 0; i < n; ++i) {
        std::span<const float> act =
            table ? table->Row(i) : std::span<const float>(rows[i]);
        const nfp::Verdict v = nfp::Detect(act, cb, cfg, rng);
        std::cout << i << ", " << v.attack_score << ", "
                  << (v.is_attack ? "attack" : "clean") << ", ";
        for (std::size_t j = 0; j < v.fingerprint_ids.size(); ++j) {
          std::cout << (j ? " " : "") << v.fingerprint_ids[j];
        }
        std::cout << "\n";
      }
      return 0;
    }

    if (*synth) {
      synth_cfg.m_train_clean = synth_cfg.m_train_attacked = synth_m_train;
      synth_cfg.m_test_clean = synth_cfg.m_test_attacked = synth_m_test;
      synth_cfg.Validate();
      fs::create_directories(synth_out);
      for (std::size_t c = 0; c < synth_cfg.n_classes; ++c) {
        const nfp::SynthClass sc =
            nfp::SynthClassTables(synth_cfg, static_cast<std::uint32_t>(c));
        nfp::WriteClassSplits(sc.tables, synth_out);
        std::cerr << "class " << c << ": " << sc.informative.size()
                  << " informative neurons\n";
      }
      return 0;
    }

    if (*eval) {
      nfp::ExperimentConfig cfg;
      cfg.bank = eval_flags.ToConfig(false);
      cfg.rules = ParseRules(eval_rules);
      cfg.ks = eval_ks;
      cfg.target_fprs = eval_fprs;
      cfg.n_seeds = eval_seeds;
      cfg.seed = eval_flags.seed;
      cfg.anomaly_bank = nfp::ParseBankMode(eval_anomaly_bank);
      cfg.num_threads = eval_flags.threads;
      const nfp::ExperimentReport report = nfp::RunExperiment(fs::path(eval_dir), cfg);
      if (!eval_out.empty()) {
        std::ofstream out(eval_out);
        if (!out) throw nfp::IoError("cannot open " + eval_out);
        out << nfp::ReportToJson(report) << "\n";
      }
      std::cout << nfp::FormatReportTable(report);
      return 0;
    }
  } catch (const nfp::Error& e) {
    std::cerr << "nf: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "nf: unexpected error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
