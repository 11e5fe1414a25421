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

#include "nfp/eval.h"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "json.hpp"
#include "nfp/error.h"
#include "nfp/rng.h"

namespace nfp {
namespace {

enum : std::uint64_t {
  kScreenedBankStream = 11,
  kCleanOnlyBankStream = 12,
  kDetectStream = 13,
};

enum : std::uint64_t { kCalibClean = 0, kTestClean = 1, kTestAttacked = 2 };

void CheckFinite(std::span<const double> xs, const char* what) {
  for (double x : xs) {
    if (!std::isfinite(x)) {
      throw ValidationError(std::string("non-finite score in ") + what);
    }
  }
}

}  // namespace

RocCurve ComputeRoc(std::span<const double> clean_scores,
                    std::span<const double> attacked_scores) {
  if (clean_scores.empty() || attacked_scores.empty()) {
    throw InsufficientDataError("ROC needs at least one clean and one attacked score");
  }
  CheckFinite(clean_scores, "clean scores");
  CheckFinite(attacked_scores, "attacked scores");

  std::vector<double> c(clean_scores.begin(), clean_scores.end());
  std::vector<double> a(attacked_scores.begin(), attacked_scores.end());
  std::sort(c.begin(), c.end(), std::greater<>());
  std::sort(a.begin(), a.end(), std::greater<>());

  RocCurve curve;
  curve.n_clean = c.size();
  curve.n_attacked = a.size();
  const auto nc = static_cast<double>(c.size());
  const auto na = static_cast<double>(a.size());

  // Walk distinct values from the top. Before consuming value v the
  // threshold is v itself (scores > v already counted).
  std::size_t ic = 0, ia = 0;
  while (ic < c.size() || ia < a.size()) {
    double v = -std::numeric_limits<double>::infinity();
    if (ic < c.size()) v = std::max(v, c[ic]);
    if (ia < a.size()) v = std::max(v, a[ia]);
    curve.points.push_back({ic / nc, ia / na, v});
    while (ic < c.size() && c[ic] == v) ++ic;
    while (ia < a.size() && a[ia] == v) ++ia;
  }
  curve.points.push_back({1.0, 1.0, -std::numeric_limits<double>::infinity()});
  return curve;
}

double Auc(const RocCurve& curve) {
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& p = curve.points[i - 1];
    const RocPoint& q = curve.points[i];
    area += (q.fpr - p.fpr) * (p.tpr + q.tpr) * 0.5;
  }
  return area;
}

double FlagRate(std::span<const double> scores, double threshold) {
  if (scores.empty()) return 0.0;
  const auto above = std::count_if(scores.begin(), scores.end(),
                                   [&](double s) { return s > threshold; });
  return static_cast<double>(above) / static_cast<double>(scores.size());
}

double CalibrateThreshold(std::span<const double> clean_scores,
                          double target_fpr) {
  if (!(target_fpr > 0.0 && target_fpr < 1.0)) {
    throw ConfigError("target FPR must be in (0, 1)");
  }
  if (clean_scores.empty()) {
    throw InsufficientDataError("calibration needs at least one clean score");
  }
  CheckFinite(clean_scores, "calibration scores");
  std::vector<double> sorted(clean_scores.begin(), clean_scores.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  // Largest number of scores allowed strictly above the threshold. The
  // epsilon absorbs representation error in target_fpr * n (0.05 * 100).
  auto allowed = static_cast<std::size_t>(
      std::floor(target_fpr * static_cast<double>(n) + 1e-9));
  allowed = std::min(allowed, n - 1);
  return sorted[n - 1 - allowed];
}

std::vector<double> ScoreRows(const ActivationTable& table,
                              const ClassBank& bank, Rule rule, std::size_t k,
                              Rng& rng) {
  if (table.n_neurons() != bank.n_neurons) {
    throw PairingError("n_neurons: table has N=" + std::to_string(table.n_neurons()) +
                       ", bank expects " + std::to_string(bank.n_neurons));
  }
  if (RuleNeedsAttackStats(rule) && bank.config.mode == BankMode::kCleanOnly) {
    throw RuleUnavailableError(std::string(RuleName(rule)) +
                               " rule needs a two-sample bank");
  }
  std::vector<double> scores(table.n_samples());
  for (std::size_t r = 0; r < scores.size(); ++r) {
    const FingerprintRefs fps = SelectFingerprints(bank, k, rng);
    scores[r] = Score(rule, table.Row(r), fps);
  }
  return scores;
}

void ExperimentConfig::Validate() const {
  bank.Validate();
  if (rules.empty()) throw ConfigError("experiment needs at least one rule");
  if (ks.empty()) throw ConfigError("experiment needs at least one K");
  for (std::size_t k : ks) {
    if (k < 1) throw ConfigError("every K must be >= 1");
  }
  if (target_fprs.empty()) throw ConfigError("experiment needs at least one target FPR");
  for (double f : target_fprs) {
    if (!(f > 0.0 && f < 1.0)) throw ConfigError("target FPRs must be in (0, 1)");
  }
  if (n_seeds < 1) throw ConfigError("experiment needs at least one seed");
}

const SummaryCell& ExperimentReport::Overall(Rule rule, std::size_t k) const {
  for (const SummaryCell& s : overall) {
    if (s.rule == rule && s.k == k) return s;
  }
  throw ConfigError("no summary cell for rule " + std::string(RuleName(rule)) +
                    " and K=" + std::to_string(k));
}

ExperimentReport RunExperiment(std::span<const ClassSplits> data,
                               const ExperimentConfig& config) {
  config.Validate();
  if (data.empty()) throw InsufficientDataError("experiment has no classes");

  ExperimentReport report;
  report.config = config;
  for (const ClassSplits& cs : data) {
    ValidatePair(cs.clean_train, cs.attacked_train);
    ValidatePair(cs.clean_test, cs.attacked_test);
    if (cs.clean_test.class_id() != cs.class_id() ||
        cs.clean_test.n_neurons() != cs.clean_train.n_neurons()) {
      throw PairingError("train and test tables of class " +
                         std::to_string(cs.class_id()) + " are incompatible");
    }
    report.class_ids.push_back(cs.class_id());
  }

  const bool need_screened = std::any_of(
      config.rules.begin(), config.rules.end(), [&](Rule r) {
        return RuleNeedsAttackStats(r) || config.anomaly_bank == BankMode::kTwoSample;
      });
  const bool need_clean_only =
      config.anomaly_bank == BankMode::kCleanOnly &&
      std::find(config.rules.begin(), config.rules.end(), Rule::kAnomaly) !=
          config.rules.end();
  const GenerateOptions gen{config.num_threads};
  const std::size_t n_fpr = config.target_fprs.size();

  for (std::size_t s = 0; s < config.n_seeds; ++s) {
    SeedResult seed_result;
    seed_result.seed_index = s;
    for (const ClassSplits& cs : data) {
      const std::uint32_t cls = cs.class_id();
      std::optional<ClassBank> screened, clean_only;
      if (need_screened) {
        BankConfig bc = config.bank;
        bc.mode = BankMode::kTwoSample;
        bc.master_seed = MixSeed(config.seed, {kScreenedBankStream, s, cls});
        screened = GenerateBank(cs.clean_train, &cs.attacked_train, bc, gen);
        seed_result.screened_bank_size[cls] = screened->fingerprints.size();
      }
      if (need_clean_only) {
        BankConfig bc = config.bank;
        bc.mode = BankMode::kCleanOnly;
        bc.master_seed = MixSeed(config.seed, {kCleanOnlyBankStream, s, cls});
        clean_only = GenerateBank(cs.clean_train, nullptr, bc, gen);
        seed_result.clean_only_bank_size[cls] = clean_only->fingerprints.size();
      }

      for (Rule rule : config.rules) {
        const ClassBank& bank =
            (rule == Rule::kAnomaly && need_clean_only) ? *clean_only : *screened;
        for (std::size_t k : config.ks) {
          auto rng_for = [&](std::uint64_t split) {
            return Rng(MixSeed(config.seed,
                               {kDetectStream, s, cls, k,
                                static_cast<std::uint64_t>(rule), split}));
          };
          Rng calib_rng = rng_for(kCalibClean);
          Rng clean_rng = rng_for(kTestClean);
          Rng attack_rng = rng_for(kTestAttacked);
          const auto calib = ScoreRows(cs.clean_train, bank, rule, k, calib_rng);
          const auto test_clean = ScoreRows(cs.clean_test, bank, rule, k, clean_rng);
          const auto test_attacked =
              ScoreRows(cs.attacked_test, bank, rule, k, attack_rng);

          CellResult cell;
          cell.rule = rule;
          cell.class_id = cls;
          cell.k = k;
          cell.auc = Auc(ComputeRoc(test_clean, test_attacked));
          for (double target : config.target_fprs) {
            const double t = CalibrateThreshold(calib, target);
            cell.threshold.push_back(t);
            cell.tpr.push_back(FlagRate(test_attacked, t));
            cell.fpr.push_back(FlagRate(test_clean, t));
          }
          seed_result.cells.push_back(std::move(cell));
        }
      }
    }
    report.seeds.push_back(std::move(seed_result));
  }

  // Aggregate in grid order: rule, K, then class.
  const auto n_seeds = static_cast<double>(config.n_seeds);
  for (Rule rule : config.rules) {
    for (std::size_t k : config.ks) {
      SummaryCell all{rule, std::nullopt, k, 0.0,
                      std::vector<double>(n_fpr, 0.0),
                      std::vector<double>(n_fpr, 0.0)};
      for (std::uint32_t cls : report.class_ids) {
        SummaryCell one{rule, cls, k, 0.0, std::vector<double>(n_fpr, 0.0),
                        std::vector<double>(n_fpr, 0.0)};
        for (const SeedResult& sr : report.seeds) {
          for (const CellResult& c : sr.cells) {
            if (c.rule != rule || c.k != k || c.class_id != cls) continue;
            one.auc += c.auc / n_seeds;
            for (std::size_t f = 0; f < n_fpr; ++f) {
              one.tpr[f] += c.tpr[f] / n_seeds;
              one.fpr[f] += c.fpr[f] / n_seeds;
            }
          }
        }
        const auto n_classes = static_cast<double>(report.class_ids.size());
        all.auc += one.auc / n_classes;
        for (std::size_t f = 0; f < n_fpr; ++f) {
          all.tpr[f] += one.tpr[f] / n_classes;
          all.fpr[f] += one.fpr[f] / n_classes;
        }
        report.per_class.push_back(std::move(one));
      }
      report.overall.push_back(std::move(all));
    }
  }
  return report;
}

ExperimentReport RunExperiment(const std::filesystem::path& data_dir,
                               const ExperimentConfig& config) {
  const std::vector<ClassSplits> data = LoadClassSplits(data_dir);
  return RunExperiment(std::span<const ClassSplits>(data), config);
}

std::string ReportToJson(const ExperimentReport& report) {
  using json = nlohmann::json;
  const ExperimentConfig& c = report.config;
  json rules = json::array();
  for (Rule r : c.rules) rules.push_back(std::string(RuleName(r)));
  json bank{{"d", c.bank.d},
            {"num_candidates", c.bank.num_candidates},
            {"effect_threshold", c.bank.effect_threshold}};
  if (c.bank.max_bank_size) bank["max_bank_size"] = *c.bank.max_bank_size;
  if (c.bank.max_neuron_reuse) bank["max_neuron_reuse"] = *c.bank.max_neuron_reuse;

  auto cell_json = [](const SummaryCell& s) {
    json j{{"rule", std::string(RuleName(s.rule))},
           {"k", s.k},
           {"auc", s.auc},
           {"tpr", s.tpr},
           {"fpr", s.fpr}};
    if (s.class_id) j["class"] = *s.class_id;
    return j;
  };

  json out;
  out["config"] = {{"bank", bank},
                   {"rules", rules},
                   {"k", c.ks},
                   {"target_fpr", c.target_fprs},
                   {"n_seeds", c.n_seeds},
                   {"seed", c.seed},
                   {"anomaly_bank", std::string(BankModeName(c.anomaly_bank))}};
  out["classes"] = report.class_ids;
  json overall = json::array();
  for (const SummaryCell& s : report.overall) overall.push_back(cell_json(s));
  out["overall"] = std::move(overall);
  json per_class = json::array();
  for (const SummaryCell& s : report.per_class) per_class.push_back(cell_json(s));
  out["per_class"] = std::move(per_class);

  json seeds = json::array();
  for (const SeedResult& sr : report.seeds) {
    json cells = json::array();
    for (const CellResult& cr : sr.cells) {
      cells.push_back({{"rule", std::string(RuleName(cr.rule))},
                       {"class", cr.class_id},
                       {"k", cr.k},
                       {"auc", cr.auc},
                       {"threshold", cr.threshold},
                       {"tpr", cr.tpr},
                       {"fpr", cr.fpr}});
    }
    json sizes = json::object();
    for (const auto& [cls, n] : sr.screened_bank_size) {
      sizes[std::to_string(cls)]["screened"] = n;
    }
    for (const auto& [cls, n] : sr.clean_only_bank_size) {
      sizes[std::to_string(cls)]["clean_only"] = n;
    }
    seeds.push_back({{"seed_index", sr.seed_index},
                     {"bank_sizes", std::move(sizes)},
                     {"cells", std::move(cells)}});
  }
  out["seeds"] = std::move(seeds);
  return out.dump(2);
}

std::string FormatReportTable(const ExperimentReport& report) {
  std::ostringstream os;
  const auto& fprs = report.config.target_fprs;
  os << std::fixed;
  for (std::size_t k : report.config.ks) {
    os << "K = " << k << "  (mean over " << report.config.n_seeds
       << " seeds, " << report.class_ids.size() << " classes)\n";
    os << std::left << std::setw(12) << "rule" << std::right;
    for (double f : fprs) {
      std::ostringstream h;
      h << "TPR@" << std::setprecision(0) << std::fixed << f * 100 << "%FP";
      os << std::setw(12) << h.str();
    }
    os << std::setw(10) << "AUC";
    for (double f : fprs) {
      std::ostringstream h;
      h << "FPR(" << std::setprecision(0) << std::fixed << f * 100 << "%)";
      os << std::setw(10) << h.str();
    }
    os << "\n";
    for (const SummaryCell& s : report.overall) {
      if (s.k != k) continue;
      os << std::left << std::setw(12) << RuleName(s.rule) << std::right
         << std::setprecision(1);
      for (double t : s.tpr) os << std::setw(11) << t * 100 << "%";
      os << std::setprecision(4) << std::setw(10) << s.auc;
      os << std::setprecision(1);
      for (double f : s.fpr) os << std::setw(9) << f * 100 << "%";
      os << "\n";
    }
    os << "\n";
  }
  return os.str();
}

}  // namespace nfp
