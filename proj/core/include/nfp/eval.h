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

// ROC analysis, threshold calibration and the train/test experiment harness.
//
// Scores follow the detector convention (larger = more suspicious) and an
// input is flagged when score > threshold, so every rate here counts scores
// strictly above a threshold.

#ifndef NFP_EVAL_H_
#define NFP_EVAL_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nfp/detector.h"
#include "nfp/fingerprints.h"
#include "nfp/tables.h"

namespace nfp {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Points ordered by threshold descending. The first point sits at the
// largest observed score (nothing flagged, (0,0)), one point per further
// distinct score, and a final point at -infinity ((1,1)).
struct RocCurve {
  std::vector<RocPoint> points;
  std::size_t n_clean = 0;
  std::size_t n_attacked = 0;
};

// Throws InsufficientDataError on an empty side, ValidationError on a
// non-finite score.
RocCurve ComputeRoc(std::span<const double> clean_scores,
                    std::span<const double> attacked_scores);

// Trapezoidal area. Tied clean/attacked scores form a diagonal segment, so
// this equals P(attacked > clean) + 0.5 * P(attacked == clean).
double Auc(const RocCurve& curve);

// Fraction of `scores` strictly above `threshold`.
double FlagRate(std::span<const double> scores, double threshold);

// Smallest observed score t with FlagRate(scores, t) <= target_fpr, i.e. the
// ceil((1 - target_fpr) * n)-th smallest score. Throws ConfigError unless
// 0 < target_fpr < 1, InsufficientDataError on an empty list,
// ValidationError on non-finite scores.
double CalibrateThreshold(std::span<const double> clean_scores,
                          double target_fpr);

// Scores every row of `table` with a fresh K-fingerprint draw per row.
std::vector<double> ScoreRows(const ActivationTable& table,
                              const ClassBank& bank, Rule rule, std::size_t k,
                              Rng& rng);

struct ExperimentConfig {
  // master_seed is ignored: every (seed, class) gets its own bank seed
  // derived from `seed`.
  BankConfig bank;
  std::vector<Rule> rules = {Rule::kLikelihoodRatio, Rule::kVote,
                             Rule::kAnomaly};
  std::vector<std::size_t> ks = {1, 5, 10, 20, 40};
  std::vector<double> target_fprs = {0.01, 0.02, 0.05};
  std::size_t n_seeds = 10;
  std::uint64_t seed = 0;
  // Bank the anomaly rule draws from. kCleanOnly builds an unscreened bank
  // from the clean training table alone, as a deployment without attacked
  // data would; kTwoSample reuses the screened bank.
  BankMode anomaly_bank = BankMode::kCleanOnly;
  unsigned num_threads = 0;

  void Validate() const;
};

struct CellResult {
  Rule rule = Rule::kLikelihoodRatio;
  std::uint32_t class_id = 0;
  std::size_t k = 0;
  double auc = 0.0;
  // Parallel to ExperimentConfig::target_fprs.
  std::vector<double> threshold;
  std::vector<double> tpr;
  std::vector<double> fpr;
};

struct SeedResult {
  std::size_t seed_index = 0;
  std::vector<CellResult> cells;
  std::map<std::uint32_t, std::size_t> screened_bank_size;
  std::map<std::uint32_t, std::size_t> clean_only_bank_size;
};

// Means over seeds; class_id empty for the all-class aggregate.
struct SummaryCell {
  Rule rule = Rule::kLikelihoodRatio;
  std::optional<std::uint32_t> class_id;
  std::size_t k = 0;
  double auc = 0.0;
  std::vector<double> tpr;
  std::vector<double> fpr;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<std::uint32_t> class_ids;
  std::vector<SeedResult> seeds;
  std::vector<SummaryCell> per_class;
  std::vector<SummaryCell> overall;

  // Throws ConfigError if (rule, k) was not part of the grid.
  const SummaryCell& Overall(Rule rule, std::size_t k) const;
};

// For every seed and class: build banks on the training tables, calibrate
// each (rule, K) threshold on the clean training scores at every target
// FPR, then score the test tables and record AUC, TPR and FPR. Detection
// draws fresh fingerprints per input throughout.
ExperimentReport RunExperiment(std::span<const ClassSplits> data,
                               const ExperimentConfig& config);
ExperimentReport RunExperiment(const std::filesystem::path& data_dir,
                               const ExperimentConfig& config);

std::string ReportToJson(const ExperimentReport& report);

// Aligned text: one block per K, one row per rule, TPR at each target FPR
// plus AUC and measured test FPR.
std::string FormatReportTable(const ExperimentReport& report);

}  // namespace nfp

#endif  // NFP_EVAL_H_
