// Copyright 2026 The uqkit Authors.
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

// Evaluation protocol: grade each benchmark item against its generations,
// attach an uncertainty report, then summarize by correctness, by domain,
// and by how well entropy separates wrong answers from right ones.

#ifndef UQKIT_HARNESS_H_
#define UQKIT_HARNESS_H_

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "uqkit/clustering.h"
#include "uqkit/json_codec.h"
#include "uqkit/records.h"

namespace uqkit {

enum class Measure { kNpe, kSe };

std::string_view ToString(Measure measure);

// Exact match after NormalizeForMatch().
bool ScoreExactMatch(std::string_view prediction, std::string_view gold);

struct SampleSetAnalysis {
  UncertaintyReport report;
  // Clusters with log_prob filled in.
  std::vector<MeaningCluster> clusters;
};

// Clusters `set` with `oracle` and scores it. Shared by the CLI scorer and
// the HTTP analyze endpoint so both produce identical reports.
absl::StatusOr<SampleSetAnalysis> AnalyzeSampleSet(
    const SampleSet& set, const EquivalenceOracle& oracle,
    const EntropyConfig& config);

// Clusters as JSON with each member's text inlined under "texts".
Json ClustersJson(const SampleSet& set,
                  std::span<const MeaningCluster> clusters);

// The prediction is the highest-likelihood sample's text (first on ties).
// Fails when the set was generated for a different query.
absl::StatusOr<EvaluatedRecord> EvaluateRecord(
    const BenchmarkRecord& record, const SampleSet& set,
    const EquivalenceOracle& oracle, const EntropyConfig& config);

// The fields of an EvaluatedRecord the aggregations need.
struct EvaluationSummary {
  std::string benchmark;
  std::string domain;
  double npe = 0.0;
  double se = 0.0;
  bool is_correct = false;
};

EvaluationSummary Summarize(const EvaluatedRecord& record);

struct AccuracyGroupReport {
  std::string benchmark;
  Measure measure = Measure::kNpe;
  // Absent when the group is empty.
  std::optional<double> mean_correct;
  std::optional<double> mean_incorrect;
  int64_t n_correct = 0;
  int64_t n_incorrect = 0;
  double overall_accuracy = 0.0;
};

// Arithmetic means of `measure` over correct and incorrect predictions.
// `benchmark` is the shared benchmark name, or "mixed".
absl::StatusOr<AccuracyGroupReport> GroupByCorrectness(
    std::span<const EvaluationSummary> records, Measure measure);
absl::StatusOr<AccuracyGroupReport> GroupByCorrectness(
    std::span<const EvaluatedRecord> records, Measure measure);

// "correct > incorrect", "correct < incorrect", "correct = incorrect", or
// empty when a group is missing.
std::string CompareGroups(const AccuracyGroupReport& report);

struct DomainReportRow {
  std::string domain;
  double npe_mean = 0.0;
  double se_mean = 0.0;
  int64_t n = 0;
  std::string model_id;

  bool operator==(const DomainReportRow&) const = default;
};

// One row per domain, in lexicographic order.
std::vector<DomainReportRow> DomainAggregate(
    std::span<const EvaluationSummary> records, std::string_view model_id);
std::vector<DomainReportRow> DomainAggregate(
    std::span<const EvaluatedRecord> records, std::string_view model_id);

struct AurocResult {
  double value = 0.5;
  int64_t n_pairs = 0;
  // Only one label present; value is pinned to 0.5.
  bool one_class = false;
};

// P(score of a random positive > score of a random negative), ties counted
// one half, via the rank-sum statistic in O(n log n). `positive` marks
// incorrect predictions when entropy is the score.
absl::StatusOr<AurocResult> Auroc(std::span<const double> scores,
                                  const std::vector<bool>& positive);

struct CalibrationReport {
  Measure measure = Measure::kNpe;
  double auroc = 0.5;
  int64_t n_pairs = 0;
  bool one_class_warning = false;
};

// Entropy as a predictor of an incorrect answer. An overconfident model
// (higher entropy on correct answers) lands below 0.5.
CalibrationReport Calibrate(std::span<const EvaluationSummary> records,
                            Measure measure);

struct EvaluationReports {
  std::vector<DomainReportRow> domains;
  std::vector<AccuracyGroupReport> groups;
  std::vector<CalibrationReport> calibration;
};

// Header "domain,npe_mean,se_mean,n,model_id" then one line per row.
std::string DomainReportCsv(std::span<const DomainReportRow> rows);
Json AccuracyGroupsJson(std::span<const AccuracyGroupReport> groups);
Json CalibrationJson(std::span<const CalibrationReport> reports);
// [{label, group, value}] with label = measure name (prefixed by the
// benchmark when several are present) and group = correct | incorrect.
Json PlotData(std::span<const AccuracyGroupReport> groups);

enum class ExportFormat { kCsv, kJson, kPlotData };

// csv -> domain_report.csv; json -> accuracy_groups.json and
// calibration.json; plotdata -> plotdata.json.
absl::Status ExportReports(const EvaluationReports& reports,
                           ExportFormat format,
                           const std::filesystem::path& out_dir);

absl::Status WriteTextFile(const std::filesystem::path& path,
                           std::string_view content);

struct EvalOptions {
  EntropyConfig entropy;
  JsonlOptions jsonl;
  bool dedup_exact = false;
  // Defaults to the model_id of the first SampleSet.
  std::optional<std::string> model_id;
};

// The `uq eval` pipeline. Benchmark records and sample sets are paired by
// position and must agree on the query. Streams evaluated.jsonl and writes
// domain_report.csv, accuracy_groups.json, calibration.json and
// plotdata.json into `out_dir`.
absl::StatusOr<EvaluationReports> RunEvaluation(
    std::istream& benchmark, std::istream& generations,
    const EquivalenceOracle& oracle, const EvalOptions& options,
    const std::filesystem::path& out_dir);

}  // namespace uqkit

#endif  // UQKIT_HARNESS_H_
