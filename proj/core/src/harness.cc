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

#include "uqkit/harness.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <system_error>

#include "absl/strings/str_cat.h"
#include "uqkit/entropy.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

std::string CsvField(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

double MeasureOf(const EvaluationSummary& s, Measure measure) {
  return measure == Measure::kNpe ? s.npe : s.se;
}

std::vector<EvaluationSummary> SummarizeAll(
    std::span<const EvaluatedRecord> records) {
  std::vector<EvaluationSummary> out;
  out.reserve(records.size());
  for (const EvaluatedRecord& r : records) out.push_back(Summarize(r));
  return out;
}

}  // namespace

std::string_view ToString(Measure measure) {
  return measure == Measure::kNpe ? "npe" : "se";
}

absl::StatusOr<SampleSetAnalysis> AnalyzeSampleSet(
    const SampleSet& set, const EquivalenceOracle& oracle,
    const EntropyConfig& config) {
  UQKIT_RETURN_IF_ERROR(Validate(set));
  SampleSetAnalysis analysis;
  UQKIT_ASSIGN_OR_RETURN(analysis.clusters, GreedyCluster(set, oracle));
  UQKIT_RETURN_IF_ERROR(
      AttachClusterLogProbabilities(set, config, &analysis.clusters));
  UQKIT_ASSIGN_OR_RETURN(
      analysis.report,
      ComputeUncertaintyReport(set, analysis.clusters, config, oracle.kind()));
  return analysis;
}

Json ClustersJson(const SampleSet& set,
                  std::span<const MeaningCluster> clusters) {
  Json out = Json::array();
  for (size_t c = 0; c < clusters.size(); ++c) {
    Json json = ToJson(clusters[c]);
    json["cluster_id"] = c;
    Json texts = Json::array();
    for (int index : clusters[c].member_indices) {
      texts.push_back(set.samples[index].text);
    }
    json["texts"] = std::move(texts);
    out.push_back(std::move(json));
  }
  return out;
}

bool ScoreExactMatch(std::string_view prediction, std::string_view gold) {
  return NormalizeForMatch(prediction) == NormalizeForMatch(gold);
}

absl::StatusOr<EvaluatedRecord> EvaluateRecord(
    const BenchmarkRecord& record, const SampleSet& set,
    const EquivalenceOracle& oracle, const EntropyConfig& config) {
  if (set.query != record.query) {
    return absl::FailedPreconditionError(StrCat(
        "record '", record.id, "': sample set query does not match"));
  }
  UQKIT_ASSIGN_OR_RETURN(std::vector<MeaningCluster> clusters,
                         GreedyCluster(set, oracle));
  EvaluatedRecord out;
  UQKIT_ASSIGN_OR_RETURN(
      out.report,
      ComputeUncertaintyReport(set, clusters, config, oracle.kind()));
  out.record = record;
  out.sample_set = set;
  out.top_prediction = set.samples[TopPredictionIndex(set)].text;
  out.is_correct = ScoreExactMatch(out.top_prediction, record.gold_answer);
  return out;
}

EvaluationSummary Summarize(const EvaluatedRecord& record) {
  return {record.record.benchmark, record.record.domain, record.report.npe,
          record.report.se, record.is_correct};
}

absl::StatusOr<AccuracyGroupReport> GroupByCorrectness(
    std::span<const EvaluationSummary> records, Measure measure) {
  if (records.empty()) {
    return absl::InvalidArgumentError("no evaluated records to group");
  }
  AccuracyGroupReport report;
  report.measure = measure;
  report.benchmark = records.front().benchmark;
  double sum_correct = 0.0;
  double sum_incorrect = 0.0;
  for (const EvaluationSummary& r : records) {
    if (r.benchmark != report.benchmark) report.benchmark = "mixed";
    if (r.is_correct) {
      ++report.n_correct;
      sum_correct += MeasureOf(r, measure);
    } else {
      ++report.n_incorrect;
      sum_incorrect += MeasureOf(r, measure);
    }
  }
  if (report.n_correct > 0) {
    report.mean_correct = sum_correct / static_cast<double>(report.n_correct);
  }
  if (report.n_incorrect > 0) {
    report.mean_incorrect =
        sum_incorrect / static_cast<double>(report.n_incorrect);
  }
  report.overall_accuracy =
      static_cast<double>(report.n_correct) /
      static_cast<double>(report.n_correct + report.n_incorrect);
  return report;
}

absl::StatusOr<AccuracyGroupReport> GroupByCorrectness(
    std::span<const EvaluatedRecord> records, Measure measure) {
  const std::vector<EvaluationSummary> summaries = SummarizeAll(records);
  return GroupByCorrectness(summaries, measure);
}

std::string CompareGroups(const AccuracyGroupReport& report) {
  if (!report.mean_correct.has_value() || !report.mean_incorrect.has_value()) {
    return "";
  }
  if (*report.mean_correct > *report.mean_incorrect) {
    return "correct > incorrect";
  }
  if (*report.mean_correct < *report.mean_incorrect) {
    return "correct < incorrect";
  }
  return "correct = incorrect";
}

std::vector<DomainReportRow> DomainAggregate(
    std::span<const EvaluationSummary> records, std::string_view model_id) {
  struct Totals {
    double npe = 0.0;
    double se = 0.0;
    int64_t n = 0;
  };
  std::map<std::string, Totals> by_domain;
  for (const EvaluationSummary& r : records) {
    Totals& t = by_domain[r.domain];
    t.npe += r.npe;
    t.se += r.se;
    ++t.n;
  }
  std::vector<DomainReportRow> rows;
  rows.reserve(by_domain.size());
  for (const auto& [domain, t] : by_domain) {
    const double n = static_cast<double>(t.n);
    rows.push_back({domain, t.npe / n, t.se / n, t.n, std::string(model_id)});
  }
  return rows;
}

std::vector<DomainReportRow> DomainAggregate(
    std::span<const EvaluatedRecord> records, std::string_view model_id) {
  const std::vector<EvaluationSummary> summaries = SummarizeAll(records);
  return DomainAggregate(summaries, model_id);
}

absl::StatusOr<AurocResult> Auroc(std::span<const double> scores,
                                  const std::vector<bool>& positive) {
  if (scores.size() != positive.size()) {
    return absl::InvalidArgumentError(
        StrCat("got ", scores.size(), " scores but ", positive.size(),
                     " labels"));
  }
  for (double s : scores) {
    if (std::isnan(s)) return absl::InvalidArgumentError("NaN score");
  }
  const int64_t n = static_cast<int64_t>(scores.size());
  const int64_t n_pos = std::count(positive.begin(), positive.end(), true);
  const int64_t n_neg = n - n_pos;
  AurocResult result;
  if (n_pos == 0 || n_neg == 0) {
    result.one_class = true;
    return result;
  }
  std::vector<int64_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int64_t a, int64_t b) { return scores[a] < scores[b]; });

  // Twice the rank sum of the positives, with tied groups sharing the mean
  // rank; stays an exact integer.
  int64_t twice_rank_sum = 0;
  for (int64_t i = 0; i < n;) {
    int64_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks i+1 .. j, mean (i + 1 + j) / 2.
    int64_t positives_in_group = 0;
    for (int64_t k = i; k < j; ++k) positives_in_group += positive[order[k]];
    twice_rank_sum += positives_in_group * (i + 1 + j);
    i = j;
  }
  const int64_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  result.n_pairs = n_pos * n_neg;
  result.value = static_cast<double>(twice_u) /
                 (2.0 * static_cast<double>(result.n_pairs));
  return result;
}

CalibrationReport Calibrate(std::span<const EvaluationSummary> records,
                            Measure measure) {
  std::vector<double> scores;
  std::vector<bool> incorrect;
  scores.reserve(records.size());
  incorrect.reserve(records.size());
  for (const EvaluationSummary& r : records) {
    scores.push_back(MeasureOf(r, measure));
    incorrect.push_back(!r.is_correct);
  }
  CalibrationReport report;
  report.measure = measure;
  absl::StatusOr<AurocResult> auroc = Auroc(scores, incorrect);
  if (auroc.ok()) {
    report.auroc = auroc->value;
    report.n_pairs = auroc->n_pairs;
    report.one_class_warning = auroc->one_class;
  } else {
    report.one_class_warning = true;
  }
  return report;
}

std::string DomainReportCsv(std::span<const DomainReportRow> rows) {
  std::string out = "domain,npe_mean,se_mean,n,model_id\n";
  for (const DomainReportRow& row : rows) {
    absl::StrAppend(&out, CsvField(row.domain), ",", FormatReal(row.npe_mean),
                    ",", FormatReal(row.se_mean), ",", row.n, ",",
                    CsvField(row.model_id), "\n");
  }
  return out;
}

Json AccuracyGroupsJson(std::span<const AccuracyGroupReport> groups) {
  Json out = Json::array();
  for (const AccuracyGroupReport& g : groups) {
    Json json = Json::object();
    json["benchmark"] = g.benchmark;
    json["measure"] = ToString(g.measure);
    if (g.mean_correct.has_value()) json["mean_correct"] = *g.mean_correct;
    if (g.mean_incorrect.has_value()) {
      json["mean_incorrect"] = *g.mean_incorrect;
    }
    json["n_correct"] = g.n_correct;
    json["n_incorrect"] = g.n_incorrect;
    json["overall_accuracy"] = g.overall_accuracy;
    if (std::string cmp = CompareGroups(g); !cmp.empty()) {
      json["comparison"] = cmp;
    }
    json["prediction_rule"] = "highest_likelihood_sample";
    out.push_back(std::move(json));
  }
  return out;
}

Json CalibrationJson(std::span<const CalibrationReport> reports) {
  Json out = Json::array();
  for (const CalibrationReport& r : reports) {
    Json json = Json::object();
    json["measure"] = ToString(r.measure);
    json["auroc"] = r.auroc;
    json["n_pairs"] = r.n_pairs;
    json["positive_class"] = "incorrect";
    json["one_class_warning"] = r.one_class_warning;
    out.push_back(std::move(json));
  }
  return out;
}

Json PlotData(std::span<const AccuracyGroupReport> groups) {
  std::set<std::string> benchmarks;
  for (const AccuracyGroupReport& g : groups) benchmarks.insert(g.benchmark);
  const bool prefix = benchmarks.size() > 1;
  Json out = Json::array();
  for (const AccuracyGroupReport& g : groups) {
    const std::string label =
        prefix ? StrCat(g.benchmark, " ", ToString(g.measure))
               : std::string(ToString(g.measure));
    auto add = [&](std::string_view group, const std::optional<double>& v) {
      if (!v.has_value()) return;
      Json entry = Json::object();
      entry["label"] = label;
      entry["group"] = group;
      entry["value"] = *v;
      out.push_back(std::move(entry));
    };
    add("correct", g.mean_correct);
    add("incorrect", g.mean_incorrect);
  }
  return out;
}

absl::Status WriteTextFile(const std::filesystem::path& path,
                           std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    return absl::PermissionDeniedError(
        StrCat("cannot write ", path.string()));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  if (!out) {
    return absl::DataLossError(StrCat("write failed for ", path.string()));
  }
  return absl::OkStatus();
}

absl::Status ExportReports(const EvaluationReports& reports,
                           ExportFormat format,
                           const std::filesystem::path& out_dir) {
  switch (format) {
    case ExportFormat::kCsv:
      return WriteTextFile(out_dir / "domain_report.csv",
                           DomainReportCsv(reports.domains));
    case ExportFormat::kJson: {
      UQKIT_ASSIGN_OR_RETURN(std::string groups,
                             DumpJson(AccuracyGroupsJson(reports.groups)));
      UQKIT_RETURN_IF_ERROR(
          WriteTextFile(out_dir / "accuracy_groups.json", groups + "\n"));
      UQKIT_ASSIGN_OR_RETURN(std::string calibration,
                             DumpJson(CalibrationJson(reports.calibration)));
      return WriteTextFile(out_dir / "calibration.json", calibration + "\n");
    }
    case ExportFormat::kPlotData: {
      UQKIT_ASSIGN_OR_RETURN(std::string plot,
                             DumpJson(PlotData(reports.groups)));
      return WriteTextFile(out_dir / "plotdata.json", plot + "\n");
    }
  }
  return absl::InvalidArgumentError("unknown export format");
}

absl::StatusOr<EvaluationReports> RunEvaluation(
    std::istream& benchmark, std::istream& generations,
    const EquivalenceOracle& oracle, const EvalOptions& options,
    const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) {
    return absl::PermissionDeniedError(
        StrCat("cannot create ", out_dir.string(), ": ", ec.message()));
  }
  const std::filesystem::path evaluated_path = out_dir / "evaluated.jsonl";
  std::ofstream evaluated(evaluated_path, std::ios::binary | std::ios::trunc);
  if (!evaluated) {
    return absl::PermissionDeniedError(
        StrCat("cannot write ", evaluated_path.string()));
  }

  JsonlReader<BenchmarkRecord> records(benchmark, options.jsonl);
  JsonlReader<SampleSet> sets(generations, options.jsonl);
  std::vector<EvaluationSummary> summaries;
  std::optional<std::string> model_id = options.model_id;

  while (true) {
    absl::StatusOr<std::optional<BenchmarkRecord>> record = records.Next();
    if (!record.ok()) return Annotate(record.status(), "benchmark");
    absl::StatusOr<std::optional<SampleSet>> set = sets.Next();
    if (!set.ok()) return Annotate(set.status(), "generations");
    if (!record->has_value() && !set->has_value()) break;
    if (record->has_value() != set->has_value()) {
      return absl::FailedPreconditionError(
          "benchmark and generations files have different record counts");
    }
    SampleSet samples = options.dedup_exact ? DedupExactText(**set)
                                            : std::move(**set);
    if (!model_id.has_value()) model_id = samples.model_id;
    UQKIT_ASSIGN_OR_RETURN(
        EvaluatedRecord scored,
        EvaluateRecord(**record, samples, oracle, options.entropy));
    UQKIT_ASSIGN_OR_RETURN(std::string line, SerializeRecord(scored));
    evaluated << line << '\n';
    summaries.push_back(Summarize(scored));
  }
  evaluated.close();
  if (!evaluated) {
    return absl::DataLossError(
        StrCat("write failed for ", evaluated_path.string()));
  }

  EvaluationReports reports;
  reports.domains = DomainAggregate(summaries, model_id.value_or(""));
  std::set<std::string> benchmarks;
  for (const EvaluationSummary& s : summaries) benchmarks.insert(s.benchmark);
  for (const std::string& name : benchmarks) {
    std::vector<EvaluationSummary> subset;
    for (const EvaluationSummary& s : summaries) {
      if (s.benchmark == name) subset.push_back(s);
    }
    for (Measure measure : {Measure::kNpe, Measure::kSe}) {
      UQKIT_ASSIGN_OR_RETURN(AccuracyGroupReport group,
                             GroupByCorrectness(subset, measure));
      reports.groups.push_back(std::move(group));
    }
  }
  for (Measure measure : {Measure::kNpe, Measure::kSe}) {
    reports.calibration.push_back(Calibrate(summaries, measure));
  }
  for (ExportFormat format :
       {ExportFormat::kCsv, ExportFormat::kJson, ExportFormat::kPlotData}) {
    UQKIT_RETURN_IF_ERROR(ExportReports(reports, format, out_dir));
  }
  return reports;
}

}  // namespace uqkit
