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

#include "uqkit/records.h"

#include <cmath>
#include <numeric>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "uqkit/json_codec.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

std::string Join(std::string_view path, std::string_view key) {
  if (path.empty()) return std::string(key);
  return StrCat(path, ".", key);
}

std::string Index(std::string_view path, std::string_view key, size_t i) {
  return StrCat(Join(path, key), "[", i, "]");
}

absl::Status NonEmpty(const std::string& value, std::string_view path,
                      std::string_view key) {
  if (value.empty()) return FieldError(Join(path, key), "must be non-empty");
  return absl::OkStatus();
}

absl::Status ValidateAt(const TokenScore& token, std::string_view path) {
  UQKIT_RETURN_IF_ERROR(NonEmpty(token.text, path, "text"));
  if (!std::isfinite(token.logprob)) {
    return FieldError(Join(path, "logprob"), "logprob must be finite");
  }
  if (token.logprob > 0.0) {
    return FieldError(Join(path, "logprob"), "logprob > 0");
  }
  if (token.token_id.has_value() && *token.token_id < 0) {
    return FieldError(Join(path, "token_id"), "token_id must be non-negative");
  }
  return absl::OkStatus();
}

absl::Status ValidateAt(const GenerationSample& sample,
                        std::string_view path) {
  if (sample.tokens.empty()) {
    return FieldError(Join(path, "tokens"), "tokens must be non-empty");
  }
  for (size_t i = 0; i < sample.tokens.size(); ++i) {
    UQKIT_RETURN_IF_ERROR(
        ValidateAt(sample.tokens[i], Index(path, "tokens", i)));
  }
  // Each term is finite and <= 0, but the sum can still overflow.
  if (!std::isfinite(sample.LogLikelihood())) {
    return FieldError(Join(path, "tokens"),
                      "sequence log-likelihood must be finite");
  }
  return absl::OkStatus();
}

absl::Status ValidateAt(const DecodingConfig& config, std::string_view path) {
  if (config.max_tokens < 1) {
    return FieldError(Join(path, "max_tokens"), "max_tokens must be >= 1");
  }
  if (config.num_return_sequences < 1) {
    return FieldError(Join(path, "num_return_sequences"),
                      "num_return_sequences must be >= 1");
  }
  switch (config.method) {
    case DecodingMethod::kTopP:
      if (!(config.top_p > 0.0 && config.top_p <= 1.0)) {
        return FieldError(Join(path, "top_p"), "top_p must be in (0, 1]");
      }
      [[fallthrough]];
    case DecodingMethod::kTemperature:
      if (!(config.temperature > 0.0) || !std::isfinite(config.temperature)) {
        return FieldError(Join(path, "temperature"),
                          "temperature must be > 0");
      }
      break;
    case DecodingMethod::kBeam:
      if (config.beam_width < 1) {
        return FieldError(Join(path, "beam_width"), "beam_width must be >= 1");
      }
      break;
  }
  return absl::OkStatus();
}

absl::Status ValidateAt(const SampleSet& set, std::string_view path) {
  if (set.samples.empty()) {
    return FieldError(Join(path, "samples"), "M must be >= 1");
  }
  for (size_t i = 0; i < set.samples.size(); ++i) {
    UQKIT_RETURN_IF_ERROR(
        ValidateAt(set.samples[i], Index(path, "samples", i)));
  }
  return ValidateAt(set.decoding, Join(path, "decoding"));
}

absl::Status ValidateAt(const BenchmarkRecord& record, std::string_view path) {
  UQKIT_RETURN_IF_ERROR(NonEmpty(record.id, path, "id"));
  UQKIT_RETURN_IF_ERROR(NonEmpty(record.query, path, "query"));
  return NonEmpty(record.gold_answer, path, "gold_answer");
}

absl::Status CheckEntropy(double value, std::string_view field) {
  if (!std::isfinite(value) || value < 0.0) {
    return FieldError(field, "entropy must be finite and >= 0");
  }
  return absl::OkStatus();
}

absl::Status ValidateAt(const UncertaintyReport& report,
                        std::string_view path) {
  UQKIT_RETURN_IF_ERROR(CheckEntropy(report.pe, Join(path, "pe")));
  UQKIT_RETURN_IF_ERROR(CheckEntropy(report.npe, Join(path, "npe")));
  UQKIT_RETURN_IF_ERROR(CheckEntropy(report.se, Join(path, "se")));
  for (size_t i = 0; i < report.per_sequence_entropy.size(); ++i) {
    UQKIT_RETURN_IF_ERROR(CheckEntropy(report.per_sequence_entropy[i],
                                       Index(path, "per_sequence_entropy", i)));
  }
  const int m = static_cast<int>(report.per_sequence_entropy.size());
  if (report.num_clusters < 1 || report.num_clusters > m) {
    return FieldError(Join(path, "num_clusters"),
                      "num_clusters must be in [1, M]");
  }
  return absl::OkStatus();
}

absl::Status ValidateAt(const EvaluatedRecord& record, std::string_view path) {
  UQKIT_RETURN_IF_ERROR(ValidateAt(record.record, Join(path, "record")));
  UQKIT_RETURN_IF_ERROR(
      ValidateAt(record.sample_set, Join(path, "sample_set")));
  UQKIT_RETURN_IF_ERROR(ValidateAt(record.report, Join(path, "report")));
  if (record.report.per_sequence_entropy.size() !=
      record.sample_set.samples.size()) {
    return FieldError(Join(path, "report.per_sequence_entropy"),
                      "length must equal the number of samples");
  }
  const int top = TopPredictionIndex(record.sample_set);
  if (record.top_prediction != record.sample_set.samples[top].text) {
    return FieldError(Join(path, "top_prediction"),
                      "must equal the text of the highest-likelihood sample");
  }
  return absl::OkStatus();
}

template <typename T>
absl::StatusOr<std::string> Serialize(const T& record) {
  UQKIT_RETURN_IF_ERROR(Validate(record));
  return DumpJson(ToJson(record));
}

bool IsBlank(std::string_view line) {
  for (char c : line) {
    if (!absl::ascii_isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

}  // namespace

double GenerationSample::LogLikelihood() const {
  double total = 0.0;
  for (const TokenScore& token : tokens) total += token.logprob;
  return total;
}

std::string_view ToString(FinishReason reason) {
  switch (reason) {
    case FinishReason::kStop:
      return "stop";
    case FinishReason::kMaxTokens:
      return "max_tokens";
  }
  return "stop";
}

std::string_view ToString(DecodingMethod method) {
  switch (method) {
    case DecodingMethod::kTemperature:
      return "temperature";
    case DecodingMethod::kTopP:
      return "top_p";
    case DecodingMethod::kBeam:
      return "beam";
  }
  return "temperature";
}

std::string_view ToString(EntropyVariant variant) {
  switch (variant) {
    case EntropyVariant::kTokenWeighted:
      return "token_weighted";
    case EntropyVariant::kLogLikelihood:
      return "log_likelihood";
  }
  return "token_weighted";
}

std::string_view ToString(OracleKind kind) {
  switch (kind) {
    case OracleKind::kExactNormalized:
      return "exact_normalized";
    case OracleKind::kBidirectionalEntailment:
      return "bidirectional_entailment";
    case OracleKind::kAlwaysDistinct:
      return "always_distinct";
    case OracleKind::kAlwaysEqual:
      return "always_equal";
  }
  return "exact_normalized";
}

absl::StatusOr<FinishReason> ParseFinishReason(std::string_view name) {
  if (name == "stop") return FinishReason::kStop;
  if (name == "max_tokens") return FinishReason::kMaxTokens;
  return absl::InvalidArgumentError(
      StrCat("unknown finish_reason '", name, "'"));
}

absl::StatusOr<DecodingMethod> ParseDecodingMethod(std::string_view name) {
  if (name == "temperature") return DecodingMethod::kTemperature;
  if (name == "top_p") return DecodingMethod::kTopP;
  if (name == "beam") return DecodingMethod::kBeam;
  return absl::InvalidArgumentError(
      StrCat("unknown decoding method '", name, "'"));
}

absl::StatusOr<EntropyVariant> ParseEntropyVariant(std::string_view name) {
  if (name == "token_weighted") return EntropyVariant::kTokenWeighted;
  if (name == "log_likelihood") return EntropyVariant::kLogLikelihood;
  return absl::InvalidArgumentError(
      StrCat("unknown entropy variant '", name, "'"));
}

absl::StatusOr<OracleKind> ParseOracleKind(std::string_view name) {
  if (name == "exact" || name == "exact_normalized") {
    return OracleKind::kExactNormalized;
  }
  if (name == "entailment" || name == "bidirectional_entailment") {
    return OracleKind::kBidirectionalEntailment;
  }
  if (name == "always_distinct") return OracleKind::kAlwaysDistinct;
  if (name == "always_equal") return OracleKind::kAlwaysEqual;
  return absl::InvalidArgumentError(
      StrCat("unknown oracle '", name, "'"));
}

absl::StatusOr<RecordSchema> ParseRecordSchema(std::string_view name) {
  if (name == "benchmark") return RecordSchema::kBenchmark;
  if (name == "evaluated") return RecordSchema::kEvaluated;
  if (name == "sample_set") return RecordSchema::kSampleSet;
  return absl::InvalidArgumentError(
      StrCat("unknown schema '", name, "'"));
}

absl::Status Validate(const TokenScore& token) { return ValidateAt(token, ""); }
absl::Status Validate(const GenerationSample& sample) {
  return ValidateAt(sample, "");
}
absl::Status Validate(const DecodingConfig& config) {
  return ValidateAt(config, "");
}
absl::Status Validate(const SampleSet& set) { return ValidateAt(set, ""); }
absl::Status Validate(const BenchmarkRecord& record) {
  return ValidateAt(record, "");
}
absl::Status Validate(const UncertaintyReport& report) {
  return ValidateAt(report, "");
}
absl::Status Validate(const EvaluatedRecord& record) {
  return ValidateAt(record, "");
}

int TopPredictionIndex(const SampleSet& set) {
  int best = 0;
  for (int i = 1; i < set.size(); ++i) {
    if (set.samples[i].LogLikelihood() > set.samples[best].LogLikelihood()) {
      best = i;
    }
  }
  return best;
}

SampleSet DedupExactText(const SampleSet& set) {
  SampleSet out;
  out.query = set.query;
  out.model_id = set.model_id;
  out.decoding = set.decoding;
  absl::flat_hash_set<std::string_view> seen;
  for (const GenerationSample& sample : set.samples) {
    if (seen.insert(sample.text).second) out.samples.push_back(sample);
  }
  return out;
}

template <typename T>
absl::StatusOr<T> ParseRecordLine(std::string_view line) {
  UQKIT_ASSIGN_OR_RETURN(Json json, ParseJson(line));
  T record;
  UQKIT_RETURN_IF_ERROR(FromJson(json, "", &record));
  UQKIT_RETURN_IF_ERROR(Validate(record));
  return record;
}

template absl::StatusOr<BenchmarkRecord> ParseRecordLine(std::string_view);
template absl::StatusOr<SampleSet> ParseRecordLine(std::string_view);
template absl::StatusOr<EvaluatedRecord> ParseRecordLine(std::string_view);

absl::StatusOr<AnyRecord> ParseRecordLine(std::string_view line,
                                          RecordSchema schema) {
  switch (schema) {
    case RecordSchema::kBenchmark: {
      UQKIT_ASSIGN_OR_RETURN(BenchmarkRecord r,
                             ParseRecordLine<BenchmarkRecord>(line));
      return AnyRecord(std::move(r));
    }
    case RecordSchema::kEvaluated: {
      UQKIT_ASSIGN_OR_RETURN(EvaluatedRecord r,
                             ParseRecordLine<EvaluatedRecord>(line));
      return AnyRecord(std::move(r));
    }
    case RecordSchema::kSampleSet: {
      UQKIT_ASSIGN_OR_RETURN(SampleSet r, ParseRecordLine<SampleSet>(line));
      return AnyRecord(std::move(r));
    }
  }
  return absl::InvalidArgumentError("unknown schema");
}

absl::StatusOr<std::string> SerializeRecord(const BenchmarkRecord& record) {
  return Serialize(record);
}
absl::StatusOr<std::string> SerializeRecord(const SampleSet& record) {
  return Serialize(record);
}
absl::StatusOr<std::string> SerializeRecord(const EvaluatedRecord& record) {
  return Serialize(record);
}
absl::StatusOr<std::string> SerializeRecord(const UncertaintyReport& report) {
  return Serialize(report);
}

template <typename T>
absl::StatusOr<std::optional<T>> JsonlReader<T>::Next() {
  while (std::getline(in_, line_)) {
    ++line_number_;
    if (!line_.empty() && line_.back() == '\r') line_.pop_back();
    if (IsBlank(line_)) continue;
    absl::StatusOr<T> record = ParseRecordLine<T>(line_);
    absl::Status status = record.status();
    if (status.ok()) status = CheckUnique(*record);
    if (!status.ok()) {
      if (options_.strict) {
        return Annotate(status, StrCat("line ", line_number_));
      }
      ++skipped_;
      continue;
    }
    ++records_read_;
    return std::optional<T>(std::move(*record));
  }
  if (in_.bad()) return absl::DataLossError("read error");
  return std::optional<T>();
}

template <typename T>
absl::Status JsonlReader<T>::CheckUnique(const T& record) {
  if constexpr (std::is_same_v<T, BenchmarkRecord>) {
    if (!seen_ids_.insert(record.id).second) {
      return FieldError("id", StrCat("duplicate id '", record.id, "'"));
    }
  }
  return absl::OkStatus();
}

template class JsonlReader<BenchmarkRecord>;
template class JsonlReader<SampleSet>;
template class JsonlReader<EvaluatedRecord>;

}  // namespace uqkit
