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

// Canonical data model for generations, uncertainty reports and benchmark
// items, and streaming JSONL ingestion of the toolkit's record format.
//
// All log-probabilities are natural-log. Records are plain values: they are
// immutable once built and safe to share between threads.

#ifndef UQKIT_RECORDS_H_
#define UQKIT_RECORDS_H_

#include <cstdint>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "absl/container/flat_hash_set.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace uqkit {

struct TokenScore {
  std::string text;  // Detokenized surface form.
  std::optional<int64_t> token_id;
  double logprob = 0.0;

  bool operator==(const TokenScore&) const = default;
};

enum class FinishReason { kStop, kMaxTokens };

struct GenerationSample {
  std::string text;
  std::vector<TokenScore> tokens;
  FinishReason finish_reason = FinishReason::kStop;

  // Sum of token log-probabilities, i.e. log P(s|x).
  double LogLikelihood() const;
  int num_tokens() const { return static_cast<int>(tokens.size()); }

  bool operator==(const GenerationSample&) const = default;
};

enum class DecodingMethod { kTemperature, kTopP, kBeam };

struct DecodingConfig {
  DecodingMethod method = DecodingMethod::kTemperature;
  double temperature = 1.0;
  double top_p = 1.0;
  int beam_width = 3;
  int num_return_sequences = 5;
  int max_tokens = 16;
  uint64_t seed = 0;

  // Number of live hypotheses kept by beam search. A width smaller than the
  // number of requested sequences is widened so both settings are honored.
  int EffectiveBeamWidth() const {
    return beam_width > num_return_sequences ? beam_width
                                             : num_return_sequences;
  }

  bool operator==(const DecodingConfig&) const = default;
};

struct SampleSet {
  std::string query;
  std::vector<GenerationSample> samples;
  std::string model_id;
  DecodingConfig decoding;

  int size() const { return static_cast<int>(samples.size()); }

  bool operator==(const SampleSet&) const = default;
};

struct BenchmarkRecord {
  std::string id;
  std::string query;
  std::string gold_answer;
  std::string domain;
  std::string benchmark;
  // Retrieval context, carried through untouched.
  std::optional<std::vector<std::string>> retrieved_passages;

  bool operator==(const BenchmarkRecord&) const = default;
};

enum class EntropyVariant {
  // -sum_i p_i log p_i over the realized tokens.
  kTokenWeighted,
  // -sum_i log p_i, the sequence negative log-likelihood.
  kLogLikelihood,
};

struct EntropyConfig {
  EntropyVariant variant = EntropyVariant::kTokenWeighted;
  bool length_normalize = false;
  // Scale sample likelihoods to sum to one over the set before forming
  // cluster probabilities.
  bool renormalize_sample_probs = false;
  // Use log P(s|x) / N_s instead of log P(s|x) as the sample score inside
  // cluster probabilities.
  bool length_normalized_cluster_scores = false;

  bool operator==(const EntropyConfig&) const = default;
};

enum class OracleKind {
  kExactNormalized,
  kBidirectionalEntailment,
  kAlwaysDistinct,
  kAlwaysEqual,
};

// Entropies are reported in nats and are always >= 0.
struct UncertaintyReport {
  double pe = 0.0;
  double npe = 0.0;
  double se = 0.0;
  int num_clusters = 1;
  std::vector<double> per_sequence_entropy;
  EntropyConfig config;
  OracleKind oracle = OracleKind::kExactNormalized;

  bool operator==(const UncertaintyReport&) const = default;
};

struct MeaningCluster {
  std::vector<int> member_indices;
  int representative_index = 0;
  std::optional<double> log_prob;

  bool operator==(const MeaningCluster&) const = default;
};

struct EvaluatedRecord {
  BenchmarkRecord record;
  SampleSet sample_set;
  UncertaintyReport report;
  std::string top_prediction;
  bool is_correct = false;

  bool operator==(const EvaluatedRecord&) const = default;
};

std::string_view ToString(FinishReason reason);
std::string_view ToString(DecodingMethod method);
std::string_view ToString(EntropyVariant variant);
std::string_view ToString(OracleKind kind);

absl::StatusOr<FinishReason> ParseFinishReason(std::string_view name);
absl::StatusOr<DecodingMethod> ParseDecodingMethod(std::string_view name);
absl::StatusOr<EntropyVariant> ParseEntropyVariant(std::string_view name);
// Accepts the canonical names plus the CLI spellings "exact" and
// "entailment".
absl::StatusOr<OracleKind> ParseOracleKind(std::string_view name);

absl::Status Validate(const TokenScore& token);
absl::Status Validate(const GenerationSample& sample);
absl::Status Validate(const DecodingConfig& config);
absl::Status Validate(const SampleSet& set);
absl::Status Validate(const BenchmarkRecord& record);
absl::Status Validate(const UncertaintyReport& report);
absl::Status Validate(const EvaluatedRecord& record);

// Index of the highest-likelihood sample; the first one wins ties.
int TopPredictionIndex(const SampleSet& set);

// Drops samples whose text repeats an earlier sample's text.
SampleSet DedupExactText(const SampleSet& set);

enum class RecordSchema { kBenchmark, kEvaluated, kSampleSet };

absl::StatusOr<RecordSchema> ParseRecordSchema(std::string_view name);

using AnyRecord = std::variant<BenchmarkRecord, EvaluatedRecord, SampleSet>;

// Parses and validates one JSON object. Malformed JSON yields an
// InvalidArgument error carrying the byte offset; invariant violations name
// the offending field (see ErrorField()).
template <typename T>
absl::StatusOr<T> ParseRecordLine(std::string_view line);

absl::StatusOr<AnyRecord> ParseRecordLine(std::string_view line,
                                          RecordSchema schema);

// One-line JSON; reals use 17 significant digits. Fails on records that
// violate their invariants (including NaN values).
absl::StatusOr<std::string> SerializeRecord(const BenchmarkRecord& record);
absl::StatusOr<std::string> SerializeRecord(const SampleSet& record);
absl::StatusOr<std::string> SerializeRecord(const EvaluatedRecord& record);
absl::StatusOr<std::string> SerializeRecord(const UncertaintyReport& report);

struct JsonlOptions {
  // Strict: the first bad line aborts. Lenient: bad lines are counted and
  // skipped.
  bool strict = true;
};

// Pulls records one line at a time; memory is bounded by the longest line
// (plus the set of seen ids for benchmark records).
template <typename T>
class JsonlReader {
 public:
  explicit JsonlReader(std::istream& in, JsonlOptions options = {})
      : in_(in), options_(options) {}

  // The next record, or std::nullopt at end of input.
  absl::StatusOr<std::optional<T>> Next();

  int64_t line_number() const { return line_number_; }
  int64_t records_read() const { return records_read_; }
  int64_t skipped() const { return skipped_; }
  size_t buffer_capacity() const { return line_.capacity(); }

 private:
  absl::Status CheckUnique(const T& record);

  std::istream& in_;
  JsonlOptions options_;
  std::string line_;
  int64_t line_number_ = 0;
  int64_t records_read_ = 0;
  int64_t skipped_ = 0;
  absl::flat_hash_set<std::string> seen_ids_;
};

extern template class JsonlReader<BenchmarkRecord>;
extern template class JsonlReader<SampleSet>;
extern template class JsonlReader<EvaluatedRecord>;

// Reads a whole stream into memory. Convenience for small files and tests.
template <typename T>
absl::StatusOr<std::vector<T>> LoadJsonl(std::istream& in,
                                         JsonlOptions options = {}) {
  JsonlReader<T> reader(in, options);
  std::vector<T> out;
  while (true) {
    absl::StatusOr<std::optional<T>> next = reader.Next();
    if (!next.ok()) return next.status();
    if (!next->has_value()) break;
    out.push_back(std::move(**next));
  }
  return out;
}

}  // namespace uqkit

#endif  // UQKIT_RECORDS_H_
