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

// JSON mapping of the record types. Field names are snake_case and match
// the JSONL schemas one to one.

#ifndef UQKIT_JSON_CODEC_H_
#define UQKIT_JSON_CODEC_H_

#include <string>
#include <string_view>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "nlohmann/json.hpp"
#include "uqkit/records.h"

namespace uqkit {

using Json = nlohmann::ordered_json;

Json ToJson(const TokenScore& token);
Json ToJson(const GenerationSample& sample);
Json ToJson(const DecodingConfig& config);
Json ToJson(const SampleSet& set);
Json ToJson(const BenchmarkRecord& record);
Json ToJson(const EntropyConfig& config);
Json ToJson(const UncertaintyReport& report);
Json ToJson(const MeaningCluster& cluster);
Json ToJson(const EvaluatedRecord& record);

// Structural decoding only; call Validate() for the invariants. `path` is the
// location of `json` inside the enclosing document and prefixes field names
// in errors. Absent optional keys keep the value already in `*out`.
absl::Status FromJson(const Json& json, std::string_view path,
                      TokenScore* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      GenerationSample* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      DecodingConfig* out);
absl::Status FromJson(const Json& json, std::string_view path, SampleSet* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      BenchmarkRecord* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      EntropyConfig* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      UncertaintyReport* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      MeaningCluster* out);
absl::Status FromJson(const Json& json, std::string_view path,
                      EvaluatedRecord* out);

// Single-line rendering. Reals are printed with 17 significant digits;
// NaN and infinities are rejected.
absl::StatusOr<std::string> DumpJson(const Json& json);

// Formats one real the way DumpJson does.
std::string FormatReal(double value);

// Parse errors report the byte offset.
absl::StatusOr<Json> ParseJson(std::string_view text);

}  // namespace uqkit

#endif  // UQKIT_JSON_CODEC_H_
