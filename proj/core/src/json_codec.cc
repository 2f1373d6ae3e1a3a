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

#include "uqkit/json_codec.h"

#include <cmath>
#include <cstdio>
#include <limits>

#include "absl/strings/str_cat.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

std::string Join(std::string_view path, std::string_view key) {
  if (path.empty()) return std::string(key);
  return StrCat(path, ".", key);
}

std::string Index(std::string_view path, size_t i) {
  return StrCat(path, "[", i, "]");
}

const Json* Find(const Json& object, std::string_view key) {
  auto it = object.find(std::string(key));
  if (it == object.end()) return nullptr;
  return &*it;
}

absl::Status RequireObject(const Json& json, std::string_view path) {
  if (!json.is_object()) {
    return FieldError(path.empty() ? "<root>" : path, "expected an object");
  }
  return absl::OkStatus();
}

absl::Status ReadString(const Json& object, std::string_view path,
                        std::string_view key, bool required,
                        std::string* out) {
  const Json* value = Find(object, key);
  if (value == nullptr) {
    if (required) return FieldError(Join(path, key), "missing");
    return absl::OkStatus();
  }
  if (!value->is_string()) {
    return FieldError(Join(path, key), "expected a string");
  }
  *out = value->get<std::string>();
  return absl::OkStatus();
}

absl::Status ReadReal(const Json& object, std::string_view path,
                      std::string_view key, bool required, double* out) {
  const Json* value = Find(object, key);
  if (value == nullptr) {
    if (required) return FieldError(Join(path, key), "missing");
    return absl::OkStatus();
  }
  if (!value->is_number()) {
    return FieldError(Join(path, key), "expected a number");
  }
  *out = value->get<double>();
  return absl::OkStatus();
}

absl::Status ReadInt(const Json& object, std::string_view path,
                     std::string_view key, bool required, int* out) {
  const Json* value = Find(object, key);
  if (value == nullptr) {
    if (required) return FieldError(Join(path, key), "missing");
    return absl::OkStatus();
  }
  if (!value->is_number_integer()) {
    return FieldError(Join(path, key), "expected an integer");
  }
  const int64_t v = value->get<int64_t>();
  if (v < std::numeric_limits<int>::min() ||
      v > std::numeric_limits<int>::max()) {
    return FieldError(Join(path, key), "integer out of range");
  }
  *out = static_cast<int>(v);
  return absl::OkStatus();
}

absl::Status ReadBool(const Json& object, std::string_view path,
                      std::string_view key, bool required, bool* out) {
  const Json* value = Find(object, key);
  if (value == nullptr) {
    if (required) return FieldError(Join(path, key), "missing");
    return absl::OkStatus();
  }
  if (!value->is_boolean()) {
    return FieldError(Join(path, key), "expected a boolean");
  }
  *out = value->get<bool>();
  return absl::OkStatus();
}

template <typename Enum, typename Parser>
absl::Status ReadEnum(const Json& object, std::string_view path,
                      std::string_view key, bool required, Parser parse,
                      Enum* out) {
  std::string name;
  const bool present = Find(object, key) != nullptr;
  UQKIT_RETURN_IF_ERROR(ReadString(object, path, key, required, &name));
  if (!present) return absl::OkStatus();
  absl::StatusOr<Enum> parsed = parse(name);
  if (!parsed.ok()) {
    return FieldError(Join(path, key), Message(parsed.status()));
  }
  *out = *parsed;
  return absl::OkStatus();
}

template <typename T>
absl::Status ReadArray(const Json& object, std::string_view path,
                       std::string_view key, std::vector<T>* out) {
  const Json* value = Find(object, key);
  const std::string field = Join(path, key);
  if (value == nullptr) return FieldError(field, "missing");
  if (!value->is_array()) return FieldError(field, "expected an array");
  out->clear();
  out->reserve(value->size());
  for (size_t i = 0; i < value->size(); ++i) {
    T item;
    UQKIT_RETURN_IF_ERROR(FromJson((*value)[i], Index(field, i), &item));
    out->push_back(std::move(item));
  }
  return absl::OkStatus();
}

absl::Status ReadObject(const Json& object, std::string_view path,
                        std::string_view key, auto* out) {
  const Json* value = Find(object, key);
  if (value == nullptr) return FieldError(Join(path, key), "missing");
  return FromJson(*value, Join(path, key), out);
}

absl::Status WriteJson(const Json& json, std::string* out) {
  switch (json.type()) {
    case Json::value_t::null:
      out->append("null");
      return absl::OkStatus();
    case Json::value_t::boolean:
      out->append(json.get<bool>() ? "true" : "false");
      return absl::OkStatus();
    case Json::value_t::number_integer:
      absl::StrAppend(out, json.get<int64_t>());
      return absl::OkStatus();
    case Json::value_t::number_unsigned:
      absl::StrAppend(out, json.get<uint64_t>());
      return absl::OkStatus();
    case Json::value_t::number_float: {
      const double value = json.get<double>();
      if (std::isnan(value)) {
        return absl::InvalidArgumentError("NaN is not representable");
      }
      if (!std::isfinite(value)) {
        return absl::InvalidArgumentError("infinity is not representable");
      }
      out->append(FormatReal(value));
      return absl::OkStatus();
    }
    case Json::value_t::string:
      out->append(json.dump());
      return absl::OkStatus();
    case Json::value_t::array: {
      out->push_back('[');
      bool first = true;
      for (const Json& item : json) {
        if (!first) out->push_back(',');
        first = false;
        UQKIT_RETURN_IF_ERROR(WriteJson(item, out));
      }
      out->push_back(']');
      return absl::OkStatus();
    }
    case Json::value_t::object: {
      out->push_back('{');
      bool first = true;
      for (const auto& [key, value] : json.items()) {
        if (!first) out->push_back(',');
        first = false;
        out->append(Json(key).dump());
        out->push_back(':');
        UQKIT_RETURN_IF_ERROR(WriteJson(value, out));
      }
      out->push_back('}');
      return absl::OkStatus();
    }
    case Json::value_t::binary:
    case Json::value_t::discarded:
      break;
  }
  return absl::InvalidArgumentError("unsupported JSON value");
}

}  // namespace

std::string FormatReal(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

Json ToJson(const TokenScore& token) {
  Json json = Json::object();
  json["text"] = token.text;
  if (token.token_id.has_value()) json["token_id"] = *token.token_id;
  json["logprob"] = token.logprob;
  return json;
}

Json ToJson(const GenerationSample& sample) {
  Json tokens = Json::array();
  for (const TokenScore& token : sample.tokens) tokens.push_back(ToJson(token));
  Json json = Json::object();
  json["text"] = sample.text;
  json["tokens"] = std::move(tokens);
  json["finish_reason"] = ToString(sample.finish_reason);
  return json;
}

Json ToJson(const DecodingConfig& config) {
  Json json = Json::object();
  json["method"] = ToString(config.method);
  json["temperature"] = config.temperature;
  json["top_p"] = config.top_p;
  json["beam_width"] = config.beam_width;
  json["num_return_sequences"] = config.num_return_sequences;
  json["max_tokens"] = config.max_tokens;
  json["seed"] = config.seed;
  if (config.method == DecodingMethod::kBeam) {
    json["effective_beam_width"] = config.EffectiveBeamWidth();
  }
  return json;
}

Json ToJson(const SampleSet& set) {
  Json samples = Json::array();
  for (const GenerationSample& sample : set.samples) {
    samples.push_back(ToJson(sample));
  }
  Json json = Json::object();
  json["query"] = set.query;
  json["samples"] = std::move(samples);
  json["model_id"] = set.model_id;
  json["decoding"] = ToJson(set.decoding);
  return json;
}

Json ToJson(const BenchmarkRecord& record) {
  Json json = Json::object();
  json["id"] = record.id;
  json["query"] = record.query;
  json["gold_answer"] = record.gold_answer;
  json["domain"] = record.domain;
  json["benchmark"] = record.benchmark;
  if (record.retrieved_passages.has_value()) {
    json["retrieved_passages"] = *record.retrieved_passages;
  }
  return json;
}

Json ToJson(const EntropyConfig& config) {
  Json json = Json::object();
  json["variant"] = ToString(config.variant);
  json["length_normalize"] = config.length_normalize;
  json["renormalize_sample_probs"] = config.renormalize_sample_probs;
  json["length_normalized_cluster_scores"] =
      config.length_normalized_cluster_scores;
  return json;
}

Json ToJson(const UncertaintyReport& report) {
  Json json = Json::object();
  json["pe"] = report.pe;
  json["npe"] = report.npe;
  json["se"] = report.se;
  json["num_clusters"] = report.num_clusters;
  json["per_sequence_entropy"] = report.per_sequence_entropy;
  json["config"] = ToJson(report.config);
  json["oracle"] = ToString(report.oracle);
  return json;
}

Json ToJson(const MeaningCluster& cluster) {
  Json json = Json::object();
  json["member_indices"] = cluster.member_indices;
  json["representative_index"] = cluster.representative_index;
  if (cluster.log_prob.has_value()) json["log_prob"] = *cluster.log_prob;
  return json;
}

Json ToJson(const EvaluatedRecord& record) {
  Json json = Json::object();
  json["record"] = ToJson(record.record);
  json["sample_set"] = ToJson(record.sample_set);
  json["report"] = ToJson(record.report);
  json["top_prediction"] = record.top_prediction;
  json["is_correct"] = record.is_correct;
  return json;
}

absl::Status FromJson(const Json& json, std::string_view path,
                      TokenScore* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "text", true, &out->text));
  UQKIT_RETURN_IF_ERROR(ReadReal(json, path, "logprob", true, &out->logprob));
  out->token_id.reset();
  if (const Json* id = Find(json, "token_id"); id != nullptr && !id->is_null()) {
    if (!id->is_number_integer()) {
      return FieldError(Join(path, "token_id"), "expected an integer");
    }
    if (id->is_number_unsigned() &&
        id->get<uint64_t>() >
            static_cast<uint64_t>(std::numeric_limits<int64_t>::max())) {
      return FieldError(Join(path, "token_id"), "integer out of range");
    }
    out->token_id = id->get<int64_t>();
  }
  return absl::OkStatus();
}

absl::Status FromJson(const Json& json, std::string_view path,
                      GenerationSample* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "text", true, &out->text));
  UQKIT_RETURN_IF_ERROR(ReadArray(json, path, "tokens", &out->tokens));
  out->finish_reason = FinishReason::kStop;
  return ReadEnum(json, path, "finish_reason", false, ParseFinishReason,
                  &out->finish_reason);
}

absl::Status FromJson(const Json& json, std::string_view path,
                      DecodingConfig* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadEnum(json, path, "method", false,
                                 ParseDecodingMethod, &out->method));
  UQKIT_RETURN_IF_ERROR(
      ReadReal(json, path, "temperature", false, &out->temperature));
  UQKIT_RETURN_IF_ERROR(ReadReal(json, path, "top_p", false, &out->top_p));
  UQKIT_RETURN_IF_ERROR(
      ReadInt(json, path, "beam_width", false, &out->beam_width));
  UQKIT_RETURN_IF_ERROR(ReadInt(json, path, "num_return_sequences", false,
                                &out->num_return_sequences));
  UQKIT_RETURN_IF_ERROR(
      ReadInt(json, path, "max_tokens", false, &out->max_tokens));
  if (const Json* seed = Find(json, "seed"); seed != nullptr) {
    if (!seed->is_number_integer() ||
        (!seed->is_number_unsigned() && seed->get<int64_t>() < 0)) {
      return FieldError(Join(path, "seed"),
                        "expected a non-negative 64-bit integer");
    }
    out->seed = seed->get<uint64_t>();
  }
  return absl::OkStatus();
}

absl::Status FromJson(const Json& json, std::string_view path,
                      SampleSet* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "query", true, &out->query));
  UQKIT_RETURN_IF_ERROR(ReadArray(json, path, "samples", &out->samples));
  UQKIT_RETURN_IF_ERROR(
      ReadString(json, path, "model_id", false, &out->model_id));
  if (Find(json, "decoding") != nullptr) {
    UQKIT_RETURN_IF_ERROR(ReadObject(json, path, "decoding", &out->decoding));
  }
  return absl::OkStatus();
}

absl::Status FromJson(const Json& json, std::string_view path,
                      BenchmarkRecord* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "id", true, &out->id));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "query", true, &out->query));
  UQKIT_RETURN_IF_ERROR(
      ReadString(json, path, "gold_answer", true, &out->gold_answer));
  UQKIT_RETURN_IF_ERROR(ReadString(json, path, "domain", false, &out->domain));
  UQKIT_RETURN_IF_ERROR(
      ReadString(json, path, "benchmark", false, &out->benchmark));
  out->retrieved_passages.reset();
  if (const Json* passages = Find(json, "retrieved_passages");
      passages != nullptr && !passages->is_null()) {
    const std::string field = Join(path, "retrieved_passages");
    if (!passages->is_array()) return FieldError(field, "expected an array");
    std::vector<std::string> texts;
    for (size_t i = 0; i < passages->size(); ++i) {
      if (!(*passages)[i].is_string()) {
        return FieldError(Index(field, i), "expected a string");
      }
      texts.push_back((*passages)[i].get<std::string>());
    }
    out->retrieved_passages = std::move(texts);
  }
  return absl::OkStatus();
}

absl::Status FromJson(const Json& json, std::string_view path,
                      EntropyConfig* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadEnum(json, path, "variant", false,
                                 ParseEntropyVariant, &out->variant));
  UQKIT_RETURN_IF_ERROR(ReadBool(json, path, "length_normalize", false,
                                 &out->length_normalize));
  UQKIT_RETURN_IF_ERROR(ReadBool(json, path, "renormalize_sample_probs", false,
                                 &out->renormalize_sample_probs));
  return ReadBool(json, path, "length_normalized_cluster_scores", false,
                  &out->length_normalized_cluster_scores);
}

absl::Status FromJson(const Json& json, std::string_view path,
                      UncertaintyReport* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadReal(json, path, "pe", true, &out->pe));
  UQKIT_RETURN_IF_ERROR(ReadReal(json, path, "npe", true, &out->npe));
  UQKIT_RETURN_IF_ERROR(ReadReal(json, path, "se", true, &out->se));
  UQKIT_RETURN_IF_ERROR(
      ReadInt(json, path, "num_clusters", true, &out->num_clusters));
  const Json* entropies = Find(json, "per_sequence_entropy");
  const std::string field = Join(path, "per_sequence_entropy");
  if (entropies == nullptr) return FieldError(field, "missing");
  if (!entropies->is_array()) return FieldError(field, "expected an array");
  out->per_sequence_entropy.clear();
  for (size_t i = 0; i < entropies->size(); ++i) {
    if (!(*entropies)[i].is_number()) {
      return FieldError(Index(field, i), "expected a number");
    }
    out->per_sequence_entropy.push_back((*entropies)[i].get<double>());
  }
  if (Find(json, "config") != nullptr) {
    UQKIT_RETURN_IF_ERROR(ReadObject(json, path, "config", &out->config));
  }
  return ReadEnum(json, path, "oracle", false, ParseOracleKind, &out->oracle);
}

absl::Status FromJson(const Json& json, std::string_view path,
                      MeaningCluster* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  const Json* members = Find(json, "member_indices");
  const std::string field = Join(path, "member_indices");
  if (members == nullptr) return FieldError(field, "missing");
  if (!members->is_array()) return FieldError(field, "expected an array");
  out->member_indices.clear();
  for (size_t i = 0; i < members->size(); ++i) {
    if (!(*members)[i].is_number_integer()) {
      return FieldError(Index(field, i), "expected an integer");
    }
    out->member_indices.push_back((*members)[i].get<int>());
  }
  UQKIT_RETURN_IF_ERROR(ReadInt(json, path, "representative_index", true,
                                &out->representative_index));
  out->log_prob.reset();
  if (const Json* lp = Find(json, "log_prob"); lp != nullptr && !lp->is_null()) {
    if (!lp->is_number()) {
      return FieldError(Join(path, "log_prob"), "expected a number");
    }
    out->log_prob = lp->get<double>();
  }
  return absl::OkStatus();
}

absl::Status FromJson(const Json& json, std::string_view path,
                      EvaluatedRecord* out) {
  UQKIT_RETURN_IF_ERROR(RequireObject(json, path));
  UQKIT_RETURN_IF_ERROR(ReadObject(json, path, "record", &out->record));
  UQKIT_RETURN_IF_ERROR(ReadObject(json, path, "sample_set", &out->sample_set));
  UQKIT_RETURN_IF_ERROR(ReadObject(json, path, "report", &out->report));
  UQKIT_RETURN_IF_ERROR(
      ReadString(json, path, "top_prediction", true, &out->top_prediction));
  return ReadBool(json, path, "is_correct", true, &out->is_correct);
}

absl::StatusOr<std::string> DumpJson(const Json& json) {
  std::string out;
  UQKIT_RETURN_IF_ERROR(WriteJson(json, &out));
  return out;
}

absl::StatusOr<Json> ParseJson(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const Json::parse_error& e) {
    return absl::InvalidArgumentError(
        StrCat("malformed JSON at byte ", e.byte, ": ", e.what()));
  } catch (const Json::exception& e) {
    return absl::InvalidArgumentError(StrCat("malformed JSON: ", e.what()));
  }
}

}  // namespace uqkit
