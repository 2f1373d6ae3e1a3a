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

#include "uqkit/decoding.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "absl/strings/numbers.h"
#include "absl/strings/str_cat.h"
#include "absl/strings/str_join.h"
#include "absl/strings/str_split.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kRowSumTolerance = 1e-9;
// Slack on the nucleus boundary so a cumulative sum that lands a rounding
// error short of top_p still closes the nucleus.
constexpr double kNucleusSlack = 1e-12;

absl::Status CheckLogits(std::span<const double> logits) {
  if (logits.empty()) return absl::InvalidArgumentError("logits are empty");
  bool any_finite = false;
  for (double l : logits) {
    if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) {
      return absl::InvalidArgumentError("logits must be finite");
    }
    any_finite |= std::isfinite(l);
  }
  if (!any_finite) {
    return absl::InvalidArgumentError("every token is masked");
  }
  return absl::OkStatus();
}

absl::StatusOr<std::vector<double>> FetchLogits(const LogitProvider& model,
                                                std::span<const int> prefix) {
  UQKIT_ASSIGN_OR_RETURN(std::vector<double> logits, model.NextLogits(prefix));
  if (static_cast<int>(logits.size()) != model.vocab_size()) {
    return absl::InternalError(
        StrCat("logit vector has length ", logits.size(),
                     ", expected ", model.vocab_size()));
  }
  UQKIT_RETURN_IF_ERROR(CheckLogits(logits));
  return logits;
}

// Uniform draw in [0, 1) from the top 53 bits.
double UniformUnit(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int Draw(std::span<const double> probs, std::mt19937_64& rng) {
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  const double target = UniformUnit(rng) * total;
  double cumulative = 0.0;
  int last_positive = -1;
  for (size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    cumulative += probs[i];
    if (target < cumulative) return last_positive;
  }
  return last_positive;
}

GenerationSample MakeSample(const LogitProvider& model,
                            std::span<const int> tokens,
                            std::span<const double> logprobs,
                            FinishReason reason) {
  GenerationSample sample;
  sample.finish_reason = reason;
  sample.tokens.reserve(tokens.size());
  for (size_t i = 0; i < tokens.size(); ++i) {
    TokenScore score;
    score.text = model.TokenText(tokens[i]);
    score.token_id = tokens[i];
    // Round-off in a renormalized distribution can push a certain token a
    // hair above zero.
    score.logprob = std::min(0.0, logprobs[i]);
    if (tokens[i] != model.stop_token_id()) sample.text += score.text;
    sample.tokens.push_back(std::move(score));
  }
  return sample;
}

SampleSet EmptySet(const LogitProvider& model, std::string_view prompt,
                   const DecodingConfig& config) {
  SampleSet set;
  set.query = std::string(prompt);
  set.model_id = model.model_id();
  set.decoding = config;
  return set;
}

struct Hypothesis {
  std::vector<int> tokens;
  std::vector<double> logprobs;
  double score = 0.0;
  int64_t serial = 0;
  FinishReason reason = FinishReason::kStop;
};

struct Candidate {
  double score;
  int token;
  int64_t parent_serial;
  size_t parent;
  double logprob;
};

bool Outranks(const Hypothesis& a, const Hypothesis& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.serial < b.serial;
}

}  // namespace

absl::StatusOr<LookupTableModel> LookupTableModel::Create(
    std::vector<std::string> vocab, int stop_token_id,
    absl::flat_hash_map<std::string, std::vector<double>> table,
    std::string model_id) {
  if (vocab.empty() || static_cast<int>(vocab.size()) > kMaxVocab) {
    return FieldError("vocab", StrCat("vocabulary size must be in [1, ",
                                            kMaxVocab, "]"));
  }
  for (size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i].empty()) {
      return FieldError(StrCat("vocab[", i, "]"), "must be non-empty");
    }
  }
  const int n = static_cast<int>(vocab.size());
  if (stop_token_id < 0 || stop_token_id >= n) {
    return FieldError("stop", "stop token id out of range");
  }
  if (!table.contains("")) {
    return FieldError("table", "missing the first-step row \"\"");
  }
  for (auto& [key, row] : table) {
    const std::string field = StrCat("table[\"", key, "\"]");
    std::vector<int> prefix;
    if (!key.empty()) {
      for (absl::string_view part : absl::StrSplit(key, ',')) {
        int id = 0;
        if (!absl::SimpleAtoi(part, &id) || id < 0 || id >= n) {
          return FieldError(field, "prefix must be comma-joined token ids");
        }
        prefix.push_back(id);
      }
    }
    if (PrefixKey(prefix) != key) {
      return FieldError(field, StrCat("prefix key is not canonical, expected \"",
                                      PrefixKey(prefix), "\""));
    }
    if (static_cast<int>(row.size()) != n) {
      return FieldError(field, StrCat("row has ", row.size(),
                                            " entries, expected ", n));
    }
    double sum = 0.0;
    for (double p : row) {
      if (!std::isfinite(p) || p < 0.0) {
        return FieldError(field, "probabilities must be finite and >= 0");
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > kRowSumTolerance) {
      return FieldError(field, StrCat("probabilities sum to ", sum,
                                            ", expected 1"));
    }
  }
  LookupTableModel model;
  model.vocab_ = std::move(vocab);
  model.stop_token_id_ = stop_token_id;
  model.table_ = std::move(table);
  model.model_id_ = std::move(model_id);
  return model;
}

absl::StatusOr<LookupTableModel> LookupTableModel::FromJson(const Json& json) {
  if (!json.is_object()) return FieldError("<root>", "expected an object");
  auto vocab_it = json.find("vocab");
  if (vocab_it == json.end() || !vocab_it->is_array()) {
    return FieldError("vocab", "expected an array of strings");
  }
  std::vector<std::string> vocab;
  for (const Json& item : *vocab_it) {
    if (!item.is_string()) {
      return FieldError("vocab", "expected an array of strings");
    }
    vocab.push_back(item.get<std::string>());
  }
  auto stop_it = json.find("stop");
  if (stop_it == json.end() || !stop_it->is_number_integer()) {
    return FieldError("stop", "expected an integer token id");
  }
  auto table_it = json.find("table");
  if (table_it == json.end() || !table_it->is_object()) {
    return FieldError("table", "expected an object");
  }
  absl::flat_hash_map<std::string, std::vector<double>> table;
  for (const auto& [key, row] : table_it->items()) {
    if (!row.is_array()) {
      return FieldError(StrCat("table[\"", key, "\"]"),
                        "expected an array of numbers");
    }
    std::vector<double> probs;
    for (const Json& p : row) {
      if (!p.is_number()) {
        return FieldError(StrCat("table[\"", key, "\"]"),
                          "expected an array of numbers");
      }
      probs.push_back(p.get<double>());
    }
    table.emplace(key, std::move(probs));
  }
  std::string model_id = "lookup_table";
  if (auto id_it = json.find("model_id");
      id_it != json.end() && id_it->is_string()) {
    model_id = id_it->get<std::string>();
  }
  return Create(std::move(vocab), stop_it->get<int>(), std::move(table),
                std::move(model_id));
}

absl::StatusOr<LookupTableModel> LookupTableModel::FromFile(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) return absl::NotFoundError(StrCat("cannot open ", path));
  std::stringstream buffer;
  buffer << in.rdbuf();
  absl::StatusOr<Json> json = ParseJson(buffer.str());
  if (!json.ok()) return Annotate(json.status(), path);
  absl::StatusOr<LookupTableModel> model = FromJson(*json);
  if (!model.ok()) return Annotate(model.status(), path);
  return model;
}

std::string LookupTableModel::PrefixKey(std::span<const int> prefix) {
  return absl::StrJoin(prefix, ",");
}

absl::StatusOr<std::span<const double>> LookupTableModel::Probabilities(
    std::span<const int> prefix) const {
  auto it = table_.find(PrefixKey(prefix));
  if (it == table_.end()) {
    return absl::NotFoundError(StrCat("no table entry for prefix \"",
                                            PrefixKey(prefix), "\""));
  }
  return std::span<const double>(it->second);
}

absl::StatusOr<std::vector<double>> LookupTableModel::NextLogits(
    std::span<const int> prefix) const {
  UQKIT_ASSIGN_OR_RETURN(std::span<const double> probs, Probabilities(prefix));
  std::vector<double> logits(probs.size());
  for (size_t i = 0; i < probs.size(); ++i) {
    logits[i] = probs[i] > 0.0 ? std::log(probs[i]) : kNegInf;
  }
  return logits;
}

Json LookupTableModel::ToJson() const {
  Json table = Json::object();
  std::vector<std::string> keys;
  for (const auto& [key, row] : table_) keys.push_back(key);
  std::sort(keys.begin(), keys.end());
  for (const std::string& key : keys) table[key] = table_.at(key);
  Json json = Json::object();
  json["vocab"] = vocab_;
  json["stop"] = stop_token_id_;
  json["table"] = std::move(table);
  json["model_id"] = model_id_;
  return json;
}

absl::StatusOr<std::vector<double>> SoftmaxWithTemperature(
    std::span<const double> logits, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    return FieldError("temperature", "temperature must be > 0");
  }
  UQKIT_RETURN_IF_ERROR(CheckLogits(logits));
  const double max = *std::max_element(logits.begin(), logits.end());
  std::vector<double> probs(logits.size());
  double sum = 0.0;
  for (size_t i = 0; i < logits.size(); ++i) {
    probs[i] = std::exp((logits[i] - max) / temperature);
    sum += probs[i];
  }
  for (double& p : probs) p /= sum;
  return probs;
}

absl::StatusOr<std::vector<double>> LogSoftmax(std::span<const double> logits) {
  UQKIT_RETURN_IF_ERROR(CheckLogits(logits));
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double l : logits) sum += std::exp(l - max);
  const double log_norm = max + std::log(sum);
  std::vector<double> out(logits.size());
  for (size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - log_norm;
  return out;
}

absl::StatusOr<NucleusResult> NucleusFilter(std::span<const double> probs,
                                            double top_p) {
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    return FieldError("top_p", "top_p must be in (0, 1]");
  }
  if (probs.empty()) return absl::InvalidArgumentError("probabilities are empty");
  std::vector<int> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return probs[a] > probs[b]; });

  NucleusResult result;
  if (top_p == 1.0) {
    result.kept = std::move(order);
    result.probs.assign(probs.begin(), probs.end());
    return result;
  }
  double cumulative = 0.0;
  for (int id : order) {
    result.kept.push_back(id);
    cumulative += probs[id];
    if (cumulative >= top_p - kNucleusSlack) break;
  }
  result.probs.assign(probs.size(), 0.0);
  for (int id : result.kept) result.probs[id] = probs[id] / cumulative;
  return result;
}

absl::StatusOr<SampleSet> SampleDecode(const LogitProvider& model,
                                       std::string_view prompt,
                                       const DecodingConfig& config) {
  if (config.method == DecodingMethod::kBeam) {
    return FieldError("method", "sample decoding needs temperature or top_p");
  }
  UQKIT_RETURN_IF_ERROR(Validate(config));
  SampleSet set = EmptySet(model, prompt, config);
  std::mt19937_64 rng(config.seed);
  const int stop = model.stop_token_id();

  for (int n = 0; n < config.num_return_sequences; ++n) {
    std::vector<int> tokens;
    std::vector<double> logprobs;
    FinishReason reason = FinishReason::kMaxTokens;
    for (int step = 0; step < config.max_tokens; ++step) {
      UQKIT_ASSIGN_OR_RETURN(std::vector<double> logits,
                             FetchLogits(model, tokens));
      UQKIT_ASSIGN_OR_RETURN(std::vector<double> probs,
                             SoftmaxWithTemperature(logits, config.temperature));
      if (config.method == DecodingMethod::kTopP) {
        UQKIT_ASSIGN_OR_RETURN(NucleusResult nucleus,
                               NucleusFilter(probs, config.top_p));
        probs = std::move(nucleus.probs);
      }
      const int token = Draw(probs, rng);
      tokens.push_back(token);
      logprobs.push_back(std::log(probs[token]));
      if (token == stop) {
        reason = FinishReason::kStop;
        break;
      }
    }
    set.samples.push_back(MakeSample(model, tokens, logprobs, reason));
  }
  return set;
}

absl::StatusOr<SampleSet> BeamSearch(const LogitProvider& model,
                                     std::string_view prompt,
                                     const DecodingConfig& config) {
  if (config.method != DecodingMethod::kBeam) {
    return FieldError("method", "beam search needs method = beam");
  }
  UQKIT_RETURN_IF_ERROR(Validate(config));
  const size_t width = static_cast<size_t>(config.EffectiveBeamWidth());
  const size_t wanted = static_cast<size_t>(config.num_return_sequences);
  const int stop = model.stop_token_id();

  int64_t next_serial = 0;
  std::vector<Hypothesis> live(1);
  live[0].serial = next_serial++;
  std::vector<Hypothesis> finished;

  for (int step = 0; step < config.max_tokens && !live.empty(); ++step) {
    std::vector<Candidate> candidates;
    for (size_t h = 0; h < live.size(); ++h) {
      UQKIT_ASSIGN_OR_RETURN(std::vector<double> logits,
                             FetchLogits(model, live[h].tokens));
      UQKIT_ASSIGN_OR_RETURN(std::vector<double> logprobs, LogSoftmax(logits));
      for (int t = 0; t < static_cast<int>(logprobs.size()); ++t) {
        if (!std::isfinite(logprobs[t])) continue;
        candidates.push_back({live[h].score + logprobs[t], t, live[h].serial,
                              h, logprobs[t]});
      }
    }
    std::sort(candidates.begin(), candidates.end(),
              [](const Candidate& a, const Candidate& b) {
                if (a.score != b.score) return a.score > b.score;
                if (a.token != b.token) return a.token < b.token;
                return a.parent_serial < b.parent_serial;
              });

    const bool last_step = step + 1 == config.max_tokens;
    std::vector<Hypothesis> next_live;
    size_t taken = 0;  // Non-stop extensions accepted this step.
    for (const Candidate& c : candidates) {
      if (taken == width) break;
      Hypothesis extended;
      extended.tokens = live[c.parent].tokens;
      extended.tokens.push_back(c.token);
      extended.logprobs = live[c.parent].logprobs;
      extended.logprobs.push_back(c.logprob);
      extended.score = c.score;
      extended.serial = next_serial++;
      if (c.token == stop) {
        extended.reason = FinishReason::kStop;
        finished.push_back(std::move(extended));
      } else if (last_step) {
        ++taken;
        extended.reason = FinishReason::kMaxTokens;
        finished.push_back(std::move(extended));
      } else {
        ++taken;
        next_live.push_back(std::move(extended));
      }
    }
    live = std::move(next_live);

    if (finished.size() >= wanted) {
      std::vector<double> scores;
      scores.reserve(finished.size());
      for (const Hypothesis& h : finished) scores.push_back(h.score);
      std::nth_element(scores.begin(), scores.begin() + (wanted - 1),
                       scores.end(), std::greater<>());
      const double threshold = scores[wanted - 1];
      // Log-probabilities only go down, so a live hypothesis scoring no
      // better than the current top set can never displace it.
      if (live.empty() || live.front().score <= threshold) break;
    }
  }

  std::sort(finished.begin(), finished.end(), Outranks);
  if (finished.size() > wanted) finished.resize(wanted);
  SampleSet set = EmptySet(model, prompt, config);
  for (const Hypothesis& h : finished) {
    set.samples.push_back(MakeSample(model, h.tokens, h.logprobs, h.reason));
  }
  if (set.samples.empty()) {
    return absl::InternalError("beam search produced no sequences");
  }
  return set;
}

absl::StatusOr<SampleSet> Decode(const LogitProvider& model,
                                 std::string_view prompt,
                                 const DecodingConfig& config) {
  if (config.method == DecodingMethod::kBeam) {
    return BeamSearch(model, prompt, config);
  }
  return SampleDecode(model, prompt, config);
}

absl::StatusOr<std::vector<EnumeratedSequence>> EnumerateAllSequences(
    const LookupTableModel& model, int max_len) {
  if (max_len < 1) return absl::InvalidArgumentError("max_len must be >= 1");
  double bound = 1.0;
  for (int i = 0; i < max_len; ++i) bound *= model.vocab_size();
  if (bound > 1e6) {
    return absl::OutOfRangeError(StrCat(
        "vocab_size^max_len = ", bound, " exceeds the 10^6 enumeration bound"));
  }
  std::vector<EnumeratedSequence> out;
  struct Frame {
    std::vector<int> tokens;
    double probability;
  };
  std::vector<Frame> stack = {{{}, 1.0}};
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    UQKIT_ASSIGN_OR_RETURN(std::span<const double> probs,
                           model.Probabilities(frame.tokens));
    // Reverse push keeps the output in lexicographic token order.
    for (int t = model.vocab_size() - 1; t >= 0; --t) {
      if (probs[t] <= 0.0) continue;
      Frame child{frame.tokens, frame.probability * probs[t]};
      child.tokens.push_back(t);
      if (t == model.stop_token_id() ||
          static_cast<int>(child.tokens.size()) == max_len) {
        out.push_back({std::move(child.tokens), child.probability});
      } else {
        stack.push_back(std::move(child));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const EnumeratedSequence& a, const EnumeratedSequence& b) {
                     return a.tokens < b.tokens;
                   });
  return out;
}

}  // namespace uqkit
