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

// Generation over an abstract next-token logit provider: temperature
// sampling, nucleus (top-p) sampling and beam search. Every generated token
// carries the log-probability it was produced with, so the output feeds the
// entropy measures directly.

#ifndef UQKIT_DECODING_H_
#define UQKIT_DECODING_H_

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "uqkit/json_codec.h"
#include "uqkit/records.h"

namespace uqkit {

// Source of next-token logits. NextLogits must be a pure function of the
// prefix (the generated token ids so far) and safe to call concurrently.
// In-process providers may use -infinity to mask impossible tokens; every
// other value must be finite.
class LogitProvider {
 public:
  virtual ~LogitProvider() = default;

  virtual int vocab_size() const = 0;
  virtual int stop_token_id() const = 0;
  virtual absl::StatusOr<std::vector<double>> NextLogits(
      std::span<const int> prefix) const = 0;
  virtual std::string TokenText(int id) const = 0;
  virtual std::string model_id() const = 0;
};

// Explicit table from prefix to next-token distribution over at most 16
// tokens. Small enough to enumerate, which makes it the exact reference for
// the decoders.
//
// JSON form:
//   {"vocab": ["a","b","<stop>"], "stop": 2,
//    "table": {"": [0.5,0.4,0.1], "0": [...], "0,1": [...]}}
// Prefix keys are comma-joined token ids; "" is the first step.
class LookupTableModel final : public LogitProvider {
 public:
  static constexpr int kMaxVocab = 16;

  static absl::StatusOr<LookupTableModel> Create(
      std::vector<std::string> vocab, int stop_token_id,
      absl::flat_hash_map<std::string, std::vector<double>> table,
      std::string model_id = "lookup_table");
  static absl::StatusOr<LookupTableModel> FromJson(const Json& json);
  static absl::StatusOr<LookupTableModel> FromFile(const std::string& path);

  static std::string PrefixKey(std::span<const int> prefix);

  // The distribution after `prefix`; NotFound when the table has no row.
  absl::StatusOr<std::span<const double>> Probabilities(
      std::span<const int> prefix) const;

  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int stop_token_id() const override { return stop_token_id_; }
  // log p, with -infinity for zero-probability tokens.
  absl::StatusOr<std::vector<double>> NextLogits(
      std::span<const int> prefix) const override;
  std::string TokenText(int id) const override { return vocab_.at(id); }
  std::string model_id() const override { return model_id_; }

  Json ToJson() const;

 private:
  LookupTableModel() = default;

  std::vector<std::string> vocab_;
  int stop_token_id_ = 0;
  absl::flat_hash_map<std::string, std::vector<double>> table_;
  std::string model_id_;
};

// exp(l_i / T) / sum_j exp(l_j / T), max-subtracted. -infinity logits get
// probability 0.
absl::StatusOr<std::vector<double>> SoftmaxWithTemperature(
    std::span<const double> logits, double temperature);

// log of the T = 1 softmax; -infinity logits stay -infinity.
absl::StatusOr<std::vector<double>> LogSoftmax(std::span<const double> logits);

struct NucleusResult {
  std::vector<int> kept;       // Token ids in descending-probability order.
  std::vector<double> probs;   // Full-vocabulary vector, zero outside `kept`.
};

// Keeps the smallest descending-probability prefix (ties by ascending id)
// whose cumulative mass reaches `top_p`, then renormalizes it. The boundary
// is inclusive. top_p = 1 keeps everything and returns `probs` unchanged.
absl::StatusOr<NucleusResult> NucleusFilter(std::span<const double> probs,
                                            double top_p);

// Temperature or top-p sampling of config.num_return_sequences independent
// sequences. Draws come from a std::mt19937_64 seeded with config.seed, so a
// fixed (model, config) reproduces the same SampleSet within a build. Each
// token's logprob is the log of its probability under the distribution it
// was actually drawn from (after temperature and nucleus filtering).
absl::StatusOr<SampleSet> SampleDecode(const LogitProvider& model,
                                       std::string_view prompt,
                                       const DecodingConfig& config);

// Beam search ranked by total sequence log-probability under the model
// (temperature is not applied; no length penalty). Keeps
// config.EffectiveBeamWidth() live hypotheses; a hypothesis that emits the
// stop token moves to the finished pool, and hypotheses reaching max_tokens
// finish with reason max_tokens. Search ends once num_return_sequences
// hypotheses have finished and no live hypothesis can still outrank them, or
// nothing is left alive. Returns the best num_return_sequences finished
// hypotheses in descending score; ties go to the lower token id, then to the
// earlier-created hypothesis.
absl::StatusOr<SampleSet> BeamSearch(const LogitProvider& model,
                                     std::string_view prompt,
                                     const DecodingConfig& config);

// Dispatches on config.method.
absl::StatusOr<SampleSet> Decode(const LogitProvider& model,
                                 std::string_view prompt,
                                 const DecodingConfig& config);

struct EnumeratedSequence {
  std::vector<int> tokens;  // Includes the stop token when one was emitted.
  double probability = 0.0;
};

// Every sequence of positive probability, up to `max_len` tokens; sequences
// cut at max_len count as terminal, so the probabilities sum to one. Fails
// when vocab_size^max_len exceeds 10^6.
absl::StatusOr<std::vector<EnumeratedSequence>> EnumerateAllSequences(
    const LookupTableModel& model, int max_len);

}  // namespace uqkit

#endif  // UQKIT_DECODING_H_
