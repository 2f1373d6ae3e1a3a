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

#include "uqkit/entropy.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <string>

#include "absl/container/flat_hash_set.h"
#include "absl/strings/str_cat.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

// Maps -0.0 to +0.0 so reports never print a negative zero.
double Canonical(double value) { return value == 0.0 ? 0.0 : value; }

absl::Status CheckTokens(const GenerationSample& sample) {
  if (sample.tokens.empty()) {
    return absl::InvalidArgumentError("sample has no tokens");
  }
  for (const TokenScore& token : sample.tokens) {
    if (!std::isfinite(token.logprob)) {
      return absl::InvalidArgumentError(
          StrCat("non-finite logprob for token '", token.text, "'"));
    }
    if (token.logprob > 0.0) {
      return absl::InvalidArgumentError(
          StrCat("logprob > 0 for token '", token.text, "'"));
    }
  }
  return absl::OkStatus();
}

// Identity of a generated path: token ids or texts plus exact logprobs.
std::string PathKey(const GenerationSample& sample) {
  std::string key;
  for (const TokenScore& token : sample.tokens) {
    absl::StrAppend(&key, token.token_id.value_or(-1), "\x1f", token.text,
                    "\x1f", std::bit_cast<uint64_t>(token.logprob), "\x1e");
  }
  return key;
}

double SampleScore(const GenerationSample& sample,
                   const EntropyConfig& config) {
  const double loglik = sample.LogLikelihood();
  if (config.length_normalized_cluster_scores) {
    return loglik / static_cast<double>(sample.tokens.size());
  }
  return loglik;
}

// Scores of the distinct paths among `indices`.
std::vector<double> DistinctScores(const SampleSet& set,
                                   std::span<const int> indices,
                                   const EntropyConfig& config) {
  absl::flat_hash_set<std::string> seen;
  std::vector<double> scores;
  scores.reserve(indices.size());
  for (int index : indices) {
    const GenerationSample& sample = set.samples[index];
    if (seen.insert(PathKey(sample)).second) {
      scores.push_back(SampleScore(sample, config));
    }
  }
  return scores;
}

absl::Status CheckSet(const SampleSet& set) {
  if (set.samples.empty()) {
    return absl::InvalidArgumentError("sample set is empty");
  }
  for (const GenerationSample& sample : set.samples) {
    UQKIT_RETURN_IF_ERROR(CheckTokens(sample));
  }
  return absl::OkStatus();
}

}  // namespace

absl::StatusOr<double> SequenceEntropy(const GenerationSample& sample,
                                       const EntropyConfig& config) {
  UQKIT_RETURN_IF_ERROR(CheckTokens(sample));
  double total = 0.0;
  for (const TokenScore& token : sample.tokens) {
    switch (config.variant) {
      case EntropyVariant::kTokenWeighted:
        total += std::exp(token.logprob) * token.logprob;
        break;
      case EntropyVariant::kLogLikelihood:
        total += token.logprob;
        break;
    }
  }
  double entropy = -total;
  if (config.length_normalize) {
    entropy /= static_cast<double>(sample.tokens.size());
  }
  return Canonical(entropy);
}

absl::StatusOr<double> PredictiveEntropy(const SampleSet& set,
                                         const EntropyConfig& config) {
  if (set.samples.empty()) {
    return absl::InvalidArgumentError("sample set is empty");
  }
  double total = 0.0;
  for (const GenerationSample& sample : set.samples) {
    UQKIT_ASSIGN_OR_RETURN(double entropy, SequenceEntropy(sample, config));
    total += entropy;
  }
  return Canonical(total / static_cast<double>(set.samples.size()));
}

double LogSumExp(std::span<const double> values) {
  if (values.empty()) return -std::numeric_limits<double>::infinity();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double max = sorted.front();
  if (!std::isfinite(max)) return max;
  double sum = 0.0;
  // Ascending magnitude of the terms keeps the rounding small.
  for (auto it = sorted.rbegin(); it != sorted.rend(); ++it) {
    sum += std::exp(*it - max);
  }
  return max + std::log(sum);
}

absl::Status ValidatePartition(std::span<const MeaningCluster> clusters,
                               int num_samples) {
  if (clusters.empty()) {
    return absl::InvalidArgumentError("partition has no clusters");
  }
  std::vector<bool> covered(num_samples, false);
  for (size_t c = 0; c < clusters.size(); ++c) {
    const MeaningCluster& cluster = clusters[c];
    if (cluster.member_indices.empty()) {
      return absl::InvalidArgumentError(StrCat("cluster ", c, " is empty"));
    }
    bool has_representative = false;
    for (int index : cluster.member_indices) {
      if (index < 0 || index >= num_samples) {
        return absl::InvalidArgumentError(StrCat(
            "cluster ", c, " references sample ", index, " out of range"));
      }
      if (covered[index]) {
        return absl::InvalidArgumentError(
            StrCat("sample ", index, " appears in more than one cluster"));
      }
      covered[index] = true;
      has_representative |= index == cluster.representative_index;
    }
    if (!has_representative) {
      return absl::InvalidArgumentError(StrCat(
          "cluster ", c, " representative is not one of its members"));
    }
  }
  for (int i = 0; i < num_samples; ++i) {
    if (!covered[i]) {
      return absl::InvalidArgumentError(
          StrCat("sample ", i, " is not in any cluster"));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<double> ClusterLogProbability(const MeaningCluster& cluster,
                                             const SampleSet& set,
                                             const EntropyConfig& config) {
  if (cluster.member_indices.empty()) {
    return absl::InvalidArgumentError("cluster is empty");
  }
  for (int index : cluster.member_indices) {
    if (index < 0 || index >= set.size()) {
      return absl::InvalidArgumentError(
          StrCat("cluster member ", index, " out of range"));
    }
    UQKIT_RETURN_IF_ERROR(CheckTokens(set.samples[index]));
  }
  double log_prob =
      LogSumExp(DistinctScores(set, cluster.member_indices, config));
  if (config.renormalize_sample_probs) {
    std::vector<int> all(set.samples.size());
    for (int i = 0; i < set.size(); ++i) all[i] = i;
    log_prob -= LogSumExp(DistinctScores(set, all, config));
  }
  return Canonical(std::min(0.0, log_prob));
}

absl::StatusOr<double> SemanticEntropy(const SampleSet& set,
                                       std::span<const MeaningCluster> clusters,
                                       const EntropyConfig& config) {
  UQKIT_RETURN_IF_ERROR(CheckSet(set));
  UQKIT_RETURN_IF_ERROR(ValidatePartition(clusters, set.size()));
  double total = 0.0;
  for (const MeaningCluster& cluster : clusters) {
    UQKIT_ASSIGN_OR_RETURN(double log_prob,
                           ClusterLogProbability(cluster, set, config));
    total += log_prob;
  }
  return Canonical(-total / static_cast<double>(clusters.size()));
}

absl::Status AttachClusterLogProbabilities(
    const SampleSet& set, const EntropyConfig& config,
    std::vector<MeaningCluster>* clusters) {
  for (MeaningCluster& cluster : *clusters) {
    UQKIT_ASSIGN_OR_RETURN(double log_prob,
                           ClusterLogProbability(cluster, set, config));
    cluster.log_prob = log_prob;
  }
  return absl::OkStatus();
}

absl::StatusOr<UncertaintyReport> ComputeUncertaintyReport(
    const SampleSet& set, std::span<const MeaningCluster> clusters,
    const EntropyConfig& config, OracleKind oracle) {
  UQKIT_RETURN_IF_ERROR(CheckSet(set));
  UncertaintyReport report;
  report.config = config;
  report.oracle = oracle;

  EntropyConfig raw = config;
  raw.length_normalize = false;
  UQKIT_ASSIGN_OR_RETURN(report.pe, PredictiveEntropy(set, raw));
  EntropyConfig normalized = config;
  normalized.length_normalize = true;
  UQKIT_ASSIGN_OR_RETURN(report.npe, PredictiveEntropy(set, normalized));

  UQKIT_ASSIGN_OR_RETURN(report.se, SemanticEntropy(set, clusters, config));
  report.num_clusters = static_cast<int>(clusters.size());

  report.per_sequence_entropy.reserve(set.samples.size());
  for (const GenerationSample& sample : set.samples) {
    UQKIT_ASSIGN_OR_RETURN(double entropy, SequenceEntropy(sample, config));
    report.per_sequence_entropy.push_back(entropy);
  }
  return report;
}

}  // namespace uqkit
