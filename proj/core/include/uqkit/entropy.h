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

// Sequence-level uncertainty measures over a set of generations for one
// query: predictive entropy (PE), its length-normalized form (NPE), and
// semantic entropy (SE) over meaning clusters.
//
// Every value is in nats and reported non-negative. Two per-sequence
// estimators are available through EntropyConfig::variant:
//
//   token_weighted:  E(s) = -sum_i p_i log p_i,  p_i = P(s_i | s_<i, x)
//   log_likelihood:  E(s) = -sum_i log p_i       = -log P(s | x)
//
// With length normalization each E(s) is divided by the token count N_s.
// Semantic entropy averages the cluster log-probabilities:
//
//   SE(x) = -(1/|C|) sum_c log sum_{s in c} P(s | x)
//
// All functions are pure and may be called concurrently.

#ifndef UQKIT_ENTROPY_H_
#define UQKIT_ENTROPY_H_

#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "uqkit/records.h"

namespace uqkit {

// Entropy of one generation. Fails on an empty token list or a logprob that
// is non-finite or positive.
absl::StatusOr<double> SequenceEntropy(const GenerationSample& sample,
                                       const EntropyConfig& config);

// Mean of SequenceEntropy over the set. With config.length_normalize this is
// NPE, otherwise PE.
absl::StatusOr<double> PredictiveEntropy(const SampleSet& set,
                                         const EntropyConfig& config);

// log sum_i exp(values_i), stable for very negative inputs. The result
// depends only on the multiset of values, not their order. Empty input gives
// -infinity.
double LogSumExp(std::span<const double> values);

// log p(C|x) for one cluster, never above 0.
//
// Identical generations (same tokens and logprobs, as produced by repeated
// draws of the same path) count once: p(C|x) sums over distinct sequences.
absl::StatusOr<double> ClusterLogProbability(const MeaningCluster& cluster,
                                             const SampleSet& set,
                                             const EntropyConfig& config);

// Checks that `clusters` partitions {0, ..., num_samples - 1} and that each
// representative is a member.
absl::Status ValidatePartition(std::span<const MeaningCluster> clusters,
                               int num_samples);

absl::StatusOr<double> SemanticEntropy(const SampleSet& set,
                                       std::span<const MeaningCluster> clusters,
                                       const EntropyConfig& config);

// Fills MeaningCluster::log_prob for every cluster.
absl::Status AttachClusterLogProbabilities(const SampleSet& set,
                                           const EntropyConfig& config,
                                           std::vector<MeaningCluster>* clusters);

// PE, NPE, SE and per-sequence entropies (normalized per
// config.length_normalize) for one set.
absl::StatusOr<UncertaintyReport> ComputeUncertaintyReport(
    const SampleSet& set, std::span<const MeaningCluster> clusters,
    const EntropyConfig& config, OracleKind oracle);

}  // namespace uqkit

#endif  // UQKIT_ENTROPY_H_
