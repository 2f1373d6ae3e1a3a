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

// Meaning clusters: partitions a SampleSet into groups of semantically
// equivalent generations using a pluggable equivalence oracle.

#ifndef UQKIT_CLUSTERING_H_
#define UQKIT_CLUSTERING_H_

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "absl/base/thread_annotations.h"
#include "absl/container/flat_hash_map.h"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "absl/synchronization/mutex.h"
#include "uqkit/records.h"

namespace uqkit {

// Lowercase, Unicode NFC, trim, collapse whitespace runs to one space and drop
// trailing `.,;:!?`.
std::string NormalizeForMatch(std::string_view text);

enum class NliLabel { kEntailment, kNeutral, kContradiction };

std::string_view ToString(NliLabel label);
// Case-insensitive. Anything but the three labels is an error.
absl::StatusOr<NliLabel> ParseNliLabel(std::string_view name);

// Remote or local natural-language-inference classifier. Implementations
// must be safe to call from several threads.
class EntailmentClient {
 public:
  virtual ~EntailmentClient() = default;
  virtual absl::StatusOr<NliLabel> Classify(std::string_view premise,
                                            std::string_view hypothesis) = 0;
};

// Process-wide memo of equivalence verdicts keyed by unordered text pair.
class EquivalenceCache {
 public:
  std::optional<bool> Lookup(std::string_view a, std::string_view b) const;
  void Insert(std::string_view a, std::string_view b, bool equivalent);
  size_t size() const;

 private:
  static std::pair<std::string, std::string> Key(std::string_view a,
                                                 std::string_view b);

  mutable absl::Mutex mu_;
  absl::flat_hash_map<std::pair<std::string, std::string>, bool> verdicts_
      ABSL_GUARDED_BY(mu_);
};

// True iff `a` entails `b` and `b` entails `a`. Verdicts are memoized in
// `cache` when given; classifier failures are returned, never replaced by a
// fallback.
absl::StatusOr<bool> BidirectionalEntailment(std::string_view a,
                                             std::string_view b,
                                             EntailmentClient& client,
                                             EquivalenceCache* cache = nullptr);

class EquivalenceOracle {
 public:
  virtual ~EquivalenceOracle() = default;
  virtual OracleKind kind() const = 0;
  // Reflexive except for AlwaysDistinctOracle. Called from any thread.
  virtual absl::StatusOr<bool> Equivalent(std::string_view a,
                                          std::string_view b) const = 0;
};

class ExactMatchOracle final : public EquivalenceOracle {
 public:
  OracleKind kind() const override { return OracleKind::kExactNormalized; }
  absl::StatusOr<bool> Equivalent(std::string_view a,
                                  std::string_view b) const override;
};

// Never equivalent, not even for identical texts; yields all-singleton
// partitions.
class AlwaysDistinctOracle final : public EquivalenceOracle {
 public:
  OracleKind kind() const override { return OracleKind::kAlwaysDistinct; }
  absl::StatusOr<bool> Equivalent(std::string_view,
                                  std::string_view) const override {
    return false;
  }
};

class AlwaysEqualOracle final : public EquivalenceOracle {
 public:
  OracleKind kind() const override { return OracleKind::kAlwaysEqual; }
  absl::StatusOr<bool> Equivalent(std::string_view,
                                  std::string_view) const override {
    return true;
  }
};

class EntailmentOracle final : public EquivalenceOracle {
 public:
  EntailmentOracle(std::shared_ptr<EntailmentClient> client,
                   std::shared_ptr<EquivalenceCache> cache)
      : client_(std::move(client)), cache_(std::move(cache)) {}

  OracleKind kind() const override {
    return OracleKind::kBidirectionalEntailment;
  }
  absl::StatusOr<bool> Equivalent(std::string_view a,
                                  std::string_view b) const override;

 private:
  std::shared_ptr<EntailmentClient> client_;
  std::shared_ptr<EquivalenceCache> cache_;
};

// Builds the oracle for a stateless kind. Entailment needs a client and is
// rejected here; construct EntailmentOracle directly.
absl::StatusOr<std::unique_ptr<EquivalenceOracle>> MakeLocalOracle(
    OracleKind kind);

struct ClusteringStats {
  int64_t oracle_calls = 0;
};

// Greedy clustering. Samples are visited by descending log-likelihood (ties
// by index); each joins the first existing cluster whose representative it
// is equivalent to, or opens a new one. Every unordered text pair is sent to
// the oracle at most once. Clusters are returned in creation order with ascending member
// indices; the representative is the member with the highest likelihood.
// An oracle failure aborts the whole call.
absl::StatusOr<std::vector<MeaningCluster>> GreedyCluster(
    const SampleSet& set, const EquivalenceOracle& oracle,
    ClusteringStats* stats = nullptr);

}  // namespace uqkit

#endif  // UQKIT_CLUSTERING_H_
