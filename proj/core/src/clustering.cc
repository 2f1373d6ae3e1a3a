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

#include "uqkit/clustering.h"

#include <algorithm>
#include <numeric>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "unicode/locid.h"
#include "unicode/normalizer2.h"
#include "unicode/uchar.h"
#include "unicode/unistr.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

bool IsTerminalPunctuation(UChar32 c) {
  return c == '.' || c == ',' || c == ';' || c == ':' || c == '!' || c == '?';
}

}  // namespace

std::string NormalizeForMatch(std::string_view text) {
  icu::UnicodeString input = icu::UnicodeString::fromUTF8(
      icu::StringPiece(text.data(), static_cast<int32_t>(text.size())));
  input.toLower(icu::Locale::getRoot());
  UErrorCode error = U_ZERO_ERROR;
  const icu::Normalizer2* nfc = icu::Normalizer2::getNFCInstance(error);
  if (U_SUCCESS(error)) {
    icu::UnicodeString normalized = nfc->normalize(input, error);
    if (U_SUCCESS(error)) input = std::move(normalized);
  }

  // Trim and collapse whitespace runs.
  icu::UnicodeString collapsed;
  bool pending_space = false;
  for (int32_t i = 0; i < input.length();) {
    const UChar32 c = input.char32At(i);
    i += U16_LENGTH(c);
    if (u_isUWhiteSpace(c)) {
      pending_space = !collapsed.isEmpty();
      continue;
    }
    if (pending_space) collapsed.append(static_cast<UChar>(' '));
    pending_space = false;
    collapsed.append(c);
  }

  int32_t end = collapsed.length();
  while (end > 0) {
    const UChar c = collapsed.charAt(end - 1);
    if (IsTerminalPunctuation(c) || c == ' ') {
      --end;
    } else {
      break;
    }
  }
  collapsed.truncate(end);

  std::string out;
  collapsed.toUTF8String(out);
  return out;
}

std::string_view ToString(NliLabel label) {
  switch (label) {
    case NliLabel::kEntailment:
      return "entailment";
    case NliLabel::kNeutral:
      return "neutral";
    case NliLabel::kContradiction:
      return "contradiction";
  }
  return "neutral";
}

absl::StatusOr<NliLabel> ParseNliLabel(std::string_view name) {
  const std::string lower = absl::AsciiStrToLower(AbslView(name));
  if (lower == "entailment") return NliLabel::kEntailment;
  if (lower == "neutral") return NliLabel::kNeutral;
  if (lower == "contradiction") return NliLabel::kContradiction;
  return absl::InvalidArgumentError(
      StrCat("unknown entailment label '", name, "'"));
}

std::pair<std::string, std::string> EquivalenceCache::Key(std::string_view a,
                                                          std::string_view b) {
  if (b < a) std::swap(a, b);
  return {std::string(a), std::string(b)};
}

std::optional<bool> EquivalenceCache::Lookup(std::string_view a,
                                             std::string_view b) const {
  absl::MutexLock lock(&mu_);
  auto it = verdicts_.find(Key(a, b));
  if (it == verdicts_.end()) return std::nullopt;
  return it->second;
}

void EquivalenceCache::Insert(std::string_view a, std::string_view b,
                              bool equivalent) {
  absl::MutexLock lock(&mu_);
  verdicts_.insert_or_assign(Key(a, b), equivalent);
}

size_t EquivalenceCache::size() const {
  absl::MutexLock lock(&mu_);
  return verdicts_.size();
}

absl::StatusOr<bool> BidirectionalEntailment(std::string_view a,
                                             std::string_view b,
                                             EntailmentClient& client,
                                             EquivalenceCache* cache) {
  if (cache != nullptr) {
    if (std::optional<bool> hit = cache->Lookup(a, b); hit.has_value()) {
      return *hit;
    }
  }
  UQKIT_ASSIGN_OR_RETURN(NliLabel forward, client.Classify(a, b));
  bool equivalent = false;
  if (forward == NliLabel::kEntailment) {
    UQKIT_ASSIGN_OR_RETURN(NliLabel backward, client.Classify(b, a));
    equivalent = backward == NliLabel::kEntailment;
  }
  if (cache != nullptr) cache->Insert(a, b, equivalent);
  return equivalent;
}

absl::StatusOr<bool> ExactMatchOracle::Equivalent(std::string_view a,
                                                  std::string_view b) const {
  return NormalizeForMatch(a) == NormalizeForMatch(b);
}

absl::StatusOr<bool> EntailmentOracle::Equivalent(std::string_view a,
                                                  std::string_view b) const {
  if (a == b) return true;
  return BidirectionalEntailment(a, b, *client_, cache_.get());
}

absl::StatusOr<std::unique_ptr<EquivalenceOracle>> MakeLocalOracle(
    OracleKind kind) {
  switch (kind) {
    case OracleKind::kExactNormalized:
      return std::make_unique<ExactMatchOracle>();
    case OracleKind::kAlwaysDistinct:
      return std::make_unique<AlwaysDistinctOracle>();
    case OracleKind::kAlwaysEqual:
      return std::make_unique<AlwaysEqualOracle>();
    case OracleKind::kBidirectionalEntailment:
      break;
  }
  return absl::InvalidArgumentError(
      "the entailment oracle needs an entailment client");
}

absl::StatusOr<std::vector<MeaningCluster>> GreedyCluster(
    const SampleSet& set, const EquivalenceOracle& oracle,
    ClusteringStats* stats) {
  if (set.samples.empty()) {
    return absl::InvalidArgumentError("sample set is empty");
  }
  const int m = set.size();
  std::vector<double> loglik(m);
  for (int i = 0; i < m; ++i) loglik[i] = set.samples[i].LogLikelihood();
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return loglik[a] > loglik[b]; });

  // Verdicts for this call, keyed by unordered text pair.
  absl::flat_hash_map<std::pair<std::string_view, std::string_view>, bool>
      asked;
  auto equivalent = [&](std::string_view a,
                        std::string_view b) -> absl::StatusOr<bool> {
    if (b < a) std::swap(a, b);
    if (auto it = asked.find({a, b}); it != asked.end()) return it->second;
    if (stats != nullptr) ++stats->oracle_calls;
    absl::StatusOr<bool> verdict = oracle.Equivalent(a, b);
    if (!verdict.ok()) {
      return Annotate(verdict.status(),
                      StrCat("equivalence query failed for pair ('", a,
                                   "', '", b, "')"));
    }
    asked.emplace(std::make_pair(a, b), *verdict);
    return *verdict;
  };

  std::vector<MeaningCluster> clusters;
  for (int index : order) {
    const std::string& text = set.samples[index].text;
    bool placed = false;
    for (MeaningCluster& cluster : clusters) {
      UQKIT_ASSIGN_OR_RETURN(
          bool same,
          equivalent(text, set.samples[cluster.representative_index].text));
      if (same) {
        cluster.member_indices.push_back(index);
        placed = true;
        break;
      }
    }
    if (!placed) {
      MeaningCluster cluster;
      cluster.member_indices.push_back(index);
      cluster.representative_index = index;
      clusters.push_back(std::move(cluster));
    }
  }
  for (MeaningCluster& cluster : clusters) {
    std::sort(cluster.member_indices.begin(), cluster.member_indices.end());
  }
  return clusters;
}

}  // namespace uqkit
