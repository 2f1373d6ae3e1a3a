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

#include <atomic>
#include <map>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "test_util.h"
#include "uqkit/clustering.h"
#include "uqkit/entropy.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;
using testing::Sample;
using testing::Set;

// Answers from a table of directed (premise, hypothesis) pairs; everything
// else is neutral.
class ScriptedClient : public EntailmentClient {
 public:
  void Entails(const std::string& a, const std::string& b) {
    entails_.insert({a, b});
  }
  void Fail(const std::string& a) { failing_ = a; }

  absl::StatusOr<NliLabel> Classify(std::string_view premise,
                                    std::string_view hypothesis) override {
    ++calls;
    if (premise == failing_ || hypothesis == failing_) {
      return absl::UnavailableError("classifier down");
    }
    if (entails_.count({std::string(premise), std::string(hypothesis)})) {
      return NliLabel::kEntailment;
    }
    return NliLabel::kNeutral;
  }

  std::atomic<int> calls{0};

 private:
  std::set<std::pair<std::string, std::string>> entails_;
  std::string failing_ = "\x01";
};

class CountingOracle : public EquivalenceOracle {
 public:
  explicit CountingOracle(std::function<bool(std::string_view, std::string_view)> f)
      : f_(std::move(f)) {}
  OracleKind kind() const override { return OracleKind::kExactNormalized; }
  absl::StatusOr<bool> Equivalent(std::string_view a,
                                  std::string_view b) const override {
    ++calls;
    return f_(a, b);
  }
  mutable int calls = 0;

 private:
  std::function<bool(std::string_view, std::string_view)> f_;
};

TEST(NormalizeForMatchTest, CaseWhitespaceAndTrailingPunctuation) {
  EXPECT_EQ(NormalizeForMatch("  Tokyo.  "), "tokyo");
  EXPECT_EQ(NormalizeForMatch("TOKYO!?"), "tokyo");
  EXPECT_EQ(NormalizeForMatch("New \t  York\n"), "new york");
  EXPECT_EQ(NormalizeForMatch("Dr. Who"), "dr. who");
  EXPECT_EQ(NormalizeForMatch("it's 3.5"), "it's 3.5");
  EXPECT_EQ(NormalizeForMatch(""), "");
  EXPECT_EQ(NormalizeForMatch("..."), "");
}

TEST(NormalizeForMatchTest, UnicodeNfcAndLowercase) {
  // Decomposed e + combining acute versus precomposed.
  EXPECT_EQ(NormalizeForMatch("Caf\x65\xCC\x81"), NormalizeForMatch("CAF\xC3\x89"));
  EXPECT_EQ(NormalizeForMatch("\xC3\x9C" "ber"), "\xC3\xBC" "ber");
  // No-break space collapses like an ASCII space.
  EXPECT_EQ(NormalizeForMatch("a\xC2\xA0\xC2\xA0" "b"), "a b");
}

TEST(NliLabelTest, ParsesCaseInsensitively) {
  EXPECT_EQ(*ParseNliLabel("entailment"), NliLabel::kEntailment);
  EXPECT_EQ(*ParseNliLabel("ENTAILMENT"), NliLabel::kEntailment);
  EXPECT_EQ(*ParseNliLabel("Contradiction"), NliLabel::kContradiction);
  EXPECT_EQ(*ParseNliLabel("neutral"), NliLabel::kNeutral);
  EXPECT_FALSE(ParseNliLabel("maybe").ok());
}

TEST(BidirectionalEntailmentTest, NeedsBothDirections) {
  ScriptedClient client;
  client.Entails("Tokyo", "It is Tokyo");
  EXPECT_FALSE(*BidirectionalEntailment("Tokyo", "It is Tokyo", client));
  client.Entails("It is Tokyo", "Tokyo");
  EXPECT_TRUE(*BidirectionalEntailment("Tokyo", "It is Tokyo", client));
}

TEST(BidirectionalEntailmentTest, SkipsBackwardCallWhenForwardFails) {
  ScriptedClient client;
  EXPECT_FALSE(*BidirectionalEntailment("a", "b", client));
  EXPECT_EQ(client.calls, 1);
}

TEST(BidirectionalEntailmentTest, CacheIsSymmetric) {
  ScriptedClient client;
  client.Entails("a", "b");
  client.Entails("b", "a");
  EquivalenceCache cache;
  EXPECT_TRUE(*BidirectionalEntailment("a", "b", client, &cache));
  const int calls = client.calls;
  EXPECT_TRUE(*BidirectionalEntailment("b", "a", client, &cache));
  EXPECT_EQ(client.calls, calls);
  EXPECT_EQ(cache.size(), 1u);
}

TEST(BidirectionalEntailmentTest, ErrorsPropagate) {
  ScriptedClient client;
  client.Fail("x");
  absl::StatusOr<bool> verdict = BidirectionalEntailment("x", "y", client);
  EXPECT_EQ(verdict.status().code(), absl::StatusCode::kUnavailable);
}

TEST(EquivalenceCacheTest, ConcurrentReadersAndWriters) {
  EquivalenceCache cache;
  std::vector<std::thread> threads;
  for (int t = 0; t < 8; ++t) {
    threads.emplace_back([&cache, t] {
      for (int i = 0; i < 2000; ++i) {
        const std::string a = std::to_string(i);
        const std::string b = std::to_string(i + 1);
        cache.Insert(a, b, i % 2 == 0);
        std::optional<bool> got = cache.Lookup(b, a);
        ASSERT_TRUE(got.has_value());
        ASSERT_EQ(*got, i % 2 == 0);
      }
      (void)t;
    });
  }
  for (std::thread& thread : threads) thread.join();
  EXPECT_EQ(cache.size(), 2000u);
}

TEST(GreedyClusterTest, TokyoParaphrasesMerge) {
  auto client = std::make_shared<ScriptedClient>();
  client->Entails("Tokyo", "It is Tokyo");
  client->Entails("It is Tokyo", "Tokyo");
  EntailmentOracle oracle(client, std::make_shared<EquivalenceCache>());
  const SampleSet set = Set({Sample("It is Tokyo", {std::log(0.3)}),
                             Sample("Tokyo", {std::log(0.6)}),
                             Sample("Kyoto", {std::log(0.05)})});
  absl::StatusOr<std::vector<MeaningCluster>> clusters =
      GreedyCluster(set, oracle);
  ASSERT_TRUE(clusters.ok()) << clusters.status();
  ASSERT_EQ(clusters->size(), 2u);
  EXPECT_THAT((*clusters)[0].member_indices, ElementsAre(0, 1));
  EXPECT_EQ((*clusters)[0].representative_index, 1);
  EXPECT_THAT((*clusters)[1].member_indices, ElementsAre(2));
}

TEST(GreedyClusterTest, ExactOracleNormalizes) {
  ExactMatchOracle oracle;
  const SampleSet set = Set({Sample("Paris.", {-0.1}), Sample("paris", {-0.2}),
                             Sample(" PARIS ", {-0.3}), Sample("Lyon", {-1})});
  absl::StatusOr<std::vector<MeaningCluster>> clusters =
      GreedyCluster(set, oracle);
  ASSERT_TRUE(clusters.ok());
  ASSERT_EQ(clusters->size(), 2u);
  EXPECT_THAT((*clusters)[0].member_indices, ElementsAre(0, 1, 2));
}

TEST(GreedyClusterTest, DegenerateOracles) {
  const SampleSet set = Set({Sample("a", {-0.1}), Sample("a", {-0.2}),
                             Sample("b", {-0.3})});
  EXPECT_EQ(GreedyCluster(set, AlwaysDistinctOracle())->size(), 3u);
  EXPECT_EQ(GreedyCluster(set, AlwaysEqualOracle())->size(), 1u);
}

TEST(GreedyClusterTest, NonTransitiveOracleFollowsLikelihoodOrder) {
  // a~b and b~c but not a~c. b is most likely, so it represents everyone.
  auto near = [](std::string_view x, std::string_view y) {
    return std::abs(x[0] - y[0]) <= 1;
  };
  CountingOracle oracle(near);
  SampleSet set = Set({Sample("a", {-2.0}), Sample("b", {-0.1}),
                       Sample("c", {-3.0})});
  EXPECT_EQ(GreedyCluster(set, oracle)->size(), 1u);
  // With a most likely, c no longer matches the representative.
  set = Set({Sample("a", {-0.1}), Sample("b", {-2.0}), Sample("c", {-3.0})});
  absl::StatusOr<std::vector<MeaningCluster>> clusters =
      GreedyCluster(set, oracle);
  ASSERT_EQ(clusters->size(), 2u);
  EXPECT_THAT((*clusters)[0].member_indices, ElementsAre(0, 1));
}

TEST(GreedyClusterTest, EachTextPairAskedOnce) {
  CountingOracle oracle(
      [](std::string_view a, std::string_view b) { return a == b; });
  const SampleSet set =
      Set({Sample("x", {-0.1}), Sample("y", {-0.2}), Sample("x", {-0.3}),
           Sample("y", {-0.4}), Sample("x", {-0.5})});
  ClusteringStats stats;
  ASSERT_EQ(GreedyCluster(set, oracle, &stats)->size(), 2u);
  // Distinct unordered pairs seen: {x,y}, {x,x}, {y,y}.
  EXPECT_EQ(oracle.calls, 3);
  EXPECT_EQ(stats.oracle_calls, 3);
}

TEST(GreedyClusterTest, OracleFailureNamesThePair) {
  auto client = std::make_shared<ScriptedClient>();
  client->Fail("Osaka");
  EntailmentOracle oracle(client, nullptr);
  const SampleSet set = Set({Sample("Tokyo", {-0.1}), Sample("Osaka", {-0.2})});
  absl::StatusOr<std::vector<MeaningCluster>> clusters =
      GreedyCluster(set, oracle);
  ASSERT_FALSE(clusters.ok());
  EXPECT_EQ(clusters.status().code(), absl::StatusCode::kUnavailable);
  EXPECT_THAT(std::string(Message(clusters.status())),
              HasSubstr("'Osaka', 'Tokyo'"));
}

TEST(GreedyClusterTest, EntailmentOracleIsReflexiveWithoutCalls) {
  auto client = std::make_shared<ScriptedClient>();
  EntailmentOracle oracle(client, nullptr);
  EXPECT_TRUE(*oracle.Equivalent("same", "same"));
  EXPECT_EQ(client->calls, 0);
}

TEST(GreedyClusterPropertyTest, AlwaysAPartition) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> m_dist(1, 12);
  std::uniform_int_distribution<int> word(0, 4);
  std::uniform_real_distribution<double> lp(-5, 0);
  std::bernoulli_distribution coin(0.4);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<GenerationSample> samples(m_dist(rng));
    for (GenerationSample& s : samples) {
      s = Sample("w" + std::to_string(word(rng)), {lp(rng)});
    }
    const SampleSet set = Set(samples);
    // Arbitrary symmetric relation, fixed per trial.
    std::map<std::pair<std::string, std::string>, bool> relation;
    CountingOracle oracle([&](std::string_view a, std::string_view b) {
      std::pair<std::string, std::string> key(a, b);
      if (key.second < key.first) std::swap(key.first, key.second);
      auto [it, inserted] = relation.emplace(key, false);
      if (inserted) it->second = a == b || coin(rng);
      return it->second;
    });
    absl::StatusOr<std::vector<MeaningCluster>> clusters =
        GreedyCluster(set, oracle);
    ASSERT_TRUE(clusters.ok());
    ASSERT_TRUE(ValidatePartition(*clusters, set.size()).ok());
    for (const MeaningCluster& cluster : *clusters) {
      // The representative is the most likely member.
      for (int i : cluster.member_indices) {
        EXPECT_LE(set.samples[i].LogLikelihood(),
                  set.samples[cluster.representative_index].LogLikelihood());
      }
    }
  }
}

}  // namespace
}  // namespace uqkit
