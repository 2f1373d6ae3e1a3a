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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "absl/container/flat_hash_map.h"
#include "benchmark/benchmark.h"
#include "uqkit/clustering.h"
#include "uqkit/decoding.h"
#include "uqkit/entropy.h"
#include "uqkit/harness.h"
#include "uqkit/records.h"

namespace uqkit {
namespace {

SampleSet RandomSampleSet(int m, int tokens, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lp(-6.0, -1e-3);
  std::uniform_int_distribution<int> word(0, 3);
  SampleSet set;
  set.query = "q";
  for (int i = 0; i < m; ++i) {
    GenerationSample sample;
    sample.text = "answer " + std::to_string(word(rng));
    for (int t = 0; t < tokens; ++t) {
      sample.tokens.push_back({"t", t, lp(rng)});
    }
    set.samples.push_back(std::move(sample));
  }
  return set;
}

void BM_ComputeUncertaintyReport(benchmark::State& state) {
  const SampleSet set = RandomSampleSet(static_cast<int>(state.range(0)), 16, 1);
  ExactMatchOracle oracle;
  EntropyConfig config;
  for (auto _ : state) {
    auto analysis = AnalyzeSampleSet(set, oracle, config);
    benchmark::DoNotOptimize(analysis);
  }
}
BENCHMARK(BM_ComputeUncertaintyReport)->Arg(5)->Arg(20)->Arg(100);

void BM_LogSumExp(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal(0.0, 10.0);
  std::vector<double> values(state.range(0));
  for (double& v : values) v = normal(rng);
  for (auto _ : state) benchmark::DoNotOptimize(LogSumExp(values));
}
BENCHMARK(BM_LogSumExp)->Arg(8)->Arg(1024);

LookupTableModel RandomModel(int vocab, int depth, uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  std::vector<std::string> tokens;
  for (int i = 0; i < vocab; ++i) tokens.push_back("w" + std::to_string(i));
  absl::flat_hash_map<std::string, std::vector<double>> table;
  std::vector<std::vector<int>> frontier = {{}};
  for (int d = 0; d < depth; ++d) {
    std::vector<std::vector<int>> next;
    for (const auto& prefix : frontier) {
      std::vector<double> row(vocab);
      double sum = 0;
      for (double& p : row) sum += (p = gamma(rng));
      for (double& p : row) p /= sum;
      table[LookupTableModel::PrefixKey(prefix)] = row;
      for (int t = 0; t < vocab - 1; ++t) {
        auto child = prefix;
        child.push_back(t);
        next.push_back(std::move(child));
      }
    }
    frontier = std::move(next);
  }
  return *LookupTableModel::Create(tokens, vocab - 1, table);
}

void BM_SampleDecode(benchmark::State& state) {
  const LookupTableModel model = RandomModel(5, 4, 3);
  DecodingConfig config;
  config.method = DecodingMethod::kTopP;
  config.top_p = 0.9;
  config.num_return_sequences = static_cast<int>(state.range(0));
  config.max_tokens = 4;
  for (auto _ : state) {
    auto set = Decode(model, "p", config);
    benchmark::DoNotOptimize(set);
  }
}
BENCHMARK(BM_SampleDecode)->Arg(5)->Arg(100);

void BM_BeamSearch(benchmark::State& state) {
  const LookupTableModel model = RandomModel(5, 4, 4);
  DecodingConfig config;
  config.method = DecodingMethod::kBeam;
  config.beam_width = static_cast<int>(state.range(0));
  config.num_return_sequences = 1;
  config.max_tokens = 4;
  for (auto _ : state) {
    auto set = Decode(model, "p", config);
    benchmark::DoNotOptimize(set);
  }
}
BENCHMARK(BM_BeamSearch)->Arg(1)->Arg(3)->Arg(10);

void BM_Auroc(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<double> scores(state.range(0));
  std::vector<bool> positive(scores.size());
  for (size_t i = 0; i < scores.size(); ++i) {
    scores[i] = std::round(uniform(rng) * 50) / 50;
    positive[i] = uniform(rng) < 0.4;
  }
  for (auto _ : state) {
    auto result = Auroc(scores, positive);
    benchmark::DoNotOptimize(result);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Auroc)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

}  // namespace
}  // namespace uqkit

BENCHMARK_MAIN();
