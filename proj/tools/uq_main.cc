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

// uq: command-line front end for uqkit.
//
//   uq ingest   --schema <benchmark|evaluated|sample_set> [--strict] <path>
//   uq score    --variant <v> [--normalize] --input <f> [--output <f>]
//   uq cluster  --oracle <exact|entailment> [--entailment-url <u>] --input <f>
//   uq generate --model-spec <f> --method <m> --prompt <text> --seed <n>
//   uq eval     --benchmark <f> --generations <f> --oracle <o> --out-dir <d>
//   uq serve    [--port <n>] [--backend-url <u>] [--model-spec <f>] ...
//
// Exit status: 0 on success, 1 on a data or runtime error, 2 on bad usage.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "uqkit/clustering.h"
#include "uqkit/decoding.h"
#include "uqkit/entropy.h"
#include "uqkit/harness.h"
#include "uqkit/json_codec.h"
#include "uqkit/records.h"
#include "uqkit/service.h"
#include "uqkit/status.h"

namespace uqkit {
namespace {

struct OracleFlags {
  std::string oracle = "exact";
  std::string entailment_url;
};

struct EntropyFlags {
  std::string variant = "token_weighted";
  bool normalize = false;
  bool renormalize = false;
  bool cluster_length_normalize = false;
};

void AddOracleFlags(CLI::App* cmd, OracleFlags* flags) {
  cmd->add_option("--oracle", flags->oracle,
                  "exact | entailment | always_distinct | always_equal")
      ->capture_default_str();
  cmd->add_option("--entailment-url", flags->entailment_url,
                  "Base URL of the entailment classifier")
      ->envname("UQ_ENTAILMENT_URL");
}

void AddEntropyFlags(CLI::App* cmd, EntropyFlags* flags) {
  cmd->add_option("--variant", flags->variant,
                  "token_weighted | log_likelihood")
      ->capture_default_str();
  cmd->add_flag("--normalize", flags->normalize,
                "Divide sequence entropies by token count");
  cmd->add_flag("--renormalize", flags->renormalize,
                "Renormalize sample probabilities before clustering sums");
  cmd->add_flag("--cluster-length-normalize", flags->cluster_length_normalize,
                "Use length-normalized sequence scores inside clusters");
}

absl::StatusOr<EntropyConfig> ToEntropyConfig(const EntropyFlags& flags) {
  EntropyConfig config;
  UQKIT_ASSIGN_OR_RETURN(config.variant, ParseEntropyVariant(flags.variant));
  config.length_normalize = flags.normalize;
  config.renormalize_sample_probs = flags.renormalize;
  config.length_normalized_cluster_scores = flags.cluster_length_normalize;
  return config;
}

absl::StatusOr<std::unique_ptr<EquivalenceOracle>> ToOracle(
    const OracleFlags& flags) {
  UQKIT_ASSIGN_OR_RETURN(OracleKind kind, ParseOracleKind(flags.oracle));
  if (kind != OracleKind::kBidirectionalEntailment) {
    return MakeLocalOracle(kind);
  }
  if (flags.entailment_url.empty()) {
    return absl::InvalidArgumentError(
        "--oracle entailment needs --entailment-url or UQ_ENTAILMENT_URL");
  }
  return std::make_unique<EntailmentOracle>(
      std::make_shared<HttpEntailmentClient>(
          HttpEndpoint{flags.entailment_url}),
      std::make_shared<EquivalenceCache>());
}

// Opens `path` for reading; "-" is stdin.
class Input {
 public:
  absl::Status Open(const std::string& path) {
    if (path == "-") return absl::OkStatus();
    file_.open(path);
    if (!file_) return absl::NotFoundError(StrCat("cannot open ", path));
    return absl::OkStatus();
  }
  std::istream& stream() { return file_.is_open() ? file_ : std::cin; }

 private:
  std::ifstream file_;
};

class Output {
 public:
  absl::Status Open(const std::string& path) {
    if (path.empty() || path == "-") return absl::OkStatus();
    file_.open(path, std::ios::trunc);
    if (!file_) return absl::PermissionDeniedError(StrCat("cannot write ", path));
    return absl::OkStatus();
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

template <typename T>
absl::Status CountRecords(std::istream& in, bool strict) {
  JsonlReader<T> reader(in, JsonlOptions{.strict = strict});
  while (true) {
    absl::StatusOr<std::optional<T>> next = reader.Next();
    if (!next.ok()) {
      std::cout << "records: " << reader.records_read() << "\n"
                << "errors: " << reader.skipped() + 1 << "\n";
      return next.status();
    }
    if (!next->has_value()) break;
  }
  std::cout << "records: " << reader.records_read() << "\n"
            << "errors: " << reader.skipped() << "\n";
  if (reader.skipped() > 0) {
    return absl::InvalidArgumentError(
        StrCat(reader.skipped(), " invalid line(s) skipped"));
  }
  return absl::OkStatus();
}

struct IngestFlags {
  std::string schema;
  bool strict = false;
  std::string path;
};

absl::Status RunIngest(const IngestFlags& flags) {
  UQKIT_ASSIGN_OR_RETURN(RecordSchema schema, ParseRecordSchema(flags.schema));
  Input input;
  UQKIT_RETURN_IF_ERROR(input.Open(flags.path));
  switch (schema) {
    case RecordSchema::kBenchmark:
      return CountRecords<BenchmarkRecord>(input.stream(), flags.strict);
    case RecordSchema::kEvaluated:
      return CountRecords<EvaluatedRecord>(input.stream(), flags.strict);
    case RecordSchema::kSampleSet:
      return CountRecords<SampleSet>(input.stream(), flags.strict);
  }
  return absl::InternalError("unhandled schema");
}

struct ScoreFlags {
  EntropyFlags entropy;
  OracleFlags oracle;
  bool dedup_exact = false;
  std::string input;
  std::string output;
};

absl::Status RunScore(const ScoreFlags& flags) {
  UQKIT_ASSIGN_OR_RETURN(EntropyConfig config, ToEntropyConfig(flags.entropy));
  UQKIT_ASSIGN_OR_RETURN(std::unique_ptr<EquivalenceOracle> oracle,
                         ToOracle(flags.oracle));
  Input input;
  UQKIT_RETURN_IF_ERROR(input.Open(flags.input));
  Output output;
  UQKIT_RETURN_IF_ERROR(output.Open(flags.output));
  JsonlReader<SampleSet> reader(input.stream());
  while (true) {
    UQKIT_ASSIGN_OR_RETURN(std::optional<SampleSet> set, reader.Next());
    if (!set.has_value()) break;
    if (flags.dedup_exact) *set = DedupExactText(*set);
    absl::StatusOr<SampleSetAnalysis> analysis =
        AnalyzeSampleSet(*set, *oracle, config);
    if (!analysis.ok()) {
      return Annotate(analysis.status(),
                      StrCat("line ", reader.line_number()));
    }
    UQKIT_ASSIGN_OR_RETURN(std::string line,
                           SerializeRecord(analysis->report));
    output.stream() << line << '\n';
  }
  output.stream().flush();
  return absl::OkStatus();
}

struct ClusterFlags {
  OracleFlags oracle;
  std::string input;
};

absl::Status RunCluster(const ClusterFlags& flags) {
  UQKIT_ASSIGN_OR_RETURN(std::unique_ptr<EquivalenceOracle> oracle,
                         ToOracle(flags.oracle));
  Input input;
  UQKIT_RETURN_IF_ERROR(input.Open(flags.input));
  JsonlReader<SampleSet> reader(input.stream());
  while (true) {
    UQKIT_ASSIGN_OR_RETURN(std::optional<SampleSet> set, reader.Next());
    if (!set.has_value()) break;
    ClusteringStats stats;
    absl::StatusOr<std::vector<MeaningCluster>> clusters =
        GreedyCluster(*set, *oracle, &stats);
    if (!clusters.ok()) {
      return Annotate(clusters.status(),
                      StrCat("line ", reader.line_number()));
    }
    UQKIT_RETURN_IF_ERROR(AttachClusterLogProbabilities(*set, EntropyConfig{},
                                                        &*clusters));
    Json line = Json::object();
    line["query"] = set->query;
    line["oracle"] = ToString(oracle->kind());
    line["num_clusters"] = clusters->size();
    line["oracle_calls"] = stats.oracle_calls;
    line["clusters"] = ClustersJson(*set, *clusters);
    UQKIT_ASSIGN_OR_RETURN(std::string text, DumpJson(line));
    std::cout << text << '\n';
  }
  return absl::OkStatus();
}

struct GenerateFlags {
  std::string model_spec;
  std::string backend_url;
  int64_t timeout_ms = kDefaultBackendTimeout.count();
  std::string method = "temperature";
  std::string prompt;
  DecodingConfig decoding;
};

absl::Status RunGenerate(GenerateFlags flags) {
  UQKIT_ASSIGN_OR_RETURN(flags.decoding.method,
                         ParseDecodingMethod(flags.method));
  UQKIT_RETURN_IF_ERROR(Validate(flags.decoding));
  absl::StatusOr<SampleSet> set;
  if (!flags.model_spec.empty()) {
    UQKIT_ASSIGN_OR_RETURN(LookupTableModel model,
                           LookupTableModel::FromFile(flags.model_spec));
    set = Decode(model, flags.prompt, flags.decoding);
  } else if (!flags.backend_url.empty()) {
    UQKIT_ASSIGN_OR_RETURN(
        std::unique_ptr<RemoteLogitProvider> provider,
        RemoteLogitProvider::Connect(
            {flags.backend_url, std::chrono::milliseconds(flags.timeout_ms)},
            flags.prompt));
    set = Decode(*provider, flags.prompt, flags.decoding);
  } else {
    return absl::InvalidArgumentError(
        "generate needs --model-spec or --backend-url");
  }
  if (!set.ok()) return set.status();
  UQKIT_ASSIGN_OR_RETURN(std::string line, SerializeRecord(*set));
  std::cout << line << '\n';
  return absl::OkStatus();
}

struct EvalFlags {
  EntropyFlags entropy;
  OracleFlags oracle;
  bool dedup_exact = false;
  bool lenient = false;
  std::string model_id;
  std::string benchmark;
  std::string generations;
  std::string out_dir;
};

absl::Status RunEval(const EvalFlags& flags) {
  EvalOptions options;
  UQKIT_ASSIGN_OR_RETURN(options.entropy, ToEntropyConfig(flags.entropy));
  options.jsonl.strict = !flags.lenient;
  options.dedup_exact = flags.dedup_exact;
  if (!flags.model_id.empty()) options.model_id = flags.model_id;
  UQKIT_ASSIGN_OR_RETURN(std::unique_ptr<EquivalenceOracle> oracle,
                         ToOracle(flags.oracle));
  std::ifstream benchmark(flags.benchmark);
  if (!benchmark) return absl::NotFoundError(StrCat("cannot open ", flags.benchmark));
  std::ifstream generations(flags.generations);
  if (!generations) {
    return absl::NotFoundError(StrCat("cannot open ", flags.generations));
  }
  UQKIT_ASSIGN_OR_RETURN(
      EvaluationReports reports,
      RunEvaluation(benchmark, generations, *oracle, options, flags.out_dir));
  for (const AccuracyGroupReport& group : reports.groups) {
    std::cout << CompareGroups(group) << '\n';
  }
  for (const CalibrationReport& cal : reports.calibration) {
    std::cout << "auroc[" << ToString(cal.measure) << "] = "
              << FormatReal(cal.auroc)
              << (cal.one_class_warning ? " (one class only)" : "") << '\n';
  }
  return absl::OkStatus();
}

struct ServeFlags {
  ServerOptions options;
  std::string backend_url;
  std::string entailment_url;
  std::string model_spec;
  std::string static_dir;
  std::string log_dir;
  int64_t timeout_ms = kDefaultBackendTimeout.count();
};

absl::Status RunServe(ServeFlags flags) {
  ServerOptions& options = flags.options;
  auto set = [](const std::string& value, std::optional<std::string>* out) {
    if (!value.empty()) *out = value;
  };
  set(flags.backend_url, &options.backend_url);
  set(flags.entailment_url, &options.entailment_url);
  set(flags.model_spec, &options.model_spec);
  set(flags.static_dir, &options.static_dir);
  set(flags.log_dir, &options.log_dir);
  options.backend_timeout = std::chrono::milliseconds(flags.timeout_ms);
  UQKIT_ASSIGN_OR_RETURN(std::unique_ptr<UqServer> server,
                         UqServer::Create(options));
  std::cerr << "uq: listening on " << options.host << ":" << options.port
            << std::endl;
  return server->Run();
}

int Report(const absl::Status& status) {
  if (status.ok()) return 0;
  std::cerr << "uq: " << Message(status) << '\n';
  return 1;
}

int Main(int argc, char** argv) {
  CLI::App app{"Uncertainty scoring for generated text"};
  app.require_subcommand(1);
  app.set_version_flag("--version", UQKIT_VERSION);

  IngestFlags ingest;
  CLI::App* ingest_cmd = app.add_subcommand("ingest", "Validate a JSONL file");
  ingest_cmd->add_option("--schema", ingest.schema,
                         "benchmark | evaluated | sample_set")
      ->required();
  ingest_cmd->add_flag("--strict", ingest.strict, "Stop at the first bad line");
  ingest_cmd->add_option("path", ingest.path, "JSONL file, - for stdin")
      ->required();

  ScoreFlags score;
  CLI::App* score_cmd =
      app.add_subcommand("score", "Uncertainty report per SampleSet");
  AddEntropyFlags(score_cmd, &score.entropy);
  AddOracleFlags(score_cmd, &score.oracle);
  score_cmd->add_flag("--dedup-exact", score.dedup_exact,
                      "Drop samples whose text repeats exactly");
  score_cmd->add_option("--input", score.input, "SampleSet JSONL, - for stdin")
      ->required();
  score_cmd->add_option("--output", score.output, "Report JSONL (default stdout)");

  ClusterFlags cluster;
  CLI::App* cluster_cmd =
      app.add_subcommand("cluster", "Meaning clusters per SampleSet");
  AddOracleFlags(cluster_cmd, &cluster.oracle);
  cluster_cmd->add_option("--input", cluster.input, "SampleSet JSONL")
      ->required();

  GenerateFlags generate;
  CLI::App* generate_cmd =
      app.add_subcommand("generate", "Decode one SampleSet");
  generate_cmd->add_option("--model-spec", generate.model_spec,
                           "Lookup-table model JSON");
  generate_cmd->add_option("--backend-url", generate.backend_url,
                           "Remote logit backend")
      ->envname("UQ_BACKEND_URL");
  generate_cmd->add_option("--backend-timeout-ms", generate.timeout_ms)
      ->capture_default_str();
  generate_cmd->add_option("--method", generate.method,
                           "temperature | top_p | beam")
      ->capture_default_str();
  generate_cmd->add_option("--prompt", generate.prompt)->required();
  generate_cmd->add_option("--seed", generate.decoding.seed)
      ->capture_default_str();
  generate_cmd->add_option("--temperature", generate.decoding.temperature)
      ->capture_default_str();
  generate_cmd->add_option("--top-p", generate.decoding.top_p)
      ->capture_default_str();
  generate_cmd->add_option("--beam-width", generate.decoding.beam_width)
      ->capture_default_str();
  generate_cmd
      ->add_option("--num-return-sequences",
                   generate.decoding.num_return_sequences)
      ->capture_default_str();
  generate_cmd->add_option("--max-tokens", generate.decoding.max_tokens)
      ->capture_default_str();

  EvalFlags eval;
  CLI::App* eval_cmd =
      app.add_subcommand("eval", "Score a benchmark and export reports");
  AddEntropyFlags(eval_cmd, &eval.entropy);
  AddOracleFlags(eval_cmd, &eval.oracle);
  eval_cmd->add_flag("--dedup-exact", eval.dedup_exact,
                     "Drop samples whose text repeats exactly");
  eval_cmd->add_flag("--lenient", eval.lenient, "Skip invalid lines");
  eval_cmd->add_option("--model-id", eval.model_id,
                       "Model id for the domain report (default: from generations)");
  eval_cmd->add_option("--benchmark", eval.benchmark, "BenchmarkRecord JSONL")
      ->required();
  eval_cmd->add_option("--generations", eval.generations,
                       "SampleSet JSONL, one per benchmark line")
      ->required();
  eval_cmd->add_option("--out-dir", eval.out_dir, "Directory for reports")
      ->required();

  ServeFlags serve;
  CLI::App* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve.options.host)->capture_default_str();
  serve_cmd->add_option("--port", serve.options.port)
      ->envname("UQ_PORT")
      ->capture_default_str();
  serve_cmd->add_option("--backend-url", serve.backend_url)
      ->envname("UQ_BACKEND_URL");
  serve_cmd->add_option("--entailment-url", serve.entailment_url)
      ->envname("UQ_ENTAILMENT_URL");
  serve_cmd->add_option("--model-spec", serve.model_spec,
                        "Lookup-table model JSON for in-process generation");
  serve_cmd->add_option("--backend-timeout-ms", serve.timeout_ms)
      ->capture_default_str();
  serve_cmd->add_option("--static-dir", serve.static_dir,
                        "Dashboard assets served at /");
  serve_cmd->add_option("--log-dir", serve.log_dir,
                        "Append generations to generations.jsonl here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*ingest_cmd) return Report(RunIngest(ingest));
  if (*score_cmd) return Report(RunScore(score));
  if (*cluster_cmd) return Report(RunCluster(cluster));
  if (*generate_cmd) return Report(RunGenerate(generate));
  if (*eval_cmd) return Report(RunEval(eval));
  if (*serve_cmd) return Report(RunServe(serve));
  return 2;
}

}  // namespace
}  // namespace uqkit

int main(int argc, char** argv) { return uqkit::Main(argc, argv); }
