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

// HTTP facade over generation and scoring, plus the clients for the two
// remote collaborators: a logit backend and an entailment classifier.
//
// Endpoints served by UqServer:
//   GET  /v1/health    -> {"status":"ok"}
//   GET  /v1/version   -> {"name":"uqkit","version":...}
//   POST /v1/generate  GenerateRequest -> {sample_set, report, clusters}
//   POST /v1/analyze   SampleSet -> {report, clusters}; config is taken from
//                      the query string (variant, normalize, renormalize,
//                      cluster_length_normalize, oracle, dedup_exact)
//   GET  /             dashboard assets (--static-dir) or a stub page
//
// Errors are always JSON: {"error":{"code":...,"message":...,"field":...}}.
//
// Backend wire protocol (consumed):
//   GET  {backend}/v1/vocab        -> {"vocab":[...], "stop":id,
//                                      "model_id":"..."}
//   POST {backend}/v1/next_logits  {"prefix":[ids], "prompt":"..."}
//                                  -> {"logits":[reals]}
// Entailment wire protocol (consumed):
//   POST {entail}/v1/classify  {"premise":..., "hypothesis":...}
//                              -> {"label":"entailment"|"neutral"|
//                                           "contradiction"}

#ifndef UQKIT_SERVICE_H_
#define UQKIT_SERVICE_H_

#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "uqkit/clustering.h"
#include "uqkit/decoding.h"
#include "uqkit/json_codec.h"
#include "uqkit/records.h"

namespace uqkit {

inline constexpr std::chrono::milliseconds kDefaultBackendTimeout{30000};

struct HttpEndpoint {
  std::string url;  // scheme://host[:port], no trailing path
  std::chrono::milliseconds timeout = kDefaultBackendTimeout;
};

// Failures map to Unavailable (unreachable, non-200, malformed or wrong
// length) or DeadlineExceeded (timeout).
absl::StatusOr<std::vector<double>> ParseNextLogitsResponse(
    std::string_view body, int vocab_size);
absl::StatusOr<NliLabel> ParseClassifyResponse(std::string_view body);

// LogitProvider backed by a remote model. One instance per prompt: the
// prompt text travels with every next_logits call.
class RemoteLogitProvider final : public LogitProvider {
 public:
  // Fetches the vocabulary from {url}/v1/vocab.
  static absl::StatusOr<std::unique_ptr<RemoteLogitProvider>> Connect(
      const HttpEndpoint& endpoint, std::string prompt);

  int vocab_size() const override { return static_cast<int>(vocab_.size()); }
  int stop_token_id() const override { return stop_token_id_; }
  absl::StatusOr<std::vector<double>> NextLogits(
      std::span<const int> prefix) const override;
  std::string TokenText(int id) const override { return vocab_.at(id); }
  std::string model_id() const override { return model_id_; }

 private:
  RemoteLogitProvider(HttpEndpoint endpoint, std::string prompt)
      : endpoint_(std::move(endpoint)), prompt_(std::move(prompt)) {}

  HttpEndpoint endpoint_;
  std::string prompt_;
  std::vector<std::string> vocab_;
  int stop_token_id_ = 0;
  std::string model_id_;
};

class HttpEntailmentClient final : public EntailmentClient {
 public:
  explicit HttpEntailmentClient(HttpEndpoint endpoint)
      : endpoint_(std::move(endpoint)) {}

  absl::StatusOr<NliLabel> Classify(std::string_view premise,
                                    std::string_view hypothesis) override;

 private:
  HttpEndpoint endpoint_;
};

struct GenerateRequest {
  std::string prompt;
  DecodingConfig decoding;
  OracleKind oracle = OracleKind::kExactNormalized;
  EntropyConfig entropy;
};

// Absent fields take their defaults (beam: width 3, 5 sequences). Range
// violations are field errors.
absl::StatusOr<GenerateRequest> ParseGenerateRequest(const Json& body);
Json ToJson(const GenerateRequest& request);

// HTTP status for a failed status: 400 bad input, 502 backend failure, 504
// backend timeout, 503 missing configuration, 500 otherwise.
int HttpStatusFor(const absl::Status& status);
Json ErrorBody(const absl::Status& status);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port.
  std::optional<std::string> backend_url;
  std::optional<std::string> entailment_url;
  std::optional<std::string> model_spec;
  std::chrono::milliseconds backend_timeout = kDefaultBackendTimeout;
  std::optional<std::string> static_dir;
  std::optional<std::string> log_dir;
};

class UqServer {
 public:
  static absl::StatusOr<std::unique_ptr<UqServer>> Create(
      ServerOptions options);
  ~UqServer();

  UqServer(const UqServer&) = delete;
  UqServer& operator=(const UqServer&) = delete;

  // Binds the socket and serves on a background thread.
  absl::Status Start();
  // Binds and serves on the calling thread until Stop().
  absl::Status Run();
  void Stop();
  int port() const;

 private:
  struct Impl;
  explicit UqServer(std::unique_ptr<Impl> impl);

  std::unique_ptr<Impl> impl_;
};

}  // namespace uqkit

#endif  // UQKIT_SERVICE_H_
