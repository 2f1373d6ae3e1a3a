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

#include "uqkit/service.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "absl/strings/ascii.h"
#include "absl/strings/str_cat.h"
#include "absl/synchronization/mutex.h"
#include "httplib.h"
#include "uqkit/entropy.h"
#include "uqkit/harness.h"
#include "uqkit/status.h"

#ifndef UQKIT_VERSION
#define UQKIT_VERSION "0.0.0"
#endif

namespace uqkit {
namespace {

constexpr char kJsonType[] = "application/json";

constexpr char kStubPage[] = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>uqkit</title></head>
<body><h1>uqkit</h1>
<p>No dashboard assets are mounted (start the server with --static-dir).</p>
<ul><li>GET /v1/health</li><li>GET /v1/version</li>
<li>POST /v1/generate</li><li>POST /v1/analyze</li></ul>
</body></html>
)";

httplib::Client MakeClient(const HttpEndpoint& endpoint) {
  httplib::Client client(endpoint.url);
  client.set_connection_timeout(endpoint.timeout);
  client.set_read_timeout(endpoint.timeout);
  client.set_write_timeout(endpoint.timeout);
  client.set_tcp_nodelay(true);
  return client;
}

absl::Status TransportError(const HttpEndpoint& endpoint, std::string_view path,
                            httplib::Error error,
                            std::chrono::steady_clock::duration elapsed) {
  const bool timed_out =
      error == httplib::Error::ConnectionTimeout ||
      (error == httplib::Error::Read && elapsed >= endpoint.timeout);
  const std::string message =
      StrCat(endpoint.url, path, ": ", httplib::to_string(error));
  if (timed_out) return absl::DeadlineExceededError(message);
  return absl::UnavailableError(message);
}

// Returns the body of a 200 response.
absl::StatusOr<std::string> Call(const HttpEndpoint& endpoint,
                                 std::string_view path,
                                 const std::optional<std::string>& body) {
  httplib::Client client = MakeClient(endpoint);
  const auto start = std::chrono::steady_clock::now();
  httplib::Result result =
      body.has_value()
          ? client.Post(std::string(path), *body, kJsonType)
          : client.Get(std::string(path));
  if (!result) {
    return TransportError(endpoint, path, result.error(),
                          std::chrono::steady_clock::now() - start);
  }
  if (result->status != 200) {
    return absl::UnavailableError(StrCat(
        endpoint.url, path, " returned HTTP ", result->status));
  }
  return std::move(result->body);
}

absl::StatusOr<Json> ParseBackendJson(std::string_view body,
                                      std::string_view what) {
  absl::StatusOr<Json> json = ParseJson(body);
  if (!json.ok()) {
    return absl::UnavailableError(
        StrCat("malformed ", what, " response: ", Message(json.status())));
  }
  if (!json->is_object()) {
    return absl::UnavailableError(
        StrCat("malformed ", what, " response: expected an object"));
  }
  return json;
}

std::string Lower(std::string_view s) { return absl::AsciiStrToLower(AbslView(s)); }

bool ParseFlag(const httplib::Request& req, const std::string& name,
               bool fallback) {
  if (!req.has_param(name)) return fallback;
  const std::string value = Lower(req.get_param_value(name));
  return value.empty() || value == "1" || value == "true" || value == "yes";
}

void Reply(httplib::Response& res, int status, const Json& body) {
  absl::StatusOr<std::string> text = DumpJson(body);
  res.status = status;
  if (!text.ok()) {
    res.status = 500;
    res.set_content(*DumpJson(ErrorBody(text.status())), kJsonType);
    return;
  }
  res.set_content(*text, kJsonType);
}

void ReplyError(httplib::Response& res, const absl::Status& status) {
  Reply(res, HttpStatusFor(status), ErrorBody(status));
}

}  // namespace

absl::StatusOr<std::vector<double>> ParseNextLogitsResponse(
    std::string_view body, int vocab_size) {
  UQKIT_ASSIGN_OR_RETURN(Json json, ParseBackendJson(body, "next_logits"));
  auto it = json.find("logits");
  if (it == json.end() || !it->is_array()) {
    return absl::UnavailableError("next_logits response has no logits array");
  }
  if (static_cast<int>(it->size()) != vocab_size) {
    return absl::UnavailableError(
        StrCat("logits length mismatch: expected ", vocab_size,
                     ", got ", it->size()));
  }
  std::vector<double> logits;
  logits.reserve(it->size());
  for (const Json& value : *it) {
    if (!value.is_number() || !std::isfinite(value.get<double>())) {
      return absl::UnavailableError("next_logits returned a non-finite value");
    }
    logits.push_back(value.get<double>());
  }
  return logits;
}

absl::StatusOr<NliLabel> ParseClassifyResponse(std::string_view body) {
  UQKIT_ASSIGN_OR_RETURN(Json json, ParseBackendJson(body, "classify"));
  auto it = json.find("label");
  if (it == json.end() || !it->is_string()) {
    return absl::UnavailableError("classify response has no label");
  }
  absl::StatusOr<NliLabel> label = ParseNliLabel(it->get<std::string>());
  if (!label.ok()) {
    return absl::UnavailableError(
        StrCat("entailment protocol error: ", Message(label.status())));
  }
  return label;
}

absl::StatusOr<std::unique_ptr<RemoteLogitProvider>>
RemoteLogitProvider::Connect(const HttpEndpoint& endpoint, std::string prompt) {
  UQKIT_ASSIGN_OR_RETURN(std::string body,
                         Call(endpoint, "/v1/vocab", std::nullopt));
  UQKIT_ASSIGN_OR_RETURN(Json json, ParseBackendJson(body, "vocab"));
  std::unique_ptr<RemoteLogitProvider> provider(
      new RemoteLogitProvider(endpoint, std::move(prompt)));
  auto vocab = json.find("vocab");
  auto stop = json.find("stop");
  if (vocab == json.end() || !vocab->is_array() || vocab->empty() ||
      stop == json.end() || !stop->is_number_integer()) {
    return absl::UnavailableError(
        "vocab response needs a non-empty vocab array and a stop id");
  }
  for (const Json& token : *vocab) {
    if (!token.is_string() || token.get<std::string>().empty()) {
      return absl::UnavailableError("vocab entries must be non-empty strings");
    }
    provider->vocab_.push_back(token.get<std::string>());
  }
  provider->stop_token_id_ = stop->get<int>();
  if (provider->stop_token_id_ < 0 ||
      provider->stop_token_id_ >= provider->vocab_size()) {
    return absl::UnavailableError("stop id outside the vocabulary");
  }
  provider->model_id_ = endpoint.url;
  if (auto id = json.find("model_id"); id != json.end() && id->is_string()) {
    provider->model_id_ = id->get<std::string>();
  }
  return provider;
}

absl::StatusOr<std::vector<double>> RemoteLogitProvider::NextLogits(
    std::span<const int> prefix) const {
  Json request = Json::object();
  request["prefix"] = std::vector<int>(prefix.begin(), prefix.end());
  request["prompt"] = prompt_;
  UQKIT_ASSIGN_OR_RETURN(std::string payload, DumpJson(request));
  UQKIT_ASSIGN_OR_RETURN(std::string body,
                         Call(endpoint_, "/v1/next_logits", payload));
  return ParseNextLogitsResponse(body, vocab_size());
}

absl::StatusOr<NliLabel> HttpEntailmentClient::Classify(
    std::string_view premise, std::string_view hypothesis) {
  Json request = Json::object();
  request["premise"] = premise;
  request["hypothesis"] = hypothesis;
  UQKIT_ASSIGN_OR_RETURN(std::string payload, DumpJson(request));
  UQKIT_ASSIGN_OR_RETURN(std::string body,
                         Call(endpoint_, "/v1/classify", payload));
  return ParseClassifyResponse(body);
}

absl::StatusOr<GenerateRequest> ParseGenerateRequest(const Json& body) {
  if (!body.is_object()) return FieldError("<root>", "expected an object");
  GenerateRequest request;
  auto prompt = body.find("prompt");
  if (prompt == body.end() || !prompt->is_string()) {
    return FieldError("prompt", "expected a string");
  }
  request.prompt = prompt->get<std::string>();
  if (request.prompt.empty()) return FieldError("prompt", "must be non-empty");

  UQKIT_RETURN_IF_ERROR(FromJson(body, "", &request.decoding));
  UQKIT_RETURN_IF_ERROR(Validate(request.decoding));

  if (auto oracle = body.find("oracle"); oracle != body.end()) {
    if (!oracle->is_string()) return FieldError("oracle", "expected a string");
    absl::StatusOr<OracleKind> kind = ParseOracleKind(oracle->get<std::string>());
    if (!kind.ok()) return FieldError("oracle", Message(kind.status()));
    request.oracle = *kind;
  }
  if (auto variant = body.find("variant"); variant != body.end()) {
    if (!variant->is_string()) {
      return FieldError("variant", "expected a string");
    }
    absl::StatusOr<EntropyVariant> v =
        ParseEntropyVariant(variant->get<std::string>());
    if (!v.ok()) return FieldError("variant", Message(v.status()));
    request.entropy.variant = *v;
  }
  if (auto normalize = body.find("normalize"); normalize != body.end()) {
    if (!normalize->is_boolean()) {
      return FieldError("normalize", "expected a boolean");
    }
    request.entropy.length_normalize = normalize->get<bool>();
  }
  return request;
}

Json ToJson(const GenerateRequest& request) {
  Json json = Json::object();
  json["prompt"] = request.prompt;
  json["method"] = ToString(request.decoding.method);
  json["temperature"] = request.decoding.temperature;
  json["top_p"] = request.decoding.top_p;
  json["beam_width"] = request.decoding.beam_width;
  json["num_return_sequences"] = request.decoding.num_return_sequences;
  json["max_tokens"] = request.decoding.max_tokens;
  json["seed"] = request.decoding.seed;
  json["oracle"] = request.oracle == OracleKind::kBidirectionalEntailment
                       ? "entailment"
                       : "exact";
  json["variant"] = ToString(request.entropy.variant);
  json["normalize"] = request.entropy.length_normalize;
  return json;
}

int HttpStatusFor(const absl::Status& status) {
  switch (status.code()) {
    case absl::StatusCode::kOk:
      return 200;
    case absl::StatusCode::kInvalidArgument:
    case absl::StatusCode::kOutOfRange:
      return 400;
    case absl::StatusCode::kUnavailable:
      return 502;
    case absl::StatusCode::kDeadlineExceeded:
      return 504;
    case absl::StatusCode::kFailedPrecondition:
      return 503;
    default:
      return 500;
  }
}

Json ErrorBody(const absl::Status& status) {
  Json error = Json::object();
  error["code"] = Lower(absl::StatusCodeToString(status.code()));
  error["message"] = std::string(status.message());
  if (std::optional<std::string> field = ErrorField(status)) {
    error["field"] = *field;
  }
  Json body = Json::object();
  body["error"] = std::move(error);
  return body;
}

struct UqServer::Impl {
  ServerOptions options;
  httplib::Server server;
  std::optional<LookupTableModel> lookup_model;
  std::shared_ptr<EntailmentClient> entailment;
  std::shared_ptr<EquivalenceCache> cache = std::make_shared<EquivalenceCache>();
  std::thread thread;
  int port = 0;
  absl::Mutex log_mu;

  absl::StatusOr<std::unique_ptr<EquivalenceOracle>> Oracle(OracleKind kind) {
    if (kind != OracleKind::kBidirectionalEntailment) {
      return MakeLocalOracle(kind);
    }
    if (entailment == nullptr) {
      return FieldError("oracle",
                        "the entailment oracle needs --entailment-url");
    }
    return std::make_unique<EntailmentOracle>(entailment, cache);
  }

  absl::StatusOr<SampleSet> Generate(const GenerateRequest& request) {
    if (lookup_model.has_value()) {
      return Decode(*lookup_model, request.prompt, request.decoding);
    }
    if (options.backend_url.has_value()) {
      UQKIT_ASSIGN_OR_RETURN(
          std::unique_ptr<RemoteLogitProvider> provider,
          RemoteLogitProvider::Connect(
              {*options.backend_url, options.backend_timeout}, request.prompt));
      return Decode(*provider, request.prompt, request.decoding);
    }
    return absl::FailedPreconditionError(
        "no generation backend configured (--backend-url or --model-spec)");
  }

  void AppendLog(const std::string& line) {
    if (!options.log_dir.has_value()) return;
    absl::MutexLock lock(&log_mu);
    std::ofstream out(std::filesystem::path(*options.log_dir) /
                          "generations.jsonl",
                      std::ios::app);
    out << line << '\n';
  }

  void HandleGenerate(const httplib::Request& req, httplib::Response& res) {
    absl::StatusOr<Json> body = ParseJson(req.body);
    if (!body.ok()) return ReplyError(res, body.status());
    absl::StatusOr<GenerateRequest> request = ParseGenerateRequest(*body);
    if (!request.ok()) return ReplyError(res, request.status());
    absl::StatusOr<std::unique_ptr<EquivalenceOracle>> oracle =
        Oracle(request->oracle);
    if (!oracle.ok()) return ReplyError(res, oracle.status());
    absl::StatusOr<SampleSet> set = Generate(*request);
    if (!set.ok()) return ReplyError(res, set.status());
    absl::StatusOr<SampleSetAnalysis> analysis =
        AnalyzeSampleSet(*set, **oracle, request->entropy);
    if (!analysis.ok()) return ReplyError(res, analysis.status());

    Json response = Json::object();
    response["sample_set"] = ToJson(*set);
    response["report"] = ToJson(analysis->report);
    response["clusters"] = ClustersJson(*set, analysis->clusters);
    if (absl::StatusOr<std::string> line = DumpJson(response["sample_set"]);
        line.ok()) {
      AppendLog(*line);
    }
    Reply(res, 200, response);
  }

  void HandleAnalyze(const httplib::Request& req, httplib::Response& res) {
    absl::StatusOr<SampleSet> set = ParseRecordLine<SampleSet>(req.body);
    if (!set.ok()) return ReplyError(res, set.status());
    EntropyConfig config;
    if (req.has_param("variant")) {
      absl::StatusOr<EntropyVariant> variant =
          ParseEntropyVariant(req.get_param_value("variant"));
      if (!variant.ok()) {
        return ReplyError(res,
                          FieldError("variant", Message(variant.status())));
      }
      config.variant = *variant;
    }
    config.length_normalize = ParseFlag(req, "normalize", false);
    config.renormalize_sample_probs = ParseFlag(req, "renormalize", false);
    config.length_normalized_cluster_scores =
        ParseFlag(req, "cluster_length_normalize", false);
    OracleKind kind = OracleKind::kExactNormalized;
    if (req.has_param("oracle")) {
      absl::StatusOr<OracleKind> parsed =
          ParseOracleKind(req.get_param_value("oracle"));
      if (!parsed.ok()) {
        return ReplyError(res, FieldError("oracle", Message(parsed.status())));
      }
      kind = *parsed;
    }
    absl::StatusOr<std::unique_ptr<EquivalenceOracle>> oracle = Oracle(kind);
    if (!oracle.ok()) return ReplyError(res, oracle.status());
    SampleSet input = ParseFlag(req, "dedup_exact", false)
                          ? DedupExactText(*set)
                          : std::move(*set);
    absl::StatusOr<SampleSetAnalysis> analysis =
        AnalyzeSampleSet(input, **oracle, config);
    if (!analysis.ok()) return ReplyError(res, analysis.status());
    Json response = Json::object();
    response["report"] = ToJson(analysis->report);
    response["clusters"] = ClustersJson(input, analysis->clusters);
    Reply(res, 200, response);
  }

  absl::Status Install() {
    server.set_tcp_nodelay(true);
    server.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) {
      Json body = Json::object();
      body["status"] = "ok";
      Reply(res, 200, body);
    });
    server.Get("/v1/version",
               [](const httplib::Request&, httplib::Response& res) {
                 Json body = Json::object();
                 body["name"] = "uqkit";
                 body["version"] = UQKIT_VERSION;
                 Reply(res, 200, body);
               });
    server.Post("/v1/generate",
                [this](const httplib::Request& req, httplib::Response& res) {
                  HandleGenerate(req, res);
                });
    server.Post("/v1/analyze",
                [this](const httplib::Request& req, httplib::Response& res) {
                  HandleAnalyze(req, res);
                });
    if (options.static_dir.has_value()) {
      if (!server.set_mount_point("/", *options.static_dir)) {
        return absl::NotFoundError(
            StrCat("static directory not found: ", *options.static_dir));
      }
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(kStubPage, "text/html; charset=utf-8");
      });
    }
    server.set_error_handler(
        [](const httplib::Request& req, httplib::Response& res) {
          if (!res.body.empty()) return;
          const absl::Status status =
              res.status == 404
                  ? absl::NotFoundError(StrCat("no route for ", req.path))
                  : absl::UnknownError(StrCat("HTTP ", res.status));
          res.set_content(*DumpJson(ErrorBody(status)), kJsonType);
        });
    server.set_exception_handler([](const httplib::Request&,
                                    httplib::Response& res,
                                    std::exception_ptr ep) {
      std::string message = "unhandled exception";
      try {
        std::rethrow_exception(ep);
      } catch (const std::exception& e) {
        message = e.what();
      } catch (...) {
      }
      ReplyError(res, absl::InternalError(message));
    });
    return absl::OkStatus();
  }

  absl::Status Bind() {
    if (options.port == 0) {
      port = server.bind_to_any_port(options.host);
      if (port < 0) {
        return absl::UnavailableError(
            StrCat("cannot bind ", options.host));
      }
    } else {
      if (!server.bind_to_port(options.host, options.port)) {
        return absl::UnavailableError(
            StrCat("cannot bind ", options.host, ":", options.port));
      }
      port = options.port;
    }
    return absl::OkStatus();
  }
};

UqServer::UqServer(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}

UqServer::~UqServer() { Stop(); }

absl::StatusOr<std::unique_ptr<UqServer>> UqServer::Create(
    ServerOptions options) {
  auto impl = std::make_unique<Impl>();
  impl->options = std::move(options);
  if (impl->options.model_spec.has_value()) {
    UQKIT_ASSIGN_OR_RETURN(
        LookupTableModel model,
        LookupTableModel::FromFile(*impl->options.model_spec));
    impl->lookup_model = std::move(model);
  }
  if (impl->options.entailment_url.has_value()) {
    impl->entailment = std::make_shared<HttpEntailmentClient>(HttpEndpoint{
        *impl->options.entailment_url, impl->options.backend_timeout});
  }
  if (impl->options.log_dir.has_value()) {
    std::error_code ec;
    std::filesystem::create_directories(*impl->options.log_dir, ec);
    if (ec) {
      return absl::PermissionDeniedError(StrCat(
          "cannot create log dir ", *impl->options.log_dir, ": ",
          ec.message()));
    }
  }
  UQKIT_RETURN_IF_ERROR(impl->Install());
  return std::unique_ptr<UqServer>(new UqServer(std::move(impl)));
}

absl::Status UqServer::Start() {
  UQKIT_RETURN_IF_ERROR(impl_->Bind());
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return absl::OkStatus();
}

absl::Status UqServer::Run() {
  UQKIT_RETURN_IF_ERROR(impl_->Bind());
  if (!impl_->server.listen_after_bind()) {
    return absl::InternalError("server stopped with an error");
  }
  return absl::OkStatus();
}

void UqServer::Stop() {
  if (impl_ == nullptr) return;
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

int UqServer::port() const { return impl_->port; }

}  // namespace uqkit
