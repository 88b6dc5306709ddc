// Copyright 2026 The xylid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>

#include "xylid/classifier.hpp"
#include "xylid/error.hpp"
#include "xylid/taxonomy.hpp"
#include "xylid/wire.hpp"

namespace httplib {
class Server;
}

namespace xylid {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path model_path;
  std::filesystem::path store_dir = "xylid-store";
  std::size_t max_image_bytes = 8u << 20;
  std::size_t k = 2;
};

/// Throws Error(kInvalidArgument) unless k >= 1 and max_image_bytes >= 64 KiB.
void validate(const ServiceConfig& config);

struct SubmitOutcome {
  /// Exact response body.
  std::string body;
  IdentifyResult result;
  /// True when the stored result of an earlier submission was returned.
  bool replayed = false;
};

struct Health {
  bool ok = false;
  std::vector<std::string> problems;
};

/// The identification pipeline plus its result store.
///
/// Store layout: <store>/captures/<capture_id>/{image.png|image.jpg,
/// meta.json, ranking.json, result.json}. A capture directory is assembled
/// under <store>/tmp and renamed into place, so it is either complete or
/// absent. Submissions sharing a capture_id serialize on a per-id mutex.
class IdentificationService {
 public:
  IdentificationService(ServiceConfig config, Taxonomy taxonomy);

  /// Swaps the served model atomically; requests already running finish on
  /// the previous one.
  void set_model(std::shared_ptr<const ModelParams> model);
  void load_model(const std::filesystem::path& path);
  std::shared_ptr<const ModelParams> model() const;

  /// Error mapping: kInvalidArgument (malformed request) 400, kTooLarge 413,
  /// kFormat (undecodable image) 422, kUnavailable (no model) 503.
  SubmitOutcome submit(const IdentifyRequest& request);
  std::optional<std::string> get_result(const std::string& capture_id) const;
  /// Re-identifies a stored capture's image with the current model.
  Prediction replay(const std::string& capture_id) const;

  Json model_info() const;
  Health health() const;
  std::size_t artifact_count() const;

  const Taxonomy& taxonomy() const { return taxonomy_; }
  const ServiceConfig& config() const { return config_; }

 private:
  std::shared_ptr<std::mutex> capture_lock(const std::string& capture_id);
  void release_capture_lock(const std::string& capture_id);
  Prediction identify(const ModelParams& model, const Bytes& image) const;
  std::filesystem::path capture_dir(const std::string& capture_id) const;

  ServiceConfig config_;
  Taxonomy taxonomy_;
  mutable std::mutex model_mu_;
  std::shared_ptr<const ModelParams> model_;
  std::mutex locks_mu_;
  std::unordered_map<std::string, std::pair<std::shared_ptr<std::mutex>, int>> locks_;
};

/// HTTP/1.1 front end. Endpoints:
///   POST /v1/identify            multipart (image, capture_id, metadata) or
///                                JSON {capture_id, image_b64, metadata}
///   GET  /v1/results/{id}
///   GET  /v1/taxonomy            JSON; ?format=tsv returns the document
///   GET  /v1/wood-info/{id}
///   GET  /v1/model
///   POST /v1/admin/reload        optional JSON {model_path}
///   GET  /healthz
class HttpServer {
 public:
  explicit HttpServer(IdentificationService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  void start(const std::string& host, int port);
  /// Blocks until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();
  int port() const { return port_; }

 private:
  void install_routes();

  IdentificationService& service_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

int http_status_for(ErrorCode code);

}  // namespace xylid
