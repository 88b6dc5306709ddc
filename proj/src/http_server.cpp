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

#include <httplib.h>

#include "xylid/error.hpp"
#include "xylid/service.hpp"

namespace xylid {

namespace {

constexpr const char* kJson = "application/json";

void send_error(httplib::Response& res, ErrorCode code, const std::string& message) {
  res.status = http_status_for(code);
  res.set_content(error_json(to_string(code), message).dump(), kJson);
}

void send_json(httplib::Response& res, const std::string& body) {
  res.status = 200;
  res.set_content(body, kJson);
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
  return [fn](const httplib::Request& req, httplib::Response& res) {
    try {
      fn(req, res);
    } catch (const Error& e) {
      send_error(res, e.code(), e.what());
    } catch (const Json::exception& e) {
      send_error(res, ErrorCode::kInvalidArgument, std::string("malformed JSON: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, ErrorCode::kInternal, e.what());
    }
  };
}

// Multipart part "image" wins over a base64 "image_b64" field, in either
// the form or a JSON body.
IdentifyRequest parse_identify(const httplib::Request& req) {
  IdentifyRequest out;
  Json meta;
  std::string image_b64;
  bool have_image = false;
  if (req.is_multipart_form_data()) {
    if (req.has_file("metadata")) meta = Json::parse(req.get_file_value("metadata").content);
    if (req.has_file("capture_id")) out.capture_id = req.get_file_value("capture_id").content;
    if (req.has_file("image")) {
      const auto& content = req.get_file_value("image").content;
      out.image.assign(content.begin(), content.end());
      have_image = true;
    } else if (req.has_file("image_b64")) {
      image_b64 = req.get_file_value("image_b64").content;
    }
  } else {
    const Json body = Json::parse(req.body);
    if (!body.is_object()) fail(ErrorCode::kInvalidArgument, "request body must be a JSON object");
    if (body.contains("metadata")) meta = body["metadata"];
    if (body.contains("capture_id")) out.capture_id = body["capture_id"].get<std::string>();
    if (body.contains("image_b64")) image_b64 = body["image_b64"].get<std::string>();
  }
  if (meta.is_null()) fail(ErrorCode::kInvalidArgument, "missing metadata");
  out.metadata = metadata_from_json(meta);
  if (out.capture_id.empty()) out.capture_id = out.metadata.capture_id;
  if (!have_image) {
    if (image_b64.empty()) fail(ErrorCode::kInvalidArgument, "missing image (multipart part 'image' or field 'image_b64')");
    try {
      out.image = base64_decode(image_b64);
    } catch (const Error&) {
      fail(ErrorCode::kInvalidArgument, "image_b64 is not valid base64");
    }
  }
  return out;
}

}  // namespace

HttpServer::HttpServer(IdentificationService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  auto& svc = service_;
  // Base64 inflates by 4/3; leave room for metadata and multipart framing.
  s.set_payload_max_length(svc.config().max_image_bytes * 3 / 2 + (1u << 20));
  s.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                         {"Access-Control-Allow-Headers", "Content-Type"},
                         {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"}});
  s.Options(R"(.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  s.Post("/v1/identify", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           send_json(res, svc.submit(parse_identify(req)).body);
         }));
  s.Get(R"(/v1/results/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          const std::string id = req.matches[1];
          const auto body = svc.get_result(id);
          if (!body) fail(ErrorCode::kNotFound, "no result for capture_id '" + id + "'");
          send_json(res, *body);
        }));
  s.Get("/v1/taxonomy", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          if (req.get_param_value("format") == "tsv") {
            res.set_content(serialize_taxonomy(svc.taxonomy()), "text/tab-separated-values");
          } else {
            send_json(res, to_json(svc.taxonomy()).dump());
          }
        }));
  s.Get(R"(/v1/wood-info/([^/]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
          send_json(res, to_json(svc.taxonomy().wood_info(req.matches[1].str())).dump());
        }));
  s.Get("/v1/model", guarded([&svc](const httplib::Request&, httplib::Response& res) {
          send_json(res, svc.model_info().dump());
        }));
  s.Post("/v1/admin/reload", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
           std::filesystem::path path = svc.config().model_path;
           if (!req.body.empty()) {
             const Json body = Json::parse(req.body);
             if (body.contains("model_path")) path = body["model_path"].get<std::string>();
           }
           if (path.empty()) fail(ErrorCode::kInvalidArgument, "no model_path given");
           svc.load_model(path);
           send_json(res, svc.model_info().dump());
         }));
  s.Get("/healthz", [&svc](const httplib::Request&, httplib::Response& res) {
    const Health h = svc.health();
    res.status = h.ok ? 200 : 503;
    res.set_content(Json{{"status", h.ok ? "ok" : "degraded"}, {"problems", h.problems}}.dump(), kJson);
  });
}

namespace {

int bind(httplib::Server& server, const std::string& host, int port) {
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound <= 0) fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

}  // namespace

void HttpServer::start(const std::string& host, int port) {
  if (thread_.joinable()) fail(ErrorCode::kInvalidArgument, "server already started");
  port_ = bind(*server_, host, port);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void HttpServer::run(const std::string& host, int port) {
  port_ = bind(*server_, host, port);
  server_->listen_after_bind();
}

void HttpServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace xylid
