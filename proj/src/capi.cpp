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

#include "xylid/xylid.h"

#include <chrono>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <memory>
#include <string>

#include "xylid/client.hpp"
#include "xylid/dataset.hpp"
#include "xylid/error.hpp"
#include "xylid/evaluation.hpp"
#include "xylid/features.hpp"
#include "xylid/imaging.hpp"
#include "xylid/service.hpp"
#include "xylid/taxonomy.hpp"
#include "xylid/wire.hpp"

namespace fs = std::filesystem;
using namespace xylid;

struct xylid_model {
  ModelParams params;
};

struct xylid_server {
  std::unique_ptr<IdentificationService> service;
  std::unique_ptr<HttpServer> http;
  std::string host;
  int port = 0;
  bool started = false;
};

struct xylid_store {
  std::unique_ptr<QueueStore> store;
};

namespace {

thread_local std::string g_last_error;

xylid_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return XYLID_E_INVALID_ARGUMENT;
    case ErrorCode::kNotFound: return XYLID_E_NOT_FOUND;
    case ErrorCode::kFormat: return XYLID_E_FORMAT;
    case ErrorCode::kChecksum: return XYLID_E_CHECKSUM;
    case ErrorCode::kTooLarge: return XYLID_E_TOO_LARGE;
    case ErrorCode::kUnavailable: return XYLID_E_UNAVAILABLE;
    case ErrorCode::kTransport: return XYLID_E_TRANSPORT;
    case ErrorCode::kIo: return XYLID_E_IO;
    case ErrorCode::kCorruption: return XYLID_E_CORRUPTION;
    case ErrorCode::kDivergence: return XYLID_E_DIVERGENCE;
    case ErrorCode::kInternal: return XYLID_E_INTERNAL;
  }
  return XYLID_E_INTERNAL;
}

template <typename Fn>
xylid_status guard(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return XYLID_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const Json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return XYLID_E_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return XYLID_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return XYLID_E_INTERNAL;
  }
}

void require(const void* p, const char* name) {
  if (!p) fail(ErrorCode::kInvalidArgument, std::string(name) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out) *out = dup_string(s);
}

Json parse_options(const char* options_json) {
  if (!options_json || !*options_json) return Json::object();
  Json j = Json::parse(options_json);
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "options must be a JSON object");
  return j;
}

template <typename T>
T opt(const Json& j, const char* key, T fallback) {
  if (!j.contains(key) || j[key].is_null()) return fallback;
  try {
    return j[key].get<T>();
  } catch (const Json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("option '") + key + "' has the wrong type");
  }
}

Taxonomy load_taxonomy_file(const fs::path& path) {
  if (!fs::exists(path)) fail(ErrorCode::kNotFound, "taxonomy file not found: " + path.string());
  return load_taxonomy(read_text_file(path));
}

Taxonomy taxonomy_from(const char* path) { return path && *path ? load_taxonomy_file(path) : default_taxonomy(); }

// Explicit file, else the dataset's own taxonomy, else the bundled table.
Taxonomy dataset_taxonomy_for(const fs::path& data_dir, const std::string& explicit_path) {
  if (!explicit_path.empty()) return load_taxonomy_file(explicit_path);
  if (fs::exists(data_dir / "taxonomy.tsv")) return load_taxonomy_file(data_dir / "taxonomy.tsv");
  return default_taxonomy();
}

std::vector<std::string> class_ids_of(const Taxonomy& taxonomy) {
  std::vector<std::string> ids;
  for (const auto& c : taxonomy.classes()) ids.push_back(c.class_id);
  return ids;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Json record_json(const CaptureRecord& r) {
  Json j;
  j["capture_id"] = r.capture_id;
  j["state"] = to_string(r.state);
  j["attempts"] = r.attempts;
  j["captured_at"] = format_rfc3339(r.metadata.captured_at);
  j["device_id"] = r.metadata.device_id;
  j["image_ref"] = r.image_ref.string();
  j["last_error"] = r.last_error ? Json(*r.last_error) : Json(nullptr);
  j["result"] = r.result ? to_json(*r.result) : Json(nullptr);
  return j;
}

}  // namespace

extern "C" {

const char* xylid_version(void) { return "1.0.0"; }

const char* xylid_status_name(xylid_status status) {
  switch (status) {
    case XYLID_OK: return "ok";
    case XYLID_E_INVALID_ARGUMENT: return "invalid_argument";
    case XYLID_E_NOT_FOUND: return "not_found";
    case XYLID_E_FORMAT: return "format";
    case XYLID_E_CHECKSUM: return "checksum";
    case XYLID_E_TOO_LARGE: return "too_large";
    case XYLID_E_UNAVAILABLE: return "unavailable";
    case XYLID_E_TRANSPORT: return "transport";
    case XYLID_E_IO: return "io";
    case XYLID_E_CORRUPTION: return "corruption";
    case XYLID_E_DIVERGENCE: return "divergence";
    case XYLID_E_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* xylid_last_error(void) { return g_last_error.c_str(); }

void xylid_string_free(char* s) { std::free(s); }

xylid_status xylid_taxonomy_json(const char* taxonomy_path, char** out_json) {
  return guard([&] {
    require(out_json, "out_json");
    emit(out_json, to_json(taxonomy_from(taxonomy_path)).dump());
  });
}

xylid_status xylid_wood_info_json(const char* taxonomy_path, const char* class_id, char** out_json) {
  return guard([&] {
    require(class_id, "class_id");
    require(out_json, "out_json");
    emit(out_json, to_json(taxonomy_from(taxonomy_path).wood_info(class_id)).dump());
  });
}

xylid_status xylid_synth_dataset(const char* out_dir, const char* options_json, char** out_json) {
  return guard([&] {
    require(out_dir, "out_dir");
    const Json o = parse_options(options_json);
    SynthDatasetOptions opts;
    opts.classes = opt(o, "classes", opts.classes);
    opts.per_class = opt(o, "per_class", opts.per_class);
    opts.sibling_pairs = opt(o, "sibling_pairs", opts.sibling_pairs);
    opts.seed = opt(o, "seed", opts.seed);
    opts.width = opt(o, "width", opts.width);
    opts.height = opt(o, "height", opts.height);
    opts.threads = opt(o, "threads", opts.threads);
    const auto t0 = std::chrono::steady_clock::now();
    const Manifest m = write_synth_dataset(out_dir, opts);
    Json siblings = Json::array();
    for (const auto& p : m.siblings) siblings.push_back(Json{{"a", p.a}, {"b", p.b}, {"family", p.family}});
    emit(out_json, Json{{"out_dir", out_dir},
                        {"classes", m.classes.size()},
                        {"images", m.rows.size()},
                        {"manifest_rows", m.rows.size()},
                        {"seed", m.seed},
                        {"width", m.width},
                        {"height", m.height},
                        {"sibling_pairs", std::move(siblings)},
                        {"seconds", seconds_since(t0)}}
                       .dump());
  });
}

xylid_status xylid_train(const char* data_dir, const char* model_out, const char* options_json, char** out_json) {
  return guard([&] {
    require(data_dir, "data_dir");
    require(model_out, "model_out");
    const Json o = parse_options(options_json);
    TrainConfig cfg;
    cfg.learning_rate = opt(o, "learning_rate", cfg.learning_rate);
    cfg.epochs = opt(o, "epochs", cfg.epochs);
    cfg.batch_size = opt(o, "batch_size", cfg.batch_size);
    cfg.l2 = opt(o, "l2", cfg.l2);
    cfg.seed = opt(o, "seed", cfg.seed);
    cfg.version = opt(o, "version", cfg.version);
    const double split = opt(o, "split", 0.2);
    const auto split_seed = opt<std::uint64_t>(o, "split_seed", 0);
    const auto threads = opt<unsigned>(o, "threads", 0);
    if (!(split >= 0 && split < 1)) fail(ErrorCode::kInvalidArgument, "split must lie in [0, 1)");

    const Taxonomy taxonomy = dataset_taxonomy_for(data_dir, opt<std::string>(o, "taxonomy", ""));
    const auto class_ids = class_ids_of(taxonomy);
    const FeatureSpec spec;
    const auto t0 = std::chrono::steady_clock::now();
    const auto dataset = load_dataset_features(data_dir, class_ids, spec, threads);
    const double feature_seconds = seconds_since(t0);
    std::vector<LabeledVector> train_set = dataset;
    std::size_t held_out = 0;
    if (split > 0) {
      Split s = split_dataset(dataset, split, split_seed);
      held_out = s.test.size();
      train_set = std::move(s.train);
    }
    const auto t1 = std::chrono::steady_clock::now();
    const TrainResult result = train(train_set, class_ids, spec, cfg);
    const double train_seconds = seconds_since(t1);
    const std::size_t bytes = save_model(result.params, model_out);

    Json warnings = Json::array();
    if (cfg.epochs == 0) warnings.push_back("epochs is 0: the model has zero weights and predicts uniform probabilities");
    emit(out_json, Json{{"model_path", model_out},
                        {"model_version", result.params.version},
                        {"classes", result.params.classes()},
                        {"feature_dim", result.params.dim()},
                        {"feature_spec_hash", spec_hash(spec)},
                        {"n_train", train_set.size()},
                        {"n_held_out", held_out},
                        {"epochs", cfg.epochs},
                        {"train_loss", result.params.train_loss},
                        {"train_accuracy", result.params.train_accuracy},
                        {"model_bytes", bytes},
                        {"feature_seconds", feature_seconds},
                        {"train_seconds", train_seconds},
                        {"warnings", std::move(warnings)}}
                       .dump());
  });
}

xylid_status xylid_evaluate(const char* model_path, const char* data_dir, const char* options_json, char** out_json,
                            char** out_text) {
  return guard([&] {
    require(model_path, "model_path");
    require(data_dir, "data_dir");
    const Json o = parse_options(options_json);
    const double split = opt(o, "split", 0.2);
    const auto seed = opt<std::uint64_t>(o, "seed", 0);
    const auto threads = opt<unsigned>(o, "threads", 0);
    if (!(split > 0 && split < 1)) fail(ErrorCode::kInvalidArgument, "split must lie in (0, 1)");

    const ModelParams model = load_model(model_path);
    const Taxonomy taxonomy = dataset_taxonomy_for(data_dir, opt<std::string>(o, "taxonomy", ""));
    const auto t0 = std::chrono::steady_clock::now();
    const auto dataset = load_dataset_features(data_dir, model.class_ids, model.feature_spec, threads);
    const Split s = split_dataset(dataset, split, seed);
    const EvalReport report = evaluate(model, s.test, taxonomy);

    Json j;
    j["model_version"] = model.version;
    j["split"] = split;
    j["seed"] = seed;
    j["n_train"] = s.train.size();
    j["report"] = to_json(report, taxonomy);
    std::string text = render_report_table(report, taxonomy);
    if (fs::exists(fs::path(data_dir) / "manifest.tsv")) {
      const Manifest m = read_manifest(data_dir);
      std::vector<std::pair<std::string, std::string>> pairs;
      for (const auto& p : m.siblings) pairs.emplace_back(p.a, p.b);
      const SiblingAnalysis a = sibling_analysis(report, pairs);
      j["sibling_analysis"] = Json{{"pairs", pairs.size()},
                                   {"top1_errors", a.top1_errors},
                                   {"sibling_errors", a.sibling_errors},
                                   {"sibling_errors_truth_at_rank2", a.sibling_errors_truth_at_rank2},
                                   {"sibling_error_fraction", a.sibling_error_fraction},
                                   {"sibling_rank2_fraction", a.sibling_rank2_fraction}};
      char line[200];
      std::snprintf(line, sizeof line, "sibling errors      %llu of %llu (%.4f), truth at rank 2: %.4f\n",
                    static_cast<unsigned long long>(a.sibling_errors), static_cast<unsigned long long>(a.top1_errors),
                    a.sibling_error_fraction, a.sibling_rank2_fraction);
      text += line;
    } else {
      j["sibling_analysis"] = nullptr;
    }
    j["seconds"] = seconds_since(t0);
    emit(out_json, j.dump());
    emit(out_text, text);
  });
}

xylid_status xylid_model_load(const char* path, xylid_model** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new xylid_model{load_model(path)};
  });
}

void xylid_model_free(xylid_model* model) { delete model; }

xylid_status xylid_model_info(const xylid_model* model, char** out_json) {
  return guard([&] {
    require(model, "model");
    require(out_json, "out_json");
    const ModelParams& p = model->params;
    emit(out_json, Json{{"model_version", p.version},
                        {"class_count", p.classes()},
                        {"feature_spec_hash", spec_hash(p.feature_spec)},
                        {"trained_at", format_rfc3339(p.trained_at)},
                        {"feature_spec", to_json(p.feature_spec)},
                        {"train_loss", p.train_loss},
                        {"train_accuracy", p.train_accuracy}}
                       .dump());
  });
}

xylid_status xylid_model_identify(const xylid_model* model, const uint8_t* image, size_t image_len, char** out_json) {
  return guard([&] {
    require(model, "model");
    require(image, "image");
    require(out_json, "out_json");
    const ModelParams& p = model->params;
    const RawImage raw = decode_image(std::span(image, image_len));
    const Prediction pred = predict(p, extract_features(preprocess(raw, p.feature_spec), p.feature_spec));
    Json ranked = Json::array();
    for (const auto& r : pred.ranked) ranked.push_back(Json{{"class_id", r.class_id}, {"probability", r.probability}});
    emit(out_json, Json{{"model_version", pred.model_version}, {"ranking", std::move(ranked)}}.dump());
  });
}

xylid_status xylid_server_create(const char* config_json, xylid_server** out) {
  return guard([&] {
    require(out, "out");
    const Json o = parse_options(config_json);
    ServiceConfig cfg;
    cfg.host = opt(o, "host", cfg.host);
    cfg.port = opt(o, "port", cfg.port);
    cfg.model_path = opt<std::string>(o, "model_path", "");
    cfg.store_dir = opt<std::string>(o, "store_dir", cfg.store_dir.string());
    cfg.max_image_bytes = opt(o, "max_image_bytes", cfg.max_image_bytes);
    cfg.k = opt(o, "k", cfg.k);
    const std::string taxonomy_path = opt<std::string>(o, "taxonomy", "");
    if (cfg.port < 0 || cfg.port > 65535) fail(ErrorCode::kInvalidArgument, "port out of range");
    auto server = std::make_unique<xylid_server>();
    server->host = cfg.host;
    server->port = cfg.port;
    const fs::path model_path = cfg.model_path;
    server->service = std::make_unique<IdentificationService>(cfg, taxonomy_from(taxonomy_path.c_str()));
    if (!model_path.empty()) {
      if (!fs::exists(model_path)) fail(ErrorCode::kNotFound, "model file not found: " + model_path.string());
      server->service->load_model(model_path);
    }
    server->http = std::make_unique<HttpServer>(*server->service);
    *out = server.release();
  });
}

xylid_status xylid_server_start(xylid_server* server) {
  return guard([&] {
    require(server, "server");
    server->http->start(server->host, server->port);
    server->started = true;
  });
}

xylid_status xylid_server_stop(xylid_server* server) {
  return guard([&] {
    require(server, "server");
    server->http->stop();
  });
}

int xylid_server_port(const xylid_server* server) { return server && server->started ? server->http->port() : 0; }

void xylid_server_free(xylid_server* server) {
  if (!server) return;
  server->http->stop();
  delete server;
}

xylid_status xylid_identify_remote(const char* server_url, const uint8_t* image, size_t image_len,
                                   const char* device_id, int timeout_ms, char** out_json) {
  return guard([&] {
    require(server_url, "server_url");
    require(image, "image");
    require(out_json, "out_json");
    IdentifyRequest req;
    req.image.assign(image, image + image_len);
    req.capture_id = make_uuid();
    req.metadata.capture_id = req.capture_id;
    req.metadata.device_id = device_id && *device_id ? device_id : "xylid-cli";
    req.metadata.captured_at = Clock::now();
    HttpTransport transport(server_url, timeout_ms > 0 ? timeout_ms : 10000);
    const auto t0 = std::chrono::steady_clock::now();
    const TransportResponse res = transport.identify(req);
    const double latency_ms = seconds_since(t0) * 1000.0;
    if (res.status != 200) {
      std::string code = "internal", message = "HTTP " + std::to_string(res.status);
      try {
        const Json e = Json::parse(res.body);
        code = e.value("error_code", code);
        message = e.value("message", message);
      } catch (const Json::exception&) {
      }
      ErrorCode ec = ErrorCode::kInternal;
      for (auto c : {ErrorCode::kInvalidArgument, ErrorCode::kNotFound, ErrorCode::kFormat, ErrorCode::kTooLarge,
                     ErrorCode::kUnavailable}) {
        if (to_string(c) == code) ec = c;
      }
      fail(ec, "server rejected the image (HTTP " + std::to_string(res.status) + "): " + message);
    }
    Json j = Json::parse(res.body);
    j["client_latency_ms"] = latency_ms;
    emit(out_json, j.dump());
  });
}

xylid_status xylid_store_open(const char* root, xylid_store** out, char** out_json) {
  return guard([&] {
    require(root, "root");
    require(out, "out");
    auto store = std::make_unique<xylid_store>();
    store->store = QueueStore::open(root);
    const OpenReport& r = store->store->open_report();
    emit(out_json, Json{{"records", r.records}, {"warning", r.warning ? Json(*r.warning) : Json(nullptr)}}.dump());
    *out = store.release();
  });
}

void xylid_store_free(xylid_store* store) { delete store; }

xylid_status xylid_store_capture(xylid_store* store, const uint8_t* image, size_t image_len, const char* device_id,
                                 double magnification, char** out_json) {
  return guard([&] {
    require(store, "store");
    require(image, "image");
    require(device_id, "device_id");
    const Bytes bytes(image, image + image_len);
    const auto mag = magnification > 0 ? std::optional<double>(magnification) : std::nullopt;
    emit(out_json, record_json(store->store->capture(bytes, device_id, mag)).dump());
  });
}

xylid_status xylid_store_sync(xylid_store* store, const char* config_json, char** out_json) {
  return guard([&] {
    require(store, "store");
    const Json o = parse_options(config_json);
    SyncConfig cfg;
    cfg.server_url = opt(o, "server_url", cfg.server_url);
    cfg.max_attempts = opt(o, "max_attempts", cfg.max_attempts);
    cfg.backoff_base_ms = opt(o, "backoff_base_ms", cfg.backoff_base_ms);
    cfg.backoff_cap_ms = opt(o, "backoff_cap_ms", cfg.backoff_cap_ms);
    cfg.jitter_fraction = opt(o, "jitter_fraction", cfg.jitter_fraction);
    cfg.request_timeout_ms = opt(o, "request_timeout_ms", cfg.request_timeout_ms);
    if (o.contains("seed") && !o["seed"].is_null()) cfg.seed = opt<std::uint64_t>(o, "seed", 0);
    const auto t0 = std::chrono::steady_clock::now();
    const SyncReport r = sync(*store->store, cfg);
    emit(out_json, Json{{"identified", r.identified},
                        {"failed", r.failed},
                        {"remaining", r.remaining},
                        {"uploads", r.uploads},
                        {"seconds", seconds_since(t0)}}
                       .dump());
  });
}

xylid_status xylid_store_gallery(xylid_store* store, const char* state_filter, char** out_json) {
  return guard([&] {
    require(store, "store");
    require(out_json, "out_json");
    std::optional<CaptureState> filter;
    if (state_filter && *state_filter) filter = capture_state_from_string(state_filter);
    store->store->refresh();
    Json rows = Json::array();
    for (const auto& r : store->store->gallery(filter)) rows.push_back(record_json(r));
    emit(out_json, Json{{"count", rows.size()}, {"records", std::move(rows)}}.dump());
  });
}

}  // extern "C"
