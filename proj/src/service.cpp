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

#include "xylid/service.hpp"

#include <unistd.h>

#include <chrono>
#include <fstream>

#include "xylid/error.hpp"
#include "xylid/features.hpp"
#include "xylid/imaging.hpp"

namespace xylid {

namespace fs = std::filesystem;

void validate(const ServiceConfig& config) {
  if (config.k < 1) fail(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (config.max_image_bytes < (64u << 10)) fail(ErrorCode::kInvalidArgument, "max_image_bytes must be >= 64 KiB");
}

int http_status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kTooLarge: return 413;
    case ErrorCode::kFormat: return 422;
    case ErrorCode::kUnavailable: return 503;
    default: return 500;
  }
}

IdentificationService::IdentificationService(ServiceConfig config, Taxonomy taxonomy)
    : config_(std::move(config)), taxonomy_(std::move(taxonomy)) {
  validate(config_);
  std::error_code ec;
  fs::create_directories(config_.store_dir / "captures", ec);
  fs::create_directories(config_.store_dir / "tmp", ec);
  // Half-built capture directories from an interrupted run are garbage.
  for (const auto& entry : fs::directory_iterator(config_.store_dir / "tmp", ec)) fs::remove_all(entry.path(), ec);
}

void IdentificationService::set_model(std::shared_ptr<const ModelParams> model) {
  if (model) validate(*model);
  std::lock_guard lock(model_mu_);
  model_ = std::move(model);
}

void IdentificationService::load_model(const fs::path& path) {
  set_model(std::make_shared<const ModelParams>(xylid::load_model(path)));
}

std::shared_ptr<const ModelParams> IdentificationService::model() const {
  std::lock_guard lock(model_mu_);
  return model_;
}

std::shared_ptr<std::mutex> IdentificationService::capture_lock(const std::string& capture_id) {
  std::lock_guard lock(locks_mu_);
  auto& slot = locks_[capture_id];
  if (!slot.first) slot.first = std::make_shared<std::mutex>();
  ++slot.second;
  return slot.first;
}

void IdentificationService::release_capture_lock(const std::string& capture_id) {
  std::lock_guard lock(locks_mu_);
  const auto it = locks_.find(capture_id);
  if (it != locks_.end() && --it->second.second == 0) locks_.erase(it);
}

fs::path IdentificationService::capture_dir(const std::string& capture_id) const {
  return config_.store_dir / "captures" / capture_id;
}

Prediction IdentificationService::identify(const ModelParams& model, const Bytes& image) const {
  RawImage raw;
  try {
    raw = decode_image(image);
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("unprocessable image: ") + e.what());
  }
  const FeatureSpec& spec = model.feature_spec;
  const GrayImage gray = preprocess(raw, spec);
  if (gray.width < spec.patch_size || gray.height < spec.patch_size) {
    fail(ErrorCode::kFormat, "unprocessable image: smaller than the model patch size " + std::to_string(spec.patch_size));
  }
  return predict(model, extract_features(gray, spec));
}

SubmitOutcome IdentificationService::submit(const IdentifyRequest& request) {
  const auto started = std::chrono::steady_clock::now();
  const TimePoint received = Clock::now();
  if (!is_uuid(request.capture_id)) fail(ErrorCode::kInvalidArgument, "malformed capture_id '" + request.capture_id + "'");
  if (!request.metadata.capture_id.empty() && request.metadata.capture_id != request.capture_id) {
    fail(ErrorCode::kInvalidArgument, "metadata.capture_id does not match capture_id");
  }
  CaptureMetadata meta = request.metadata;
  meta.capture_id = request.capture_id;
  validate(meta, received);
  if (request.image.size() > config_.max_image_bytes) {
    fail(ErrorCode::kTooLarge, "image of " + std::to_string(request.image.size()) + " bytes exceeds the limit of " +
                                   std::to_string(config_.max_image_bytes));
  }
  if (request.image.empty()) fail(ErrorCode::kFormat, "unprocessable image: empty payload");

  const auto mu = capture_lock(request.capture_id);
  struct Release {
    IdentificationService* self;
    const std::string& id;
    ~Release() { self->release_capture_lock(id); }
  } release{this, request.capture_id};
  std::lock_guard guard(*mu);

  const fs::path dir = capture_dir(request.capture_id);
  if (fs::exists(dir / "result.json")) {
    SubmitOutcome out;
    out.replayed = true;
    out.body = read_text_file(dir / "result.json");
    out.result = result_from_json(Json::parse(out.body));
    const fs::path image = fs::exists(dir / "image.png") ? dir / "image.png" : dir / "image.jpg";
    if (read_file(image) != request.image) {
      out.result.mismatch_flag = true;
      out.body = to_json(out.result).dump();
    }
    return out;
  }

  const auto model = this->model();
  if (!model) fail(ErrorCode::kUnavailable, "no model loaded");
  const Prediction prediction = identify(*model, request.image);

  IdentifyResult result;
  result.capture_id = request.capture_id;
  result.model_version = model->version;
  for (const auto& entry : top_k(prediction, std::min(config_.k, prediction.ranked.size()))) {
    const TimberClass* info = taxonomy_.find(entry.class_id);
    result.predictions.push_back({entry.class_id, info ? info->trade_name : entry.class_id, entry.probability});
  }
  result.received_at = format_rfc3339(received);
  result.server_latency_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();

  SubmitOutcome out;
  out.result = result;
  out.body = to_json(result).dump();

  Json ranking = Json::array();
  for (const auto& r : prediction.ranked) ranking.push_back(Json{{"class_id", r.class_id}, {"probability", r.probability}});
  const bool jpeg = sniff_format(request.image) == ImageFormat::kJpeg;
  const fs::path tmp = config_.store_dir / "tmp" / (request.capture_id + "." + make_uuid().substr(0, 8));
  std::error_code ec;
  fs::create_directories(tmp, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + tmp.string());
  try {
    write_file_atomic(tmp / (jpeg ? "image.jpg" : "image.png"), request.image);
    write_file_atomic(tmp / "meta.json", to_json(meta).dump());
    write_file_atomic(tmp / "ranking.json",
                      Json{{"model_version", model->version}, {"ranking", std::move(ranking)}}.dump());
    write_file_atomic(tmp / "result.json", out.body);
    fsync_directory(tmp);
    fs::rename(tmp, dir);
    fsync_directory(dir.parent_path());
  } catch (const fs::filesystem_error& e) {
    fs::remove_all(tmp, ec);
    fail(ErrorCode::kIo, std::string("cannot persist result: ") + e.what());
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  return out;
}

std::optional<std::string> IdentificationService::get_result(const std::string& capture_id) const {
  if (!is_uuid(capture_id)) return std::nullopt;
  const fs::path path = capture_dir(capture_id) / "result.json";
  if (!fs::exists(path)) return std::nullopt;
  return read_text_file(path);
}

Prediction IdentificationService::replay(const std::string& capture_id) const {
  const fs::path dir = capture_dir(capture_id);
  if (!is_uuid(capture_id) || !fs::exists(dir)) fail(ErrorCode::kNotFound, "unknown capture_id '" + capture_id + "'");
  const auto model = this->model();
  if (!model) fail(ErrorCode::kUnavailable, "no model loaded");
  const fs::path image = fs::exists(dir / "image.png") ? dir / "image.png" : dir / "image.jpg";
  return identify(*model, read_file(image));
}

Json IdentificationService::model_info() const {
  const auto model = this->model();
  if (!model) fail(ErrorCode::kUnavailable, "no model loaded");
  return Json{{"model_version", model->version},
              {"class_count", model->classes()},
              {"feature_spec_hash", spec_hash(model->feature_spec)},
              {"trained_at", format_rfc3339(model->trained_at)}};
}

Health IdentificationService::health() const {
  Health h;
  if (!model()) h.problems.push_back("no model loaded");
  const fs::path probe = config_.store_dir / "tmp" / (".probe-" + make_uuid().substr(0, 8));
  {
    std::ofstream out(probe);
    out << "ok";
    if (!out) h.problems.push_back("store directory is not writable");
  }
  std::error_code ec;
  fs::remove(probe, ec);
  h.ok = h.problems.empty();
  return h;
}

std::size_t IdentificationService::artifact_count() const {
  std::size_t n = 0;
  std::error_code ec;
  for (const auto& entry : fs::directory_iterator(config_.store_dir / "captures", ec)) n += entry.is_directory();
  return n;
}

}  // namespace xylid
