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

#include "xylid/wire.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "xylid/error.hpp"

namespace xylid {

namespace {

template <typename T>
T field(const Json& j, const char* name) {
  if (!j.is_object() || !j.contains(name)) fail(ErrorCode::kInvalidArgument, std::string("missing field '") + name + "'");
  try {
    return j.at(name).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kInvalidArgument, std::string("field '") + name + "' has the wrong type");
  }
}

}  // namespace

void validate(const CaptureMetadata& meta, TimePoint now) {
  if (!is_uuid(meta.capture_id)) fail(ErrorCode::kInvalidArgument, "malformed capture_id '" + meta.capture_id + "'");
  if (meta.device_id.empty()) fail(ErrorCode::kInvalidArgument, "device_id must be non-empty");
  if (meta.magnification && !(*meta.magnification > 0)) {
    fail(ErrorCode::kInvalidArgument, "magnification must be positive");
  }
  if (meta.captured_at > now + kClockSkewTolerance) {
    fail(ErrorCode::kInvalidArgument, "captured_at lies in the future beyond the clock-skew tolerance");
  }
}

Json to_json(const CaptureMetadata& meta) {
  Json j;
  j["capture_id"] = meta.capture_id;
  j["device_id"] = meta.device_id;
  j["captured_at"] = format_rfc3339(meta.captured_at);
  if (meta.magnification) j["magnification"] = *meta.magnification;
  return j;
}

CaptureMetadata metadata_from_json(const Json& j) {
  if (!j.is_object()) fail(ErrorCode::kInvalidArgument, "metadata must be a JSON object");
  CaptureMetadata m;
  if (j.contains("capture_id")) m.capture_id = field<std::string>(j, "capture_id");
  m.device_id = field<std::string>(j, "device_id");
  try {
    m.captured_at = parse_rfc3339(field<std::string>(j, "captured_at"));
  } catch (const Error& e) {
    fail(ErrorCode::kInvalidArgument, e.what());
  }
  if (j.contains("magnification") && !j["magnification"].is_null()) m.magnification = field<double>(j, "magnification");
  return m;
}

Json to_json(const IdentifyResult& r) {
  Json j;
  j["capture_id"] = r.capture_id;
  j["model_version"] = r.model_version;
  Json preds = Json::array();
  for (const auto& p : r.predictions) {
    preds.push_back(Json{{"class_id", p.class_id}, {"trade_name", p.trade_name}, {"probability", p.probability}});
  }
  j["predictions"] = std::move(preds);
  j["mismatch_flag"] = r.mismatch_flag;
  j["server_latency_ms"] = r.server_latency_ms;
  j["received_at"] = r.received_at;
  return j;
}

IdentifyResult result_from_json(const Json& j) {
  IdentifyResult r;
  r.capture_id = field<std::string>(j, "capture_id");
  r.model_version = field<std::string>(j, "model_version");
  for (const auto& p : field<Json>(j, "predictions")) {
    r.predictions.push_back({field<std::string>(p, "class_id"), field<std::string>(p, "trade_name"),
                             field<double>(p, "probability")});
  }
  r.mismatch_flag = field<bool>(j, "mismatch_flag");
  r.server_latency_ms = field<double>(j, "server_latency_ms");
  r.received_at = field<std::string>(j, "received_at");
  return r;
}

Json error_json(const std::string& error_code, const std::string& message) {
  return Json{{"error_code", error_code}, {"message", message}};
}

Json to_json(const TimberClass& c) {
  Json j;
  j["class_id"] = c.class_id;
  j["trade_name"] = c.trade_name;
  j["genus"] = c.genus ? Json(*c.genus) : Json(nullptr);
  j["family"] = c.family ? Json(*c.family) : Json(nullptr);
  j["description"] = c.description ? Json(*c.description) : Json(nullptr);
  return j;
}

Json to_json(const Taxonomy& taxonomy) {
  Json classes = Json::array();
  for (const auto& c : taxonomy.classes()) classes.push_back(to_json(c));
  return Json{{"version", taxonomy.version()}, {"count", taxonomy.size()}, {"classes", std::move(classes)}};
}

Json to_json(const FeatureSpec& s) {
  Json offsets = Json::array();
  for (const auto& o : s.glcm_offsets) offsets.push_back(Json::array({o.dx, o.dy}));
  return Json{{"lbp_radius", s.lbp_radius},     {"lbp_neighbors", s.lbp_neighbors},
              {"glcm_levels", s.glcm_levels},   {"glcm_offsets", std::move(offsets)},
              {"patch_size", s.patch_size},     {"patch_stride", s.patch_stride},
              {"illumination_tile", s.illumination_tile}, {"spec_hash", spec_hash(s)}};
}

namespace {

Json pairs_json(const std::vector<ConfusionPair>& pairs) {
  Json out = Json::array();
  for (const auto& p : pairs) {
    out.push_back(Json{{"truth", p.truth}, {"predicted", p.predicted}, {"count", p.count}, {"same_family", p.same_family}});
  }
  return out;
}

}  // namespace

Json to_json(const EvalReport& r, const Taxonomy& taxonomy) {
  Json j;
  j["top1"] = r.top1;
  j["top2"] = r.top2;
  Json per_class = Json::object();
  for (const auto& id : r.class_ids) {
    const auto it = r.per_class_top1.find(id);
    if (it != r.per_class_top1.end()) per_class[id] = it->second;
  }
  j["per_class_top1"] = std::move(per_class);
  j["class_ids"] = r.class_ids;
  j["confusion"] = r.confusion;
  j["within_family_error_fraction"] =
      r.within_family_error_fraction ? Json(*r.within_family_error_fraction) : Json(nullptr);
  j["family_error_denominator"] = r.family_error_denominator;
  j["family_errors_excluded"] = r.family_errors_excluded;
  j["top1_errors_truth_at_rank2"] = r.top1_errors_truth_at_rank2;
  j["n_examples"] = r.n_examples;
  j["confusion_pairs"] = pairs_json(family_confusion_pairs(r, taxonomy));
  j["rank2_miss_pairs"] = pairs_json(rank2_miss_pairs(r, taxonomy));
  return j;
}

std::string render_report_table(const EvalReport& r, const Taxonomy& taxonomy) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "examples            %llu\n", static_cast<unsigned long long>(r.n_examples));
  out << line;
  std::snprintf(line, sizeof line, "top-1 accuracy      %.4f\n", r.top1);
  out << line;
  std::snprintf(line, sizeof line, "top-2 accuracy      %.4f\n", r.top2);
  out << line;
  if (r.within_family_error_fraction) {
    std::snprintf(line, sizeof line, "within-family errors %.4f (%llu errors with families, %llu excluded)\n",
                  *r.within_family_error_fraction, static_cast<unsigned long long>(r.family_error_denominator),
                  static_cast<unsigned long long>(r.family_errors_excluded));
  } else {
    std::snprintf(line, sizeof line, "within-family errors n/a (%llu excluded)\n",
                  static_cast<unsigned long long>(r.family_errors_excluded));
  }
  out << line;
  const auto pairs = family_confusion_pairs(r, taxonomy);
  if (!pairs.empty()) {
    out << "\nconfusions (truth -> predicted)\n";
    for (const auto& p : pairs) {
      std::snprintf(line, sizeof line, "  %-22s -> %-22s %5llu%s\n", p.truth.c_str(), p.predicted.c_str(),
                    static_cast<unsigned long long>(p.count), p.same_family ? "  same family" : "");
      out << line;
    }
  }
  return out.str();
}

}  // namespace xylid
