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

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "xylid/classifier.hpp"
#include "xylid/evaluation.hpp"
#include "xylid/taxonomy.hpp"
#include "xylid/util.hpp"

namespace xylid {

using Json = nlohmann::ordered_json;

inline constexpr auto kClockSkewTolerance = std::chrono::seconds(300);

struct CaptureMetadata {
  std::string capture_id;
  std::string device_id;
  TimePoint captured_at{};
  std::optional<double> magnification;
};

/// Throws Error(kInvalidArgument) on a malformed id, an empty device id, a
/// non-positive magnification or a capture time more than the skew
/// tolerance ahead of `now`.
void validate(const CaptureMetadata& meta, TimePoint now);
Json to_json(const CaptureMetadata& meta);
CaptureMetadata metadata_from_json(const Json& j);

struct IdentifyRequest {
  std::string capture_id;
  Bytes image;
  CaptureMetadata metadata;
};

struct ResultEntry {
  std::string class_id;
  std::string trade_name;
  double probability = 0.0;
  bool operator==(const ResultEntry&) const = default;
};

/// Response body of POST /v1/identify and GET /v1/results/{id}. Fields, in
/// this order: capture_id, model_version, predictions[{class_id, trade_name,
/// probability}], mismatch_flag, server_latency_ms, received_at.
struct IdentifyResult {
  std::string capture_id;
  std::string model_version;
  std::vector<ResultEntry> predictions;
  bool mismatch_flag = false;
  double server_latency_ms = 0.0;
  std::string received_at;
  bool operator==(const IdentifyResult&) const = default;
};

Json to_json(const IdentifyResult& result);
IdentifyResult result_from_json(const Json& j);

Json error_json(const std::string& error_code, const std::string& message);

Json to_json(const TimberClass& c);
Json to_json(const Taxonomy& taxonomy);
Json to_json(const FeatureSpec& spec);
/// Stable report document: top1, top2, per_class_top1, class_ids, confusion,
/// within_family_error_fraction, family_error_denominator,
/// family_errors_excluded, top1_errors_truth_at_rank2, n_examples,
/// confusion_pairs, rank2_miss_pairs.
Json to_json(const EvalReport& report, const Taxonomy& taxonomy);
std::string render_report_table(const EvalReport& report, const Taxonomy& taxonomy);

}  // namespace xylid
