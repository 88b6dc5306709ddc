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

#include "xylid/client.hpp"
#include "xylid/error.hpp"
#include "xylid/imaging.hpp"
#include "xylid/service.hpp"

namespace xylid {

HttpTransport::HttpTransport(std::string server_url, int timeout_ms) : url_(std::move(server_url)), timeout_ms_(timeout_ms) {
  while (!url_.empty() && url_.back() == '/') url_.pop_back();
  if (!httplib::Client(url_).is_valid()) fail(ErrorCode::kInvalidArgument, "invalid server URL '" + url_ + "'");
}

TransportResponse HttpTransport::identify(const IdentifyRequest& request) {
  httplib::Client client(url_);
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  const bool jpeg = sniff_format(request.image) == ImageFormat::kJpeg;
  httplib::MultipartFormDataItems items{
      {"capture_id", request.capture_id, "", ""},
      {"metadata", to_json(request.metadata).dump(), "", "application/json"},
      {"image", std::string(request.image.begin(), request.image.end()), jpeg ? "capture.jpg" : "capture.png",
       jpeg ? "image/jpeg" : "image/png"},
  };
  const auto res = client.Post("/v1/identify", items);
  if (!res) fail(ErrorCode::kTransport, "POST " + url_ + "/v1/identify: " + httplib::to_string(res.error()));
  return {res->status, res->body};
}

TransportResponse InProcessTransport::identify(const IdentifyRequest& request) {
  try {
    return {200, service_.submit(request).body};
  } catch (const Error& e) {
    return {http_status_for(e.code()), error_json(to_string(e.code()), e.what()).dump()};
  }
}

void validate(const FaultSpec& spec) {
  for (double p : {spec.drop_request_p, spec.drop_response_p, spec.duplicate_response_p}) {
    if (!(p >= 0 && p <= 1)) fail(ErrorCode::kInvalidArgument, "fault probabilities must lie in [0, 1]");
  }
  if (spec.delay_min_ms < 0 || spec.delay_max_ms < spec.delay_min_ms) {
    fail(ErrorCode::kInvalidArgument, "delay range must satisfy 0 <= min <= max");
  }
  for (const auto& [start, end] : spec.partitions) {
    if (end < start) fail(ErrorCode::kInvalidArgument, "partition window ends before it starts");
  }
}

FaultyTransport::FaultyTransport(Transport& inner, FaultSpec spec, SyncClock& clock, int timeout_ms)
    : inner_(inner), spec_(std::move(spec)), clock_(clock), timeout_ms_(timeout_ms), origin_(clock.now()),
      rng_(spec_.seed) {
  validate(spec_);
}

FaultStats FaultyTransport::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

TransportResponse FaultyTransport::identify(const IdentifyRequest& request) {
  const auto timeout = std::chrono::milliseconds(timeout_ms_);
  bool drop_request, drop_response, duplicate;
  std::chrono::milliseconds delay{0};
  {
    // A fixed number of draws per call keeps runs reproducible.
    std::lock_guard lock(mu_);
    std::uniform_real_distribution<double> u(0, 1);
    std::uniform_int_distribution<int> d(spec_.delay_min_ms, spec_.delay_max_ms);
    drop_request = u(rng_) < spec_.drop_request_p;
    drop_response = u(rng_) < spec_.drop_response_p;
    duplicate = u(rng_) < spec_.duplicate_response_p;
    delay = std::chrono::milliseconds(d(rng_));
    ++stats_.requests;
    const auto t = std::chrono::duration_cast<std::chrono::milliseconds>(clock_.now() - origin_);
    for (const auto& [start, end] : spec_.partitions) {
      if (t >= start && t < end) {
        ++stats_.partitioned;
        fail(ErrorCode::kTransport, "network partitioned: connection refused");
      }
    }
    if (drop_request) ++stats_.dropped_requests;
  }
  if (drop_request) {
    clock_.sleep_for(timeout);
    fail(ErrorCode::kTransport, "request lost: timed out");
  }
  TransportResponse response = inner_.identify(request);
  if (duplicate) response = inner_.identify(request);
  std::lock_guard lock(mu_);
  if (duplicate) ++stats_.duplicated;
  if (drop_response || delay >= timeout) {
    drop_response ? ++stats_.dropped_responses : ++stats_.timeouts;
    clock_.sleep_for(timeout);
    fail(ErrorCode::kTransport, "response lost: timed out");
  }
  if (delay.count() > 0) clock_.sleep_for(delay);
  ++stats_.delivered;
  return response;
}

}  // namespace xylid
