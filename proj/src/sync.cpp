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

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>

#include "xylid/client.hpp"
#include "xylid/error.hpp"

namespace xylid {

void validate(const SyncConfig& c) {
  if (c.max_attempts < 0) fail(ErrorCode::kInvalidArgument, "max_attempts must be >= 0");
  if (c.backoff_base_ms < 0 || c.backoff_cap_ms < c.backoff_base_ms) {
    fail(ErrorCode::kInvalidArgument, "backoff must satisfy 0 <= base <= cap");
  }
  if (!(c.jitter_fraction >= 0 && c.jitter_fraction < 1)) fail(ErrorCode::kInvalidArgument, "jitter must lie in [0, 1)");
  if (c.request_timeout_ms <= 0) fail(ErrorCode::kInvalidArgument, "request timeout must be positive");
}

std::chrono::milliseconds backoff_delay(const SyncConfig& config, int attempt) {
  const double raw = std::ldexp(static_cast<double>(config.backoff_base_ms), std::clamp(attempt, 1, 62) - 1);
  return std::chrono::milliseconds(static_cast<std::int64_t>(std::min<double>(raw, config.backoff_cap_ms)));
}

namespace {

class SyncLock {
 public:
  explicit SyncLock(const std::filesystem::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) fail(ErrorCode::kIo, "cannot open " + path.string());
    if (::flock(fd_, LOCK_EX | LOCK_NB) != 0) {
      ::close(fd_);
      fail(ErrorCode::kUnavailable, "another sync worker holds " + path.string());
    }
  }
  ~SyncLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }

 private:
  int fd_ = -1;
};

bool retryable_status(int status) { return status >= 500 || status == 408 || status == 429; }

std::string error_message(const TransportResponse& r) {
  try {
    const Json j = Json::parse(r.body);
    return "HTTP " + std::to_string(r.status) + " " + j.value("error_code", "") + ": " + j.value("message", "");
  } catch (const std::exception&) {
    return "HTTP " + std::to_string(r.status);
  }
}

}  // namespace

SyncReport sync(QueueStore& store, Transport& transport, const SyncConfig& config, SyncClock& clock) {
  validate(config);
  SyncLock lock(store.root() / "sync.lock");
  store.refresh();
  std::mt19937_64 rng(config.seed ? *config.seed : std::random_device{}());
  std::uniform_real_distribution<double> jitter(-config.jitter_fraction, config.jitter_fraction);

  // Leftovers from an interrupted capture or sync; the server is idempotent,
  // so re-uploading an UPLOADING record is safe.
  for (const auto& r : store.records()) {
    if (r.state == CaptureState::kCaptured) store.transition(r.capture_id, CaptureState::kQueued);
    if (r.state == CaptureState::kUploading) {
      store.transition(r.capture_id, CaptureState::kQueued, "upload interrupted");
    }
  }
  std::vector<CaptureRecord> queue;
  for (auto& r : store.records()) {
    if (r.state == CaptureState::kQueued) queue.push_back(std::move(r));
  }
  std::stable_sort(queue.begin(), queue.end(), [](const CaptureRecord& a, const CaptureRecord& b) {
    return a.metadata.captured_at < b.metadata.captured_at;
  });

  SyncReport report;
  std::chrono::milliseconds pending{0};
  for (const auto& queued : queue) {
    IdentifyRequest request{queued.capture_id, store.image_bytes(queued), queued.metadata};
    for (;;) {
      if (pending.count() > 0) clock.sleep_for(pending);
      pending = std::chrono::milliseconds(0);
      const CaptureRecord rec = store.transition(queued.capture_id, CaptureState::kUploading);
      ++report.uploads;
      std::string error;
      try {
        const TransportResponse response = transport.identify(request);
        if (response.status == 200) {
          try {
            if (result_from_json(Json::parse(response.body)).capture_id != rec.capture_id) {
              fail(ErrorCode::kFormat, "capture_id mismatch");
            }
          } catch (const std::exception& e) {
            error = std::string("malformed response: ") + e.what();
          }
          if (error.empty()) {
            store.transition(rec.capture_id, CaptureState::kIdentified, std::nullopt, response.body);
            ++report.identified;
            break;
          }
        } else if (!retryable_status(response.status)) {
          store.transition(rec.capture_id, CaptureState::kFailed, error_message(response));
          ++report.failed;
          break;
        } else {
          error = error_message(response);
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kTransport) throw;
        error = e.what();
      }
      const auto base = backoff_delay(config, rec.attempts);
      pending = std::chrono::milliseconds(std::llround(static_cast<double>(base.count()) * (1 + jitter(rng))));
      if (config.max_attempts > 0 && rec.attempts >= config.max_attempts) {
        store.transition(rec.capture_id, CaptureState::kFailed, error);
        ++report.failed;
        break;
      }
      store.transition(rec.capture_id, CaptureState::kQueued, error);
    }
  }
  for (const auto& r : store.records()) {
    report.remaining += r.state != CaptureState::kIdentified && r.state != CaptureState::kFailed;
  }
  return report;
}

SyncReport sync(QueueStore& store, const SyncConfig& config) {
  HttpTransport transport(config.server_url, config.request_timeout_ms);
  RealClock clock;
  return sync(store, transport, config, clock);
}

}  // namespace xylid
