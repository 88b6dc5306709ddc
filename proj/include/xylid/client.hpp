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

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "xylid/util.hpp"
#include "xylid/wire.hpp"

namespace xylid {

class IdentificationService;

enum class CaptureState { kCaptured, kQueued, kUploading, kIdentified, kFailed };

std::string to_string(CaptureState s);
/// Accepts the upper-case journal spelling ("QUEUED").
CaptureState capture_state_from_string(std::string_view text);
bool is_legal_transition(std::optional<CaptureState> from, CaptureState to);

struct CaptureRecord {
  std::string capture_id;
  std::filesystem::path image_ref;
  CaptureMetadata metadata;
  CaptureState state = CaptureState::kCaptured;
  int attempts = 0;
  std::optional<std::string> last_error;
  /// Present iff state == kIdentified.
  std::optional<IdentifyResult> result;
  /// Result body exactly as the server sent it.
  std::string result_body;
  std::uint64_t seq = 0;  // journal seq of the latest transition
};

// --- clocks -----------------------------------------------------------------

class SyncClock {
 public:
  virtual ~SyncClock() = default;
  virtual TimePoint now() = 0;
  virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class RealClock final : public SyncClock {
 public:
  TimePoint now() override { return Clock::now(); }
  void sleep_for(std::chrono::milliseconds d) override;
};

/// Never blocks; sleeping advances time and is recorded.
class FakeClock final : public SyncClock {
 public:
  explicit FakeClock(TimePoint start = TimePoint{} + std::chrono::hours(24 * 365 * 56));
  TimePoint now() override;
  void sleep_for(std::chrono::milliseconds d) override;
  void advance(std::chrono::milliseconds d);
  std::vector<std::chrono::milliseconds> sleeps() const;

 private:
  mutable std::mutex mu_;
  TimePoint now_;
  std::vector<std::chrono::milliseconds> sleeps_;
};

// --- queue store ------------------------------------------------------------

/// Journal line: `<seq> <capture_id> <STATE> <rfc3339> <attempts> <crc32>`
/// where the checksum covers everything before its separating space.
std::string format_journal_line(std::uint64_t seq, const std::string& capture_id, CaptureState state, TimePoint at,
                                int attempts);

struct OpenReport {
  std::size_t records = 0;
  /// Set when a torn (unterminated) final line was discarded.
  std::optional<std::string> warning;
};

/// Crash-safe local capture queue.  Files are written before the journal line
/// that refers to them; the journal is the only source of truth for state.
/// Complete lines with a bad checksum, sequence or transition raise
/// kCorruption and are never repaired.
class QueueStore {
 public:
  static std::unique_ptr<QueueStore> open(const std::filesystem::path& root, SyncClock* clock = nullptr);
  ~QueueStore();

  const std::filesystem::path& root() const { return root_; }
  const OpenReport& open_report() const { return report_; }

  /// Rejects undecodable images; durable (QUEUED) before returning.
  CaptureRecord capture(const Bytes& image, const std::string& device_id, std::optional<double> magnification = {});

  std::optional<CaptureRecord> get(const std::string& capture_id);
  /// Sorted by captured_at descending.
  std::vector<CaptureRecord> gallery(std::optional<CaptureState> filter = {});
  /// All records in the order they were first journaled.
  std::vector<CaptureRecord> records();
  std::size_t size();

  /// Appends one transition.  Throws kInvalidArgument on illegal moves.
  CaptureRecord transition(const std::string& capture_id, CaptureState to, std::optional<std::string> error = {},
                           std::optional<std::string> result_body = {});

  Bytes image_bytes(const CaptureRecord& record) const;
  std::filesystem::path journal_path() const { return root_ / "journal"; }
  /// Picks up lines appended by other processes.
  void refresh();

 private:
  QueueStore(std::filesystem::path root, SyncClock* clock);
  void replay_from(std::uint64_t offset, bool initial);
  void apply_line(const std::string& line, std::size_t line_no);
  CaptureRecord load_files(const std::string& capture_id) const;
  void append_locked(const std::string& capture_id, CaptureState to, int attempts);

  std::filesystem::path root_;
  SyncClock* clock_;
  RealClock real_clock_;
  int journal_fd_ = -1;
  std::uint64_t offset_ = 0;  // bytes of journal already applied
  std::uint64_t last_seq_ = 0;
  std::mutex mu_;
  std::vector<std::string> order_;  // capture ids in first-journal order
  std::unordered_map<std::string, CaptureRecord> records_;
  OpenReport report_;
};

// --- transports -------------------------------------------------------------

struct TransportResponse {
  int status = 0;
  std::string body;
};

/// Throws Error(kTransport) when no response arrives.
class Transport {
 public:
  virtual ~Transport() = default;
  virtual TransportResponse identify(const IdentifyRequest& request) = 0;
};

/// Multipart POST /v1/identify against a live server.
class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string server_url, int timeout_ms = 10000);
  TransportResponse identify(const IdentifyRequest& request) override;

 private:
  std::string url_;
  int timeout_ms_;
};

/// Calls the service directly, translating errors to HTTP statuses.
class InProcessTransport final : public Transport {
 public:
  explicit InProcessTransport(IdentificationService& service) : service_(service) {}
  TransportResponse identify(const IdentifyRequest& request) override;

 private:
  IdentificationService& service_;
};

struct FaultSpec {
  double drop_request_p = 0;
  double drop_response_p = 0;
  /// The request reaches the server twice; the second response is returned.
  double duplicate_response_p = 0;
  int delay_min_ms = 0;
  int delay_max_ms = 0;
  /// [start, end) offsets from transport creation, in clock time.
  std::vector<std::pair<std::chrono::milliseconds, std::chrono::milliseconds>> partitions;
  std::uint64_t seed = 1;
};

void validate(const FaultSpec& spec);

struct FaultStats {
  std::size_t requests = 0, delivered = 0, dropped_requests = 0, dropped_responses = 0, duplicated = 0,
              partitioned = 0, timeouts = 0;
};

/// Deterministic (given the seed) lossy network in front of another transport.
class FaultyTransport final : public Transport {
 public:
  FaultyTransport(Transport& inner, FaultSpec spec, SyncClock& clock, int timeout_ms = 10000);
  TransportResponse identify(const IdentifyRequest& request) override;
  FaultStats stats() const;

 private:
  Transport& inner_;
  FaultSpec spec_;
  SyncClock& clock_;
  int timeout_ms_;
  TimePoint origin_;
  std::mt19937_64 rng_;
  mutable std::mutex mu_;
  FaultStats stats_;
};

// --- sync -------------------------------------------------------------------

struct SyncConfig {
  std::string server_url = "http://127.0.0.1:8080";
  /// 0 retries forever.
  int max_attempts = 8;
  int backoff_base_ms = 500;
  int backoff_cap_ms = 30000;
  double jitter_fraction = 0.2;
  int request_timeout_ms = 10000;
  std::optional<std::uint64_t> seed;
};

void validate(const SyncConfig& config);

/// Un-jittered delay after the `attempt`-th failure (1-based).
std::chrono::milliseconds backoff_delay(const SyncConfig& config, int attempt);

struct SyncReport {
  std::size_t identified = 0;
  std::size_t failed = 0;
  std::size_t remaining = 0;
  std::size_t uploads = 0;
};

/// One worker per store (advisory lock `sync.lock`).  Records are processed
/// oldest capture first; a transport failure delays the next request of any
/// record by the backoff of the failing record's attempt count.
SyncReport sync(QueueStore& store, Transport& transport, const SyncConfig& config, SyncClock& clock);
SyncReport sync(QueueStore& store, const SyncConfig& config);

}  // namespace xylid
