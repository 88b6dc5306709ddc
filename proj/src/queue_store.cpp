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
#include <cerrno>
#include <charconv>
#include <cstring>
#include <sstream>
#include <thread>

#include "xylid/client.hpp"
#include "xylid/error.hpp"
#include "xylid/imaging.hpp"

namespace xylid {

namespace fs = std::filesystem;

std::string to_string(CaptureState s) {
  switch (s) {
    case CaptureState::kCaptured: return "CAPTURED";
    case CaptureState::kQueued: return "QUEUED";
    case CaptureState::kUploading: return "UPLOADING";
    case CaptureState::kIdentified: return "IDENTIFIED";
    case CaptureState::kFailed: return "FAILED";
  }
  return "?";
}

CaptureState capture_state_from_string(std::string_view text) {
  for (auto s : {CaptureState::kCaptured, CaptureState::kQueued, CaptureState::kUploading, CaptureState::kIdentified,
                 CaptureState::kFailed}) {
    if (to_string(s) == text) return s;
  }
  fail(ErrorCode::kInvalidArgument, "unknown capture state '" + std::string(text) + "'");
}

bool is_legal_transition(std::optional<CaptureState> from, CaptureState to) {
  if (!from) return to == CaptureState::kCaptured;
  switch (*from) {
    case CaptureState::kCaptured: return to == CaptureState::kQueued;
    case CaptureState::kQueued: return to == CaptureState::kUploading;
    case CaptureState::kUploading:
      return to == CaptureState::kIdentified || to == CaptureState::kQueued || to == CaptureState::kFailed;
    default: return false;
  }
}

void RealClock::sleep_for(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

FakeClock::FakeClock(TimePoint start) : now_(start) {}

TimePoint FakeClock::now() {
  std::lock_guard lock(mu_);
  return now_;
}

void FakeClock::sleep_for(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  now_ += d;
  sleeps_.push_back(d);
}

void FakeClock::advance(std::chrono::milliseconds d) {
  std::lock_guard lock(mu_);
  now_ += d;
}

std::vector<std::chrono::milliseconds> FakeClock::sleeps() const {
  std::lock_guard lock(mu_);
  return sleeps_;
}

std::string format_journal_line(std::uint64_t seq, const std::string& capture_id, CaptureState state, TimePoint at,
                                int attempts) {
  std::string text = std::to_string(seq) + " " + capture_id + " " + to_string(state) + " " + format_rfc3339(at) +
                     " " + std::to_string(attempts);
  return text + " " + hex32(crc32(text));
}

namespace {

class FileLock {
 public:
  FileLock(int fd, int op) : fd_(fd) {
    while (::flock(fd_, op) != 0) {
      if (errno == EINTR) continue;
      if (errno == EWOULDBLOCK) fail(ErrorCode::kUnavailable, "store is locked by another process");
      fail(ErrorCode::kIo, std::string("flock: ") + std::strerror(errno));
    }
  }
  ~FileLock() { ::flock(fd_, LOCK_UN); }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_;
};

void write_all(int fd, std::string_view data) {
  while (!data.empty()) {
    const ssize_t n = ::write(fd, data.data(), data.size());
    if (n < 0) {
      if (errno == EINTR) continue;
      fail(ErrorCode::kIo, std::string("journal write: ") + std::strerror(errno));
    }
    data.remove_prefix(static_cast<std::size_t>(n));
  }
}

const char* image_extension(const Bytes& image) {
  return sniff_format(image) == ImageFormat::kJpeg ? "jpg" : "png";
}

}  // namespace

QueueStore::QueueStore(fs::path root, SyncClock* clock) : root_(std::move(root)), clock_(clock ? clock : &real_clock_) {}

QueueStore::~QueueStore() {
  if (journal_fd_ >= 0) ::close(journal_fd_);
}

std::unique_ptr<QueueStore> QueueStore::open(const fs::path& root, SyncClock* clock) {
  std::unique_ptr<QueueStore> store(new QueueStore(root, clock));
  std::error_code ec;
  fs::create_directories(root / "captures", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create store at " + root.string() + ": " + ec.message());
  store->journal_fd_ = ::open(store->journal_path().c_str(), O_RDWR | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (store->journal_fd_ < 0) fail(ErrorCode::kIo, "cannot open " + store->journal_path().string());
  FileLock lock(store->journal_fd_, LOCK_EX);
  store->replay_from(0, true);
  store->report_.records = store->records_.size();
  return store;
}

void QueueStore::replay_from(std::uint64_t offset, bool initial) {
  const off_t end = ::lseek(journal_fd_, 0, SEEK_END);
  if (end < 0) fail(ErrorCode::kIo, "cannot seek journal");
  if (static_cast<std::uint64_t>(end) <= offset) return;
  std::string data(static_cast<std::size_t>(end) - offset, '\0');
  std::size_t got = 0;
  while (got < data.size()) {
    const ssize_t n = ::pread(journal_fd_, data.data() + got, data.size() - got, static_cast<off_t>(offset + got));
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) fail(ErrorCode::kIo, "cannot read journal");
    got += static_cast<std::size_t>(n);
  }
  std::size_t pos = 0;
  std::size_t line_no = static_cast<std::size_t>(last_seq_);
  while (pos < data.size()) {
    const std::size_t nl = data.find('\n', pos);
    if (nl == std::string::npos) {
      // Unterminated tail: an append interrupted by a crash.  We hold the
      // journal lock, so no live writer can own it.
      const std::uint64_t keep = offset + pos;
      if (::ftruncate(journal_fd_, static_cast<off_t>(keep)) != 0) fail(ErrorCode::kIo, "cannot truncate torn journal");
      ::fsync(journal_fd_);
      std::ostringstream msg;
      msg << "discarded torn journal tail of " << (data.size() - pos) << " bytes after line " << line_no;
      if (initial || !report_.warning) report_.warning = msg.str();
      break;
    }
    apply_line(data.substr(pos, nl - pos), ++line_no);
    pos = nl + 1;
    offset_ = offset + pos;
  }
}

void QueueStore::apply_line(const std::string& line, std::size_t line_no) {
  const auto corrupt = [&](const std::string& why) {
    fail(ErrorCode::kCorruption, "journal line " + std::to_string(line_no) + ": " + why);
  };
  const std::size_t cut = line.rfind(' ');
  if (cut == std::string::npos) corrupt("malformed line");
  const std::string text = line.substr(0, cut);
  if (line.substr(cut + 1) != hex32(crc32(text))) corrupt("checksum mismatch");

  std::vector<std::string_view> tok;
  for (std::size_t p = 0; p <= text.size();) {
    const std::size_t q = std::min(text.find(' ', p), text.size());
    tok.emplace_back(text.data() + p, q - p);
    p = q + 1;
  }
  if (tok.size() != 5) corrupt("expected 6 fields");
  const auto number = [&](std::string_view t, auto& v) {
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
    if (ec != std::errc() || ptr != t.data() + t.size() || t.empty()) corrupt("malformed number '" + std::string(t) + "'");
  };
  std::uint64_t seq = 0;
  int attempts = 0;
  number(tok[0], seq);
  number(tok[4], attempts);
  const std::string id(tok[1]), state_text(tok[2]), at_text(tok[3]);
  if (attempts < 0) corrupt("negative attempt count");
  if (seq != last_seq_ + 1) corrupt("expected seq " + std::to_string(last_seq_ + 1) + ", got " + std::to_string(seq));
  if (!is_uuid(id)) corrupt("malformed capture_id");
  CaptureState to;
  try {
    to = capture_state_from_string(state_text);
    (void)parse_rfc3339(at_text);
  } catch (const Error& e) {
    corrupt(e.what());
  }

  const auto it = records_.find(id);
  const std::optional<CaptureState> from = it == records_.end() ? std::nullopt : std::optional(it->second.state);
  if (!is_legal_transition(from, to)) {
    corrupt("illegal transition " + (from ? to_string(*from) : std::string("(none)")) + " -> " + to_string(to));
  }
  const int prev_attempts = from ? it->second.attempts : 0;
  const int want = to == CaptureState::kUploading ? prev_attempts + 1 : prev_attempts;
  if (attempts != want) corrupt("attempt count " + std::to_string(attempts) + ", expected " + std::to_string(want));

  CaptureRecord rec;
  try {
    rec = from ? it->second : load_files(id);
  } catch (const Error& e) {
    corrupt(e.what());
  }
  rec.state = to;
  rec.attempts = attempts;
  rec.seq = seq;
  const fs::path dir = root_ / "captures" / id;
  if (to == CaptureState::kIdentified) {
    try {
      rec.result_body = read_text_file(dir / "result");
      rec.result = result_from_json(Json::parse(rec.result_body));
    } catch (const std::exception& e) {
      corrupt(std::string("unreadable result: ") + e.what());
    }
  } else {
    rec.result.reset();
    rec.result_body.clear();
  }
  if ((to == CaptureState::kQueued || to == CaptureState::kFailed) && fs::exists(dir / "error")) {
    rec.last_error = read_text_file(dir / "error");
  }
  if (!from) order_.push_back(id);
  records_[id] = std::move(rec);
  last_seq_ = seq;
}

CaptureRecord QueueStore::load_files(const std::string& capture_id) const {
  const fs::path dir = root_ / "captures" / capture_id;
  CaptureRecord rec;
  rec.capture_id = capture_id;
  for (const char* name : {"image.png", "image.jpg"}) {
    if (fs::exists(dir / name)) rec.image_ref = dir / name;
  }
  if (rec.image_ref.empty()) fail(ErrorCode::kCorruption, "image missing for capture " + capture_id);
  try {
    rec.metadata = metadata_from_json(Json::parse(read_text_file(dir / "meta")));
  } catch (const std::exception& e) {
    fail(ErrorCode::kCorruption, "metadata unreadable for capture " + capture_id + ": " + e.what());
  }
  return rec;
}

void QueueStore::refresh() {
  std::lock_guard guard(mu_);
  FileLock lock(journal_fd_, LOCK_SH);
  replay_from(offset_, false);
}

void QueueStore::append_locked(const std::string& capture_id, CaptureState to, int attempts) {
  const std::string line = format_journal_line(last_seq_ + 1, capture_id, to, clock_->now(), attempts);
  write_all(journal_fd_, line + "\n");
  if (::fdatasync(journal_fd_) != 0) fail(ErrorCode::kIo, "journal fsync failed");
  // Apply through the same path as replay so memory can never diverge.
  apply_line(line, static_cast<std::size_t>(last_seq_ + 1));
  offset_ += line.size() + 1;
}

CaptureRecord QueueStore::capture(const Bytes& image, const std::string& device_id,
                                  std::optional<double> magnification) {
  try {
    (void)decode_image(image);
  } catch (const Error& e) {
    fail(ErrorCode::kFormat, std::string("image rejected: ") + e.what());
  }
  CaptureMetadata meta;
  meta.capture_id = make_uuid();
  meta.device_id = device_id;
  meta.captured_at = clock_->now();
  meta.magnification = magnification;
  validate(meta, meta.captured_at);

  const fs::path dir = root_ / "captures" / meta.capture_id;
  fs::create_directories(dir);
  write_file_atomic(dir / (std::string("image.") + image_extension(image)), image);
  write_file_atomic(dir / "meta", to_json(meta).dump());
  fsync_directory(dir);
  fsync_directory(dir.parent_path());

  std::lock_guard guard(mu_);
  FileLock lock(journal_fd_, LOCK_EX);
  replay_from(offset_, false);
  append_locked(meta.capture_id, CaptureState::kCaptured, 0);
  append_locked(meta.capture_id, CaptureState::kQueued, 0);
  return records_.at(meta.capture_id);
}

CaptureRecord QueueStore::transition(const std::string& capture_id, CaptureState to, std::optional<std::string> error,
                                     std::optional<std::string> result_body) {
  std::lock_guard guard(mu_);
  FileLock lock(journal_fd_, LOCK_EX);
  replay_from(offset_, false);
  const auto it = records_.find(capture_id);
  if (it == records_.end()) fail(ErrorCode::kNotFound, "unknown capture " + capture_id);
  if (!is_legal_transition(it->second.state, to)) {
    fail(ErrorCode::kInvalidArgument, "illegal transition " + to_string(it->second.state) + " -> " + to_string(to));
  }
  const fs::path dir = root_ / "captures" / capture_id;
  if (to == CaptureState::kIdentified) {
    if (!result_body) fail(ErrorCode::kInvalidArgument, "IDENTIFIED requires a result");
    (void)result_from_json(Json::parse(*result_body));
    write_file_atomic(dir / "result", *result_body);
  }
  if (error) write_file_atomic(dir / "error", *error);
  const int attempts = it->second.attempts + (to == CaptureState::kUploading ? 1 : 0);
  append_locked(capture_id, to, attempts);
  return records_.at(capture_id);
}

std::optional<CaptureRecord> QueueStore::get(const std::string& capture_id) {
  std::lock_guard guard(mu_);
  const auto it = records_.find(capture_id);
  if (it == records_.end()) return std::nullopt;
  return it->second;
}

std::vector<CaptureRecord> QueueStore::records() {
  std::lock_guard guard(mu_);
  std::vector<CaptureRecord> out;
  out.reserve(order_.size());
  for (const auto& id : order_) out.push_back(records_.at(id));
  return out;
}

std::vector<CaptureRecord> QueueStore::gallery(std::optional<CaptureState> filter) {
  std::vector<CaptureRecord> out;
  for (auto& r : records()) {
    if (!filter || r.state == *filter) out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const CaptureRecord& a, const CaptureRecord& b) {
    return a.metadata.captured_at > b.metadata.captured_at;
  });
  return out;
}

std::size_t QueueStore::size() {
  std::lock_guard guard(mu_);
  return records_.size();
}

Bytes QueueStore::image_bytes(const CaptureRecord& record) const { return read_file(record.image_ref); }

}  // namespace xylid
