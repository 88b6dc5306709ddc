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
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace xylid {

using Bytes = std::vector<std::uint8_t>;
using Clock = std::chrono::system_clock;
using TimePoint = Clock::time_point;

// Hashing / checksums.
std::uint32_t crc32(std::span<const std::uint8_t> data);
std::uint32_t crc32(std::string_view text);
std::uint64_t fnv1a64(std::string_view text);
std::string hex32(std::uint32_t v);
std::string hex64(std::uint64_t v);

// RFC 3339 timestamps in UTC with millisecond precision, e.g.
// "2024-01-05T10:20:30.123Z". Parsing also accepts numeric offsets.
std::string format_rfc3339(TimePoint t);
TimePoint parse_rfc3339(std::string_view text);

/// Random version-4 UUID in canonical lowercase text form.
std::string make_uuid();
bool is_uuid(std::string_view text);

std::string base64_encode(std::span<const std::uint8_t> data);
Bytes base64_decode(std::string_view text);

Bytes read_file(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file, fsync, then rename. The destination is
/// either the old content or the complete new content after a crash.
void write_file_atomic(const std::filesystem::path& path,
                       std::span<const std::uint8_t> data);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);
void fsync_directory(const std::filesystem::path& dir);

/// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown is rethrown after all workers
/// stop.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, unsigned threads = 0);

}  // namespace xylid
