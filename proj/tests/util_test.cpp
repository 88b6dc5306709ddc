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

#include <gtest/gtest.h>

#include <atomic>

#include "test_support.hpp"
#include "xylid/error.hpp"
#include "xylid/util.hpp"

namespace xylid {
namespace {

TEST(Crc32, CheckValue) {
  // The standard CRC-32 check value.
  EXPECT_EQ(crc32(std::string_view("123456789")), 0xCBF43926u);
  EXPECT_EQ(hex32(0xCBF43926u), "cbf43926");
}

TEST(Rfc3339, RoundTripsMilliseconds) {
  const TimePoint t = parse_rfc3339("2024-01-02T03:04:05.678Z");
  EXPECT_EQ(format_rfc3339(t), "2024-01-02T03:04:05.678Z");
  EXPECT_EQ(parse_rfc3339("2024-01-02T05:04:05.678+02:00"), t);
  EXPECT_THROW(parse_rfc3339("yesterday"), Error);
}

TEST(Uuid, WellFormedAndDistinct) {
  const std::string a = make_uuid(), b = make_uuid();
  EXPECT_TRUE(is_uuid(a));
  EXPECT_NE(a, b);
  EXPECT_EQ(a[14], '4');
  EXPECT_FALSE(is_uuid("not-a-uuid"));
  EXPECT_FALSE(is_uuid("../../etc/passwd"));
}

TEST(Base64, RoundTrip) {
  for (std::size_t n = 0; n < 40; ++n) {
    Bytes data(n);
    for (std::size_t i = 0; i < n; ++i) data[i] = static_cast<std::uint8_t>(i * 37 + 5);
    EXPECT_EQ(base64_decode(base64_encode(data)), data) << n;
  }
  EXPECT_EQ(base64_encode(Bytes{'f', 'o', 'o'}), "Zm9v");
  EXPECT_THROW(base64_decode("Zm9"), Error);
}

TEST(AtomicWrite, ReplacesContent) {
  testing::TempDir dir;
  write_file_atomic(dir / "f", "one");
  write_file_atomic(dir / "f", "two");
  EXPECT_EQ(read_text_file(dir / "f"), "two");
  EXPECT_THROW(read_file(dir / "missing"), Error);
}

TEST(ParallelFor, VisitsEveryIndexAndPropagatesErrors) {
  std::vector<std::atomic<int>> seen(1000);
  parallel_for(seen.size(), [&](std::size_t i) { seen[i]++; }, 4);
  for (const auto& s : seen) EXPECT_EQ(s.load(), 1);
  EXPECT_THROW(parallel_for(10, [](std::size_t i) { if (i == 7) fail(ErrorCode::kIo, "boom"); }, 3), Error);
}

}  // namespace
}  // namespace xylid
