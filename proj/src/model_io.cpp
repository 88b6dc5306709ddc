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

#include <bit>
#include <cstring>

#include "xylid/classifier.hpp"
#include "xylid/error.hpp"

namespace xylid {

namespace {

static_assert(std::endian::native == std::endian::little, "model I/O assumes a little-endian host");

constexpr char kMagic[4] = {'X', 'Y', 'L', 'M'};

class Writer {
 public:
  void raw(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out_.insert(out_.end(), b, b + n);
  }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void i32(std::int32_t v) { raw(&v, 4); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    raw(s.data(), s.size());
  }
  Bytes take() { return std::move(out_); }
  const Bytes& bytes() const { return out_; }

 private:
  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> data) : data_(data) {}
  void raw(void* p, std::size_t n) {
    if (n > data_.size() - pos_) fail(ErrorCode::kFormat, "model file truncated at byte " + std::to_string(pos_));
    std::memcpy(p, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::int32_t i32() {
    std::int32_t v;
    raw(&v, 4);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > data_.size() - pos_) fail(ErrorCode::kFormat, "model file truncated in string field");
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

}  // namespace

Bytes serialize_model(const ModelParams& p) {
  validate(p);
  if (p.version.empty()) fail(ErrorCode::kInvalidArgument, "model version must be set before saving");
  Writer w;
  w.raw(kMagic, 4);
  w.u32(kModelFormatVersion);
  w.str(p.version);
  w.str(format_rfc3339(p.trained_at));
  const FeatureSpec& s = p.feature_spec;
  w.i32(s.lbp_radius);
  w.i32(s.lbp_neighbors);
  w.i32(s.glcm_levels);
  w.i32(static_cast<std::int32_t>(s.glcm_offsets.size()));
  for (const auto& o : s.glcm_offsets) {
    w.i32(o.dx);
    w.i32(o.dy);
  }
  w.i32(s.patch_size);
  w.i32(s.patch_stride);
  w.i32(s.illumination_tile);
  w.u32(static_cast<std::uint32_t>(p.classes()));
  w.u32(static_cast<std::uint32_t>(p.dim()));
  for (const auto& id : p.class_ids) w.str(id);
  w.f64(p.train_loss);
  w.f64(p.train_accuracy);
  for (double v : p.weights) w.f64(v);
  for (double v : p.biases) w.f64(v);
  const std::uint32_t crc = crc32(w.bytes());
  w.u32(crc);
  return w.take();
}

ModelParams deserialize_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) fail(ErrorCode::kFormat, "model file truncated (" + std::to_string(bytes.size()) + " bytes)");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) fail(ErrorCode::kFormat, "not a model file (bad magic)");
  std::uint32_t stored;
  std::memcpy(&stored, bytes.data() + bytes.size() - 4, 4);
  const auto body = bytes.first(bytes.size() - 4);
  if (crc32(body) != stored) fail(ErrorCode::kChecksum, "model file checksum mismatch");

  Reader r(body);
  char magic[4];
  r.raw(magic, 4);
  const std::uint32_t format = r.u32();
  if (format != kModelFormatVersion) {
    fail(ErrorCode::kFormat, "unsupported model format version " + std::to_string(format));
  }
  ModelParams p;
  p.version = r.str();
  if (p.version.empty()) fail(ErrorCode::kFormat, "model file lacks a version string");
  p.trained_at = parse_rfc3339(r.str());
  FeatureSpec& s = p.feature_spec;
  s.lbp_radius = r.i32();
  s.lbp_neighbors = r.i32();
  s.glcm_levels = r.i32();
  const std::int32_t n_offsets = r.i32();
  if (n_offsets < 0 || static_cast<std::size_t>(n_offsets) > r.remaining() / 8) {
    fail(ErrorCode::kFormat, "model file has an invalid offset count");
  }
  s.glcm_offsets.clear();
  for (std::int32_t i = 0; i < n_offsets; ++i) {
    const int dx = r.i32();
    const int dy = r.i32();
    s.glcm_offsets.push_back({dx, dy});
  }
  s.patch_size = r.i32();
  s.patch_stride = r.i32();
  s.illumination_tile = r.i32();
  const std::uint32_t classes = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim != feature_dim(s)) fail(ErrorCode::kFormat, "model dimension disagrees with its feature spec");
  if (classes > r.remaining() / 4) fail(ErrorCode::kFormat, "model file has an invalid class count");
  for (std::uint32_t c = 0; c < classes; ++c) p.class_ids.push_back(r.str());
  p.train_loss = r.f64();
  p.train_accuracy = r.f64();
  const std::size_t n_weights = static_cast<std::size_t>(classes) * dim;
  if (r.remaining() != (n_weights + classes) * 8) {
    fail(ErrorCode::kFormat, "model parameter block has the wrong size");
  }
  p.weights.resize(n_weights);
  for (double& v : p.weights) v = r.f64();
  p.biases.resize(classes);
  for (double& v : p.biases) v = r.f64();
  validate(p);
  return p;
}

std::size_t save_model(const ModelParams& params, const std::filesystem::path& path) {
  const Bytes bytes = serialize_model(params);
  write_file_atomic(path, bytes);
  return bytes.size();
}

ModelParams load_model(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) fail(ErrorCode::kNotFound, "model file not found: " + path.string());
  return deserialize_model(read_file(path));
}

}  // namespace xylid
