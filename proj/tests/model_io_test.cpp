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

#include <cstring>
#include <random>

#include "test_support.hpp"
#include "xylid/classifier.hpp"
#include "xylid/error.hpp"

namespace xylid {
namespace {

ModelParams trained_model() {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  const FeatureSpec spec;
  std::vector<LabeledVector> data;
  const std::vector<std::string> ids{"balau", "kapur", "merbau"};
  for (int i = 0; i < 30; ++i) {
    std::vector<double> x(feature_dim(spec));
    for (auto& v : x) v = u(rng);
    x[i % 3] += 1.0;
    data.push_back({{x, spec_hash(spec)}, ids[i % 3]});
  }
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.version = "2024-01-a";
  return train(data, ids, spec, cfg).params;
}

ErrorCode load_error(const Bytes& bytes) {
  try {
    deserialize_model(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(ModelIo, RoundTripIsBitwise) {
  testing::TempDir dir;
  const ModelParams m = trained_model();
  const std::size_t n = save_model(m, dir / "m.xylm");
  EXPECT_EQ(n, std::filesystem::file_size(dir / "m.xylm"));
  const ModelParams back = load_model(dir / "m.xylm");
  EXPECT_EQ(back, m);
  EXPECT_EQ(std::memcmp(back.weights.data(), m.weights.data(), m.weights.size() * sizeof(double)), 0);
  EXPECT_EQ(back.trained_at, m.trained_at);
}

TEST(ModelIo, PredictionsSurviveRoundTrip) {
  testing::TempDir dir;
  const ModelParams m = trained_model();
  save_model(m, dir / "m.xylm");
  const ModelParams back = load_model(dir / "m.xylm");
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (int probe = 0; probe < 10; ++probe) {
    FeatureVector fv{std::vector<double>(m.dim()), spec_hash(m.feature_spec)};
    for (auto& v : fv.values) v = u(rng);
    const Prediction a = predict(m, fv), b = predict(back, fv);
    ASSERT_EQ(a.ranked.size(), b.ranked.size());
    for (std::size_t i = 0; i < a.ranked.size(); ++i) {
      EXPECT_EQ(a.ranked[i].class_id, b.ranked[i].class_id);
      EXPECT_EQ(std::memcmp(&a.ranked[i].probability, &b.ranked[i].probability, sizeof(double)), 0);
    }
  }
}

TEST(ModelIo, EveryFlippedByteIsRejected) {
  const Bytes good = serialize_model(trained_model());
  for (std::size_t i = 0; i < good.size(); i += 7) {
    Bytes bad = good;
    bad[i] ^= 0x40;
    const ErrorCode code = load_error(bad);
    EXPECT_TRUE(code == ErrorCode::kChecksum || code == ErrorCode::kFormat) << "byte " << i;
  }
  Bytes body_flip = good;
  body_flip[good.size() / 2] ^= 1;
  EXPECT_EQ(load_error(body_flip), ErrorCode::kChecksum);
}

TEST(ModelIo, TruncationAndHeader) {
  const Bytes good = serialize_model(trained_model());
  for (std::size_t n : {std::size_t{0}, std::size_t{3}, std::size_t{8}, good.size() / 2, good.size() - 1}) {
    EXPECT_NE(load_error(Bytes(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(n))), ErrorCode::kInternal);
  }
  Bytes magic = good;
  magic[0] = 'Z';
  EXPECT_EQ(load_error(magic), ErrorCode::kFormat);
}

TEST(ModelIo, MissingVersionRejected) {
  ModelParams m = trained_model();
  m.version.clear();
  EXPECT_THROW(serialize_model(m), Error);
}

TEST(ModelIo, MissingFile) {
  testing::TempDir dir;
  try {
    load_model(dir / "nope");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNotFound);
  }
}

}  // namespace
}  // namespace xylid
