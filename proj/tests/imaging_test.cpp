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

#include <cmath>
#include <random>

#include "test_support.hpp"
#include "xylid/error.hpp"
#include "xylid/imaging.hpp"

namespace xylid {
namespace {

RawImage solid(int w, int h, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  RawImage img{w, h, {}};
  for (int i = 0; i < w * h; ++i) img.rgb.insert(img.rgb.end(), {r, g, b});
  return img;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kInternal;
}

TEST(Decode, PngRoundTrip1024) {
  const GrayImage g = testing::noise_image(1024, 1024, 3);
  const RawImage rgb = gray_to_rgb(g);
  const RawImage back = decode_image(encode_png(rgb));
  EXPECT_EQ(back.width, 1024);
  EXPECT_EQ(back.height, 1024);
  EXPECT_EQ(back, rgb);
}

TEST(Decode, TruncatedJpegRejected) {
  const Bytes jpeg = encode_jpeg(gray_to_rgb(testing::noise_image(128, 128, 4)));
  EXPECT_EQ(decode_image(jpeg).width, 128);
  const Bytes cut(jpeg.begin(), jpeg.begin() + static_cast<std::ptrdiff_t>(jpeg.size() / 2));
  EXPECT_EQ(code_of([&] { decode_image(cut); }), ErrorCode::kFormat);
}

TEST(Decode, TooSmallAndGarbage) {
  EXPECT_EQ(code_of([] { decode_image(encode_png(solid(16, 16, 1, 2, 3))); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(decode_image(encode_png(solid(16, 16, 1, 2, 3)), 1).width, 16);
  const Bytes junk{'G', 'I', 'F', '8', '9', 'a', 0, 0};
  EXPECT_EQ(code_of([&] { decode_image(junk); }), ErrorCode::kFormat);
  EXPECT_EQ(code_of([] { decode_image(Bytes{}); }), ErrorCode::kFormat);
}

TEST(Grayscale, Formula) {
  EXPECT_EQ(to_grayscale(solid(2, 2, 255, 255, 255)).pixels, std::vector<double>(4, 1.0));
  EXPECT_EQ(to_grayscale(solid(2, 2, 0, 0, 0)).pixels, std::vector<double>(4, 0.0));
  for (double v : to_grayscale(solid(2, 2, 255, 0, 0)).pixels) EXPECT_NEAR(v, 0.299, 1e-9);
}

double tile_mean(const GrayImage& img, int x0, int y0, int w, int h) {
  double s = 0;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) s += img.at(x, y);
  return s / (w * h);
}

TEST(Illumination, ConstantBecomesHalf) {
  const GrayImage out = normalize_illumination(GrayImage(64, 64, 0.83), 32);
  for (double v : out.pixels) EXPECT_EQ(v, 0.5);
}

TEST(Illumination, GradientTilesCentered) {
  GrayImage img(128, 96);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) img.at(x, y) = 0.1 + 0.8 * x / (img.width - 1.0);
  const GrayImage out = normalize_illumination(img, 32);
  for (int ty = 0; ty < 3; ++ty)
    for (int tx = 0; tx < 4; ++tx) EXPECT_NEAR(tile_mean(out, tx * 32, ty * 32, 32, 32), 0.5, 0.01);
}

TEST(Illumination, IdempotentAndBounded) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GrayImage img = testing::noise_image(100, 80, seed);
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) img.at(x, y) = std::pow(img.at(x, y), 3.0) * (0.3 + 0.007 * x);
    const GrayImage once = normalize_illumination(img, 16);
    const GrayImage twice = normalize_illumination(once, 16);
    for (std::size_t i = 0; i < once.pixels.size(); ++i) {
      ASSERT_GE(once.pixels[i], 0.0);
      ASSERT_LE(once.pixels[i], 1.0);
      ASSERT_NEAR(once.pixels[i], twice.pixels[i], 1e-6);
    }
  }
}

TEST(Illumination, TileRange) {
  const GrayImage img(64, 48, 0.2);
  EXPECT_EQ(code_of([&] { normalize_illumination(img, 15); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { normalize_illumination(img, 49); }), ErrorCode::kInvalidArgument);
  EXPECT_NO_THROW(normalize_illumination(img, 48));
}

TEST(Patches, Counts) {
  EXPECT_EQ(extract_patches(GrayImage(256, 256), 128, 128).size(), 4u);
  const GrayImage one = testing::noise_image(128, 128, 1);
  const auto p = extract_patches(one, 128, 1);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_EQ(p[0], one);
  EXPECT_EQ(code_of([] { extract_patches(GrayImage(100, 256), 128, 64); }), ErrorCode::kInvalidArgument);
}

TEST(Patches, CountFormulaRandomized) {
  std::mt19937 rng(99);
  for (int i = 0; i < 200; ++i) {
    const int w = std::uniform_int_distribution<int>(8, 90)(rng);
    const int h = std::uniform_int_distribution<int>(8, 90)(rng);
    const int size = std::uniform_int_distribution<int>(1, std::min(w, h))(rng);
    const int stride = std::uniform_int_distribution<int>(1, 40)(rng);
    const std::size_t want = static_cast<std::size_t>((w - size) / stride + 1) * ((h - size) / stride + 1);
    const auto patches = extract_patches(GrayImage(w, h), size, stride);
    ASSERT_EQ(patches.size(), want);
    ASSERT_EQ(patch_count(w, h, size, stride), want);
  }
}

TEST(Patches, RowMajorOrder) {
  GrayImage img(4, 4);
  for (int i = 0; i < 16; ++i) img.pixels[i] = i / 16.0;
  const auto p = extract_patches(img, 2, 2);
  ASSERT_EQ(p.size(), 4u);
  EXPECT_EQ(p[1].at(0, 0), img.at(2, 0));
  EXPECT_EQ(p[2].at(0, 0), img.at(0, 2));
}

TEST(Augment, Identity) {
  const GrayImage img = testing::noise_image(32, 32, 5);
  EXPECT_EQ(augment(img, AugmentSpec{}, 1), img);
}

TEST(Augment, HalfTurnIsInvolution) {
  const GrayImage img = testing::noise_image(40, 24, 6);
  AugmentSpec spec;
  spec.rotations = {180};
  EXPECT_EQ(augment(augment(img, spec, 1), spec, 2), img);
  EXPECT_EQ(rotate_quarter(rotate_quarter(img, 1), 3), img);
  EXPECT_EQ(rotate_quarter(img, 1).at(img.height - 1, 0), img.at(0, 0));
}

TEST(Augment, ClampsBrightness) {
  AugmentSpec spec;
  spec.brightness_min = spec.brightness_max = 0.3;
  for (double v : augment(GrayImage(8, 8, 0.9), spec, 3).pixels) EXPECT_EQ(v, 1.0);
}

TEST(Augment, DeterministicAndValidated) {
  const GrayImage img = testing::noise_image(16, 16, 7);
  AugmentSpec spec{-0.2, 0.2, 0.6, 1.4, {0, 90, 180, 270}};
  EXPECT_EQ(augment(img, spec, 42), augment(img, spec, 42));
  for (double v : augment(img, spec, 42).pixels) EXPECT_TRUE(v >= 0 && v <= 1);
  AugmentSpec quarter;
  quarter.rotations = {90};
  EXPECT_EQ(code_of([&] { augment(GrayImage(8, 6), quarter, 1); }), ErrorCode::kInvalidArgument);
  AugmentSpec bad;
  bad.brightness_max = 0.5;
  EXPECT_EQ(code_of([&] { augment(img, bad, 1); }), ErrorCode::kInvalidArgument);
  bad = AugmentSpec{};
  bad.contrast_min = 0.4;
  EXPECT_EQ(code_of([&] { augment(img, bad, 1); }), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace xylid
