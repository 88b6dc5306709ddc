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

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "xylid/util.hpp"

namespace xylid {

/// 8-bit RGB, row-major, three bytes per pixel.
struct RawImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;

  bool operator==(const RawImage&) const = default;
};

/// Row-major intensities in [0,1].
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  GrayImage() = default;
  GrayImage(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }

  bool operator==(const GrayImage&) const = default;
};

enum class ImageFormat { kPng, kJpeg };

inline constexpr int kMinIdentifySide = 64;

/// Decodes PNG or JPEG into RGB. Throws Error(kFormat) for undecodable or
/// unsupported data and Error(kInvalidArgument) when either side is below
/// `min_side`.
RawImage decode_image(std::span<const std::uint8_t> bytes, int min_side = kMinIdentifySide);
/// Sniffs the container from its signature; throws Error(kFormat) otherwise.
ImageFormat sniff_format(std::span<const std::uint8_t> bytes);

Bytes encode_png(const RawImage& image);
/// 8-bit grayscale PNG; intensities are rounded to the nearest of 256 levels.
Bytes encode_png(const GrayImage& image);
Bytes encode_jpeg(const RawImage& image, int quality = 90);
RawImage gray_to_rgb(const GrayImage& image);

/// Luma (0.299 R + 0.587 G + 0.114 B) / 255.
GrayImage to_grayscale(const RawImage& image);

inline constexpr int kDefaultIlluminationTile = 64;
inline constexpr double kNormalizedMean = 0.5;
inline constexpr double kNormalizedStd = 0.15;

/// Tile-wise standardization to mean 0.5 / std 0.15 followed by clamping to
/// [0,1]. Tiles form a grid of `tile`-sized cells; the remainder columns and
/// rows are merged into the last cell of each row/column. The affine step and
/// the clamp are repeated until the tile stops changing, so the output is a
/// fixed point of the operation. Tiles with std < 1e-6 become constant 0.5.
GrayImage normalize_illumination(const GrayImage& image, int tile = kDefaultIlluminationTile);

/// Patches of side `size` in row-major scan order.
std::vector<GrayImage> extract_patches(const GrayImage& image, int size, int stride);
std::size_t patch_count(int width, int height, int size, int stride);
GrayImage crop(const GrayImage& image, int x0, int y0, int w, int h);

/// Clockwise quarter turns (0..3).
GrayImage rotate_quarter(const GrayImage& image, int quarter_turns);

struct AugmentSpec {
  double brightness_min = 0.0;
  double brightness_max = 0.0;
  double contrast_min = 1.0;
  double contrast_max = 1.0;
  /// Allowed rotations in degrees; each one of 0, 90, 180, 270.
  std::vector<int> rotations{0};
};

/// v' = clamp(contrast * v + 0.5 * (1 - contrast) + offset), then a quarter
/// turn drawn from `spec.rotations`. Offset and contrast are drawn uniformly
/// from their ranges with the seeded generator.
GrayImage augment(const GrayImage& image, const AugmentSpec& spec, std::uint64_t seed);

}  // namespace xylid
