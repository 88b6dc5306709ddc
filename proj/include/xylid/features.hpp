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

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "xylid/imaging.hpp"

namespace xylid {

struct GlcmOffset {
  int dx = 0;
  int dy = 0;
  bool operator==(const GlcmOffset&) const = default;
};

/// Everything that determines a feature vector, including the preprocessing
/// that precedes it. Serialized into model files so serving recomputes
/// features exactly as training did.
struct FeatureSpec {
  int lbp_radius = 1;
  int lbp_neighbors = 8;
  int glcm_levels = 16;
  std::vector<GlcmOffset> glcm_offsets{{1, 0}, {0, 1}, {1, 1}, {1, -1}};
  int patch_size = 128;
  int patch_stride = 64;
  /// Tile for normalize_illumination during preprocessing; 0 skips it.
  int illumination_tile = kDefaultIlluminationTile;

  bool operator==(const FeatureSpec&) const = default;
};

inline constexpr int kLbpBins = 59;
inline constexpr int kGlcmStats = 4;

void validate(const FeatureSpec& spec);
std::size_t feature_dim(const FeatureSpec& spec);
std::string canonical_string(const FeatureSpec& spec);
/// 16 hex digits.
std::string spec_hash(const FeatureSpec& spec);

struct FeatureVector {
  std::vector<double> values;
  std::string spec_hash;

  std::size_t dim() const { return values.size(); }
  bool operator==(const FeatureVector&) const = default;
};

/// Histogram bin of an 8-bit LBP code: uniform codes (at most two circular
/// 0/1 transitions) take bins 0..57 in increasing code order, every other
/// code lands in bin 58.
int lbp_uniform_bin(std::uint8_t code);

/// L1-normalized 59-bin uniform LBP histogram over the interior pixels
/// (those at least `radius` away from the border). Neighbor p sits at
/// (x + r cos(2 pi p / 8), y - r sin(2 pi p / 8)), sampled bilinearly, and
/// sets bit p when its value is >= the center value.
FeatureVector lbp_histogram(const GrayImage& patch, int radius = 1, int neighbors = 8);

/// Contrast, energy (angular second moment), homogeneity and correlation
/// per offset, from the symmetric normalized co-occurrence matrix of the
/// patch quantized into `levels` uniform bins over [0,1].
FeatureVector glcm_features(const GrayImage& patch, int levels,
                            const std::vector<GlcmOffset>& offsets);

/// Symmetric co-occurrence matrix (levels x levels, row-major) normalized to
/// sum 1, for inspection and tests.
std::vector<double> glcm_matrix(const GrayImage& patch, int levels, GlcmOffset offset);

/// Grayscale conversion plus illumination normalization per `spec`.
GrayImage preprocess(const RawImage& image, const FeatureSpec& spec);

/// Mean over patches of (lbp ++ glcm). The image must already be
/// preprocessed.
FeatureVector extract_features(const GrayImage& image, const FeatureSpec& spec);

}  // namespace xylid
