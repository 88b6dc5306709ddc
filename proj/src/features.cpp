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

#include "xylid/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "xylid/error.hpp"

namespace xylid {

namespace {

struct Tap {
  double dx;
  double dy;
};

// Offsets that land within 1e-9 of a pixel center are snapped so the
// axis-aligned neighbors are read exactly instead of interpolated.
std::array<Tap, 8> neighbor_taps(int radius) {
  std::array<Tap, 8> taps{};
  for (int p = 0; p < 8; ++p) {
    const double a = 2.0 * std::numbers::pi * p / 8.0;
    double dx = radius * std::cos(a);
    double dy = -radius * std::sin(a);
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    taps[p] = {dx, dy};
  }
  return taps;
}

double bilinear(const GrayImage& img, double x, double y) {
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  if (fx == 0.0 && fy == 0.0) return img.at(x0, y0);
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double top = img.at(x0, y0) * (1 - fx) + img.at(x1, y0) * fx;
  const double bottom = img.at(x0, y1) * (1 - fx) + img.at(x1, y1) * fx;
  return top * (1 - fy) + bottom * fy;
}

const std::array<std::uint8_t, 256>& uniform_table() {
  static const std::array<std::uint8_t, 256> table = [] {
    std::array<std::uint8_t, 256> t{};
    int next = 0;
    for (int code = 0; code < 256; ++code) {
      int transitions = 0;
      for (int b = 0; b < 8; ++b) {
        transitions += ((code >> b) & 1) != ((code >> ((b + 1) % 8)) & 1);
      }
      t[code] = static_cast<std::uint8_t>(transitions <= 2 ? next++ : kLbpBins - 1);
    }
    return t;
  }();
  return table;
}

void check_lbp_args(const GrayImage& patch, int radius, int neighbors) {
  if (neighbors != 8) fail(ErrorCode::kInvalidArgument, "only 8 LBP neighbors are supported");
  if (radius < 1) fail(ErrorCode::kInvalidArgument, "LBP radius must be >= 1");
  if (patch.width <= 2 * radius || patch.height <= 2 * radius) {
    fail(ErrorCode::kInvalidArgument, "patch too small for LBP radius " + std::to_string(radius));
  }
}

// LBP bin for every pixel at least `radius` from the border; other entries 0.
std::vector<std::uint8_t> lbp_bin_map(const GrayImage& img, int radius) {
  const auto taps = neighbor_taps(radius);
  const auto& table = uniform_table();
  std::vector<std::uint8_t> bins(img.pixels.size(), 0);
  for (int y = radius; y < img.height - radius; ++y) {
    for (int x = radius; x < img.width - radius; ++x) {
      const double center = img.at(x, y);
      unsigned code = 0;
      for (int p = 0; p < 8; ++p) {
        if (bilinear(img, x + taps[p].dx, y + taps[p].dy) >= center) code |= 1u << p;
      }
      bins[static_cast<std::size_t>(y) * img.width + x] = table[code];
    }
  }
  return bins;
}

int quantize(double v, int levels) {
  return std::clamp(static_cast<int>(std::floor(v * levels)), 0, levels - 1);
}

std::vector<std::uint8_t> quantize_image(const GrayImage& img, int levels) {
  std::vector<std::uint8_t> q(img.pixels.size());
  for (std::size_t i = 0; i < q.size(); ++i) q[i] = static_cast<std::uint8_t>(quantize(img.pixels[i], levels));
  return q;
}

void check_offset(int width, int height, GlcmOffset o) {
  if (o.dx == 0 && o.dy == 0) fail(ErrorCode::kInvalidArgument, "GLCM offset must be non-zero");
  if (std::abs(o.dx) >= width || std::abs(o.dy) >= height) {
    fail(ErrorCode::kInvalidArgument, "patch too small for GLCM offset (" + std::to_string(o.dx) +
                                          "," + std::to_string(o.dy) + ")");
  }
}

// Symmetric co-occurrence counts over the window [x0, x0+w) x [y0, y0+h) of
// a quantized image with row pitch `pitch`.
void glcm_counts(const std::uint8_t* q, int pitch, int x0, int y0, int w, int h, int levels,
                 GlcmOffset o, std::vector<std::uint64_t>& counts) {
  std::fill(counts.begin(), counts.end(), 0);
  const int xs = std::max(0, -o.dx);
  const int xe = std::min(w, w - o.dx);
  const int ys = std::max(0, -o.dy);
  const int ye = std::min(h, h - o.dy);
  for (int y = ys; y < ye; ++y) {
    const std::uint8_t* row = q + static_cast<std::size_t>(y0 + y) * pitch + x0;
    const std::uint8_t* other = q + static_cast<std::size_t>(y0 + y + o.dy) * pitch + x0 + o.dx;
    for (int x = xs; x < xe; ++x) {
      const int a = row[x];
      const int b = other[x];
      ++counts[static_cast<std::size_t>(a) * levels + b];
      ++counts[static_cast<std::size_t>(b) * levels + a];
    }
  }
}

void glcm_stats(const std::vector<std::uint64_t>& counts, int levels, double* out) {
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  if (total == 0) fail(ErrorCode::kInvalidArgument, "GLCM window has no pixel pairs");
  const double inv = 1.0 / static_cast<double>(total);
  double contrast = 0, energy = 0, homogeneity = 0, mean = 0;
  for (int i = 0; i < levels; ++i)
    for (int j = 0; j < levels; ++j) {
      const double p = counts[static_cast<std::size_t>(i) * levels + j] * inv;
      if (p == 0) continue;
      const double d = i - j;
      contrast += p * d * d;
      energy += p * p;
      homogeneity += p / (1.0 + d * d);
      mean += p * i;
    }
  // The matrix is symmetric, so both marginals share mean and variance.
  double var = 0, cov = 0;
  for (int i = 0; i < levels; ++i)
    for (int j = 0; j < levels; ++j) {
      const double p = counts[static_cast<std::size_t>(i) * levels + j] * inv;
      if (p == 0) continue;
      var += p * (i - mean) * (i - mean);
      cov += p * (i - mean) * (j - mean);
    }
  out[0] = contrast;
  out[1] = energy;
  out[2] = homogeneity;
  out[3] = var < 1e-12 ? 0.0 : cov / var;
}

}  // namespace

void validate(const FeatureSpec& spec) {
  if (spec.lbp_neighbors != 8) fail(ErrorCode::kInvalidArgument, "only 8 LBP neighbors are supported");
  if (spec.lbp_radius < 1) fail(ErrorCode::kInvalidArgument, "LBP radius must be >= 1");
  if (spec.glcm_levels < 2 || spec.glcm_levels > 256) {
    fail(ErrorCode::kInvalidArgument, "GLCM levels must lie in [2, 256]");
  }
  if (spec.glcm_offsets.empty()) fail(ErrorCode::kInvalidArgument, "GLCM offsets must be non-empty");
  for (const auto& o : spec.glcm_offsets) {
    if (o.dx == 0 && o.dy == 0) fail(ErrorCode::kInvalidArgument, "GLCM offset must be non-zero");
  }
  if (spec.patch_size <= 2 * spec.lbp_radius) fail(ErrorCode::kInvalidArgument, "patch size too small");
  if (spec.patch_stride < 1) fail(ErrorCode::kInvalidArgument, "patch stride must be >= 1");
  if (spec.illumination_tile != 0 && spec.illumination_tile < 16) {
    fail(ErrorCode::kInvalidArgument, "illumination tile must be 0 or >= 16");
  }
}

std::size_t feature_dim(const FeatureSpec& spec) {
  return kLbpBins + kGlcmStats * spec.glcm_offsets.size();
}

std::string canonical_string(const FeatureSpec& spec) {
  std::string s = "lbp_r=" + std::to_string(spec.lbp_radius) + " lbp_p=" +
                  std::to_string(spec.lbp_neighbors) + " glcm_levels=" +
                  std::to_string(spec.glcm_levels) + " offsets=";
  for (const auto& o : spec.glcm_offsets) s += "(" + std::to_string(o.dx) + "," + std::to_string(o.dy) + ")";
  s += " patch=" + std::to_string(spec.patch_size) + "/" + std::to_string(spec.patch_stride) +
       " illum_tile=" + std::to_string(spec.illumination_tile);
  return s;
}

std::string spec_hash(const FeatureSpec& spec) { return hex64(fnv1a64(canonical_string(spec))); }

int lbp_uniform_bin(std::uint8_t code) { return uniform_table()[code]; }

FeatureVector lbp_histogram(const GrayImage& patch, int radius, int neighbors) {
  check_lbp_args(patch, radius, neighbors);
  const auto bins = lbp_bin_map(patch, radius);
  std::array<std::uint64_t, kLbpBins> counts{};
  for (int y = radius; y < patch.height - radius; ++y)
    for (int x = radius; x < patch.width - radius; ++x) ++counts[bins[static_cast<std::size_t>(y) * patch.width + x]];
  const double n = static_cast<double>(patch.width - 2 * radius) * (patch.height - 2 * radius);
  FeatureVector fv;
  fv.values.resize(kLbpBins);
  for (int b = 0; b < kLbpBins; ++b) fv.values[b] = counts[b] / n;
  return fv;
}

std::vector<double> glcm_matrix(const GrayImage& patch, int levels, GlcmOffset offset) {
  if (levels < 2 || levels > 256) fail(ErrorCode::kInvalidArgument, "GLCM levels must lie in [2, 256]");
  check_offset(patch.width, patch.height, offset);
  const auto q = quantize_image(patch, levels);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(levels) * levels);
  glcm_counts(q.data(), patch.width, 0, 0, patch.width, patch.height, levels, offset, counts);
  std::uint64_t total = 0;
  for (auto c : counts) total += c;
  std::vector<double> m(counts.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  return m;
}

FeatureVector glcm_features(const GrayImage& patch, int levels, const std::vector<GlcmOffset>& offsets) {
  if (levels < 2 || levels > 256) fail(ErrorCode::kInvalidArgument, "GLCM levels must lie in [2, 256]");
  if (offsets.empty()) fail(ErrorCode::kInvalidArgument, "GLCM offsets must be non-empty");
  for (const auto& o : offsets) check_offset(patch.width, patch.height, o);
  const auto q = quantize_image(patch, levels);
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(levels) * levels);
  FeatureVector fv;
  fv.values.resize(kGlcmStats * offsets.size());
  for (std::size_t k = 0; k < offsets.size(); ++k) {
    glcm_counts(q.data(), patch.width, 0, 0, patch.width, patch.height, levels, offsets[k], counts);
    glcm_stats(counts, levels, fv.values.data() + kGlcmStats * k);
  }
  return fv;
}

GrayImage preprocess(const RawImage& image, const FeatureSpec& spec) {
  GrayImage gray = to_grayscale(image);
  if (spec.illumination_tile > 0) gray = normalize_illumination(gray, spec.illumination_tile);
  return gray;
}

// Computes the LBP bin map and quantized image once for the whole image;
// every patch-interior pixel only reads neighbors inside its patch, so the
// per-patch histograms equal lbp_histogram() on the cropped patch.
FeatureVector extract_features(const GrayImage& image, const FeatureSpec& spec) {
  validate(spec);
  const int size = spec.patch_size;
  if (image.width < size || image.height < size) {
    fail(ErrorCode::kInvalidArgument, "image " + std::to_string(image.width) + "x" +
                                          std::to_string(image.height) + " smaller than patch size " +
                                          std::to_string(size));
  }
  for (const auto& o : spec.glcm_offsets) check_offset(size, size, o);
  const int r = spec.lbp_radius;
  const auto bins = lbp_bin_map(image, r);
  const auto q = quantize_image(image, spec.glcm_levels);
  const std::size_t dim = feature_dim(spec);
  const double interior = static_cast<double>(size - 2 * r) * (size - 2 * r);

  std::vector<double> sum(dim, 0.0);
  std::vector<double> patch_vec(dim);
  std::array<std::uint64_t, kLbpBins> hist{};
  std::vector<std::uint64_t> counts(static_cast<std::size_t>(spec.glcm_levels) * spec.glcm_levels);
  std::size_t n_patches = 0;
  for (int py = 0; py + size <= image.height; py += spec.patch_stride) {
    for (int px = 0; px + size <= image.width; px += spec.patch_stride) {
      hist.fill(0);
      for (int y = py + r; y < py + size - r; ++y) {
        const std::uint8_t* row = bins.data() + static_cast<std::size_t>(y) * image.width;
        for (int x = px + r; x < px + size - r; ++x) ++hist[row[x]];
      }
      for (int b = 0; b < kLbpBins; ++b) patch_vec[b] = hist[b] / interior;
      for (std::size_t k = 0; k < spec.glcm_offsets.size(); ++k) {
        glcm_counts(q.data(), image.width, px, py, size, size, spec.glcm_levels, spec.glcm_offsets[k],
                    counts);
        glcm_stats(counts, spec.glcm_levels, patch_vec.data() + kLbpBins + kGlcmStats * k);
      }
      for (std::size_t i = 0; i < dim; ++i) sum[i] += patch_vec[i];
      ++n_patches;
    }
  }
  FeatureVector fv;
  fv.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) fv.values[i] = sum[i] / static_cast<double>(n_patches);
  fv.spec_hash = spec_hash(spec);
  return fv;
}

}  // namespace xylid
