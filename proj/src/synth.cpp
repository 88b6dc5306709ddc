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

#include "xylid/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "xylid/error.hpp"

namespace xylid {

namespace {

constexpr double kPoreDepth = 0.45;
constexpr double kPoreAspect = 0.7;
constexpr double kRayBoost = 0.12;

}  // namespace

void validate(const SynthClassParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) fail(ErrorCode::kInvalidArgument, std::string("invalid texture parameters: ") + what);
  };
  require(std::isfinite(p.grain_angle), "grain_angle must be finite");
  require(p.grain_period > 0, "grain_period must be positive");
  require(p.grain_amplitude >= 0 && p.grain_amplitude <= 1, "grain_amplitude must lie in [0,1]");
  require(p.pore_density >= 0, "pore_density must be non-negative");
  require(p.pore_radius_mean > 0, "pore_radius_mean must be positive");
  require(p.pore_radius_std >= 0, "pore_radius_std must be non-negative");
  require(p.ray_spacing > 0, "ray_spacing must be positive");
  require(p.ray_width >= 0, "ray_width must be non-negative");
  require(p.base_intensity >= 0 && p.base_intensity <= 1, "base_intensity must lie in [0,1]");
  require(p.noise_std >= 0 && p.noise_std <= 1, "noise_std must lie in [0,1]");
}

std::string canonical_string(const SynthClassParams& p) {
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "angle=%.6f period=%.6f amplitude=%.6f pore_density=%.6f pore_r=%.6f "
                "pore_r_std=%.6f ray_spacing=%.6f ray_width=%.6f base=%.6f noise=%.6f",
                p.grain_angle, p.grain_period, p.grain_amplitude, p.pore_density, p.pore_radius_mean,
                p.pore_radius_std, p.ray_spacing, p.ray_width, p.base_intensity, p.noise_std);
  return buf;
}

std::uint64_t params_hash(const SynthClassParams& params) {
  return fnv1a64(canonical_string(params));
}

GrayImage synth_texture(const SynthClassParams& p, int width, int height, std::uint64_t seed,
                        SynthLog* log) {
  validate(p);
  if (width < 1 || height < 1) fail(ErrorCode::kInvalidArgument, "texture size must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double theta = p.grain_angle * std::numbers::pi / 180.0;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double grain_phase = unit(rng) * 2.0 * std::numbers::pi;
  const double ray_phase = unit(rng) * p.ray_spacing;
  const double k = 2.0 * std::numbers::pi / p.grain_period;

  GrayImage img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // u runs across the growth rings, v along them.
      const double u = x * c + y * s;
      double value = p.base_intensity + p.grain_amplitude * std::sin(k * u + grain_phase);
      if (p.ray_width > 0) {
        const double v = -x * s + y * c + ray_phase;
        double d = std::fmod(v, p.ray_spacing);
        if (d < 0) d += p.ray_spacing;
        d = std::min(d, p.ray_spacing - d);
        const double half = 0.5 * p.ray_width;
        if (d < half + 0.5) value += kRayBoost * std::clamp(half + 0.5 - d, 0.0, 1.0);
      }
      img.at(x, y) = value;
    }
  }

  const double expected = p.pore_density * static_cast<double>(width) * height / 1e4;
  std::size_t pores = 0;
  if (expected > 0) {
    pores = std::poisson_distribution<std::size_t>(expected)(rng);
    std::normal_distribution<double> radius(p.pore_radius_mean, p.pore_radius_std);
    for (std::size_t i = 0; i < pores; ++i) {
      const double cx = unit(rng) * width;
      const double cy = unit(rng) * height;
      const double r = std::max(0.75, radius(rng));
      // Major axis along the grain (v direction), minor across it.
      const double ra = r;
      const double rb = r * kPoreAspect;
      const int x0 = std::max(0, static_cast<int>(std::floor(cx - ra - 1)));
      const int x1 = std::min(width - 1, static_cast<int>(std::ceil(cx + ra + 1)));
      const int y0 = std::max(0, static_cast<int>(std::floor(cy - ra - 1)));
      const int y1 = std::min(height - 1, static_cast<int>(std::ceil(cy + ra + 1)));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double dx = x + 0.5 - cx;
          const double dy = y + 0.5 - cy;
          const double du = dx * c + dy * s;
          const double dv = -dx * s + dy * c;
          const double q = std::sqrt((du * du) / (rb * rb) + (dv * dv) / (ra * ra));
          // Unit-width soft edge at the ellipse boundary.
          const double cover = std::clamp((1.0 - q) * rb + 0.5, 0.0, 1.0);
          if (cover > 0) img.at(x, y) -= kPoreDepth * cover;
        }
      }
    }
  }

  if (p.noise_std > 0) {
    std::normal_distribution<double> noise(0.0, p.noise_std);
    for (double& v : img.pixels) v += noise(rng);
  }
  for (double& v : img.pixels) v = std::clamp(v, 0.0, 1.0);
  if (log != nullptr) log->pores = pores;
  return img;
}

}  // namespace xylid
