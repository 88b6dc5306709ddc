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
#include <string>

#include "xylid/imaging.hpp"

namespace xylid {

/// Knobs of the procedural wood-surface texture. Lengths are in pixels,
/// angles in degrees.
struct SynthClassParams {
  double grain_angle = 0.0;
  double grain_period = 12.0;
  double grain_amplitude = 0.10;
  /// Pores per 10^4 px^2.
  double pore_density = 8.0;
  double pore_radius_mean = 3.0;
  double pore_radius_std = 0.5;
  double ray_spacing = 40.0;
  /// 0 disables rays.
  double ray_width = 2.0;
  double base_intensity = 0.5;
  double noise_std = 0.03;

  bool operator==(const SynthClassParams&) const = default;
};

/// Throws Error(kInvalidArgument) when a length is non-positive, a density is
/// negative, or an intensity parameter leaves [0,1].
void validate(const SynthClassParams& params);
/// Canonical text form (fixed precision) used for hashing and manifests.
std::string canonical_string(const SynthClassParams& params);
std::uint64_t params_hash(const SynthClassParams& params);

struct SynthLog {
  std::size_t pores = 0;
};

/// Deterministic in (params, width, height, seed). Layers, in order: base
/// intensity, oriented sinusoidal grain, bright ray lines running across the
/// grain, dark elliptical pores elongated along the grain, Gaussian pixel
/// noise; the result is clamped to [0,1].
GrayImage synth_texture(const SynthClassParams& params, int width, int height, std::uint64_t seed,
                        SynthLog* log = nullptr);

}  // namespace xylid
