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

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "xylid/classifier.hpp"
#include "xylid/synth.hpp"
#include "xylid/taxonomy.hpp"

namespace xylid {

struct SynthDatasetOptions {
  int classes = 60;
  int per_class = 100;
  int sibling_pairs = 0;
  std::uint64_t seed = 0;
  int width = 256;
  int height = 256;
  /// Sibling b copies sibling a's texture parameters, rotated by this many
  /// degrees and with pore density scaled by sibling_density_factor.
  double sibling_angle_delta = 6.0;
  double sibling_density_factor = 1.2;
  unsigned threads = 0;
};

struct SynthClass {
  std::string class_id;
  SynthClassParams params;
  std::optional<std::string> family;
};

struct SiblingPair {
  std::string a;
  std::string b;
  std::string family;
};

struct ManifestRow {
  std::string path;  // relative to the dataset root
  std::string class_id;
  std::uint64_t seed = 0;
  std::string params_hash;
};

/// Dataset-on-disk layout: <root>/<class_id>/<nnnn>.png plus
/// <root>/manifest.tsv and <root>/taxonomy.tsv.
///
/// manifest.tsv:
///   #xylid-manifest 1
///   @seed<TAB><seed>
///   @size<TAB><width><TAB><height>
///   @class<TAB><class_id><TAB><params_hash><TAB><canonical params>
///   @sibling<TAB><a><TAB><b><TAB><family>
///   <relative path><TAB><class_id><TAB><image seed><TAB><params_hash>
/// params_hash is the class-level texture parameter hash; each image's
/// jittered parameters and illumination are a function of its seed.
struct Manifest {
  std::uint64_t seed = 0;
  int width = 0;
  int height = 0;
  std::vector<SynthClass> classes;
  std::vector<SiblingPair> siblings;
  std::vector<ManifestRow> rows;
};

std::string serialize_manifest(const Manifest& manifest);
Manifest parse_manifest(std::string_view text);
Manifest read_manifest(const std::filesystem::path& root);

/// Class ids, texture parameters and sibling pairs for a synthetic dataset.
/// The first min(classes, 60) classes come from the default taxonomy; any
/// further ones are named synthetic-NNN.
Manifest design_dataset(const SynthDatasetOptions& options);

/// Image `index` of class `cls` as rendered by write_synth_dataset.
GrayImage render_dataset_image(const SynthClass& cls, std::uint64_t image_seed, int width, int height);
std::uint64_t image_seed(std::uint64_t dataset_seed, std::size_t class_index, std::size_t image_index);

/// Taxonomy restricted to the dataset classes with sibling families applied.
Taxonomy dataset_taxonomy(const Manifest& manifest);

/// Renders and writes every image, manifest.tsv and taxonomy.tsv.
Manifest write_synth_dataset(const std::filesystem::path& root, const SynthDatasetOptions& options);

/// Reads <root>/<class_id>/*.{png,jpg,jpeg} for each class (file names in
/// sorted order), preprocesses and extracts features. Throws
/// Error(kNotFound) naming the class when its directory is missing or empty.
std::vector<LabeledVector> load_dataset_features(const std::filesystem::path& root,
                                                 const std::vector<std::string>& class_ids,
                                                 const FeatureSpec& spec, unsigned threads = 0);

}  // namespace xylid
