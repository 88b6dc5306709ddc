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
#include <span>
#include <string>
#include <vector>

#include "xylid/features.hpp"
#include "xylid/util.hpp"

namespace xylid {

/// A feature vector with its ground-truth class.
struct LabeledVector {
  FeatureVector features;
  std::string class_id;
};

/// Multinomial logistic regression: logits = weights * x + biases.
struct ModelParams {
  /// classes() x dim(), row-major.
  std::vector<double> weights;
  std::vector<double> biases;
  std::vector<std::string> class_ids;
  FeatureSpec feature_spec;
  std::string version;
  TimePoint trained_at{};
  double train_loss = 0.0;
  double train_accuracy = 0.0;

  std::size_t classes() const { return class_ids.size(); }
  std::size_t dim() const { return feature_dim(feature_spec); }
  double weight(std::size_t c, std::size_t d) const { return weights[c * dim() + d]; }

  bool operator==(const ModelParams&) const = default;
};

/// Throws Error(kFormat) unless C >= 2, shapes agree with the feature spec,
/// class ids are unique and every parameter is finite.
void validate(const ModelParams& params);

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 200;
  int batch_size = 32;
  double l2 = 1e-4;
  std::uint64_t seed = 0;
  /// Optimize in per-feature standardized coordinates and fold the affine
  /// map back into the raw-feature weights afterwards.
  bool standardize = true;
  /// Empty: derived from a digest of the trained parameters.
  std::string version;
  /// Unset: the current time.
  std::optional<TimePoint> trained_at;
};

struct TrainResult {
  ModelParams params;
  /// Mean mini-batch objective per epoch, each batch evaluated before its
  /// update; with one full batch this is the exact objective at the start of
  /// the epoch.
  std::vector<double> epoch_loss;
};

/// Zero-initialized mini-batch gradient descent on mean cross-entropy plus
/// (l2/2)·||W||². Class order follows `class_ids`. Deterministic in its
/// inputs and config.seed.
TrainResult train(std::span<const LabeledVector> dataset, const std::vector<std::string>& class_ids,
                  const FeatureSpec& spec, const TrainConfig& config);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad_weights;
  std::vector<double> grad_biases;
};

/// Mean cross-entropy over the batch plus (l2/2)·||weights||² (biases are
/// not penalized), with its exact gradient.
LossGradient loss_and_gradient(const ModelParams& params, std::span<const LabeledVector> batch,
                               double l2);

struct RankedClass {
  std::string class_id;
  double probability = 0.0;
  bool operator==(const RankedClass&) const = default;
};

struct Prediction {
  /// All classes, descending probability; ties by ascending class_id.
  std::vector<RankedClass> ranked;
  std::string model_version;
  bool operator==(const Prediction&) const = default;
};

/// Softmax with max-subtraction. Rows are ordered by logit (equivalently
/// probability), ties by ascending class_id.
std::vector<double> softmax(std::span<const double> logits);
std::vector<double> logits(const ModelParams& params, std::span<const double> x);
Prediction predict(const ModelParams& params, const FeatureVector& fv);
Prediction prediction_from_logits(std::span<const double> logits,
                                  const std::vector<std::string>& class_ids,
                                  const std::string& model_version);
std::vector<RankedClass> top_k(const Prediction& prediction, std::size_t k);

// Model file, little-endian:
//   "XYLM"  u32 format_version(=1)
//   str version  str trained_at(RFC 3339)
//   feature spec: i32 lbp_radius, lbp_neighbors, glcm_levels, n_offsets,
//                 n_offsets x (i32 dx, i32 dy), i32 patch_size, patch_stride,
//                 illumination_tile
//   u32 C  u32 D  C x str class_id
//   f64 train_loss  f64 train_accuracy
//   C*D x f64 weights (row-major)  C x f64 biases
//   u32 CRC-32 of all preceding bytes
// where str = u32 byte length + UTF-8 bytes.
inline constexpr std::uint32_t kModelFormatVersion = 1;
Bytes serialize_model(const ModelParams& params);
ModelParams deserialize_model(std::span<const std::uint8_t> bytes);
std::size_t save_model(const ModelParams& params, const std::filesystem::path& path);
ModelParams load_model(const std::filesystem::path& path);

}  // namespace xylid
