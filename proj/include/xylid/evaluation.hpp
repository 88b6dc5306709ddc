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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "xylid/classifier.hpp"
#include "xylid/taxonomy.hpp"

namespace xylid {

struct Split {
  std::vector<LabeledVector> train;
  std::vector<LabeledVector> test;
};

/// Stratified split. Each class puts max(1, ceil(count * test_fraction))
/// examples into test, capped at count - 1 so both sides keep every class.
/// Output preserves input order within each side.
Split split_dataset(std::span<const LabeledVector> dataset, double test_fraction, std::uint64_t seed);
/// Index form of split_dataset: true marks a test example.
std::vector<bool> split_mask(const std::vector<std::string>& labels, double test_fraction, std::uint64_t seed);

/// Per-example outcome kept for downstream analyses.
struct EvalOutcome {
  std::size_t truth = 0;
  std::size_t predicted = 0;
  /// 1-based rank of the true class.
  std::size_t truth_rank = 0;
};

struct EvalReport {
  std::vector<std::string> class_ids;
  double top1 = 0.0;
  double top2 = 0.0;
  std::map<std::string, double> per_class_top1;
  /// Rows truth, columns rank-1 prediction, both in class_ids order.
  std::vector<std::vector<std::uint64_t>> confusion;
  /// Top-1 errors with both families assigned whose families agree, divided
  /// by all Top-1 errors with both families assigned. Absent when that
  /// denominator is zero.
  std::optional<double> within_family_error_fraction;
  std::uint64_t family_error_denominator = 0;
  /// Top-1 errors left out because a family is unassigned.
  std::uint64_t family_errors_excluded = 0;
  /// Top-1 errors whose true class sits at rank 2.
  std::uint64_t top1_errors_truth_at_rank2 = 0;
  std::uint64_t n_examples = 0;
  std::vector<EvalOutcome> outcomes;
};

/// Scores predictions already computed. Every truth must be in class_ids.
EvalReport evaluate_predictions(const std::vector<std::string>& class_ids,
                                std::span<const std::pair<Prediction, std::string>> predictions,
                                const Taxonomy& taxonomy);
EvalReport evaluate(const ModelParams& model, std::span<const LabeledVector> test, const Taxonomy& taxonomy);

struct ConfusionPair {
  std::string truth;
  std::string predicted;
  std::uint64_t count = 0;
  bool same_family = false;
};

/// Off-diagonal nonzero confusion cells, count descending, then by class
/// order. same_family requires both families assigned and equal.
std::vector<ConfusionPair> family_confusion_pairs(const EvalReport& report, const Taxonomy& taxonomy);

/// Top-1 errors whose true class is not within the first two, as
/// (truth, rank-1 prediction) pairs flagged the same way.
std::vector<ConfusionPair> rank2_miss_pairs(const EvalReport& report, const Taxonomy& taxonomy);

struct SiblingAnalysis {
  std::uint64_t top1_errors = 0;
  std::uint64_t sibling_errors = 0;
  std::uint64_t sibling_errors_truth_at_rank2 = 0;
  /// sibling_errors / top1_errors (0 when there are no errors).
  double sibling_error_fraction = 0.0;
  /// sibling_errors_truth_at_rank2 / sibling_errors (1 when there are none).
  double sibling_rank2_fraction = 1.0;
};

/// Share of Top-1 errors that fall between the given unordered class pairs.
SiblingAnalysis sibling_analysis(const EvalReport& report,
                                 const std::vector<std::pair<std::string, std::string>>& sibling_pairs);

}  // namespace xylid
