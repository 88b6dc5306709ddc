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

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "xylid/error.hpp"
#include "xylid/evaluation.hpp"

namespace xylid {
namespace {

Prediction ranked(std::vector<std::string> order) {
  Prediction p;
  p.model_version = "v";
  double prob = 0.5;
  for (auto& id : order) {
    p.ranked.push_back({std::move(id), prob});
    prob /= 2;
  }
  return p;
}

Taxonomy small_taxonomy() {
  return Taxonomy({{"a", "A", std::nullopt, "F1", std::nullopt},
                   {"b", "B", std::nullopt, "F1", std::nullopt},
                   {"c", "C", std::nullopt, "F2", std::nullopt}},
                  "t");
}

// Seven hand-labelled outcomes; expected values worked out by hand.
std::vector<std::pair<Prediction, std::string>> hand_fixture() {
  return {
      {ranked({"a", "b", "c"}), "a"}, {ranked({"b", "a", "c"}), "a"}, {ranked({"b", "c", "a"}), "b"},
      {ranked({"c", "a", "b"}), "b"}, {ranked({"c", "a", "b"}), "c"}, {ranked({"a", "c", "b"}), "c"},
      {ranked({"a", "c", "b"}), "a"},
  };
}

TEST(Evaluate, HandFixture) {
  const auto preds = hand_fixture();
  const EvalReport r = evaluate_predictions({"a", "b", "c"}, preds, small_taxonomy());
  EXPECT_EQ(r.n_examples, 7u);
  EXPECT_DOUBLE_EQ(r.top1, 4.0 / 7);
  EXPECT_DOUBLE_EQ(r.top2, 6.0 / 7);
  EXPECT_DOUBLE_EQ(r.per_class_top1.at("a"), 2.0 / 3);
  EXPECT_DOUBLE_EQ(r.per_class_top1.at("b"), 0.5);
  EXPECT_DOUBLE_EQ(r.per_class_top1.at("c"), 0.5);
  const std::vector<std::vector<std::uint64_t>> confusion{{2, 1, 0}, {0, 1, 1}, {1, 0, 1}};
  EXPECT_EQ(r.confusion, confusion);
  ASSERT_TRUE(r.within_family_error_fraction.has_value());
  EXPECT_DOUBLE_EQ(*r.within_family_error_fraction, 1.0 / 3);
  EXPECT_EQ(r.family_error_denominator, 3u);
  EXPECT_EQ(r.family_errors_excluded, 0u);
  EXPECT_EQ(r.top1_errors_truth_at_rank2, 2u);

  const auto pairs = family_confusion_pairs(r, small_taxonomy());
  ASSERT_EQ(pairs.size(), 3u);
  std::size_t same = 0;
  for (const auto& p : pairs) {
    EXPECT_EQ(p.count, 1u);
    if (p.same_family) {
      ++same;
      EXPECT_EQ(p.truth, "a");
      EXPECT_EQ(p.predicted, "b");
    }
  }
  EXPECT_EQ(same, 1u);
  const auto misses = rank2_miss_pairs(r, small_taxonomy());  // truth outside the top 2
  ASSERT_EQ(misses.size(), 1u);
  EXPECT_EQ(misses[0].truth, "b");
  EXPECT_EQ(misses[0].predicted, "c");

  const SiblingAnalysis s = sibling_analysis(r, {{"a", "b"}});
  EXPECT_EQ(s.top1_errors, 3u);
  EXPECT_EQ(s.sibling_errors, 1u);
  EXPECT_EQ(s.sibling_errors_truth_at_rank2, 1u);
  EXPECT_DOUBLE_EQ(s.sibling_error_fraction, 1.0 / 3);
  EXPECT_DOUBLE_EQ(s.sibling_rank2_fraction, 1.0);
}

TEST(Evaluate, UnassignedFamiliesAreExcluded) {
  const Taxonomy tax({{"a", "A", std::nullopt, "F1", std::nullopt},
                      {"b", "B", std::nullopt, std::nullopt, std::nullopt},
                      {"c", "C", std::nullopt, "F1", std::nullopt}},
                     "t");
  const std::vector<std::pair<Prediction, std::string>> preds{{ranked({"b", "a", "c"}), "a"}};
  const EvalReport r = evaluate_predictions({"a", "b", "c"}, preds, tax);
  EXPECT_FALSE(r.within_family_error_fraction.has_value());
  EXPECT_EQ(r.family_errors_excluded, 1u);
}

TEST(Evaluate, MerantiConfusionIsFlaggedSameFamily) {
  const Taxonomy& tax = default_taxonomy();
  const std::vector<std::string> ids{"dark-red-meranti", "light-red-meranti", "merbau"};
  const std::vector<std::pair<Prediction, std::string>> preds{
      {ranked({"light-red-meranti", "dark-red-meranti", "merbau"}), "dark-red-meranti"}};
  const EvalReport r = evaluate_predictions(ids, preds, tax);
  const auto pairs = family_confusion_pairs(r, tax);
  ASSERT_EQ(pairs.size(), 1u);
  EXPECT_TRUE(pairs[0].same_family);
  EXPECT_EQ(*r.within_family_error_fraction, 1.0);
}

TEST(Evaluate, Errors) {
  const Taxonomy tax = small_taxonomy();
  EXPECT_THROW(evaluate_predictions({"a", "b", "c"}, {}, tax), Error);
  const std::vector<std::pair<Prediction, std::string>> unknown{{ranked({"a", "b", "c"}), "zz"}};
  EXPECT_THROW(evaluate_predictions({"a", "b", "c"}, unknown, tax), Error);
  const std::vector<std::pair<Prediction, std::string>> missing{{ranked({"a", "b"}), "c"}};
  EXPECT_THROW(evaluate_predictions({"a", "b", "c"}, missing, tax), Error);
}

// Random rankings against a brute-force rank computed from the raw scores.
TEST(Evaluate, RandomFixturesMatchBruteForce) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> ids{"a", "b", "c", "d", "e"};
  const Taxonomy tax({{"a", "A", {}, "F", {}}, {"b", "B", {}, "F", {}}, {"c", "C", {}, "G", {}},
                      {"d", "D", {}, "G", {}}, {"e", "E", {}, {}, {}}},
                     "t");
  for (int fixture = 0; fixture < 1000; ++fixture) {
    const std::size_t n = 1 + rng() % 20;
    std::vector<std::pair<Prediction, std::string>> preds;
    std::size_t hit1 = 0, hit2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> z(ids.size());
      for (auto& v : z) v = static_cast<double>(rng() % 1000);
      const std::string truth = ids[rng() % ids.size()];
      const Prediction p = prediction_from_logits(z, ids, "v");
      const std::size_t t = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), truth) - ids.begin());
      // Rank = 1 + classes ahead of truth in the emitted order.
      std::size_t ahead = 0;
      while (p.ranked[ahead].class_id != truth) ++ahead;
      std::size_t strictly_greater = 0;
      for (double v : z) strictly_greater += v > z[t];
      EXPECT_GE(ahead, strictly_greater);
      hit1 += ahead == 0;
      hit2 += ahead <= 1;
      preds.emplace_back(p, truth);
    }
    const EvalReport r = evaluate_predictions(ids, preds, tax);
    ASSERT_DOUBLE_EQ(r.top1, static_cast<double>(hit1) / n);
    ASSERT_DOUBLE_EQ(r.top2, static_cast<double>(hit2) / n);
    ASSERT_GE(r.top2, r.top1);
    std::uint64_t total = 0;
    for (const auto& row : r.confusion) total = std::accumulate(row.begin(), row.end(), total);
    ASSERT_EQ(total, n);
  }
}

std::vector<LabeledVector> labelled(int classes, int per_class) {
  std::vector<LabeledVector> out;
  for (int c = 0; c < classes; ++c)
    for (int k = 0; k < per_class; ++k) out.push_back({{{double(c), double(k)}, "h"}, "c" + std::to_string(c)});
  return out;
}

TEST(Split, StratifiedCounts) {
  const auto data = labelled(60, 10);
  const Split s = split_dataset(data, 0.2, 0);
  EXPECT_EQ(s.test.size(), 120u);
  EXPECT_EQ(s.train.size(), 480u);
  std::map<std::string, int> per;
  for (const auto& e : s.test) ++per[e.class_id];
  EXPECT_EQ(per.size(), 60u);
  for (const auto& [id, n] : per) EXPECT_EQ(n, 2) << id;
}

TEST(Split, EveryClassKeepsBothSides) {
  for (double f : {0.01, 0.5, 0.99}) {
    const Split s = split_dataset(labelled(3, 2), f, 1);
    EXPECT_EQ(s.test.size(), 3u);
    EXPECT_EQ(s.train.size(), 3u);
  }
}

TEST(Split, DeterministicAndSeedSensitive) {
  const auto data = labelled(5, 20);
  std::vector<std::string> labels;
  for (const auto& e : data) labels.push_back(e.class_id);
  EXPECT_EQ(split_mask(labels, 0.3, 7), split_mask(labels, 0.3, 7));
  EXPECT_NE(split_mask(labels, 0.3, 7), split_mask(labels, 0.3, 8));
}

TEST(Split, Errors) {
  EXPECT_THROW(split_dataset(labelled(2, 5), 0.0, 0), Error);
  EXPECT_THROW(split_dataset(labelled(2, 5), 1.0, 0), Error);
  EXPECT_THROW(split_dataset(labelled(2, 1), 0.5, 0), Error);
}

}  // namespace
}  // namespace xylid
