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

#include "xylid/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <unordered_map>

#include "xylid/error.hpp"

namespace xylid {

std::vector<bool> split_mask(const std::vector<std::string>& labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "test fraction must lie strictly between 0 and 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < labels.size(); ++i) by_class[labels[i]].push_back(i);
  std::vector<bool> is_test(labels.size(), false);
  std::mt19937_64 rng(seed);
  for (auto& [cls, idx] : by_class) {
    if (idx.size() < 2) fail(ErrorCode::kInvalidArgument, "class '" + cls + "' has fewer than 2 examples");
    const double want = std::ceil(static_cast<double>(idx.size()) * test_fraction - 1e-9);
    const std::size_t n_test = std::min(idx.size() - 1, std::max<std::size_t>(1, static_cast<std::size_t>(want)));
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t k = 0; k < n_test; ++k) is_test[idx[k]] = true;
  }
  return is_test;
}

Split split_dataset(std::span<const LabeledVector> dataset, double test_fraction, std::uint64_t seed) {
  std::vector<std::string> labels;
  labels.reserve(dataset.size());
  for (const auto& ex : dataset) labels.push_back(ex.class_id);
  const auto mask = split_mask(labels, test_fraction, seed);
  Split split;
  for (std::size_t i = 0; i < dataset.size(); ++i) (mask[i] ? split.test : split.train).push_back(dataset[i]);
  return split;
}

EvalReport evaluate_predictions(const std::vector<std::string>& class_ids,
                                std::span<const std::pair<Prediction, std::string>> predictions,
                                const Taxonomy& taxonomy) {
  if (predictions.empty()) fail(ErrorCode::kInvalidArgument, "empty test set");
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < class_ids.size(); ++c) index.emplace(class_ids[c], c);
  auto lookup = [&](const std::string& id) {
    const auto it = index.find(id);
    if (it == index.end()) fail(ErrorCode::kInvalidArgument, "class '" + id + "' is not known to the model");
    return it->second;
  };

  const std::size_t classes = class_ids.size();
  EvalReport report;
  report.class_ids = class_ids;
  report.confusion.assign(classes, std::vector<std::uint64_t>(classes, 0));
  report.n_examples = predictions.size();
  std::vector<std::uint64_t> class_total(classes, 0), class_hits(classes, 0);
  std::uint64_t hits1 = 0, hits2 = 0;

  for (const auto& [pred, truth_id] : predictions) {
    if (pred.ranked.empty()) fail(ErrorCode::kInvalidArgument, "empty prediction");
    EvalOutcome o;
    o.truth = lookup(truth_id);
    o.predicted = lookup(pred.ranked.front().class_id);
    for (std::size_t r = 0; r < pred.ranked.size(); ++r) {
      if (pred.ranked[r].class_id == truth_id) {
        o.truth_rank = r + 1;
        break;
      }
    }
    if (o.truth_rank == 0) fail(ErrorCode::kInvalidArgument, "prediction does not rank class '" + truth_id + "'");
    ++report.confusion[o.truth][o.predicted];
    ++class_total[o.truth];
    if (o.truth_rank == 1) {
      ++hits1;
      ++class_hits[o.truth];
    }
    if (o.truth_rank <= 2) ++hits2;
    if (o.truth_rank == 2) ++report.top1_errors_truth_at_rank2;
    if (o.truth_rank != 1) {
      const TimberClass* t = taxonomy.find(class_ids[o.truth]);
      const TimberClass* p = taxonomy.find(class_ids[o.predicted]);
      if (t && p && t->family && p->family) {
        ++report.family_error_denominator;
      } else {
        ++report.family_errors_excluded;
      }
    }
    report.outcomes.push_back(o);
  }
  const double n = static_cast<double>(report.n_examples);
  report.top1 = static_cast<double>(hits1) / n;
  report.top2 = static_cast<double>(hits2) / n;
  for (std::size_t c = 0; c < classes; ++c) {
    if (class_total[c] > 0) {
      report.per_class_top1[class_ids[c]] = static_cast<double>(class_hits[c]) / static_cast<double>(class_total[c]);
    }
  }
  if (report.family_error_denominator > 0) {
    std::uint64_t same = 0;
    for (const auto& pair : family_confusion_pairs(report, taxonomy)) {
      if (pair.same_family) same += pair.count;
    }
    report.within_family_error_fraction =
        static_cast<double>(same) / static_cast<double>(report.family_error_denominator);
  }
  return report;
}

EvalReport evaluate(const ModelParams& model, std::span<const LabeledVector> test, const Taxonomy& taxonomy) {
  std::vector<std::pair<Prediction, std::string>> preds;
  preds.reserve(test.size());
  for (const auto& ex : test) preds.emplace_back(predict(model, ex.features), ex.class_id);
  return evaluate_predictions(model.class_ids, preds, taxonomy);
}

namespace {

bool same_family(const Taxonomy& taxonomy, const std::string& a, const std::string& b) {
  const TimberClass* ta = taxonomy.find(a);
  const TimberClass* tb = taxonomy.find(b);
  return ta && tb && ta->family && tb->family && *ta->family == *tb->family;
}

std::vector<ConfusionPair> sorted_pairs(std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells,
                                        const EvalReport& report, const Taxonomy& taxonomy) {
  std::vector<std::pair<std::pair<std::size_t, std::size_t>, std::uint64_t>> v(cells.begin(), cells.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<ConfusionPair> out;
  for (const auto& [cell, count] : v) {
    const auto& t = report.class_ids[cell.first];
    const auto& p = report.class_ids[cell.second];
    out.push_back({t, p, count, same_family(taxonomy, t, p)});
  }
  return out;
}

}  // namespace

std::vector<ConfusionPair> family_confusion_pairs(const EvalReport& report, const Taxonomy& taxonomy) {
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells;
  for (std::size_t t = 0; t < report.confusion.size(); ++t)
    for (std::size_t p = 0; p < report.confusion[t].size(); ++p)
      if (t != p && report.confusion[t][p] > 0) cells[{t, p}] = report.confusion[t][p];
  return sorted_pairs(std::move(cells), report, taxonomy);
}

std::vector<ConfusionPair> rank2_miss_pairs(const EvalReport& report, const Taxonomy& taxonomy) {
  std::map<std::pair<std::size_t, std::size_t>, std::uint64_t> cells;
  for (const auto& o : report.outcomes)
    if (o.truth_rank > 2) ++cells[{o.truth, o.predicted}];
  return sorted_pairs(std::move(cells), report, taxonomy);
}

SiblingAnalysis sibling_analysis(const EvalReport& report,
                                 const std::vector<std::pair<std::string, std::string>>& sibling_pairs) {
  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& [a, b] : sibling_pairs) {
    pairs.insert({a, b});
    pairs.insert({b, a});
  }
  SiblingAnalysis s;
  for (const auto& o : report.outcomes) {
    if (o.truth_rank == 1) continue;
    ++s.top1_errors;
    if (pairs.count({report.class_ids[o.truth], report.class_ids[o.predicted]})) {
      ++s.sibling_errors;
      if (o.truth_rank == 2) ++s.sibling_errors_truth_at_rank2;
    }
  }
  if (s.top1_errors > 0) s.sibling_error_fraction = static_cast<double>(s.sibling_errors) / static_cast<double>(s.top1_errors);
  if (s.sibling_errors > 0) {
    s.sibling_rank2_fraction = static_cast<double>(s.sibling_errors_truth_at_rank2) / static_cast<double>(s.sibling_errors);
  }
  return s;
}

}  // namespace xylid
