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
#include <cmath>
#include <numeric>
#include <random>

#include "xylid/classifier.hpp"
#include "xylid/error.hpp"

namespace xylid {
namespace {

const FeatureSpec kSpec;
const std::size_t kDim = feature_dim(kSpec);

LabeledVector example(std::vector<double> x, std::string label) {
  return {FeatureVector{std::move(x), spec_hash(kSpec)}, std::move(label)};
}

std::vector<LabeledVector> random_batch(std::mt19937_64& rng, const std::vector<std::string>& ids, std::size_t n) {
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledVector> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> x(kDim);
    for (auto& v : x) v = u(rng);
    out.push_back(example(std::move(x), ids[rng() % ids.size()]));
  }
  return out;
}

ModelParams random_params(std::mt19937_64& rng, const std::vector<std::string>& ids, double scale) {
  std::normal_distribution<double> g(0, scale);
  ModelParams p;
  p.class_ids = ids;
  p.feature_spec = kSpec;
  p.version = "test";
  p.weights.resize(ids.size() * kDim);
  p.biases.resize(ids.size());
  for (auto& w : p.weights) w = g(rng);
  for (auto& b : p.biases) b = g(rng);
  return p;
}

ModelParams zero_params(const std::vector<std::string>& ids) {
  ModelParams p;
  p.class_ids = ids;
  p.feature_spec = kSpec;
  p.version = "zero";
  p.weights.assign(ids.size() * kDim, 0.0);
  p.biases.assign(ids.size(), 0.0);
  return p;
}

TEST(Softmax, KnownValues) {
  // Oracle: tests/oracles/feature_oracles.py.
  const std::vector<double> z{2, 1, 0};
  const auto p = softmax(z);
  EXPECT_NEAR(p[0], 0.6652409557748219, 1e-12);
  EXPECT_NEAR(p[1], 0.24472847105479764, 1e-12);
  EXPECT_NEAR(p[2], 0.09003057317038046, 1e-12);
}

TEST(Softmax, SumsToOneAndShiftInvariant) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0, 30);
  for (int t = 0; t < 200; ++t) {
    std::vector<double> z(7);
    for (auto& v : z) v = g(rng);
    const auto p = softmax(z);
    EXPECT_NEAR(std::accumulate(p.begin(), p.end(), 0.0), 1.0, 1e-9);
    for (double v : p) EXPECT_TRUE(v >= 0 && v <= 1);
    auto shifted = z;
    for (auto& v : shifted) v += 1234.5;
    const auto ids = std::vector<std::string>{"a", "b", "c", "d", "e", "f", "g"};
    EXPECT_EQ(prediction_from_logits(z, ids, "v").ranked.front().class_id,
              prediction_from_logits(shifted, ids, "v").ranked.front().class_id);
  }
  const std::vector<double> moderate{0.3, -1.2, 2.5};
  const auto p = softmax(moderate);
  for (double v : p) EXPECT_TRUE(v > 0 && v < 1);
  std::vector<double> shifted = moderate;
  for (auto& v : shifted) v += 1000;
  const auto q = softmax(shifted);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(p[i], q[i], 1e-12);
  const std::vector<double> huge{1000, 0};
  EXPECT_TRUE(std::isfinite(softmax(huge)[1]));
}

TEST(Loss, ZeroWeightsGiveLogC) {
  std::mt19937_64 rng(2);
  for (std::size_t c : {2u, 3u, 60u}) {
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < c; ++i) ids.push_back("c" + std::to_string(100 + i));
    const auto batch = random_batch(rng, ids, 9);
    EXPECT_NEAR(loss_and_gradient(zero_params(ids), batch, 1e-4).loss, std::log(static_cast<double>(c)), 1e-9);
  }
}

TEST(Loss, MatchesNumpyFixture) {
  // 3 classes over the first three coordinates; the rest are zero.
  const std::vector<std::string> ids{"a", "b", "c"};
  ModelParams p = zero_params(ids);
  const double w[3][3] = {{0.5, -1.0, 0.25}, {0.0, 0.75, -0.5}, {-0.25, 0.1, 0.3}};
  for (int c = 0; c < 3; ++c)
    for (int d = 0; d < 3; ++d) p.weights[c * kDim + d] = w[c][d];
  p.biases = {0.1, -0.2, 0.05};
  const double xs[4][3] = {{1.0, 2.0, -1.0}, {0.5, -0.5, 2.0}, {-1.5, 0.25, 0.75}, {2.0, 1.0, 0.0}};
  const char* ys[4] = {"a", "c", "b", "a"};
  std::vector<LabeledVector> batch;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> x(kDim, 0.0);
    std::copy(xs[i], xs[i] + 3, x.begin());
    batch.push_back(example(std::move(x), ys[i]));
  }
  EXPECT_NEAR(loss_and_gradient(p, batch, 0.01).loss, 1.898585144994815, 1e-12);
  const Prediction pred = predict(p, batch[0].features);
  EXPECT_EQ(pred.ranked[0].class_id, "b");
  EXPECT_NEAR(pred.ranked[0].probability, 0.8663994205552372, 1e-12);
  EXPECT_NEAR(pred.ranked[2].probability, 0.027504400963115322, 1e-12);
}

double relative_error(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

// Central differences at step 1e-5 against the analytic gradient.
double max_gradient_error(const ModelParams& p, const std::vector<LabeledVector>& batch, double l2) {
  const LossGradient g = loss_and_gradient(p, batch, l2);
  const double h = 1e-5;
  double worst = 0;
  ModelParams q = p;
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    q.weights[i] = p.weights[i] + h;
    const double up = loss_and_gradient(q, batch, l2).loss;
    q.weights[i] = p.weights[i] - h;
    const double down = loss_and_gradient(q, batch, l2).loss;
    q.weights[i] = p.weights[i];
    worst = std::max(worst, relative_error(g.grad_weights[i], (up - down) / (2 * h)));
  }
  for (std::size_t i = 0; i < p.biases.size(); ++i) {
    q.biases[i] = p.biases[i] + h;
    const double up = loss_and_gradient(q, batch, l2).loss;
    q.biases[i] = p.biases[i] - h;
    const double down = loss_and_gradient(q, batch, l2).loss;
    q.biases[i] = p.biases[i];
    worst = std::max(worst, relative_error(g.grad_biases[i], (up - down) / (2 * h)));
  }
  return worst;
}

TEST(Loss, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  const std::vector<std::string> ids{"a", "b", "c", "d"};
  for (int draw = 0; draw < 20; ++draw) {
    const ModelParams p = random_params(rng, ids, 0.3);
    const auto batch = random_batch(rng, ids, 1 + rng() % 12);
    EXPECT_LE(max_gradient_error(p, batch, 0.05), 1e-5) << "draw " << draw;
  }
}

TEST(Loss, ConfidentExampleHasTinyGradient) {
  const std::vector<std::string> ids{"a", "b", "c"};
  ModelParams p = zero_params(ids);
  p.biases = {20, 0, 0};
  std::vector<double> x(kDim, 0.25);
  const std::vector<LabeledVector> batch{example(x, "a")};
  const LossGradient g = loss_and_gradient(p, batch, 0.0);
  double norm = 0;
  for (double v : g.grad_weights) norm += v * v;
  for (double v : g.grad_biases) norm += v * v;
  EXPECT_LT(std::sqrt(norm), 1e-3);
}

TEST(Loss, DimensionMismatch) {
  const std::vector<std::string> ids{"a", "b"};
  std::vector<LabeledVector> batch{example(std::vector<double>(kDim - 1, 0.0), "a")};
  EXPECT_THROW(loss_and_gradient(zero_params(ids), batch, 0), Error);
}

// Oracle for separability: some threshold on some coordinate splits the
// labels perfectly.
bool separable(const std::vector<LabeledVector>& data) {
  for (std::size_t d = 0; d < kDim; ++d) {
    std::vector<double> values;
    for (const auto& e : data) values.push_back(e.features.values[d]);
    for (double t : values) {
      bool ok_lo = true, ok_hi = true;
      for (const auto& e : data) {
        const bool above = e.features.values[d] > t;
        ok_lo &= above == (e.class_id == "b");
        ok_hi &= above == (e.class_id == "a");
      }
      if (ok_lo || ok_hi) return true;
    }
  }
  return false;
}

TEST(Train, SeparableTwoClassesReachFullAccuracy) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<LabeledVector> data;
  for (int i = 0; i < 40; ++i) {
    std::vector<double> x(kDim);
    for (auto& v : x) v = u(rng);
    const bool b = i % 2;
    x[7] = b ? 0.75 + 0.25 * u(rng) : 0.25 * u(rng);  // margin >= 0.5
    data.push_back(example(std::move(x), b ? "b" : "a"));
  }
  ASSERT_TRUE(separable(data));
  const TrainResult r = train(data, {"a", "b"}, kSpec, TrainConfig{});
  EXPECT_EQ(r.params.train_accuracy, 1.0);
  for (const auto& e : data) EXPECT_EQ(predict(r.params, e.features).ranked[0].class_id, e.class_id);
}

TEST(Train, Errors) {
  std::mt19937_64 rng(5);
  auto data = random_batch(rng, {"a", "b"}, 10);
  data[0].class_id = "zzz";
  try {
    train(data, {"a", "b"}, kSpec, TrainConfig{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("zzz"), std::string::npos);
  }
  auto only_a = random_batch(rng, {"a"}, 5);
  EXPECT_THROW(train(only_a, {"a", "b"}, kSpec, TrainConfig{}), Error);
  auto bad_dim = random_batch(rng, {"a", "b"}, 6);
  bad_dim[2].features.values.pop_back();
  EXPECT_THROW(train(bad_dim, {"a", "b"}, kSpec, TrainConfig{}), Error);
  TrainConfig diverge;
  diverge.learning_rate = 1e300;
  diverge.standardize = false;
  try {
    train(random_batch(rng, {"a", "b"}, 20), {"a", "b"}, kSpec, diverge);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDivergence);
    EXPECT_NE(std::string(e.what()).find("epoch"), std::string::npos);
  }
}

TEST(Train, ZeroEpochsGivesUniformModel) {
  std::mt19937_64 rng(6);
  const std::vector<std::string> ids{"c", "a", "b"};
  TrainConfig cfg;
  cfg.epochs = 0;
  const TrainResult r = train(random_batch(rng, ids, 12), ids, kSpec, cfg);
  for (double w : r.params.weights) EXPECT_EQ(w, 0.0);
  const Prediction p = predict(r.params, random_batch(rng, ids, 1)[0].features);
  ASSERT_EQ(p.ranked.size(), 3u);
  for (const auto& e : p.ranked) EXPECT_NEAR(e.probability, 1.0 / 3, 1e-12);
  EXPECT_EQ(p.ranked[0].class_id, "a");
  EXPECT_EQ(p.ranked[1].class_id, "b");
  EXPECT_EQ(p.ranked[2].class_id, "c");
}

TEST(Train, FullBatchLossNonIncreasing) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto data = random_batch(rng, ids, 30);
  TrainConfig cfg;
  cfg.learning_rate = 0.01;
  cfg.epochs = 50;
  cfg.batch_size = static_cast<int>(data.size());
  const TrainResult r = train(data, ids, kSpec, cfg);
  ASSERT_EQ(r.epoch_loss.size(), 50u);
  for (std::size_t e = 0; e + 1 < r.epoch_loss.size(); ++e) EXPECT_LE(r.epoch_loss[e + 1], r.epoch_loss[e] + 1e-9);
}

TEST(Train, Deterministic) {
  std::mt19937_64 rng(8);
  const std::vector<std::string> ids{"a", "b", "c"};
  const auto data = random_batch(rng, ids, 25);
  TrainConfig cfg;
  cfg.seed = 99;
  cfg.epochs = 20;
  cfg.trained_at = parse_rfc3339("2024-01-01T00:00:00Z");
  EXPECT_EQ(serialize_model(train(data, ids, kSpec, cfg).params), serialize_model(train(data, ids, kSpec, cfg).params));
  cfg.seed = 100;
  cfg.version = "fixed";
  TrainConfig other = cfg;
  other.seed = 101;
  EXPECT_NE(train(data, ids, kSpec, cfg).params.weights, train(data, ids, kSpec, other).params.weights);
}

TEST(Predict, ArgmaxConsistentAndSorted) {
  std::mt19937_64 rng(9);
  const std::vector<std::string> ids{"d", "a", "c", "b"};
  for (int t = 0; t < 100; ++t) {
    const ModelParams p = random_params(rng, ids, 0.5);
    const auto x = random_batch(rng, ids, 1)[0].features;
    const auto z = logits(p, x.values);
    const Prediction pred = predict(p, x);
    const std::size_t arg = static_cast<std::size_t>(std::max_element(z.begin(), z.end()) - z.begin());
    EXPECT_EQ(top_k(pred, 1)[0].class_id, ids[arg]);
    for (std::size_t i = 0; i + 1 < pred.ranked.size(); ++i) EXPECT_GE(pred.ranked[i].probability, pred.ranked[i + 1].probability);
  }
}

TEST(Predict, SpecMismatch) {
  const ModelParams p = zero_params({"a", "b"});
  FeatureVector fv{std::vector<double>(kDim, 0.0), "0000000000000000"};
  EXPECT_THROW(predict(p, fv), Error);
}

TEST(TopK, Range) {
  const std::vector<double> z{0.1, 3, 2};
  const Prediction p = prediction_from_logits(z, {"a", "b", "c"}, "v");
  EXPECT_EQ(top_k(p, 3), p.ranked);
  EXPECT_EQ(top_k(p, 1)[0].class_id, "b");
  EXPECT_THROW(top_k(p, 4), Error);
  EXPECT_THROW(top_k(p, 0), Error);
}

TEST(Params, Validation) {
  ModelParams p = zero_params({"a"});
  EXPECT_THROW(validate(p), Error);
  p = zero_params({"a", "b"});
  p.weights[3] = std::nan("");
  EXPECT_THROW(validate(p), Error);
}

}  // namespace
}  // namespace xylid
