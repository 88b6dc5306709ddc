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

#include "xylid/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "xylid/error.hpp"

namespace xylid {

namespace {

// Mean cross-entropy + (l2/2)||W||^2 over `rows` of `x` and its gradient.
// Rows of x have `dim` entries; labels index into the C classes.
double objective(std::span<const double> w, std::span<const double> b, std::size_t classes,
                 std::size_t dim, const double* x, std::span<const std::size_t> rows,
                 std::span<const std::size_t> labels, double l2, std::vector<double>* gw,
                 std::vector<double>* gb) {
  if (gw != nullptr) {
    gw->assign(classes * dim, 0.0);
    gb->assign(classes, 0.0);
  }
  std::vector<double> z(classes);
  double loss = 0.0;
  for (std::size_t r : rows) {
    const double* xr = x + r * dim;
    for (std::size_t c = 0; c < classes; ++c) {
      const double* wc = w.data() + c * dim;
      double acc = b[c];
      for (std::size_t d = 0; d < dim; ++d) acc += wc[d] * xr[d];
      z[c] = acc;
    }
    const double zmax = *std::max_element(z.begin(), z.end());
    double denom = 0.0;
    for (std::size_t c = 0; c < classes; ++c) denom += std::exp(z[c] - zmax);
    const double log_denom = std::log(denom);
    const std::size_t y = labels[r];
    loss += -(z[y] - zmax - log_denom);
    if (gw != nullptr) {
      for (std::size_t c = 0; c < classes; ++c) {
        const double residual = std::exp(z[c] - zmax - log_denom) - (c == y ? 1.0 : 0.0);
        double* g = gw->data() + c * dim;
        for (std::size_t d = 0; d < dim; ++d) g[d] += residual * xr[d];
        (*gb)[c] += residual;
      }
    }
  }
  const double n = static_cast<double>(rows.size());
  loss /= n;
  double sq = 0.0;
  for (double v : w) sq += v * v;
  loss += 0.5 * l2 * sq;
  if (gw != nullptr) {
    for (std::size_t i = 0; i < gw->size(); ++i) (*gw)[i] = (*gw)[i] / n + l2 * w[i];
    for (double& g : *gb) g /= n;
  }
  return loss;
}

std::string digest_version(const ModelParams& p) {
  std::string blob;
  blob.append(reinterpret_cast<const char*>(p.weights.data()), p.weights.size() * sizeof(double));
  blob.append(reinterpret_cast<const char*>(p.biases.data()), p.biases.size() * sizeof(double));
  for (const auto& id : p.class_ids) blob += id + '\n';
  blob += canonical_string(p.feature_spec);
  return "xylm-" + hex64(fnv1a64(blob)).substr(0, 12);
}

}  // namespace

void validate(const ModelParams& p) {
  if (p.class_ids.size() < 2) fail(ErrorCode::kFormat, "model needs at least 2 classes");
  validate(p.feature_spec);
  const std::size_t c = p.classes();
  const std::size_t d = p.dim();
  if (p.weights.size() != c * d || p.biases.size() != c) {
    fail(ErrorCode::kFormat, "model parameter shapes do not match " + std::to_string(c) + "x" +
                                 std::to_string(d));
  }
  std::unordered_set<std::string> seen;
  for (const auto& id : p.class_ids) {
    if (id.empty() || !seen.insert(id).second) fail(ErrorCode::kFormat, "bad or duplicate class id '" + id + "'");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(p.weights.begin(), p.weights.end(), finite) ||
      !std::all_of(p.biases.begin(), p.biases.end(), finite)) {
    fail(ErrorCode::kFormat, "model parameters contain non-finite values");
  }
}

TrainResult train(std::span<const LabeledVector> dataset, const std::vector<std::string>& class_ids,
                  const FeatureSpec& spec, const TrainConfig& config) {
  if (!(config.learning_rate > 0) || config.epochs < 0 || config.batch_size < 1 || !(config.l2 >= 0)) {
    fail(ErrorCode::kInvalidArgument, "invalid training configuration");
  }
  if (class_ids.size() < 2) fail(ErrorCode::kInvalidArgument, "training needs at least 2 classes");
  validate(spec);
  const std::size_t classes = class_ids.size();
  const std::size_t dim = feature_dim(spec);
  const std::string hash = spec_hash(spec);

  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t c = 0; c < classes; ++c) {
    if (!index.emplace(class_ids[c], c).second) {
      fail(ErrorCode::kInvalidArgument, "duplicate class id '" + class_ids[c] + "'");
    }
  }
  const std::size_t n = dataset.size();
  std::vector<double> x(n * dim);
  std::vector<std::size_t> labels(n);
  std::vector<std::size_t> per_class(classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& ex = dataset[i];
    const auto it = index.find(ex.class_id);
    if (it == index.end()) {
      fail(ErrorCode::kInvalidArgument, "example " + std::to_string(i) + " has unknown label '" + ex.class_id + "'");
    }
    if (ex.features.spec_hash != hash) {
      fail(ErrorCode::kInvalidArgument, "example " + std::to_string(i) + " was extracted with feature spec " +
                                            ex.features.spec_hash + ", expected " + hash);
    }
    if (ex.features.dim() != dim) {
      fail(ErrorCode::kInvalidArgument, "example " + std::to_string(i) + " has dimension " +
                                            std::to_string(ex.features.dim()) + ", expected " + std::to_string(dim));
    }
    labels[i] = it->second;
    ++per_class[it->second];
    std::copy(ex.features.values.begin(), ex.features.values.end(), x.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (per_class[c] == 0) fail(ErrorCode::kInvalidArgument, "class '" + class_ids[c] + "' has no examples");
  }

  std::vector<double> mean(dim, 0.0), scale(dim, 1.0);
  if (config.standardize) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) mean[d] += x[i * dim + d];
    for (double& m : mean) m /= static_cast<double>(n);
    std::vector<double> var(dim, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) {
        const double e = x[i * dim + d] - mean[d];
        var[d] += e * e;
      }
    for (std::size_t d = 0; d < dim; ++d) {
      const double sd = std::sqrt(var[d] / static_cast<double>(n));
      scale[d] = sd > 1e-12 ? sd : 1.0;
    }
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t d = 0; d < dim; ++d) x[i * dim + d] = (x[i * dim + d] - mean[d]) / scale[d];
  }

  std::vector<double> w(classes * dim, 0.0), b(classes, 0.0), gw, gb;
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(config.seed);
  const std::size_t batch = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  result.epoch_loss.reserve(static_cast<std::size_t>(config.epochs));
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < n; start += batch) {
      const auto rows = std::span<const std::size_t>(order).subspan(start, std::min(batch, n - start));
      const double loss = objective(w, b, classes, dim, x.data(), rows, labels, config.l2, &gw, &gb);
      if (!std::isfinite(loss)) {
        fail(ErrorCode::kDivergence, "training diverged (non-finite loss) in epoch " + std::to_string(epoch));
      }
      for (std::size_t i = 0; i < w.size(); ++i) w[i] -= config.learning_rate * gw[i];
      for (std::size_t c = 0; c < classes; ++c) b[c] -= config.learning_rate * gb[c];
      epoch_sum += loss;
      ++batches;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(batches));
  }

  // Fold (x - mean) / scale into the raw-feature parameters.
  ModelParams& p = result.params;
  p.class_ids = class_ids;
  p.feature_spec = spec;
  p.weights.assign(classes * dim, 0.0);
  p.biases = b;
  for (std::size_t c = 0; c < classes; ++c) {
    for (std::size_t d = 0; d < dim; ++d) {
      const double raw = w[c * dim + d] / scale[d];
      p.weights[c * dim + d] = raw;
      p.biases[c] -= raw * mean[d];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t d = 0; d < dim; ++d) x[i * dim + d] = dataset[i].features.values[d];
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), 0);
  // Reported loss is the plain data term on raw features; the penalty lives
  // in standardized coordinates during optimization.
  p.train_loss = objective(p.weights, p.biases, classes, dim, x.data(), all, labels, 0.0, nullptr, nullptr);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto z = logits(p, std::span<const double>(x.data() + i * dim, dim));
    // Lowest index wins ties, matching the class-id tie-break when ids are
    // sorted; compare ids explicitly to be exact.
    std::size_t best = 0;
    for (std::size_t c = 1; c < classes; ++c) {
      if (z[c] > z[best] || (z[c] == z[best] && class_ids[c] < class_ids[best])) best = c;
    }
    correct += best == labels[i];
  }
  p.train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
  if (!std::isfinite(p.train_loss)) fail(ErrorCode::kDivergence, "training diverged (non-finite final loss)");
  p.trained_at = config.trained_at.value_or(std::chrono::time_point_cast<std::chrono::milliseconds>(Clock::now()));
  p.version = config.version.empty() ? digest_version(p) : config.version;
  validate(p);
  return result;
}

LossGradient loss_and_gradient(const ModelParams& params, std::span<const LabeledVector> batch, double l2) {
  if (batch.empty()) fail(ErrorCode::kInvalidArgument, "empty batch");
  const std::size_t classes = params.classes();
  const std::size_t dim = params.dim();
  if (params.weights.size() != classes * dim || params.biases.size() != classes) {
    fail(ErrorCode::kInvalidArgument, "parameter shapes do not match the feature spec");
  }
  std::vector<double> x(batch.size() * dim);
  std::vector<std::size_t> labels(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    if (batch[i].features.dim() != dim) {
      fail(ErrorCode::kInvalidArgument, "dimension mismatch: got " + std::to_string(batch[i].features.dim()) +
                                            ", expected " + std::to_string(dim));
    }
    const auto it = std::find(params.class_ids.begin(), params.class_ids.end(), batch[i].class_id);
    if (it == params.class_ids.end()) fail(ErrorCode::kInvalidArgument, "unknown label '" + batch[i].class_id + "'");
    labels[i] = static_cast<std::size_t>(it - params.class_ids.begin());
    std::copy(batch[i].features.values.begin(), batch[i].features.values.end(),
              x.begin() + static_cast<std::ptrdiff_t>(i * dim));
  }
  std::vector<std::size_t> rows(batch.size());
  std::iota(rows.begin(), rows.end(), 0);
  LossGradient out;
  out.loss = objective(params.weights, params.biases, classes, dim, x.data(), rows, labels, l2,
                       &out.grad_weights, &out.grad_biases);
  return out;
}

std::vector<double> softmax(std::span<const double> z) {
  std::vector<double> p(z.size());
  if (z.empty()) return p;
  const double zmax = *std::max_element(z.begin(), z.end());
  double denom = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    p[i] = std::exp(z[i] - zmax);
    denom += p[i];
  }
  for (double& v : p) v /= denom;
  return p;
}

std::vector<double> logits(const ModelParams& params, std::span<const double> x) {
  const std::size_t dim = params.dim();
  std::vector<double> z(params.classes());
  for (std::size_t c = 0; c < z.size(); ++c) {
    const double* wc = params.weights.data() + c * dim;
    double acc = params.biases[c];
    for (std::size_t d = 0; d < dim; ++d) acc += wc[d] * x[d];
    z[c] = acc;
  }
  return z;
}

Prediction prediction_from_logits(std::span<const double> z, const std::vector<std::string>& class_ids,
                                  const std::string& model_version) {
  const auto p = softmax(z);
  std::vector<std::size_t> order(z.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (z[a] != z[b]) return z[a] > z[b];
    return class_ids[a] < class_ids[b];
  });
  Prediction out;
  out.model_version = model_version;
  out.ranked.reserve(order.size());
  for (std::size_t i : order) out.ranked.push_back({class_ids[i], p[i]});
  return out;
}

Prediction predict(const ModelParams& params, const FeatureVector& fv) {
  const std::string expected = spec_hash(params.feature_spec);
  if (fv.spec_hash != expected) {
    fail(ErrorCode::kInvalidArgument, "feature spec mismatch: vector " + fv.spec_hash + ", model " + expected);
  }
  if (fv.dim() != params.dim()) {
    fail(ErrorCode::kInvalidArgument, "dimension mismatch: got " + std::to_string(fv.dim()) + ", expected " +
                                          std::to_string(params.dim()));
  }
  return prediction_from_logits(logits(params, fv.values), params.class_ids, params.version);
}

std::vector<RankedClass> top_k(const Prediction& prediction, std::size_t k) {
  if (k < 1 || k > prediction.ranked.size()) {
    fail(ErrorCode::kInvalidArgument, "k=" + std::to_string(k) + " outside [1, " +
                                          std::to_string(prediction.ranked.size()) + "]");
  }
  return {prediction.ranked.begin(), prediction.ranked.begin() + static_cast<std::ptrdiff_t>(k)};
}

}  // namespace xylid
