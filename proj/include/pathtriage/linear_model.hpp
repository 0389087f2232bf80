// Copyright 2026 The pathtriage Authors.
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

// One-vs-rest linear classifiers trained by gradient descent on a
// label-weighted binary cross-entropy (logistic regression) or a
// label-weighted squared hinge (linear SVM).

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/features.hpp"
#include "pathtriage/random.hpp"

namespace pathtriage {

// Probabilities are clamped to [kProbabilityClamp, 1 - kProbabilityClamp]
// before taking logs.
inline constexpr double kProbabilityClamp = 1e-12;

inline constexpr int kModelFormatVersion = 1;

enum class LossKind { kLogistic, kSquaredHinge };

inline const char* to_string(LossKind k) {
  return k == LossKind::kLogistic ? "logistic" : "svm";
}

inline LossKind parse_loss_kind(const std::string& s) {
  if (s == "logistic" || s == "lr") return LossKind::kLogistic;
  if (s == "svm" || s == "squared_hinge") return LossKind::kSquaredHinge;
  throw ValidationError("unknown loss kind '" + s + "'");
}

struct TrainConfig {
  LossKind loss = LossKind::kLogistic;
  Weighting weighting = Weighting::kBalanced;
  double learning_rate = 1.0;
  int epochs = 60;
  double l2 = 1e-6;
  // 0 means full batch.
  std::size_t batch_size = 16;
  std::uint64_t seed = 1;

  bool operator==(const TrainConfig&) const = default;

  nlohmann::json to_json() const {
    return {{"loss", to_string(loss)},
            {"weighting", to_string(weighting)},
            {"learning_rate", learning_rate},
            {"epochs", epochs},
            {"l2", l2},
            {"batch_size", batch_size},
            {"seed", seed}};
  }

  // Missing keys keep their defaults.
  static TrainConfig from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
      if (j.contains("loss")) c.loss = parse_loss_kind(j["loss"].get<std::string>());
      if (j.contains("weighting")) {
        c.weighting = parse_weighting(j["weighting"].get<std::string>());
      }
      if (j.contains("learning_rate")) c.learning_rate = j["learning_rate"].get<double>();
      if (j.contains("epochs")) c.epochs = j["epochs"].get<int>();
      if (j.contains("l2")) c.l2 = j["l2"].get<double>();
      if (j.contains("batch_size")) c.batch_size = j["batch_size"].get<std::size_t>();
      if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed training config: ") + e.what());
    }
    if (!(c.learning_rate > 0.0) || c.epochs < 1 || !(c.l2 >= 0.0)) {
      throw ValidationError(
          "training config needs learning_rate > 0, epochs >= 1, l2 >= 0");
    }
    return c;
  }
};

// Per-label score p_i in [0, 1].
using ScoreVector = std::vector<double>;

struct Example {
  FeatureVector features;
  LabelBits gold;
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

class LinearModel {
 public:
  LinearModel() = default;
  LinearModel(std::string schema_name, std::vector<std::string> labels,
              std::size_t dimension, TrainConfig config,
              std::uint64_t vocabulary_fingerprint = 0)
      : schema_name_(std::move(schema_name)),
        labels_(std::move(labels)),
        dimension_(dimension),
        weights_(labels_.size() * dimension, 0.0),
        bias_(labels_.size(), 0.0),
        config_(config),
        vocabulary_fingerprint_(vocabulary_fingerprint) {}

  const std::string& schema_name() const { return schema_name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t num_labels() const { return labels_.size(); }
  std::size_t dimension() const { return dimension_; }
  const TrainConfig& config() const { return config_; }
  std::uint64_t vocabulary_fingerprint() const { return vocabulary_fingerprint_; }

  std::span<double> weights(std::size_t label) {
    return {weights_.data() + label * dimension_, dimension_};
  }
  std::span<const double> weights(std::size_t label) const {
    return {weights_.data() + label * dimension_, dimension_};
  }
  double& bias(std::size_t label) { return bias_[label]; }
  double bias(std::size_t label) const { return bias_[label]; }

  // Row-major n x d.
  std::vector<double>& all_weights() { return weights_; }
  const std::vector<double>& all_weights() const { return weights_; }
  std::vector<double>& all_bias() { return bias_; }
  const std::vector<double>& all_bias() const { return bias_; }

  double margin(std::size_t label, const FeatureVector& x) const {
    const auto w = weights(label);
    double z = bias_[label];
    for (const auto& [idx, v] : x.entries) z += w[idx] * v;
    return z;
  }

  void check_dimension(const FeatureVector& x) const {
    if (!x.entries.empty() && x.entries.back().first >= dimension_) {
      throw ValidationError("feature index " +
                            std::to_string(x.entries.back().first) +
                            " exceeds model dimension " +
                            std::to_string(dimension_));
    }
  }

  bool finite() const {
    const auto ok = [](double v) { return std::isfinite(v); };
    return std::all_of(weights_.begin(), weights_.end(), ok) &&
           std::all_of(bias_.begin(), bias_.end(), ok);
  }

  bool operator==(const LinearModel& o) const {
    return schema_name_ == o.schema_name_ && labels_ == o.labels_ &&
           dimension_ == o.dimension_ && weights_ == o.weights_ &&
           bias_ == o.bias_ && config_ == o.config_ &&
           vocabulary_fingerprint_ == o.vocabulary_fingerprint_;
  }

  nlohmann::json to_json() const;
  static LinearModel from_json(const nlohmann::json& j);

 private:
  std::string schema_name_;
  std::vector<std::string> labels_;
  std::size_t dimension_ = 0;
  std::vector<double> weights_;
  std::vector<double> bias_;
  TrainConfig config_;
  std::uint64_t vocabulary_fingerprint_ = 0;
};

inline std::string fingerprint_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline nlohmann::json LinearModel::to_json() const {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    const auto w = weights(i);
    rows.push_back(std::vector<double>(w.begin(), w.end()));
  }
  return {{"format_version", kModelFormatVersion},
          {"schema", schema_name_},
          {"labels", labels_},
          {"vocabulary_fingerprint", fingerprint_hex(vocabulary_fingerprint_)},
          {"dimension", dimension_},
          {"weights", rows},
          {"bias", bias_},
          {"config", config_.to_json()}};
}

inline LinearModel LinearModel::from_json(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) {
      throw ValidationError("model file lacks format_version");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("model format version " + std::to_string(version) +
                            " is not supported (expected " +
                            std::to_string(kModelFormatVersion) + ")");
    }
    const auto fp_text = j.at("vocabulary_fingerprint").get<std::string>();
    std::size_t consumed = 0;
    const auto fp = std::stoull(fp_text, &consumed, 16);
    if (consumed != fp_text.size()) throw ValidationError("bad vocabulary fingerprint");
    LinearModel m(j.at("schema").get<std::string>(),
                  j.at("labels").get<std::vector<std::string>>(),
                  j.at("dimension").get<std::size_t>(),
                  TrainConfig::from_json(j.at("config")), fp);
    const auto& rows = j.at("weights");
    const auto bias = j.at("bias").get<std::vector<double>>();
    if (rows.size() != m.num_labels() || bias.size() != m.num_labels()) {
      throw ValidationError("model weight rows do not match label count");
    }
    for (std::size_t i = 0; i < m.num_labels(); ++i) {
      const auto row = rows[i].get<std::vector<double>>();
      if (row.size() != m.dimension()) {
        throw ValidationError("model weight row " + std::to_string(i) +
                              " has wrong dimension");
      }
      std::copy(row.begin(), row.end(), m.weights(i).begin());
      m.bias(i) = bias[i];
    }
    if (!m.finite()) throw ValidationError("model contains non-finite parameters");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("corrupt model file: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ValidationError("corrupt model file: bad vocabulary fingerprint");
  } catch (const std::out_of_range&) {
    throw ValidationError("corrupt model file: bad vocabulary fingerprint");
  }
}

inline void save_model(const std::string& path, const LinearModel& model) {
  detail::write_text_file(path, model.to_json().dump() + "\n");
}

inline LinearModel load_model(const std::string& path) {
  return LinearModel::from_json(detail::read_json_file(path));
}

// Scores for one document. Logistic and SVM models both go through the
// sigmoid of the margin; the output is clamped away from exactly 0 and 1.
inline ScoreVector predict_scores(const LinearModel& model,
                                  const FeatureVector& x) {
  model.check_dimension(x);
  ScoreVector p(model.num_labels());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::clamp(sigmoid(model.margin(i, x)), kProbabilityClamp,
                      1.0 - kProbabilityClamp);
  }
  return p;
}

struct LossGradient {
  double loss = 0.0;
  std::vector<double> weight_grad;  // row-major n x d, like the model
  std::vector<double> bias_grad;
};

namespace detail {

// Loss of one (label, example) term and its derivative with respect to the
// margin z.
struct TermLoss {
  double loss;
  double dz;
};

inline TermLoss term_loss(LossKind kind, double z, bool positive, double w) {
  const double y = positive ? 1.0 : 0.0;
  if (kind == LossKind::kLogistic) {
    const double raw = sigmoid(z);
    const double p = std::clamp(raw, kProbabilityClamp, 1.0 - kProbabilityClamp);
    const double loss = -w * (y * std::log(p) + (1.0 - y) * std::log(1.0 - p));
    return {loss, p == raw ? w * (p - y) : 0.0};
  }
  const double s = 2.0 * y - 1.0;
  const double h = std::max(0.0, 1.0 - s * z);
  return {w * h * h, -2.0 * w * s * h};
}

inline void check_example(const LinearModel& model, const Example& ex) {
  if (ex.gold.size() != model.num_labels()) {
    throw ValidationError("gold vector has wrong length");
  }
  model.check_dimension(ex.features);
}

}  // namespace detail

// Summed (not averaged) weighted loss over the batch and its exact gradient.
//   logistic: -sum_k sum_i w_i (y ln p + (1 - y) ln(1 - p)), p = sigmoid(z)
//   svm:       sum_k sum_i w_i max(0, 1 - s z)^2,            s = 2y - 1
// Where the probability clamp is active the loss is flat in z, so those
// terms contribute zero gradient.
inline LossGradient loss_and_gradient(const LinearModel& model,
                                      std::span<const Example> batch,
                                      std::span<const double> label_weights) {
  const std::size_t n = model.num_labels();
  if (label_weights.size() != n) {
    throw ValidationError("label weight count does not match model labels");
  }
  if (batch.empty()) throw ValidationError("loss_and_gradient: empty batch");
  LossGradient out;
  out.weight_grad.assign(n * model.dimension(), 0.0);
  out.bias_grad.assign(n, 0.0);
  for (const auto& ex : batch) {
    detail::check_example(model, ex);
    for (std::size_t i = 0; i < n; ++i) {
      const auto t = detail::term_loss(model.config().loss, model.margin(i, ex.features),
                                       ex.gold[i] != 0, label_weights[i]);
      out.loss += t.loss;
      if (t.dz == 0.0) continue;
      out.bias_grad[i] += t.dz;
      double* row = out.weight_grad.data() + i * model.dimension();
      for (const auto& [idx, v] : ex.features.entries) row[idx] += t.dz * v;
    }
  }
  return out;
}

// Loss only, same definition as loss_and_gradient.
inline double weighted_loss(const LinearModel& model, std::span<const Example> data,
                            std::span<const double> label_weights) {
  if (label_weights.size() != model.num_labels()) {
    throw ValidationError("label weight count does not match model labels");
  }
  double loss = 0.0;
  for (const auto& ex : data) {
    detail::check_example(model, ex);
    for (std::size_t i = 0; i < model.num_labels(); ++i) {
      loss += detail::term_loss(model.config().loss, model.margin(i, ex.features),
                                ex.gold[i] != 0, label_weights[i])
                  .loss;
    }
  }
  return loss;
}

// Largest step size for which full-batch gradient descent on the mean loss
// plus (l2/2)|W|^2 is guaranteed to decrease the objective (2 / Lipschitz
// constant of the gradient). The bias acts as a feature of value 1.
inline double stable_learning_rate(std::span<const Example> data,
                                   std::span<const double> label_weights,
                                   LossKind loss, double l2) {
  double max_sq = 0.0;
  for (const auto& ex : data) {
    double sq = 1.0;
    for (const auto& [_, v] : ex.features.entries) sq += v * v;
    max_sq = std::max(max_sq, sq);
  }
  const double w_max =
      label_weights.empty()
          ? 1.0
          : *std::max_element(label_weights.begin(), label_weights.end());
  const double curvature = loss == LossKind::kLogistic ? 0.25 : 2.0;
  return 2.0 / (w_max * curvature * max_sq + l2);
}

struct TrainingResult {
  LinearModel model;
  // Mean loss over the training set plus the L2 term, after each epoch.
  std::vector<double> epoch_objective;
};

inline double training_objective(const LinearModel& model,
                                 std::span<const Example> data,
                                 std::span<const double> label_weights,
                                 double l2) {
  double reg = 0.0;
  for (double v : model.all_weights()) reg += v * v;
  return weighted_loss(model, data, label_weights) / static_cast<double>(data.size()) +
         0.5 * l2 * reg;
}

// Gradient descent on mean loss + (l2/2)|W|^2, one step per (mini-)batch:
//   W <- (1 - lr * l2) W - (lr / |B|) grad,   b <- b - (lr / |B|) grad_b
// Weights are stored as scale * V so the decay costs O(1) per step and the
// gradient part touches only the batch's non-zero features.
inline TrainingResult train_with_history(std::span<const Example> data,
                                         const TaskSchema& schema,
                                         const Vocabulary& vocab,
                                         const TrainConfig& config) {
  if (data.empty()) throw ValidationError("train: empty training set");
  LabelStats stats;
  stats.total_cases = data.size();
  stats.positive_counts.assign(schema.size(), 0);
  for (const auto& ex : data) {
    if (ex.gold.size() != schema.size()) {
      throw ValidationError("train: gold vector length does not match schema");
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      stats.positive_counts[i] += ex.gold[i] ? 1 : 0;
    }
  }
  const auto weights = label_weights(stats, config.weighting, schema.labels());

  TrainingResult result{LinearModel(schema.name(), schema.labels(), vocab.size(),
                                    config, vocab.fingerprint()),
                        {}};
  LinearModel& model = result.model;
  for (const auto& ex : data) model.check_dimension(ex.features);
  const std::size_t n = model.num_labels();
  const std::size_t d = model.dimension();
  const std::size_t batch =
      config.batch_size == 0 ? data.size() : std::min(config.batch_size, data.size());
  const double decay = 1.0 - config.learning_rate * config.l2;
  if (!(decay > 0.0)) {
    throw ValidationError("train: learning_rate * l2 must be below 1");
  }

  auto& values = model.all_weights();
  auto& bias = model.all_bias();
  double scale = 1.0;
  const auto fold = [&] {
    if (scale == 1.0) return;
    for (double& v : values) v *= scale;
    scale = 1.0;
  };

  Rng rng(config.seed);
  std::vector<std::size_t> order(data.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::vector<double> dz;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (batch < data.size()) order = seeded_permutation(data.size(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t stop = std::min(order.size(), start + batch);
      const double step = config.learning_rate / static_cast<double>(stop - start);
      // Derivatives at the current parameters, before any update.
      dz.assign((stop - start) * n, 0.0);
      for (std::size_t k = start; k < stop; ++k) {
        const auto& ex = data[order[k]];
        for (std::size_t i = 0; i < n; ++i) {
          double z = 0.0;
          const double* row = values.data() + i * d;
          for (const auto& [idx, v] : ex.features.entries) z += row[idx] * v;
          z = scale * z + bias[i];
          dz[(k - start) * n + i] =
              detail::term_loss(config.loss, z, ex.gold[i] != 0, weights[i]).dz;
        }
      }
      scale *= decay;
      for (std::size_t k = start; k < stop; ++k) {
        const auto& ex = data[order[k]];
        for (std::size_t i = 0; i < n; ++i) {
          const double g = dz[(k - start) * n + i];
          if (g == 0.0) continue;
          bias[i] -= step * g;
          double* row = values.data() + i * d;
          const double coef = step * g / scale;
          for (const auto& [idx, v] : ex.features.entries) row[idx] -= coef * v;
        }
      }
      if (scale < 1e-100) fold();
    }
    fold();
    const double objective = training_objective(model, data, weights, config.l2);
    if (!std::isfinite(objective) || !model.finite()) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch + 1) +
                            " (learning_rate " + std::to_string(config.learning_rate) +
                            ")");
    }
    result.epoch_objective.push_back(objective);
  }
  return result;
}

inline LinearModel train(std::span<const Example> data, const TaskSchema& schema,
                         const Vocabulary& vocab, const TrainConfig& config) {
  return train_with_history(data, schema, vocab, config).model;
}

}  // namespace pathtriage
