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

// Confidence triage: any score inside the closed band [t_low, t_high] sends
// the case to a human; everything else is classified automatically.

#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/metrics.hpp"

namespace pathtriage {

// Candidate t_low values, each paired with t_high = 1 - t_low.
inline constexpr std::array<double, 7> kThresholdGrid{0.01, 0.05, 0.1, 0.2,
                                                      0.3,  0.4,  0.45};

inline constexpr double kFullSetDecisionThreshold = 0.5;

struct ThresholdPair {
  double t_low = 0.1;
  double t_high = 0.9;

  static ThresholdPair symmetric(double t_low) {
    if (!(t_low > 0.0 && t_low < 0.5)) {
      throw ValidationError("symmetric t_low must lie in (0, 0.5)");
    }
    return {t_low, 1.0 - t_low};
  }

  void validate() const {
    if (!(t_low >= 0.0 && t_high <= 1.0 && t_low < t_high)) {
      throw ValidationError("thresholds need 0 <= t_low < t_high <= 1");
    }
  }

  bool contains(double p) const { return p >= t_low && p <= t_high; }

  bool operator==(const ThresholdPair&) const = default;

  nlohmann::json to_json() const { return {{"t_low", t_low}, {"t_high", t_high}}; }
  static ThresholdPair from_json(const nlohmann::json& j) {
    ThresholdPair t;
    try {
      t.t_low = j.at("t_low").get<double>();
      t.t_high = j.at("t_high").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed thresholds: ") + e.what());
    }
    t.validate();
    return t;
  }
};

inline bool is_low_confidence(std::span<const double> scores,
                              const ThresholdPair& band) {
  for (double p : scores) {
    if (band.contains(p)) return true;
  }
  return false;
}

// Indices into the score list.
struct ConfidenceSplit {
  std::vector<std::size_t> high;
  std::vector<std::size_t> low;
};

inline ConfidenceSplit split_confidence(std::span<const std::vector<double>> scores,
                                        const ThresholdPair& band) {
  band.validate();
  ConfidenceSplit out;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    (is_low_confidence(scores[k], band) ? out.low : out.high).push_back(k);
  }
  return out;
}

// Only defined on high-confidence cases: above t_high is 1, below t_low is 0.
inline LabelBits decide_labels(std::span<const double> scores,
                               const ThresholdPair& band) {
  LabelBits bits(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (band.contains(scores[i])) {
      throw ValidationError("decide_labels: score " + std::to_string(scores[i]) +
                            " of label " + std::to_string(i) +
                            " lies inside the confidence band");
    }
    bits[i] = scores[i] > band.t_high ? 1 : 0;
  }
  return bits;
}

inline LabelBits threshold_labels(std::span<const double> scores,
                                  double threshold = kFullSetDecisionThreshold) {
  LabelBits bits(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) bits[i] = scores[i] > threshold;
  return bits;
}

struct TriageReport {
  std::string task;
  ThresholdPair thresholds;
  std::size_t total = 0;
  std::size_t high_confidence = 0;
  std::size_t low_confidence = 0;
  double uncertain_fraction = 0.0;
  // Undefined when the high-confidence group is empty (accuracy) or has no
  // positive label (recall).
  std::optional<double> automatic_subset_accuracy;
  std::optional<double> automatic_mean_recall;
  double full_set_accuracy = 0.0;

  nlohmann::json to_json() const {
    const auto opt = [](const std::optional<double>& v) {
      return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
    };
    return {{"task", task},
            {"t_low", thresholds.t_low},
            {"t_high", thresholds.t_high},
            {"uncertain_pct", uncertain_fraction},
            {"auto_recall", opt(automatic_mean_recall)},
            {"auto_accuracy", opt(automatic_subset_accuracy)},
            {"full_accuracy", full_set_accuracy},
            {"counts",
             {{"total", total},
              {"high_confidence", high_confidence},
              {"low_confidence", low_confidence}}}};
  }

  static TriageReport from_json(const nlohmann::json& j) {
    const auto opt = [](const nlohmann::json& v) -> std::optional<double> {
      if (v.is_null()) return std::nullopt;
      return v.get<double>();
    };
    TriageReport r;
    try {
      r.task = j.at("task").get<std::string>();
      r.thresholds = {j.at("t_low").get<double>(), j.at("t_high").get<double>()};
      r.uncertain_fraction = j.at("uncertain_pct").get<double>();
      r.automatic_mean_recall = opt(j.at("auto_recall"));
      r.automatic_subset_accuracy = opt(j.at("auto_accuracy"));
      r.full_set_accuracy = j.at("full_accuracy").get<double>();
      const auto& c = j.at("counts");
      r.total = c.at("total").get<std::size_t>();
      r.high_confidence = c.at("high_confidence").get<std::size_t>();
      r.low_confidence = c.at("low_confidence").get<std::size_t>();
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed triage report: ") + e.what());
    }
    return r;
  }
};

// Rates rendered as percentages with two decimals.
inline std::string render_triage_table(std::span<const TriageReport> rows) {
  const auto pct = [](std::optional<double> v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", *v * 100.0);
    return std::string(buf);
  };
  std::size_t width = 4;
  for (const auto& r : rows) width = std::max(width, r.task.size());
  std::string out;
  char line[256];
  std::snprintf(line, sizeof line, "%-*s  %11s  %11s  %13s  %13s\n",
                static_cast<int>(width), "task", "uncertain", "auto recall",
                "auto accuracy", "full accuracy");
  out += line;
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-*s  %11s  %11s  %13s  %13s\n",
                  static_cast<int>(width), r.task.c_str(),
                  pct(r.uncertain_fraction).c_str(),
                  pct(r.automatic_mean_recall).c_str(),
                  pct(r.automatic_subset_accuracy).c_str(),
                  pct(r.full_set_accuracy).c_str());
    out += line;
  }
  return out;
}

inline TriageReport evaluate_triage(std::span<const std::vector<double>> scores,
                                    std::span<const LabelBits> golds,
                                    const ThresholdPair& band,
                                    std::string task = {}) {
  if (scores.size() != golds.size()) {
    throw ValidationError("evaluate_triage: scores and golds differ in length");
  }
  if (scores.empty()) throw ValidationError("evaluate_triage: no cases");
  const auto split = split_confidence(scores, band);
  TriageReport r;
  r.task = std::move(task);
  r.thresholds = band;
  r.total = scores.size();
  r.high_confidence = split.high.size();
  r.low_confidence = split.low.size();
  r.uncertain_fraction =
      static_cast<double>(split.low.size()) / static_cast<double>(scores.size());

  if (!split.high.empty()) {
    std::vector<LabelBits> predicted, truth;
    for (auto k : split.high) {
      predicted.push_back(decide_labels(scores[k], band));
      truth.push_back(golds[k]);
    }
    r.automatic_subset_accuracy = subset_accuracy(predicted, truth);
    if (auto recall = mean_label_recall_if_defined(predicted, truth)) {
      r.automatic_mean_recall = recall->mean;
    }
  }
  std::vector<LabelBits> full;
  full.reserve(scores.size());
  for (const auto& s : scores) full.push_back(threshold_labels(s));
  r.full_set_accuracy = subset_accuracy(full, golds);
  return r;
}

struct TuningPoint {
  double t_low = 0.0;
  double objective = 0.0;
  double uncertain_fraction = 0.0;
  std::optional<double> automatic_subset_accuracy;
};

struct TuningResult {
  double t_low = 0.0;
  std::vector<TuningPoint> grid;

  ThresholdPair thresholds() const { return ThresholdPair::symmetric(t_low); }

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : grid) {
      pts.push_back({{"t_low", p.t_low},
                     {"objective", p.objective},
                     {"uncertain_pct", p.uncertain_fraction},
                     {"auto_accuracy", p.automatic_subset_accuracy
                                           ? nlohmann::json(*p.automatic_subset_accuracy)
                                           : nlohmann::json(nullptr)}});
    }
    return {{"t_low", t_low}, {"t_high", 1.0 - t_low}, {"grid", pts}};
  }
};

// Maximizes automatic accuracy * (1 - uncertain fraction) over the grid.
// An empty high-confidence group scores 0. Ties go to the largest t_low.
inline TuningResult tune_thresholds(std::span<const std::vector<double>> scores,
                                    std::span<const LabelBits> golds,
                                    std::span<const double> grid = kThresholdGrid) {
  if (scores.empty()) throw ValidationError("tune_thresholds: empty validation set");
  if (grid.empty()) throw ValidationError("tune_thresholds: empty grid");
  TuningResult result;
  double best = -1.0;
  for (double t_low : grid) {
    const auto report = evaluate_triage(scores, golds, ThresholdPair::symmetric(t_low));
    TuningPoint p;
    p.t_low = t_low;
    p.uncertain_fraction = report.uncertain_fraction;
    p.automatic_subset_accuracy = report.automatic_subset_accuracy;
    p.objective = report.automatic_subset_accuracy
                      ? *report.automatic_subset_accuracy * (1.0 - report.uncertain_fraction)
                      : 0.0;
    if (p.objective > best || (p.objective == best && t_low > result.t_low)) {
      best = p.objective;
      result.t_low = t_low;
    }
    result.grid.push_back(p);
  }
  return result;
}

}  // namespace pathtriage
