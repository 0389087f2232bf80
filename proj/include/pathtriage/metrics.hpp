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

// Precision-recall curves, interpolated average precision, mAP, subset
// accuracy, mean label recall and three-annotator consistency.

#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"

namespace pathtriage {

struct PRPoint {
  double recall = 0.0;
  double precision = 0.0;
  // Cumulative counts; fp is fractional on interpolated points.
  double tp = 0.0;
  double fp = 0.0;
  enum class Kind { kAnchor, kThreshold, kInterpolated } kind = Kind::kThreshold;
};

struct PRCurve {
  std::vector<PRPoint> points;
  std::size_t positives = 0;
};

// Cases are ranked by descending score and each distinct score is one
// threshold. Between consecutive thresholds a point is inserted at every
// unit TP step, with FP interpolated linearly in count space. Thresholds
// that still have TP = 0 sit at recall 0 and are not emitted; the curve is
// anchored at recall 0 with the precision of its first emitted point.
inline PRCurve pr_curve(std::span<const double> scores,
                        std::span<const std::uint8_t> golds) {
  if (scores.size() != golds.size()) {
    throw ValidationError("pr_curve: scores and golds differ in length");
  }
  PRCurve curve;
  for (auto g : golds) curve.positives += g ? 1 : 0;
  if (curve.positives == 0) {
    throw ValidationError("pr_curve: undefined without positive cases");
  }
  const double total = static_cast<double>(curve.positives);

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  const auto emit = [&](double tp, double fp, PRPoint::Kind kind) {
    curve.points.push_back({tp / total, tp / (tp + fp), tp, fp, kind});
  };

  curve.points.push_back({0.0, 0.0, 0.0, 0.0, PRPoint::Kind::kAnchor});
  double prev_tp = 0.0, prev_fp = 0.0;
  double tp = 0.0, fp = 0.0;
  std::size_t k = 0;
  while (k < order.size()) {
    const double threshold = scores[order[k]];
    while (k < order.size() && scores[order[k]] == threshold) {
      (golds[order[k]] ? tp : fp) += 1.0;
      ++k;
    }
    const double step = tp - prev_tp;
    for (double x = 1.0; x < step; x += 1.0) {
      emit(prev_tp + x, prev_fp + (fp - prev_fp) * x / step,
           PRPoint::Kind::kInterpolated);
    }
    if (tp > 0.0) emit(tp, fp, PRPoint::Kind::kThreshold);
    prev_tp = tp;
    prev_fp = fp;
  }
  curve.points.front().precision = curve.points[1].precision;
  return curve;
}

// Composite trapezoid over recall.
inline double average_precision(const PRCurve& curve) {
  double area = 0.0;
  for (std::size_t j = 1; j < curve.points.size(); ++j) {
    const auto& a = curve.points[j - 1];
    const auto& b = curve.points[j];
    area += (b.recall - a.recall) * (b.precision + a.precision) / 2.0;
  }
  return area;
}

// AP of one column of a score matrix; nullopt when the label has no
// positive case.
inline std::optional<double> label_average_precision(
    std::span<const std::vector<double>> scores,
    std::span<const LabelBits> golds, std::size_t label) {
  std::vector<double> column;
  std::vector<std::uint8_t> truth;
  column.reserve(scores.size());
  truth.reserve(scores.size());
  bool any = false;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    column.push_back(scores[k].at(label));
    truth.push_back(golds[k].at(label));
    any = any || truth.back();
  }
  if (!any) return std::nullopt;
  return average_precision(pr_curve(column, truth));
}

struct MeanAveragePrecision {
  double value = 0.0;
  std::vector<std::string> skipped_labels;
};

// Mean over labels whose AP is defined; undefined ones are listed by name.
inline MeanAveragePrecision mean_average_precision(
    std::span<const std::optional<double>> per_label,
    std::span<const std::string> names) {
  MeanAveragePrecision out;
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < per_label.size(); ++i) {
    if (per_label[i]) {
      sum += *per_label[i];
      ++defined;
    } else {
      out.skipped_labels.push_back(i < names.size() ? names[i]
                                                    : "#" + std::to_string(i));
    }
  }
  if (defined == 0) {
    throw ValidationError("mAP undefined: no label has a positive case");
  }
  out.value = sum / static_cast<double>(defined);
  return out;
}

inline void check_aligned(std::span<const LabelBits> predictions,
                          std::span<const LabelBits> golds) {
  if (predictions.size() != golds.size()) {
    throw ValidationError("predictions and golds differ in length");
  }
  for (std::size_t k = 0; k < golds.size(); ++k) {
    if (predictions[k].size() != golds[k].size()) {
      throw ValidationError("prediction " + std::to_string(k) +
                            " has a different label count than its gold");
    }
  }
}

// Fraction of cases whose whole predicted label set equals the gold set.
inline double subset_accuracy(std::span<const LabelBits> predictions,
                              std::span<const LabelBits> golds) {
  check_aligned(predictions, golds);
  if (golds.empty()) throw ValidationError("subset_accuracy: no cases");
  std::size_t exact = 0;
  for (std::size_t k = 0; k < golds.size(); ++k) {
    exact += predictions[k] == golds[k] ? 1 : 0;
  }
  return static_cast<double>(exact) / static_cast<double>(golds.size());
}

struct LabelRecall {
  double mean = 0.0;
  std::vector<double> per_label;          // NaN where excluded
  std::vector<std::size_t> excluded;      // labels with no positive
};

// Per-label recall TP / (TP + FN) averaged over labels with a positive.
inline std::optional<LabelRecall> mean_label_recall_if_defined(
    std::span<const LabelBits> predictions, std::span<const LabelBits> golds) {
  check_aligned(predictions, golds);
  if (golds.empty()) return std::nullopt;
  const std::size_t n = golds.front().size();
  std::vector<std::size_t> tp(n, 0), pos(n, 0);
  for (std::size_t k = 0; k < golds.size(); ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      if (golds[k][i]) {
        ++pos[i];
        tp[i] += predictions[k][i] ? 1 : 0;
      }
    }
  }
  LabelRecall out;
  out.per_label.assign(n, std::numeric_limits<double>::quiet_NaN());
  double sum = 0.0;
  std::size_t defined = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (pos[i] == 0) {
      out.excluded.push_back(i);
      continue;
    }
    out.per_label[i] = static_cast<double>(tp[i]) / static_cast<double>(pos[i]);
    sum += out.per_label[i];
    ++defined;
  }
  if (defined == 0) return std::nullopt;
  out.mean = sum / static_cast<double>(defined);
  return out;
}

inline LabelRecall mean_label_recall(std::span<const LabelBits> predictions,
                                     std::span<const LabelBits> golds) {
  auto r = mean_label_recall_if_defined(predictions, golds);
  if (!r) throw ValidationError("mean_label_recall: no label has a positive case");
  return *r;
}

using LabelSet = std::set<std::string>;

struct ConsistencyRecord {
  std::string report_id;
  std::vector<LabelSet> annotations;
};

// Per-report agreement: 1 when all three label sets are identical, 2/3 when
// exactly two are, 1/3 when all differ. Returns the mean over reports.
inline double annotator_consistency(std::span<const ConsistencyRecord> records) {
  if (records.empty()) throw ValidationError("annotator_consistency: no records");
  double sum = 0.0;
  for (const auto& r : records) {
    if (r.annotations.size() != 3) {
      throw ValidationError("report '" + r.report_id + "' has " +
                            std::to_string(r.annotations.size()) +
                            " annotations, expected 3");
    }
    const auto& a = r.annotations;
    const bool ab = a[0] == a[1], bc = a[1] == a[2], ac = a[0] == a[2];
    if (ab && bc) {
      sum += 1.0;
    } else if (ab || bc || ac) {
      sum += 2.0 / 3.0;
    } else {
      sum += 1.0 / 3.0;
    }
  }
  return sum / static_cast<double>(records.size());
}

struct MetricsReport {
  std::string task;
  std::vector<std::string> labels;
  std::vector<std::optional<double>> per_label_ap;
  std::vector<std::optional<PRCurve>> curves;
  MeanAveragePrecision map;

  nlohmann::json to_json() const {
    nlohmann::json ap = nlohmann::json::object();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      ap[labels[i]] = per_label_ap[i] ? nlohmann::json(*per_label_ap[i])
                                      : nlohmann::json(nullptr);
    }
    return {{"task", task},
            {"per_label_ap", ap},
            {"map", map.value},
            {"skipped_labels", map.skipped_labels}};
  }

  // label,index,kind,recall,precision,tp,fp
  std::string pr_points_csv() const {
    std::ostringstream out;
    out.precision(17);
    out << "label,index,kind,recall,precision,tp,fp\n";
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!curves[i]) continue;
      const auto& pts = curves[i]->points;
      for (std::size_t j = 0; j < pts.size(); ++j) {
        const char* kind = pts[j].kind == PRPoint::Kind::kAnchor      ? "anchor"
                           : pts[j].kind == PRPoint::Kind::kThreshold ? "threshold"
                                                                      : "interpolated";
        std::string quoted;
        for (char c : labels[i]) {
          if (c == '"') quoted += '"';
          quoted += c;
        }
        out << '"' << quoted << "\"," << j << ',' << kind << ','
            << pts[j].recall << ',' << pts[j].precision << ',' << pts[j].tp
            << ',' << pts[j].fp << '\n';
      }
    }
    return out.str();
  }
};

inline MetricsReport evaluate_ranking(const std::string& task,
                                      std::span<const std::string> labels,
                                      std::span<const std::vector<double>> scores,
                                      std::span<const LabelBits> golds) {
  if (scores.size() != golds.size()) {
    throw ValidationError("scores and golds differ in length");
  }
  MetricsReport report;
  report.task = task;
  report.labels.assign(labels.begin(), labels.end());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    std::vector<double> column;
    std::vector<std::uint8_t> truth;
    bool any = false;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      column.push_back(scores[k].at(i));
      truth.push_back(golds[k].at(i));
      any = any || truth.back();
    }
    if (any) {
      auto curve = pr_curve(column, truth);
      report.per_label_ap.push_back(average_precision(curve));
      report.curves.push_back(std::move(curve));
    } else {
      report.per_label_ap.push_back(std::nullopt);
      report.curves.push_back(std::nullopt);
    }
  }
  report.map = mean_average_precision(report.per_label_ap, labels);
  return report;
}

}  // namespace pathtriage
