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

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "pathtriage/triage.hpp"

namespace pathtriage {
namespace {

using Scores = std::vector<std::vector<double>>;
using Golds = std::vector<LabelBits>;

const ThresholdPair kBand{0.1, 0.9};

TEST(ThresholdPair, Validation) {
  EXPECT_NO_THROW(ThresholdPair::symmetric(0.2));
  EXPECT_DOUBLE_EQ(ThresholdPair::symmetric(0.2).t_high, 0.8);
  EXPECT_THROW(ThresholdPair::symmetric(0.5), ValidationError);
  EXPECT_THROW(ThresholdPair::symmetric(0.0), ValidationError);
  EXPECT_THROW((ThresholdPair{0.7, 0.3}.validate()), ValidationError);
  EXPECT_THROW((ThresholdPair{-0.1, 0.3}.validate()), ValidationError);
  const auto back = ThresholdPair::from_json(ThresholdPair{0.05, 0.95}.to_json());
  EXPECT_EQ(back.t_low, 0.05);
  EXPECT_EQ(back.t_high, 0.95);
}

TEST(SplitConfidence, Examples) {
  const std::vector<double> a{0.99, 0.01}, b{0.99, 0.5}, c{0.1, 0.01}, d{0.9, 0.99};
  EXPECT_FALSE(is_low_confidence(a, kBand));
  EXPECT_TRUE(is_low_confidence(b, kBand));
  EXPECT_TRUE(is_low_confidence(c, kBand));
  EXPECT_TRUE(is_low_confidence(d, kBand));
  const Scores all{a, b, c};
  const auto s = split_confidence(all, kBand);
  EXPECT_EQ(s.high, std::vector<std::size_t>{0});
  EXPECT_EQ(s.low, (std::vector<std::size_t>{1, 2}));
}

TEST(DecideLabels, Examples) {
  EXPECT_EQ(decide_labels(std::vector<double>{0.99, 0.01, 0.95}, kBand), (LabelBits{1, 0, 1}));
  EXPECT_EQ(decide_labels(std::vector<double>{0.01, 0.02}, kBand), (LabelBits{0, 0}));
  EXPECT_EQ(decide_labels(std::vector<double>{0.9001, 0.0999}, kBand), (LabelBits{1, 0}));
  EXPECT_THROW(decide_labels(std::vector<double>{0.99, 0.5}, kBand), ValidationError);
}

TEST(EvaluateTriage, IdealModel) {
  const Scores s{{0.99, 0.01}, {0.02, 0.97}, {0.01, 0.01}};
  const Golds g{{1, 0}, {0, 1}, {0, 0}};
  const auto r = evaluate_triage(s, g, kBand, "t");
  EXPECT_EQ(r.uncertain_fraction, 0.0);
  EXPECT_EQ(r.automatic_subset_accuracy, 1.0);
  EXPECT_EQ(r.automatic_mean_recall, 1.0);
  EXPECT_EQ(r.full_set_accuracy, 1.0);
  EXPECT_EQ(r.high_confidence + r.low_confidence, r.total);
}

TEST(EvaluateTriage, FullyDeferred) {
  const Scores s(4, {0.5, 0.5});
  const Golds g(4, {1, 0});
  const auto r = evaluate_triage(s, g, kBand);
  EXPECT_EQ(r.uncertain_fraction, 1.0);
  EXPECT_FALSE(r.automatic_subset_accuracy.has_value());
  EXPECT_FALSE(r.automatic_mean_recall.has_value());
  EXPECT_EQ(r.full_set_accuracy, 0.0);
  const auto j = r.to_json();
  EXPECT_TRUE(j["auto_accuracy"].is_null());
}

TEST(EvaluateTriage, HandCounts) {
  // Case 1 is deferred, case 3 is confidently wrong.
  const Scores s{{0.95, 0.05}, {0.6, 0.05}, {0.02, 0.97}, {0.95, 0.95}};
  const Golds g{{1, 0}, {1, 0}, {0, 1}, {1, 0}};
  const auto r = evaluate_triage(s, g, kBand);
  EXPECT_EQ(r.low_confidence, 1u);
  EXPECT_DOUBLE_EQ(r.uncertain_fraction, 0.25);
  EXPECT_DOUBLE_EQ(*r.automatic_subset_accuracy, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.automatic_mean_recall, 1.0);
  EXPECT_DOUBLE_EQ(r.full_set_accuracy, 0.75);
}

TEST(EvaluateTriage, JsonRoundTrip) {
  const Scores s{{0.95, 0.05}, {0.6, 0.05}, {0.02, 0.97}};
  const Golds g{{1, 0}, {1, 0}, {0, 0}};
  const auto r = evaluate_triage(s, g, kBand, "main_organ");
  const auto back = TriageReport::from_json(r.to_json());
  EXPECT_EQ(back.to_json(), r.to_json());
  EXPECT_THROW(TriageReport::from_json(nlohmann::json{{"task", "x"}}), ValidationError);
}

TEST(TriageProperties, MonotoneAndPartition) {
  Rng rng(404);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + uniform_below(rng, 60);
    const std::size_t n = 2 + uniform_below(rng, 5);
    Scores s(m);
    Golds g(m, LabelBits(n));
    for (std::size_t k = 0; k < m; ++k) {
      s[k] = oracle::random_scores(rng, n);
      for (auto& b : g[k]) b = uniform_below(rng, 2);
    }
    double previous = 2.0;
    for (double t : kThresholdGrid) {
      const auto band = ThresholdPair::symmetric(t);
      const auto split = split_confidence(s, band);
      std::vector<std::size_t> all(split.high);
      all.insert(all.end(), split.low.begin(), split.low.end());
      std::sort(all.begin(), all.end());
      ASSERT_EQ(all.size(), m);
      for (std::size_t k = 0; k < m; ++k) EXPECT_EQ(all[k], k);
      const auto r = evaluate_triage(s, g, band);
      EXPECT_LE(r.uncertain_fraction, previous);
      previous = r.uncertain_fraction;
      for (auto k : split.high) EXPECT_EQ(decide_labels(s[k], band), threshold_labels(s[k]));
    }
  }
}

TEST(TriageProperties, VanishingBand) {
  Rng rng(9);
  Scores s(300);
  Golds g(300, LabelBits(3, 0));
  for (auto& row : s) row = oracle::random_scores(rng, 3);
  const auto r = evaluate_triage(s, g, ThresholdPair{0.5, 0.5 + 1e-12});
  EXPECT_EQ(r.uncertain_fraction, 0.0);
  EXPECT_EQ(*r.automatic_subset_accuracy, r.full_set_accuracy);
}

TEST(TuneThresholds, PerfectClassifierTiesToLargest) {
  const Scores s{{0.999, 0.001}, {0.001, 0.999}, {0.001, 0.001}};
  const Golds g{{1, 0}, {0, 1}, {0, 0}};
  const auto r = tune_thresholds(s, g);
  EXPECT_EQ(r.t_low, 0.45);
  ASSERT_EQ(r.grid.size(), kThresholdGrid.size());
  for (const auto& p : r.grid) EXPECT_EQ(p.objective, 1.0);
  EXPECT_DOUBLE_EQ(r.thresholds().t_high, 0.55);
}

TEST(TuneThresholds, DegenerateScores) {
  const Scores s(5, {0.5, 0.5});
  const Golds g(5, {0, 1});
  const auto r = tune_thresholds(s, g);
  EXPECT_EQ(r.t_low, 0.45);
  for (const auto& p : r.grid) EXPECT_EQ(p.objective, 0.0);
  const Scores none;
  const Golds no_golds;
  EXPECT_THROW(tune_thresholds(none, no_golds), ValidationError);
}

TEST(TuneThresholds, MatchesGridRecomputation) {
  Rng rng(31337);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 20 + uniform_below(rng, 80);
    Scores s(m);
    Golds g(m, LabelBits(3));
    for (std::size_t k = 0; k < m; ++k) {
      for (int i = 0; i < 3; ++i) {
        g[k][i] = uniform_below(rng, 2);
        const double conf = uniform_unit(rng);
        s[k].push_back(g[k][i] == (uniform_below(rng, 10) != 0) ? 0.5 + conf / 2 : 0.5 - conf / 2);
      }
    }
    const auto r = tune_thresholds(s, g);
    double best = -1, best_t = 0;
    for (std::size_t j = 0; j < kThresholdGrid.size(); ++j) {
      const double obj = oracle::triage_objective(s, g, kThresholdGrid[j]);
      EXPECT_NEAR(r.grid[j].objective, obj, 1e-15);
      if (obj >= best) {
        best = obj;
        best_t = kThresholdGrid[j];
      }
    }
    EXPECT_EQ(r.t_low, best_t);
  }
}

TEST(RenderTable, GoldenRow) {
  TriageReport row;
  row.task = "main organ";
  row.uncertain_fraction = 0.2024;
  row.automatic_mean_recall = 0.8484;
  row.automatic_subset_accuracy = 0.9570;
  row.full_set_accuracy = 0.9115;
  TriageReport empty;
  empty.task = "x";
  empty.uncertain_fraction = 1.0;
  const std::vector<TriageReport> rows{row, empty};
  const std::string want =
      "task          uncertain  auto recall  auto accuracy  full accuracy\n"
      "main organ       20.24%       84.84%         95.70%         91.15%\n"
      "x               100.00%          n/a            n/a          0.00%\n";
  EXPECT_EQ(render_triage_table(rows), want);
}

}  // namespace
}  // namespace pathtriage
