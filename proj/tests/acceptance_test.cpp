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

// Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
// failure. Tolerances and time limits are fixed here.

#include <chrono>
#include <cstdio>
#include <functional>

#include "oracles.hpp"
#include "pathtriage/metrics.hpp"
#include "pathtriage/pipeline.hpp"
#include "pathtriage/triage.hpp"
#include "scenario.hpp"

namespace pt = pathtriage;
namespace fs = std::filesystem;

namespace {

constexpr double kApTolerance = 1e-9;
constexpr double kGradientTolerance = 1e-5;
constexpr double kObjectiveTolerance = 1e-12;
constexpr double kMinTestMap = 0.95;
constexpr double kMaxUncertain = 0.25;
// Exact rationals, compared up to double rounding.
constexpr double kConsistencyTolerance = 1e-15;

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void criterion(const char* name, double limit_seconds, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (limit_seconds > 0 && secs > limit_seconds) {
    o.pass = false;
    o.detail += " (over the " + std::to_string(int(limit_seconds)) + " s limit)";
  }
  std::printf("%s %s: %s [%.2f s]\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(), secs);
  std::fflush(stdout);
  failures += o.pass ? 0 : 1;
}

std::string fmt(const char* f, double a, double b = 0, double c = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

Outcome ap_oracle() {
  pt::Rng rng(20260101);
  double worst = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t m = 1 + pt::uniform_below(rng, 10);
    std::vector<double> s(m);
    std::vector<std::uint8_t> g(m);
    const bool coarse = trial % 2 == 0;
    for (std::size_t k = 0; k < m; ++k) {
      s[k] = coarse ? double(pt::uniform_below(rng, 4)) / 3.0 : pt::uniform_unit(rng);
      g[k] = pt::uniform_below(rng, 2);
    }
    g[pt::uniform_below(rng, m)] = 1;
    const double ap = pt::average_precision(pt::pr_curve(s, g));
    worst = std::max(worst, std::abs(ap - pt::oracle::exhaustive_ap(s, g)));
  }
  return {worst <= kApTolerance, fmt("1000 instances, max |AP - oracle| = %.3g", worst)};
}

Outcome gradient() {
  pt::Rng rng(77);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const auto kind = trial % 2 ? pt::LossKind::kSquaredHinge : pt::LossKind::kLogistic;
    worst = std::max(worst, pt::oracle::gradient_check_instance(rng, kind));
  }
  return {worst <= kGradientTolerance, fmt("100 instances, max relative error %.3g", worst)};
}

std::vector<std::vector<double>> random_score_set(pt::Rng& rng, std::size_t m, std::size_t n) {
  std::vector<std::vector<double>> s(m);
  for (auto& row : s) row = pt::oracle::random_scores(rng, n);
  return s;
}

Outcome triage_monotonicity() {
  pt::Rng rng(5);
  int violations = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + pt::uniform_below(rng, 200), n = 2 + pt::uniform_below(rng, 10);
    const auto s = random_score_set(rng, m, n);
    const std::vector<pt::LabelBits> g(m, pt::LabelBits(n, 0));
    double previous = 2;
    for (double t : pt::kThresholdGrid) {
      const double u = pt::evaluate_triage(s, g, pt::ThresholdPair::symmetric(t)).uncertain_fraction;
      violations += u > previous;
      previous = u;
    }
  }
  return {violations == 0, std::to_string(violations) + " increases over 200 score sets"};
}

Outcome tuning_recompute() {
  pt::Rng rng(50);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t m = 20 + pt::uniform_below(rng, 300), n = 2 + pt::uniform_below(rng, 5);
    std::vector<std::vector<double>> s(m);
    std::vector<pt::LabelBits> g(m, pt::LabelBits(n));
    const double sharp = 0.5 + 4 * pt::uniform_unit(rng);
    for (std::size_t k = 0; k < m; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        g[k][i] = pt::uniform_below(rng, 3) == 0;
        const double z = (g[k][i] ? sharp : -sharp) + 2 * pt::uniform_unit(rng) - 1;
        s[k].push_back(pt::sigmoid(z + (pt::uniform_unit(rng) - 0.5) * 3));
      }
    }
    const auto r = pt::tune_thresholds(s, g);
    double best = -1, best_t = 0;
    for (std::size_t j = 0; j < pt::kThresholdGrid.size(); ++j) {
      const double obj = pt::oracle::triage_objective(s, g, pt::kThresholdGrid[j]);
      mismatches += std::abs(obj - r.grid[j].objective) > kObjectiveTolerance;
      if (obj >= best) {
        best = obj;
        best_t = pt::kThresholdGrid[j];
      }
    }
    mismatches += r.t_low != best_t;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 50 sets x 7 points"};
}

Outcome balanced_weighting() {
  const auto b = pathtriage::scenario::rare_label_recall(95, pt::Weighting::kBalanced);
  const auto u = pathtriage::scenario::rare_label_recall(95, pt::Weighting::kUniform);
  return {b.hits > u.hits, "rare-label recall balanced " + std::to_string(b.hits) + "/" +
                               std::to_string(b.positives) + " vs uniform " +
                               std::to_string(u.hits) + "/" + std::to_string(u.positives)};
}

Outcome consistency_fixtures() {
  using R = pt::ConsistencyRecord;
  const std::vector<R> all{{"r", {{"A"}, {"A"}, {"A"}}}};
  const std::vector<R> two{{"r", {{"A"}, {"A"}, {"B"}}}};
  const std::vector<R> none{{"r", {{"A"}, {"B"}, {}}}};
  const std::vector<R> mixed{{"a", {{"A"}, {"A"}, {"A"}}}, {"b", {{"A"}, {"B"}, {"A"}}}};
  const double v[] = {pt::annotator_consistency(all), pt::annotator_consistency(two),
                      pt::annotator_consistency(none), pt::annotator_consistency(mixed)};
  const double want[] = {1.0, 2.0 / 3.0, 1.0 / 3.0, 5.0 / 6.0};
  bool ok = true;
  for (int k = 0; k < 4; ++k) ok = ok && std::abs(v[k] - want[k]) <= kConsistencyTolerance;
  return {ok, fmt("1 -> %.6f, 2/3 -> %.6f, 1/3 -> %.6f", v[0], v[1], v[2]) +
                  fmt(", 5/6 -> %.6f", v[3])};
}

// The 5000-case synthetic run shared by the last three criteria.
struct EndToEnd {
  pathtriage::scenario::TempDir dir{"acceptance"};
  pt::RunConfig cfg;
  pt::EvaluationResult result;
};

EndToEnd* e2e = nullptr;

void run_pipeline(pt::RunConfig& cfg, const fs::path& out) {
  cfg.out_dir = out;
  pt::cmd_split(cfg);
  pt::cmd_train_select(cfg);
  pt::cmd_evaluate(cfg);
}

Outcome end_to_end() {
  pt::SyntheticSpec spec;  // 5000 cases, 6 labels, seed 2024
  e2e->cfg = pt::load_run_config(
      pathtriage::scenario::write_task(e2e->dir.path(), pt::make_planted_task(spec)));
  e2e->cfg.out_dir = e2e->dir.path() / "run";
  pt::cmd_split(e2e->cfg);
  pt::cmd_train_select(e2e->cfg);
  e2e->result = pt::cmd_evaluate(e2e->cfg);
  const auto& t = e2e->result.triage;
  const double map = e2e->result.metrics.map.value;
  const double automatic = t.automatic_subset_accuracy.value_or(-1);
  const bool ok = map >= kMinTestMap && automatic >= t.full_set_accuracy &&
                  t.uncertain_fraction <= kMaxUncertain;
  return {ok, fmt("test mAP %.4f, uncertain %.2f%%", map, 100 * t.uncertain_fraction) +
                  fmt(", automatic accuracy %.2f%% vs full %.2f%%", 100 * automatic,
                      100 * t.full_set_accuracy)};
}

const char* kOutputs[] = {"split.json",   "vocab.json",   "model.json",    "sweep.json",
                          "tuning.json",  "metrics.json", "pr_points.csv", "triage.json",
                          "triage.txt",   "queue.json",   "scores.jsonl"};

Outcome determinism() {
  auto cfg = e2e->cfg;
  run_pipeline(cfg, e2e->dir.path() / "rerun");
  std::string differing;
  for (const char* name : kOutputs) {
    const auto a = pathtriage::scenario::slurp(e2e->dir.path() / "run" / name);
    const auto b = pathtriage::scenario::slurp(e2e->dir.path() / "rerun" / name);
    if (a.empty() || a != b) differing += std::string(" ") + name;
  }
  return {differing.empty(), differing.empty() ? "11 output files byte-identical on rerun"
                                               : "differs:" + differing};
}

Outcome score_file_seam() {
  auto cfg = e2e->cfg;
  cfg.out_dir = e2e->dir.path() / "seam";
  fs::create_directories(cfg.out_dir);
  fs::copy_file(e2e->dir.path() / "run" / "split.json", cfg.out("split.json"));
  const auto exported = e2e->dir.path() / "exported.jsonl";
  fs::copy_file(e2e->dir.path() / "run" / "scores.jsonl", exported);
  const auto r = pt::cmd_evaluate(cfg, exported);
  const bool same = r.metrics.to_json() == e2e->result.metrics.to_json() &&
                    r.triage.to_json() == e2e->result.triage.to_json() &&
                    r.queue_ids == e2e->result.queue_ids &&
                    pathtriage::scenario::slurp(cfg.out("metrics.json")) ==
                        pathtriage::scenario::slurp(e2e->dir.path() / "run" / "metrics.json");
  return {same, same ? "model and exported score file give identical reports"
                     : "reports differ"};
}

}  // namespace

int main() {
  criterion("ap_oracle_equivalence", 10, ap_oracle);
  criterion("gradient_correctness", 10, gradient);
  criterion("triage_monotonicity", 5, triage_monotonicity);
  criterion("threshold_tuning_recompute", 0, tuning_recompute);
  EndToEnd run;
  e2e = &run;
  criterion("synthetic_end_to_end", 120, end_to_end);
  criterion("balanced_weighting_rare_recall", 0, balanced_weighting);
  criterion("consistency_fixtures", 0, consistency_fixtures);
  criterion("determinism", 0, determinism);
  criterion("score_file_seam", 0, score_file_seam);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
