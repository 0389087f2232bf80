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

// The end-to-end pipeline behind the command-line tool. Every command reads
// a RunConfig, works inside its output directory and writes plain JSON/CSV.
// Outputs depend only on inputs and seeds, so reruns are byte-identical.

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pathtriage/annotations.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/features.hpp"
#include "pathtriage/linear_model.hpp"
#include "pathtriage/metrics.hpp"
#include "pathtriage/scores.hpp"
#include "pathtriage/triage.hpp"

namespace pathtriage {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path schema_path;
  fs::path dataset_path;
  fs::path out_dir = "run";
  std::uint64_t split_seed = 13;
  std::vector<int> ngram_orders{1, 2, 3};
  std::size_t min_df = 2;
  std::vector<TrainConfig> grid{TrainConfig{}};
  std::vector<double> threshold_grid{kThresholdGrid.begin(), kThresholdGrid.end()};
  std::optional<ThresholdPair> thresholds;

  // Relative paths are resolved against base_dir (the config file's folder).
  static RunConfig from_json(const nlohmann::json& j, const fs::path& base_dir) {
    RunConfig c;
    const auto resolve = [&](const std::string& p) {
      fs::path path(p);
      return path.is_absolute() ? path : base_dir / path;
    };
    try {
      c.schema_path = resolve(j.at("schema").get<std::string>());
      c.dataset_path = resolve(j.at("dataset").get<std::string>());
      if (j.contains("out")) c.out_dir = resolve(j["out"].get<std::string>());
      else c.out_dir = base_dir / "run";
      c.split_seed = j.value("split_seed", c.split_seed);
      if (j.contains("features")) {
        const auto& f = j["features"];
        c.ngram_orders = f.value("orders", c.ngram_orders);
        c.min_df = f.value("min_df", c.min_df);
      }
      nlohmann::json defaults = nlohmann::json::object();
      if (j.contains("weighting")) defaults["weighting"] = j["weighting"];
      if (j.contains("grid")) {
        c.grid.clear();
        for (const auto& point : j["grid"]) {
          nlohmann::json merged = defaults;
          merged.update(point);
          c.grid.push_back(TrainConfig::from_json(merged));
        }
      } else {
        c.grid = {TrainConfig::from_json(defaults)};
      }
      c.threshold_grid = j.value("threshold_grid", c.threshold_grid);
      if (j.contains("thresholds") && !j["thresholds"].is_null()) {
        c.thresholds = ThresholdPair::from_json(j["thresholds"]);
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(std::string("malformed run config: ") + e.what());
    }
    if (c.grid.empty()) throw ValidationError("run config: empty hyperparameter grid");
    if (c.threshold_grid.empty()) throw ValidationError("run config: empty threshold grid");
    for (double t : c.threshold_grid) ThresholdPair::symmetric(t);
    if (c.ngram_orders.empty()) throw ValidationError("run config: no n-gram orders");
    return c;
  }

  fs::path out(const char* name) const { return out_dir / name; }
};

inline RunConfig load_run_config(const fs::path& path) {
  return RunConfig::from_json(detail::read_json_file(path.string()),
                              fs::absolute(path).parent_path());
}

struct TaskData {
  TaskSchema schema;
  std::vector<LabeledCase> cases;

  std::unordered_set<std::string> ids() const {
    std::unordered_set<std::string> out;
    for (const auto& c : cases) out.insert(c.id);
    return out;
  }
};

inline TaskData load_task(const RunConfig& cfg) {
  if (!fs::exists(cfg.schema_path)) {
    throw ValidationError("schema file not found: " + cfg.schema_path.string());
  }
  if (!fs::exists(cfg.dataset_path)) {
    throw ValidationError("dataset file not found: " + cfg.dataset_path.string());
  }
  TaskData d{load_schema(cfg.schema_path.string()), {}};
  d.cases = load_dataset(cfg.dataset_path.string(), d.schema);
  return d;
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  fs::create_directories(path.parent_path());
  detail::write_text_file(path.string(), j.dump(2) + "\n");
}

inline void write_text(const fs::path& path, const std::string& body) {
  fs::create_directories(path.parent_path());
  detail::write_text_file(path.string(), body);
}

// ---- split ----------------------------------------------------------------

inline DatasetSplit cmd_split(const RunConfig& cfg) {
  const auto data = load_task(cfg);
  auto split = stratified_split(data.cases, SplitRatios{}, cfg.split_seed);
  write_json(cfg.out("split.json"), split.to_json());
  return split;
}

inline DatasetSplit load_split(const RunConfig& cfg) {
  const auto path = cfg.out("split.json");
  if (!fs::exists(path)) {
    throw ValidationError("split file not found: " + path.string() +
                          " (run the split command first)");
  }
  return DatasetSplit::from_json(detail::read_json_file(path.string()));
}

// ---- train / select -------------------------------------------------------

inline std::vector<Example> featurize(std::span<const LabeledCase> cases,
                                      const Featurizer& featurizer,
                                      const Vocabulary& vocab) {
  std::vector<Example> out;
  out.reserve(cases.size());
  for (const auto& c : cases) out.push_back({featurizer(c.text, vocab), c.gold});
  return out;
}

inline std::vector<ScoreRow> score_cases(const LinearModel& model,
                                         std::span<const Example> examples,
                                         std::span<const LabeledCase> cases) {
  std::vector<ScoreRow> rows;
  rows.reserve(cases.size());
  for (std::size_t k = 0; k < cases.size(); ++k) {
    rows.push_back({cases[k].id, predict_scores(model, examples[k].features)});
  }
  return rows;
}

inline double validation_map(const LinearModel& model, std::span<const Example> val,
                             const TaskSchema& schema) {
  std::vector<std::vector<double>> scores;
  std::vector<LabelBits> golds;
  for (const auto& ex : val) {
    scores.push_back(predict_scores(model, ex.features));
    golds.push_back(ex.gold);
  }
  return evaluate_ranking(schema.name(), schema.labels(), scores, golds).map.value;
}

struct SweepPoint {
  TrainConfig config;
  std::optional<double> validation_map;
  std::string error;
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::size_t selected = 0;
  Vocabulary vocab;
  LinearModel model;

  nlohmann::json to_json() const {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : points) {
      pts.push_back({{"config", p.config.to_json()},
                     {"validation_map", p.validation_map
                                            ? nlohmann::json(*p.validation_map)
                                            : nlohmann::json(nullptr)},
                     {"error", p.error.empty() ? nlohmann::json(nullptr)
                                               : nlohmann::json(p.error)}});
    }
    return {{"selected", selected}, {"points", pts}};
  }
};

// Trains one model per grid point on the training split and keeps the one
// with the best validation mAP (first wins on ties). A diverging point is
// recorded in the sweep table and skipped.
inline SweepResult cmd_train_select(const RunConfig& cfg) {
  const auto data = load_task(cfg);
  const auto split = load_split(cfg);
  const auto train_cases = select_cases(data.cases, split.train);
  const auto val_cases = select_cases(data.cases, split.validation);
  const Featurizer featurizer{cfg.ngram_orders};

  std::vector<std::vector<std::string>> docs;
  docs.reserve(train_cases.size());
  for (const auto& c : train_cases) docs.push_back(featurizer.terms(c.text));
  SweepResult result;
  result.vocab = fit_tfidf(docs, cfg.min_df);
  const auto train_x = featurize(train_cases, featurizer, result.vocab);
  const auto val_x = featurize(val_cases, featurizer, result.vocab);

  std::optional<std::size_t> best;
  for (const auto& config : cfg.grid) {
    SweepPoint point{config, std::nullopt, {}};
    try {
      auto model = train(train_x, data.schema, result.vocab, config);
      point.validation_map = validation_map(model, val_x, data.schema);
      if (!best || *point.validation_map > *result.points[*best].validation_map) {
        best = result.points.size();
        result.model = std::move(model);
      }
    } catch (const DivergenceError& e) {
      point.error = e.what();
    }
    result.points.push_back(std::move(point));
  }
  if (!best) throw RuntimeError("every grid point diverged; see sweep table");
  result.selected = *best;

  write_json(cfg.out("vocab.json"), result.vocab.to_json());
  save_model(cfg.out("model.json").string(), result.model);
  write_json(cfg.out("sweep.json"), result.to_json());
  return result;
}

// ---- scores ---------------------------------------------------------------

// Scores every dataset case, either with the trained model in the output
// directory or from an external score file.
inline ScoreFile resolve_scores(const RunConfig& cfg, const TaskData& data,
                                const std::optional<fs::path>& score_path) {
  if (score_path) {
    const auto ids = data.ids();
    return ingest_scores(score_path->string(), data.schema, &ids);
  }
  const auto model_path = cfg.out("model.json");
  const auto vocab_path = cfg.out("vocab.json");
  if (!fs::exists(model_path) || !fs::exists(vocab_path)) {
    throw ValidationError("no model in " + cfg.out_dir.string() +
                          " (run the train command or pass --scores)");
  }
  const auto model = load_model(model_path.string());
  const auto vocab = Vocabulary::from_json(detail::read_json_file(vocab_path.string()));
  if (model.vocabulary_fingerprint() != vocab.fingerprint()) {
    throw ValidationError("model was trained against a different vocabulary");
  }
  if (model.schema_name() != data.schema.name() || model.labels() != data.schema.labels()) {
    throw ValidationError("model labels do not match schema '" + data.schema.name() + "'");
  }
  const Featurizer featurizer{cfg.ngram_orders};
  const auto examples = featurize(data.cases, featurizer, vocab);
  return {data.schema.name(), score_cases(model, examples, data.cases)};
}

struct ScoredSplit {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> scores;
  std::vector<LabelBits> golds;
};

inline ScoredSplit gather(const ScoreFile& scores, std::span<const LabeledCase> cases) {
  const auto index = scores.index();
  ScoredSplit out;
  for (const auto& c : cases) {
    auto it = index.find(c.id);
    if (it == index.end()) {
      throw ValidationError("scores lack case id '" + c.id + "'");
    }
    out.ids.push_back(c.id);
    out.scores.push_back(it->second->scores);
    out.golds.push_back(c.gold);
  }
  return out;
}

// ---- tune -----------------------------------------------------------------

inline TuningResult cmd_tune(const RunConfig& cfg,
                             const std::optional<fs::path>& score_path = std::nullopt) {
  const auto data = load_task(cfg);
  const auto split = load_split(cfg);
  const auto scores = resolve_scores(cfg, data, score_path);
  const auto val = gather(scores, select_cases(data.cases, split.validation));
  auto tuning = tune_thresholds(val.scores, val.golds, cfg.threshold_grid);
  write_json(cfg.out("tuning.json"), tuning.to_json());
  return tuning;
}

// ---- evaluate -------------------------------------------------------------

struct EvaluationResult {
  MetricsReport metrics;
  TriageReport triage;
  std::optional<TuningResult> tuning;
  std::vector<std::string> queue_ids;
};

inline nlohmann::json queue_json(const TaskSchema& schema, const ThresholdPair& band,
                                 const ScoredSplit& test,
                                 const std::vector<std::size_t>& low) {
  nlohmann::json cases = nlohmann::json::array();
  for (auto k : low) cases.push_back({{"id", test.ids[k]}, {"scores", test.scores[k]}});
  return {{"task", schema.name()},
          {"labels", schema.labels()},
          {"t_low", band.t_low},
          {"t_high", band.t_high},
          {"cases", cases}};
}

// Test-split metrics and triage. Thresholds come from the argument, then the
// config, and otherwise are tuned on the validation split.
inline EvaluationResult cmd_evaluate(const RunConfig& cfg,
                                     const std::optional<fs::path>& score_path = std::nullopt,
                                     std::optional<ThresholdPair> thresholds = std::nullopt) {
  const auto data = load_task(cfg);
  const auto split = load_split(cfg);
  const auto scores = resolve_scores(cfg, data, score_path);

  EvaluationResult result;
  if (!thresholds) thresholds = cfg.thresholds;
  if (!thresholds) {
    const auto val = gather(scores, select_cases(data.cases, split.validation));
    result.tuning = tune_thresholds(val.scores, val.golds, cfg.threshold_grid);
    thresholds = result.tuning->thresholds();
    write_json(cfg.out("tuning.json"), result.tuning->to_json());
  }
  thresholds->validate();

  const auto test = gather(scores, select_cases(data.cases, split.test));
  result.metrics = evaluate_ranking(data.schema.name(), data.schema.labels(),
                                    test.scores, test.golds);
  result.triage = evaluate_triage(test.scores, test.golds, *thresholds, data.schema.name());
  const auto groups = split_confidence(test.scores, *thresholds);
  for (auto k : groups.low) result.queue_ids.push_back(test.ids[k]);

  write_json(cfg.out("metrics.json"), result.metrics.to_json());
  write_text(cfg.out("pr_points.csv"), result.metrics.pr_points_csv());
  write_json(cfg.out("triage.json"), result.triage.to_json());
  const TriageReport rows[] = {result.triage};
  write_text(cfg.out("triage.txt"), render_triage_table(rows));
  write_json(cfg.out("queue.json"), queue_json(data.schema, *thresholds, test, groups.low));

  // Re-export in dataset order so a score file can stand in for the model.
  std::vector<ScoreRow> ordered;
  const auto index = scores.index();
  for (const auto& c : data.cases) {
    if (auto it = index.find(c.id); it != index.end()) ordered.push_back(*it->second);
  }
  write_text(cfg.out("scores.jsonl"), export_scores(ordered, data.schema));
  return result;
}

// ---- ingest ---------------------------------------------------------------

inline ScoreFile cmd_ingest(const RunConfig& cfg, const fs::path& score_path) {
  const auto data = load_task(cfg);
  auto file = resolve_scores(cfg, data, score_path);
  write_text(cfg.out("ingested_scores.jsonl"), export_scores(file.rows, data.schema));
  return file;
}

// ---- consistency ----------------------------------------------------------

inline double cmd_consistency(const fs::path& log_path,
                              const std::optional<std::vector<std::string>>& case_ids,
                              const std::string& task = {}) {
  const auto events = read_annotation_log(log_path.string());
  const auto input = collect_consistency(events, case_ids, task);
  if (!input.incomplete.empty()) {
    std::string msg = "cases without exactly 3 reviewer annotations:";
    for (const auto& id : input.incomplete) msg += " " + id;
    throw ValidationError(msg);
  }
  return annotator_consistency(input.records);
}

// Accepts either a JSON list of ids or a queue file ({"cases": [{"id": ...}]}).
inline std::vector<std::string> load_case_ids(const fs::path& path) {
  const auto j = detail::read_json_file(path.string());
  std::vector<std::string> ids;
  try {
    if (j.is_array()) return j.get<std::vector<std::string>>();
    for (const auto& c : j.at("cases")) ids.push_back(c.at("id").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": expected a list of case ids: " + e.what());
  }
  return ids;
}

}  // namespace pathtriage
