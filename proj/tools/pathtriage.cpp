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

// pathtriage command-line tool.
//
// Exit codes: 0 success, 1 validation error (bad input or usage),
// 2 runtime error.

#include <csignal>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pathtriage/pipeline.hpp"
#include "pathtriage/review_service.hpp"

namespace {

using pathtriage::RunConfig;
using pathtriage::ValidationError;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> task;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required = true) {
  auto* opt = cmd->add_option("--config", f.config, "Run config (JSON)");
  if (config_required) opt->required();
  cmd->add_option("--seed", f.seed, "Override the split seed");
  cmd->add_option("--task", f.task, "Expected task name (must match the schema)");
  cmd->add_option("--out", f.out, "Override the output directory");
}

RunConfig resolve_config(const CommonFlags& f) {
  auto cfg = pathtriage::load_run_config(f.config);
  if (f.seed) cfg.split_seed = *f.seed;
  if (f.out) cfg.out_dir = *f.out;
  if (f.task) {
    const auto schema = pathtriage::load_schema(cfg.schema_path.string());
    if (schema.name() != *f.task) {
      throw ValidationError("--task '" + *f.task + "' does not match schema '" +
                            schema.name() + "'");
    }
  }
  return cfg;
}

void print(const nlohmann::json& j) { std::cout << j.dump(2) << "\n"; }

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pathtriage: multilabel report classification with confidence triage"};
  app.require_subcommand(1);

  CommonFlags split_f, train_f, tune_f, eval_f, ingest_f, cons_f;
  std::optional<std::string> tune_scores, eval_scores, eval_thresholds;
  std::string ingest_scores;
  std::optional<std::string> log_path, cases_path;
  std::vector<std::string> serve_configs;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::optional<std::string> ui_dir;

  auto* split = app.add_subcommand("split", "Stratified 65/15/20 split of the dataset");
  add_common(split, split_f);
  auto* train = app.add_subcommand("train", "Train the grid and keep the best validation mAP");
  add_common(train, train_f);
  auto* tune = app.add_subcommand("tune", "Tune t_low/t_high on the validation split");
  add_common(tune, tune_f);
  tune->add_option("--scores", tune_scores, "Score file to use instead of the model");
  auto* evaluate = app.add_subcommand("evaluate", "Test-split mAP and triage reports");
  add_common(evaluate, eval_f);
  evaluate->add_option("--scores", eval_scores, "Score file to use instead of the model");
  evaluate->add_option("--thresholds", eval_thresholds,
                       "JSON {t_low, t_high}; tuned on validation when absent");
  auto* consistency = app.add_subcommand("consistency", "Three-reviewer consistency");
  add_common(consistency, cons_f, false);
  consistency->add_option("--log", log_path, "Annotation log (default: <out>/annotations.jsonl)");
  consistency->add_option("--cases", cases_path, "JSON id list or queue file");
  auto* ingest = app.add_subcommand("ingest", "Validate an external score file");
  add_common(ingest, ingest_f);
  ingest->add_option("--scores", ingest_scores, "Score file (JSONL)")->required();
  auto* serve = app.add_subcommand("serve", "Run the review service");
  serve->add_option("--config", serve_configs, "Run config; repeat for more tasks")->required();
  serve->add_option("--host", host, "Bind address");
  serve->add_option("--port", port, "Port");
  serve->add_option("--ui", ui_dir, "Static UI bundle directory served at /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*split) {
      const auto s = pathtriage::cmd_split(resolve_config(split_f));
      print({{"train", s.train.size()}, {"validation", s.validation.size()},
             {"test", s.test.size()}, {"seed", s.seed}});
    } else if (*train) {
      const auto r = pathtriage::cmd_train_select(resolve_config(train_f));
      print(r.to_json());
    } else if (*tune) {
      std::optional<pathtriage::fs::path> scores;
      if (tune_scores) scores = *tune_scores;
      print(pathtriage::cmd_tune(resolve_config(tune_f), scores).to_json());
    } else if (*evaluate) {
      std::optional<pathtriage::fs::path> scores;
      if (eval_scores) scores = *eval_scores;
      std::optional<pathtriage::ThresholdPair> band;
      if (eval_thresholds) {
        band = pathtriage::ThresholdPair::from_json(
            pathtriage::detail::read_json_file(*eval_thresholds));
      }
      const auto r = pathtriage::cmd_evaluate(resolve_config(eval_f), scores, band);
      const pathtriage::TriageReport rows[] = {r.triage};
      std::cout << pathtriage::render_triage_table(rows);
      print({{"map", r.metrics.map.value},
             {"skipped_labels", r.metrics.map.skipped_labels},
             {"queue_size", r.queue_ids.size()}});
    } else if (*consistency) {
      std::string task;
      pathtriage::fs::path log;
      if (!cons_f.config.empty()) {
        const auto cfg = resolve_config(cons_f);
        log = cfg.out("annotations.jsonl");
        task = pathtriage::load_schema(cfg.schema_path.string()).name();
      }
      if (cons_f.task) task = *cons_f.task;
      if (log_path) log = *log_path;
      if (log.empty()) throw ValidationError("consistency needs --log or --config");
      std::optional<std::vector<std::string>> ids;
      if (cases_path) ids = pathtriage::load_case_ids(*cases_path);
      print({{"consistency", pathtriage::cmd_consistency(log, ids, task)}});
    } else if (*ingest) {
      const auto f = pathtriage::cmd_ingest(resolve_config(ingest_f), ingest_scores);
      print({{"task", f.task}, {"rows", f.rows.size()}});
    } else if (*serve) {
      std::vector<pathtriage::ReviewTask> tasks;
      for (const auto& c : serve_configs) {
        tasks.push_back(pathtriage::ReviewTask::from_run(pathtriage::load_run_config(c)));
      }
      std::optional<pathtriage::fs::path> ui;
      if (ui_dir) ui = *ui_dir;
      pathtriage::ReviewService service(std::move(tasks), ui);
      httplib::Server server;
      service.install(server);
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "review service listening on http://" << host << ":" << port << "\n";
      if (!server.listen(host, port)) {
        throw pathtriage::RuntimeError("cannot listen on " + host + ":" + std::to_string(port));
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
