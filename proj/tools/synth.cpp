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

// Writes a synthetic planted-vocabulary task (schema, dataset, run config)
// that the pathtriage tool can run end to end.

#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "pathtriage/pipeline.hpp"
#include "pathtriage/synthetic.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Generate a synthetic pathtriage task"};
  std::string out = "synthetic";
  pathtriage::SyntheticSpec spec;
  spec.silent_positive = 0.03;
  spec.label_noise = 0.005;
  app.add_option("--out", out, "Output directory");
  app.add_option("--cases", spec.cases, "Number of cases");
  app.add_option("--seed", spec.seed, "Generator seed");
  app.add_option("--silent", spec.silent_positive, "Positives without a keyword");
  app.add_option("--noise", spec.label_noise, "Per-label gold flip probability");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto task = pathtriage::make_planted_task(spec);
    const std::filesystem::path dir(out);
    pathtriage::write_json(dir / "schema.json", task.schema.to_json());
    pathtriage::write_text(dir / "dataset.jsonl",
                           pathtriage::serialize_dataset(task.cases, task.schema));
    pathtriage::write_json(
        dir / "config.json",
        {{"schema", "schema.json"},
         {"dataset", "dataset.jsonl"},
         {"out", "run"},
         {"split_seed", 13},
         {"features", {{"orders", {1, 2, 3}}, {"min_df", 2}}},
         {"weighting", "balanced"},
         {"grid", pathtriage::synthetic_grid()}});
    std::cout << "wrote " << task.cases.size() << " cases to " << dir << "\n";
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
