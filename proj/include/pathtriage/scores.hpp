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

// Score files: per-case, per-label probabilities exported by this toolkit or
// produced by an external model, one JSON object per line:
//   {"id": "case-1", "scores": {"Skin": 0.97, "Breast": 0.01, ...}}

#pragma once

#include <cmath>
#include <fstream>
#include <istream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"

namespace pathtriage {

struct ScoreRow {
  std::string id;
  std::vector<double> scores;  // schema label order

  bool operator==(const ScoreRow&) const = default;
};

struct ScoreFile {
  std::string task;
  std::vector<ScoreRow> rows;

  bool operator==(const ScoreFile&) const = default;

  std::unordered_map<std::string, const ScoreRow*> index() const {
    std::unordered_map<std::string, const ScoreRow*> out;
    for (const auto& r : rows) out.emplace(r.id, &r);
    return out;
  }
};

// Validates every row against the schema and, when given, the dataset ids.
// All problems are collected and reported together, each with its row number.
inline ScoreFile parse_scores(std::istream& in, const TaskSchema& schema,
                              const std::unordered_set<std::string>* known_ids) {
  constexpr std::size_t kMaxReported = 20;
  ScoreFile file;
  file.task = schema.name();
  std::vector<std::string> problems;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t row_no = 0;
  const auto fail = [&](const std::string& msg) {
    problems.push_back("row " + std::to_string(row_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      fail("malformed JSON");
      continue;
    }
    if (!rec.is_object() || !rec.contains("id") || !rec["id"].is_string() ||
        !rec.contains("scores") || !rec["scores"].is_object()) {
      fail("expected {\"id\": string, \"scores\": {label: number}}");
      continue;
    }
    ScoreRow row{rec["id"].get<std::string>(),
                 std::vector<double>(schema.size(), std::nan(""))};
    bool ok = true;
    if (known_ids && !known_ids->contains(row.id)) {
      fail("unknown case id '" + row.id + "'");
      ok = false;
    }
    if (!seen.insert(row.id).second) {
      fail("duplicate case id '" + row.id + "'");
      ok = false;
    }
    for (const auto& [label, value] : rec["scores"].items()) {
      const auto idx = schema.find(label);
      if (idx < 0) {
        fail("unknown label '" + label + "'");
        ok = false;
        continue;
      }
      if (!value.is_number()) {
        fail("score for '" + label + "' is not a number");
        ok = false;
        continue;
      }
      const double v = value.get<double>();
      if (!(v >= 0.0 && v <= 1.0)) {
        fail("score " + value.dump() + " for '" + label + "' is outside [0, 1]");
        ok = false;
        continue;
      }
      row.scores[static_cast<std::size_t>(idx)] = v;
    }
    for (std::size_t i = 0; i < schema.size(); ++i) {
      if (std::isnan(row.scores[i]) && ok) {
        fail("missing score for label '" + schema.labels()[i] + "'");
        ok = false;
      }
    }
    if (ok) file.rows.push_back(std::move(row));
  }
  if (!problems.empty()) {
    std::string msg = "invalid score file (" + std::to_string(problems.size()) +
                      " problem" + (problems.size() == 1 ? "" : "s") + "):";
    for (std::size_t i = 0; i < problems.size() && i < kMaxReported; ++i) {
      msg += "\n  " + problems[i];
    }
    if (problems.size() > kMaxReported) msg += "\n  ...";
    throw ValidationError(msg);
  }
  return file;
}

inline ScoreFile ingest_scores(const std::string& path, const TaskSchema& schema,
                               const std::unordered_set<std::string>* known_ids = nullptr) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open score file " + path);
  try {
    return parse_scores(in, schema, known_ids);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline std::string export_scores(std::span<const ScoreRow> rows,
                                 const TaskSchema& schema) {
  std::string out;
  for (const auto& r : rows) {
    nlohmann::json scores = nlohmann::json::object();
    for (std::size_t i = 0; i < schema.size(); ++i) {
      scores[schema.labels()[i]] = r.scores.at(i);
    }
    out += nlohmann::json{{"id", r.id}, {"scores", scores}}.dump();
    out += '\n';
  }
  return out;
}

}  // namespace pathtriage
