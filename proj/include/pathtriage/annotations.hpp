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

// Append-only annotation log (JSONL of AnnotationEvent) and its reduction to
// three-annotator consistency records.

#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/metrics.hpp"

namespace pathtriage {

struct AnnotationEvent {
  std::uint64_t seq = 0;
  std::string task;
  std::string case_id;
  std::string reviewer_id;
  std::vector<std::string> labels;
  std::string timestamp;  // ISO 8601, UTC

  bool operator==(const AnnotationEvent&) const = default;

  nlohmann::json to_json() const {
    return {{"seq", seq},         {"task", task},     {"case_id", case_id},
            {"reviewer_id", reviewer_id}, {"labels", labels}, {"timestamp", timestamp}};
  }

  static AnnotationEvent from_json(const nlohmann::json& j) {
    AnnotationEvent e;
    e.seq = j.value("seq", std::uint64_t{0});
    e.task = j.value("task", std::string{});
    e.case_id = j.at("case_id").get<std::string>();
    e.reviewer_id = j.at("reviewer_id").get<std::string>();
    e.labels = j.at("labels").get<std::vector<std::string>>();
    e.timestamp = j.value("timestamp", std::string{});
    return e;
  }
};

inline std::vector<AnnotationEvent> parse_annotation_log(std::istream& in) {
  std::vector<AnnotationEvent> events;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    try {
      events.push_back(AnnotationEvent::from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("annotation log line " + std::to_string(line_no) +
                            ": " + e.what());
    }
  }
  return events;
}

inline std::vector<AnnotationEvent> read_annotation_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open annotation log " + path);
  return parse_annotation_log(in);
}

struct ConsistencyInput {
  std::vector<ConsistencyRecord> records;
  // Requested cases without exactly three distinct reviewers.
  std::vector<std::string> incomplete;
};

// Each reviewer contributes their latest label set for a case. Cases are
// taken in order of first appearance unless an explicit list is given.
// An empty task matches every event.
inline ConsistencyInput collect_consistency(
    std::span<const AnnotationEvent> events,
    const std::optional<std::vector<std::string>>& case_ids = std::nullopt,
    const std::string& task = {}) {
  std::vector<std::string> order;
  std::map<std::string, std::map<std::string, LabelSet>> latest;
  for (const auto& e : events) {
    if (!task.empty() && !e.task.empty() && e.task != task) continue;
    auto [it, inserted] = latest.try_emplace(e.case_id);
    if (inserted) order.push_back(e.case_id);
    it->second[e.reviewer_id] = LabelSet(e.labels.begin(), e.labels.end());
  }
  ConsistencyInput out;
  for (const auto& id : case_ids ? *case_ids : order) {
    auto it = latest.find(id);
    if (it == latest.end() || it->second.size() != 3) {
      out.incomplete.push_back(id);
      continue;
    }
    ConsistencyRecord rec{id, {}};
    for (const auto& [_, labels] : it->second) rec.annotations.push_back(labels);
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace pathtriage
