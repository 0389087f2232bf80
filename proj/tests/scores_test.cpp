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

#include <sstream>

#include "pathtriage/annotations.hpp"
#include "pathtriage/scores.hpp"

namespace pathtriage {
namespace {

const TaskSchema kSchema("main_organ", {"Breast", "Skin", "Lung"});
const std::unordered_set<std::string> kIds{"r1", "r2", "r3"};

std::string error_of(const std::string& text) {
  std::istringstream in(text);
  try {
    parse_scores(in, kSchema, &kIds);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

TEST(ParseScores, ThreeRows) {
  std::istringstream in(
      R"({"id":"r1","scores":{"Breast":0.9,"Skin":0.1,"Lung":0.0}})"
      "\n"
      R"({"id":"r2","scores":{"Lung":1,"Skin":0.25,"Breast":0.5}})"
      "\n\n"
      R"({"id":"r3","scores":{"Breast":0.2,"Skin":0.3,"Lung":0.4}})"
      "\n");
  const auto f = parse_scores(in, kSchema, &kIds);
  EXPECT_EQ(f.task, "main_organ");
  ASSERT_EQ(f.rows.size(), 3u);
  EXPECT_EQ(f.rows[1].scores, (std::vector<double>{0.5, 0.25, 1.0}));
  EXPECT_EQ(f.index().at("r3")->scores[2], 0.4);
}

TEST(ParseScores, OutOfRangeNamesRow) {
  const auto msg = error_of(
      R"({"id":"r1","scores":{"Breast":0.9,"Skin":0.1,"Lung":0.0}})"
      "\n"
      R"({"id":"r2","scores":{"Breast":1.3,"Skin":0.1,"Lung":0.0}})"
      "\n");
  EXPECT_NE(msg.find("row 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("outside [0, 1]"), std::string::npos) << msg;
}

TEST(ParseScores, ReportsEveryProblem) {
  const auto msg = error_of(
      R"({"id":"r9","scores":{"Breast":0.9,"Skin":0.1,"Lung":0.0}})"
      "\n"
      R"({"id":"r1","scores":{"Bone":0.9,"Skin":0.1,"Lung":0.0}})"
      "\n"
      R"({"id":"r2","scores":{"Breast":"high","Skin":0.1,"Lung":0.0}})"
      "\n"
      R"({"id":"r3","scores":{"Breast":0.9}})"
      "\n"
      R"({"id":"r3","scores":{"Breast":0.9,"Skin":0.1,"Lung":0.0}})"
      "\n"
      "not json\n");
  EXPECT_NE(msg.find("6 problems"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 1: unknown case id 'r9'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 2: unknown label 'Bone'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 3: score for 'Breast' is not a number"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 4: missing score for label 'Skin'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 5: duplicate case id 'r3'"), std::string::npos) << msg;
  EXPECT_NE(msg.find("row 6: malformed JSON"), std::string::npos) << msg;
}

TEST(ParseScores, ExportRoundTrip) {
  const std::vector<ScoreRow> rows{{"r1", {0.125, 1.0 / 3.0, 0.0}},
                                   {"r2", {1.0, 0.999999999999, 1e-300}}};
  std::istringstream in(export_scores(rows, kSchema));
  const auto f = parse_scores(in, kSchema, &kIds);
  EXPECT_EQ(f.rows, rows);
}

TEST(ParseScores, MissingFile) {
  EXPECT_THROW(ingest_scores("/nonexistent/scores.jsonl", kSchema), ValidationError);
}

AnnotationEvent ev(std::string id, std::string reviewer, std::vector<std::string> labels,
                   std::string task = "t") {
  AnnotationEvent e;
  e.task = std::move(task);
  e.case_id = std::move(id);
  e.reviewer_id = std::move(reviewer);
  e.labels = std::move(labels);
  return e;
}

TEST(Annotations, LogRoundTrip) {
  auto e = ev("r1", "alice", {"Skin", "Lung"});
  e.seq = 4;
  e.timestamp = "2026-01-01T00:00:00Z";
  std::istringstream in(e.to_json().dump() + "\n\n" + e.to_json().dump() + "\n");
  const auto events = parse_annotation_log(in);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0], e);
  std::istringstream bad("{\"case_id\":\"x\"}\n");
  EXPECT_THROW(parse_annotation_log(bad), ValidationError);
  EXPECT_THROW(read_annotation_log("/nonexistent/log.jsonl"), ValidationError);
}

TEST(Annotations, CollectLatestPerReviewer) {
  const std::vector<AnnotationEvent> events{
      ev("a", "r1", {"X"}),       ev("a", "r2", {"Y"}), ev("a", "r3", {"X"}),
      ev("a", "r2", {"X"}),       ev("b", "r1", {"X"}), ev("b", "r2", {"X"}),
      ev("c", "r1", {}, "other"),
  };
  const auto in = collect_consistency(events, std::nullopt, "t");
  ASSERT_EQ(in.records.size(), 1u);
  EXPECT_EQ(in.records[0].report_id, "a");
  EXPECT_EQ(annotator_consistency(in.records), 1.0);
  EXPECT_EQ(in.incomplete, std::vector<std::string>{"b"});

  const std::vector<std::string> wanted{"a", "zzz"};
  const auto explicit_ids = collect_consistency(events, wanted);
  EXPECT_EQ(explicit_ids.incomplete, std::vector<std::string>{"zzz"});
}

}  // namespace
}  // namespace pathtriage
