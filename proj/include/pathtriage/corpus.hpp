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

// Multilabel data model: task schemas, labeled cases, deterministic
// stratified splits and the label statistics behind loss weighting.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "json.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/random.hpp"

namespace pathtriage {

using json = nlohmann::json;

// One 0/1 entry per schema label. An all-zero vector is a legal answer.
using LabelBits = std::vector<std::uint8_t>;

class TaskSchema {
 public:
  TaskSchema() = default;
  TaskSchema(std::string name, std::vector<std::string> labels)
      : name_(std::move(name)), labels_(std::move(labels)) {
    if (name_.empty()) throw ValidationError("schema name is empty");
    if (labels_.size() < 2) {
      throw ValidationError("schema '" + name_ + "' needs at least 2 labels");
    }
    for (std::size_t i = 0; i < labels_.size(); ++i) {
      if (labels_[i].empty()) {
        throw ValidationError("schema '" + name_ + "' has an empty label name");
      }
      if (!index_.emplace(labels_[i], i).second) {
        throw ValidationError("schema '" + name_ + "' repeats label '" +
                              labels_[i] + "'");
      }
    }
  }

  const std::string& name() const { return name_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::size_t size() const { return labels_.size(); }

  // Position of a label, or -1 when the schema does not contain it.
  std::ptrdiff_t find(const std::string& label) const {
    auto it = index_.find(label);
    return it == index_.end() ? -1 : static_cast<std::ptrdiff_t>(it->second);
  }

  json to_json() const { return {{"name", name_}, {"labels", labels_}}; }

  static TaskSchema from_json(const json& j) {
    if (!j.is_object() || !j.contains("name") || !j.contains("labels") ||
        !j["name"].is_string() || !j["labels"].is_array()) {
      throw ValidationError(
          "schema must be an object with \"name\" and \"labels\"");
    }
    std::vector<std::string> labels;
    for (const auto& l : j["labels"]) {
      if (!l.is_string()) throw ValidationError("schema labels must be strings");
      labels.push_back(l.get<std::string>());
    }
    return TaskSchema(j["name"].get<std::string>(), std::move(labels));
  }

 private:
  std::string name_;
  std::vector<std::string> labels_;
  std::unordered_map<std::string, std::size_t> index_;
};

struct LabeledCase {
  std::string id;
  std::string text;
  LabelBits gold;

  bool operator==(const LabeledCase&) const = default;
};

struct DatasetSplit {
  std::uint64_t seed = 0;
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  bool operator==(const DatasetSplit&) const = default;

  json to_json() const {
    return {{"seed", seed},
            {"train", train},
            {"validation", validation},
            {"test", test}};
  }

  static DatasetSplit from_json(const json& j) {
    DatasetSplit s;
    try {
      s.seed = j.at("seed").get<std::uint64_t>();
      s.train = j.at("train").get<std::vector<std::string>>();
      s.validation = j.at("validation").get<std::vector<std::string>>();
      s.test = j.at("test").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ValidationError(std::string("malformed split file: ") + e.what());
    }
    return s;
  }
};

struct LabelStats {
  std::vector<std::size_t> positive_counts;
  std::size_t total_cases = 0;
};

enum class Weighting { kUniform, kBalanced };

struct SplitRatios {
  double train = 0.65;
  double validation = 0.15;
  double test = 0.20;
};

namespace detail {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n\f\v";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(path + ": invalid JSON: " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeError("cannot write " + path);
  out << body;
  if (!out) throw RuntimeError("write failed for " + path);
}

}  // namespace detail

inline TaskSchema load_schema(const std::string& path) {
  return TaskSchema::from_json(detail::read_json_file(path));
}

// Parses one JSONL record; line_no is used only for error messages.
inline LabeledCase parse_case_record(const std::string& line,
                                     std::size_t line_no,
                                     const TaskSchema& schema) {
  const std::string where = "line " + std::to_string(line_no) + ": ";
  json rec;
  try {
    rec = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ValidationError(where + "malformed JSON (" + e.what() + ")");
  }
  if (!rec.is_object()) throw ValidationError(where + "record is not an object");
  const auto field = [&](const char* key) -> const json& {
    if (!rec.contains(key)) {
      throw ValidationError(where + "missing \"" + key + "\"");
    }
    return rec[key];
  };
  const json& id = field("id");
  const json& text = field("text");
  const json& labels = field("labels");
  if (!id.is_string() || id.get<std::string>().empty()) {
    throw ValidationError(where + "\"id\" must be a non-empty string");
  }
  if (!text.is_string() || detail::trim(text.get<std::string>()).empty()) {
    throw ValidationError(where + "\"text\" must be a non-empty string");
  }
  if (!labels.is_array()) throw ValidationError(where + "\"labels\" must be a list");

  LabeledCase c{id.get<std::string>(), text.get<std::string>(),
                LabelBits(schema.size(), 0)};
  for (const auto& l : labels) {
    if (!l.is_string()) throw ValidationError(where + "label is not a string");
    const auto idx = schema.find(l.get<std::string>());
    if (idx < 0) {
      throw ValidationError(where + "unknown label '" + l.get<std::string>() +
                            "' for schema '" + schema.name() + "'");
    }
    c.gold[static_cast<std::size_t>(idx)] = 1;
  }
  return c;
}

inline std::vector<LabeledCase> parse_dataset(std::istream& in,
                                              const TaskSchema& schema) {
  std::vector<LabeledCase> cases;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    auto c = parse_case_record(line, line_no, schema);
    if (!seen.insert(c.id).second) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate id '" + c.id + "'");
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

inline std::vector<LabeledCase> load_dataset(const std::string& path,
                                             const TaskSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open dataset " + path);
  try {
    return parse_dataset(in, schema);
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

inline std::string serialize_dataset(std::span<const LabeledCase> cases,
                                     const TaskSchema& schema) {
  std::string out;
  for (const auto& c : cases) {
    json labels = json::array();
    for (std::size_t i = 0; i < c.gold.size(); ++i) {
      if (c.gold[i]) labels.push_back(schema.labels()[i]);
    }
    out += json{{"id", c.id}, {"text", c.text}, {"labels", labels}}.dump();
    out += '\n';
  }
  return out;
}

inline LabelStats label_stats(std::span<const LabeledCase> cases) {
  if (cases.empty()) throw ValidationError("label_stats needs at least one case");
  LabelStats stats;
  stats.total_cases = cases.size();
  stats.positive_counts.assign(cases.front().gold.size(), 0);
  for (const auto& c : cases) {
    if (c.gold.size() != stats.positive_counts.size()) {
      throw ValidationError("case '" + c.id + "' has a gold vector of wrong length");
    }
    for (std::size_t i = 0; i < c.gold.size(); ++i) {
      stats.positive_counts[i] += c.gold[i] ? 1 : 0;
    }
  }
  return stats;
}

// Per-label loss weights. Balanced: w_i = m / (n * c_i), so a perfectly
// balanced label set gets 1.0 everywhere.
inline std::vector<double> label_weights(const LabelStats& stats,
                                         Weighting mode,
                                         std::span<const std::string> names) {
  const std::size_t n = stats.positive_counts.size();
  if (mode == Weighting::kUniform) return std::vector<double>(n, 1.0);
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (stats.positive_counts[i] == 0) {
      const std::string name =
          i < names.size() ? names[i] : "#" + std::to_string(i);
      throw ValidationError("balanced weighting: label '" + name +
                            "' has no positive cases");
    }
    w[i] = static_cast<double>(stats.total_cases) /
           (static_cast<double>(n) * static_cast<double>(stats.positive_counts[i]));
  }
  return w;
}

inline Weighting parse_weighting(const std::string& s) {
  if (s == "uniform") return Weighting::kUniform;
  if (s == "balanced") return Weighting::kBalanced;
  throw ValidationError("unknown weighting mode '" + s + "'");
}

inline const char* to_string(Weighting w) {
  return w == Weighting::kUniform ? "uniform" : "balanced";
}

// Greedy iterative stratification. Labels are visited from rarest to most
// frequent; each still-unassigned positive case goes to the split furthest
// below its target count for that label. Split sizes are fixed up front by
// largest remainder, so a full split takes no more cases and the final sizes
// are exact.
inline DatasetSplit stratified_split(std::span<const LabeledCase> cases,
                                     SplitRatios ratios, std::uint64_t seed) {
  const std::size_t m = cases.size();
  if (m < 5) throw ValidationError("stratified_split needs at least 5 cases");
  const std::array<double, 3> r{ratios.train, ratios.validation, ratios.test};
  for (double x : r) {
    if (!(x >= 0.0)) throw ValidationError("split ratios must be non-negative");
  }
  if (std::abs(r[0] + r[1] + r[2] - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  const std::size_t n = cases.front().gold.size();
  for (const auto& c : cases) {
    if (c.gold.size() != n) {
      throw ValidationError("case '" + c.id + "' has a gold vector of wrong length");
    }
  }

  // Exact capacities via largest remainder; ties go to the earlier split.
  std::array<std::size_t, 3> capacity{};
  std::array<double, 3> frac{};
  std::size_t allotted = 0;
  for (int s = 0; s < 3; ++s) {
    const double raw = r[s] * static_cast<double>(m);
    capacity[s] = static_cast<std::size_t>(std::floor(raw));
    frac[s] = raw - std::floor(raw);
    allotted += capacity[s];
  }
  while (allotted < m) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (frac[s] > frac[best]) best = s;
    }
    ++capacity[best];
    frac[best] = -1.0;
    ++allotted;
  }

  Rng rng(seed);
  const auto order = seeded_permutation(m, rng);
  const LabelStats stats = label_stats(cases);

  std::vector<std::size_t> label_order;
  for (std::size_t i = 0; i < n; ++i) {
    if (stats.positive_counts[i] > 0) label_order.push_back(i);
  }
  std::stable_sort(label_order.begin(), label_order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return stats.positive_counts[a] < stats.positive_counts[b];
                   });

  std::vector<int> assigned(m, -1);
  std::array<std::size_t, 3> size{};
  std::array<std::vector<std::size_t>, 3> per_label;
  for (auto& v : per_label) v.assign(n, 0);

  const auto assign = [&](std::size_t idx, int s) {
    assigned[idx] = s;
    ++size[s];
    for (std::size_t i = 0; i < n; ++i) per_label[s][i] += cases[idx].gold[i];
  };
  const auto room = [&](int s) {
    return static_cast<double>(capacity[s]) - static_cast<double>(size[s]);
  };

  for (std::size_t label : label_order) {
    const double c = static_cast<double>(stats.positive_counts[label]);
    for (std::size_t idx : order) {
      if (assigned[idx] >= 0 || !cases[idx].gold[label]) continue;
      int best = -1;
      double best_deficit = 0.0;
      for (int s = 0; s < 3; ++s) {
        if (size[s] >= capacity[s]) continue;
        const double deficit =
            r[s] * c - static_cast<double>(per_label[s][label]);
        if (best < 0 || deficit > best_deficit ||
            (deficit == best_deficit && room(s) > room(best))) {
          best = s;
          best_deficit = deficit;
        }
      }
      assign(idx, best);
    }
  }
  for (std::size_t idx : order) {
    if (assigned[idx] >= 0) continue;
    int best = -1;
    for (int s = 0; s < 3; ++s) {
      if (size[s] >= capacity[s]) continue;
      if (best < 0 || room(s) > room(best)) best = s;
    }
    assign(idx, best);
  }

  DatasetSplit split;
  split.seed = seed;
  std::array<std::vector<std::string>*, 3> out{&split.train, &split.validation,
                                               &split.test};
  for (std::size_t idx = 0; idx < m; ++idx) {
    out[assigned[idx]]->push_back(cases[idx].id);
  }
  return split;
}

// Resolves split ids against the dataset, preserving split order.
inline std::vector<LabeledCase> select_cases(
    std::span<const LabeledCase> cases, std::span<const std::string> ids) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < cases.size(); ++i) index.emplace(cases[i].id, i);
  std::vector<LabeledCase> out;
  out.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = index.find(id);
    if (it == index.end()) {
      throw ValidationError("split references unknown case id '" + id + "'");
    }
    out.push_back(cases[it->second]);
  }
  return out;
}

}  // namespace pathtriage
