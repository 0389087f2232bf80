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

// HTTP review service for the low-confidence queue. State is rebuilt from
// files at startup: the queue written by the evaluate command, the dataset
// (for report text) and the append-only annotation log.
//
//   GET  /api/tasks                   task list with queue sizes
//   GET  /api/queue/{task}?limit=k    next pending cases, least certain first
//   GET  /api/case/{task}/{id}        one case with its annotation history
//   POST /api/annotations             {case_id, reviewer_id, labels[, task]}
//   GET  /api/metrics/{task}          triage report plus reviewer consistency

#pragma once

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "pathtriage/annotations.hpp"
#include "pathtriage/corpus.hpp"
#include "pathtriage/errors.hpp"
#include "pathtriage/metrics.hpp"
#include "pathtriage/pipeline.hpp"
#include "pathtriage/triage.hpp"

namespace pathtriage {

// Append-only file with fsync after each record.
class DurableLog {
 public:
  explicit DurableLog(const fs::path& path) {
    if (!path.parent_path().empty()) fs::create_directories(path.parent_path());
    fd_ = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
    if (fd_ < 0) throw RuntimeError("cannot open log " + path.string());
  }
  DurableLog(const DurableLog&) = delete;
  DurableLog& operator=(const DurableLog&) = delete;
  ~DurableLog() {
    if (fd_ >= 0) ::close(fd_);
  }

  void append(const std::string& line) {
    std::string record = line + "\n";
    const char* p = record.data();
    std::size_t left = record.size();
    while (left > 0) {
      const auto n = ::write(fd_, p, left);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw RuntimeError("annotation log write failed");
      }
      p += n;
      left -= static_cast<std::size_t>(n);
    }
    if (::fsync(fd_) != 0) throw RuntimeError("annotation log fsync failed");
  }

 private:
  int fd_ = -1;
};

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch()) % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
  char out[40];
  std::snprintf(out, sizeof out, "%s.%03dZ", buf, static_cast<int>(ms.count()));
  return out;
}

struct QueueEntry {
  std::string id;
  std::vector<double> scores;
  std::string text;
  // Distance of the least certain score from the band midpoint.
  double margin = 0.0;
};

struct ReviewTask {
  TaskSchema schema;
  ThresholdPair band;
  std::vector<QueueEntry> queue;  // least certain first
  std::unordered_map<std::string, std::size_t> index;
  std::optional<nlohmann::json> triage;
  fs::path log_path;

  static ReviewTask from_files(const TaskSchema& schema,
                               std::span<const LabeledCase> cases,
                               const fs::path& queue_path,
                               const fs::path& log_path,
                               const std::optional<fs::path>& triage_path) {
    ReviewTask t;
    t.schema = schema;
    t.log_path = log_path;
    const auto q = detail::read_json_file(queue_path.string());
    std::unordered_map<std::string, const LabeledCase*> by_id;
    for (const auto& c : cases) by_id.emplace(c.id, &c);
    try {
      t.band = {q.at("t_low").get<double>(), q.at("t_high").get<double>()};
      t.band.validate();
      if (q.contains("task") && q["task"].get<std::string>() != schema.name()) {
        throw ValidationError("queue file belongs to task '" +
                              q["task"].get<std::string>() + "'");
      }
      for (const auto& c : q.at("cases")) {
        QueueEntry e;
        e.id = c.at("id").get<std::string>();
        e.scores = c.at("scores").get<std::vector<double>>();
        if (e.scores.size() != schema.size()) {
          throw ValidationError("queue case '" + e.id + "' has wrong score count");
        }
        auto it = by_id.find(e.id);
        if (it == by_id.end()) {
          throw ValidationError("queue case '" + e.id + "' is not in the dataset");
        }
        e.text = it->second->text;
        const double mid = 0.5 * (t.band.t_low + t.band.t_high);
        e.margin = 1.0;
        for (double p : e.scores) e.margin = std::min(e.margin, std::abs(p - mid));
        t.queue.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(queue_path.string() + ": malformed queue file: " + e.what());
    }
    std::stable_sort(t.queue.begin(), t.queue.end(),
                     [](const QueueEntry& a, const QueueEntry& b) {
                       return a.margin < b.margin;
                     });
    for (std::size_t i = 0; i < t.queue.size(); ++i) {
      if (!t.index.emplace(t.queue[i].id, i).second) {
        throw ValidationError("queue repeats case '" + t.queue[i].id + "'");
      }
    }
    if (triage_path && fs::exists(*triage_path)) {
      t.triage = detail::read_json_file(triage_path->string());
    }
    return t;
  }

  // Files produced by the pipeline for one run config.
  static ReviewTask from_run(const RunConfig& cfg) {
    const auto data = load_task(cfg);
    return from_files(data.schema, data.cases, cfg.out("queue.json"),
                      cfg.out("annotations.jsonl"), cfg.out("triage.json"));
  }
};

struct HandlerResult {
  int status = 200;
  nlohmann::json body;
};

class ReviewService {
 public:
  explicit ReviewService(std::vector<ReviewTask> tasks,
                         std::optional<fs::path> static_dir = std::nullopt)
      : static_dir_(std::move(static_dir)) {
    for (auto& t : tasks) {
      auto state = std::make_unique<TaskState>();
      state->task = std::move(t);
      if (fs::exists(state->task.log_path)) {
        for (auto& e : read_annotation_log(state->task.log_path.string())) {
          if (!e.task.empty() && e.task != state->task.schema.name()) continue;
          state->apply(std::move(e));
        }
      }
      state->log = std::make_unique<DurableLog>(state->task.log_path);
      const auto name = state->task.schema.name();
      if (!tasks_.emplace(name, std::move(state)).second) {
        throw ValidationError("task '" + name + "' configured twice");
      }
      order_.push_back(name);
    }
  }

  HandlerResult list_tasks() const {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& name : order_) {
      const auto& s = *tasks_.at(name);
      std::shared_lock lock(s.mutex);
      out.push_back({{"task", name},
                     {"labels", s.task.schema.labels()},
                     {"t_low", s.task.band.t_low},
                     {"t_high", s.task.band.t_high},
                     {"queue_size", s.task.queue.size()},
                     {"pending", s.pending_count()}});
    }
    return {200, out};
  }

  HandlerResult queue(const std::string& name, std::size_t limit) const {
    const auto* s = find(name);
    if (!s) return not_found("unknown task '" + name + "'");
    std::shared_lock lock(s->mutex);
    nlohmann::json cases = nlohmann::json::array();
    for (const auto& e : s->task.queue) {
      if (cases.size() >= limit) break;
      if (s->annotated(e.id)) continue;
      cases.push_back(s->review_case(e));
    }
    return {200, {{"task", name}, {"pending", s->pending_count()}, {"cases", cases}}};
  }

  HandlerResult case_detail(const std::string& name, const std::string& id) const {
    const auto* s = find(name);
    if (!s) return not_found("unknown task '" + name + "'");
    std::shared_lock lock(s->mutex);
    auto it = s->task.index.find(id);
    if (it == s->task.index.end()) return not_found("case '" + id + "' is not queued");
    auto body = s->review_case(s->task.queue[it->second]);
    nlohmann::json history = nlohmann::json::array();
    if (auto ev = s->by_case.find(id); ev != s->by_case.end()) {
      for (auto k : ev->second) history.push_back(s->events[k].to_json());
    }
    body["annotations"] = history;
    return {200, body};
  }

  HandlerResult submit(const std::string& raw) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::parse_error&) {
      return bad_request("body is not valid JSON");
    }
    if (!req.is_object() || !req.contains("case_id") || !req["case_id"].is_string() ||
        !req.contains("reviewer_id") || !req["reviewer_id"].is_string() ||
        !req.contains("labels") || !req["labels"].is_array()) {
      return bad_request("expected {case_id: string, reviewer_id: string, labels: [string]}");
    }
    const auto case_id = req["case_id"].get<std::string>();
    const auto reviewer = req["reviewer_id"].get<std::string>();
    if (reviewer.empty()) return bad_request("reviewer_id is empty");

    TaskState* s = nullptr;
    if (req.contains("task")) {
      if (!req["task"].is_string()) return bad_request("task must be a string");
      s = find(req["task"].get<std::string>());
      if (!s) return not_found("unknown task '" + req["task"].get<std::string>() + "'");
      if (!s->task.index.contains(case_id)) {
        return not_found("case '" + case_id + "' is not queued");
      }
    } else {
      for (const auto& name : order_) {
        if (tasks_.at(name)->task.index.contains(case_id)) {
          s = tasks_.at(name).get();
          break;
        }
      }
      if (!s) return not_found("case '" + case_id + "' is not queued");
    }

    // Stored in schema order without duplicates.
    LabelBits chosen(s->task.schema.size(), 0);
    for (const auto& l : req["labels"]) {
      if (!l.is_string()) return bad_request("labels must be strings");
      const auto idx = s->task.schema.find(l.get<std::string>());
      if (idx < 0) return bad_request("invalid label '" + l.get<std::string>() + "'");
      chosen[static_cast<std::size_t>(idx)] = 1;
    }
    AnnotationEvent event;
    event.task = s->task.schema.name();
    event.case_id = case_id;
    event.reviewer_id = reviewer;
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      if (chosen[i]) event.labels.push_back(s->task.schema.labels()[i]);
    }

    // Single writer: the log order is the event order.
    std::lock_guard writer(s->write_mutex);
    {
      std::shared_lock lock(s->mutex);
      event.seq = s->events.size() + 1;
    }
    event.timestamp = utc_timestamp();
    try {
      s->log->append(event.to_json().dump());
    } catch (const RuntimeError& e) {
      return {500, {{"error", e.what()}}};
    }
    std::unique_lock lock(s->mutex);
    s->apply(event);
    return {200, event.to_json()};
  }

  HandlerResult metrics(const std::string& name) const {
    const auto* s = find(name);
    if (!s) return not_found("unknown task '" + name + "'");
    std::shared_lock lock(s->mutex);
    const auto input = collect_consistency(s->events, std::nullopt, name);
    nlohmann::json consistency = {{"cases", input.records.size()}, {"value", nullptr}};
    if (!input.records.empty()) {
      consistency["value"] = annotator_consistency(input.records);
    }
    const auto pending = s->pending_count();
    return {200,
            {{"task", name},
             {"triage", s->task.triage ? *s->task.triage : nlohmann::json(nullptr)},
             {"queue_size", s->task.queue.size()},
             {"pending", pending},
             {"annotated", s->task.queue.size() - pending},
             {"events", s->events.size()},
             {"consistency", consistency}}};
  }

  void install(httplib::Server& server) {
    const auto reply = [](httplib::Response& res, const HandlerResult& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/api/tasks", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, list_tasks());
    });
    server.Get(R"(/api/queue/([^/]+))",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 std::size_t limit = 10;
                 if (req.has_param("limit")) {
                   try {
                     limit = std::stoul(req.get_param_value("limit"));
                   } catch (const std::exception&) {
                     return reply(res, bad_request("limit must be a non-negative integer"));
                   }
                 }
                 reply(res, queue(req.matches[1].str(), limit));
               });
    server.Get(R"(/api/case/([^/]+)/([^/]+))",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, case_detail(req.matches[1].str(), req.matches[2].str()));
               });
    server.Post("/api/annotations",
                [this, reply](const httplib::Request& req, httplib::Response& res) {
                  reply(res, submit(req.body));
                });
    server.Get(R"(/api/metrics/([^/]+))",
               [this, reply](const httplib::Request& req, httplib::Response& res) {
                 reply(res, metrics(req.matches[1].str()));
               });
    if (static_dir_ && fs::is_directory(*static_dir_)) {
      server.set_mount_point("/", static_dir_->string());
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content(
            "<!doctype html><title>pathtriage review</title>"
            "<p>Review UI bundle not installed. The JSON API is under /api/.</p>",
            "text/html");
      });
    }
  }

 private:
  struct TaskState {
    ReviewTask task;
    std::vector<AnnotationEvent> events;
    std::unordered_map<std::string, std::vector<std::size_t>> by_case;
    std::unique_ptr<DurableLog> log;
    mutable std::shared_mutex mutex;
    std::mutex write_mutex;

    void apply(AnnotationEvent e) {
      by_case[e.case_id].push_back(events.size());
      events.push_back(std::move(e));
    }
    bool annotated(const std::string& id) const { return by_case.contains(id); }
    std::size_t pending_count() const {
      std::size_t n = 0;
      for (const auto& e : task.queue) n += annotated(e.id) ? 0 : 1;
      return n;
    }
    nlohmann::json review_case(const QueueEntry& e) const {
      nlohmann::json latest = nullptr;
      if (auto it = by_case.find(e.id); it != by_case.end()) {
        latest = events[it->second.back()].labels;
      }
      return {{"id", e.id},
              {"text", e.text},
              {"scores", e.scores},
              {"labels", task.schema.labels()},
              {"t_low", task.band.t_low},
              {"t_high", task.band.t_high},
              {"margin", e.margin},
              {"status", annotated(e.id) ? "annotated" : "pending"},
              {"latest_labels", latest}};
    }
  };

  static HandlerResult not_found(const std::string& msg) { return {404, {{"error", msg}}}; }
  static HandlerResult bad_request(const std::string& msg) { return {400, {{"error", msg}}}; }

  TaskState* find(const std::string& name) {
    auto it = tasks_.find(name);
    return it == tasks_.end() ? nullptr : it->second.get();
  }
  const TaskState* find(const std::string& name) const {
    auto it = tasks_.find(name);
    return it == tasks_.end() ? nullptr : it->second.get();
  }

  std::map<std::string, std::unique_ptr<TaskState>> tasks_;
  std::vector<std::string> order_;
  std::optional<fs::path> static_dir_;
};

}  // namespace pathtriage
