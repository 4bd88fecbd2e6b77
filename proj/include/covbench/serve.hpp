// Copyright 2026 The covbench Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Curation service: batches of voted candidates per work, expert labels
// stored durably in an expert table, and the HTTP routes serving them.

#ifndef COVBENCH_SERVE_HPP
#define COVBENCH_SERVE_HPP

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

#include "covbench/annotation.hpp"
#include "covbench/core.hpp"
#include "covbench/error.hpp"
#include "covbench/text_io.hpp"

namespace covbench {

struct ApiResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

/// Label store behind the REST interface. Reads run concurrently; each write
/// is persisted to the expert table before it is acknowledged.
class CurationStore {
 public:
  CurationStore(std::vector<Hit> hits, std::vector<VoteRow> votes, std::vector<Assignment> assignments,
                fs::path expert_path, Vocabulary vocab = Vocabulary::builtin())
      : hits_(std::move(hits)),
        vocab_(std::move(vocab)),
        expert_path_(std::move(expert_path)),
        lock_(std::make_unique<FileLock>(expert_path_)) {
    for (auto& v : votes) votes_.emplace(v.video_id, std::move(v));
    for (const auto& h : hits_) {
      if (!batches_.emplace(h.work_id, &h).second) {
        throw Error(ErrorKind::kData, "two tasks for work '" + h.work_id + "'");
      }
      for (const auto& c : h.candidates) {
        if (!votes_.count(c)) {
          throw Error(ErrorKind::kIdMismatch, "task candidate '" + c + "' has no vote row");
        }
        batch_of_.emplace(c, h.work_id);
      }
    }
    for (auto& a : assignments) assignments_[a.hit_id].push_back(std::move(a));
    std::error_code ec;
    if (fs::exists(expert_path_, ec)) {
      for (auto& e : read_expert_tsv(expert_path_, vocab_)) {
        if (!batch_of_.count(e.video_id)) {
          throw Error(ErrorKind::kIdMismatch, "expert label for unknown video '" + e.video_id + "'");
        }
        expert_[e.video_id] = std::move(e);
      }
    }
  }

  /// Batches with undecided candidates first, then by work id.
  nlohmann::ordered_json batches() const {
    std::shared_lock lock(mu_);
    struct Row {
      bool has_undecided;
      std::string work;
      nlohmann::ordered_json json;
    };
    std::vector<Row> rows;
    for (const auto& [work, hit] : batches_) {
      std::size_t undecided = 0, labeled = 0;
      for (const auto& c : hit->candidates) {
        if (!votes_.at(c).vote.final) ++undecided;
        if (expert_.count(c)) ++labeled;
      }
      nlohmann::ordered_json j;
      j["id"] = work;
      j["work_id"] = work;
      j["query_title"] = hit->query_version.title;
      j["query_performer"] = hit->query_version.performer;
      j["candidates"] = hit->candidates.size();
      j["undecided"] = undecided;
      j["expert_labeled"] = labeled;
      rows.push_back({undecided > 0, work, std::move(j)});
    }
    std::stable_sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
      if (a.has_undecided != b.has_undecided) return a.has_undecided;
      return a.work < b.work;
    });
    auto out = nlohmann::ordered_json::array();
    for (auto& r : rows) out.push_back(std::move(r.json));
    return out;
  }

  std::optional<nlohmann::ordered_json> batch(const std::string& id) const {
    std::shared_lock lock(mu_);
    auto it = batches_.find(id);
    if (it == batches_.end()) return std::nullopt;
    const Hit& h = *it->second;
    nlohmann::ordered_json j;
    j["id"] = id;
    j["work_id"] = h.work_id;
    j["query"] = version_json(h.query_version);
    auto& rows = j["candidates"] = nlohmann::ordered_json::array();
    const auto* workers = find_assignments(h.hit_id);
    for (const auto& c : h.candidates) {
      const auto& v = votes_.at(c).vote;
      nlohmann::ordered_json row;
      row["video_id"] = c;
      row["url"] = video_url(c);
      nlohmann::ordered_json tally;
      for (auto l : kAllRelevanceLabels) tally[std::string(to_string(l))] = v.tally[rank(l)];
      row["tally"] = tally;
      row["vote"] = v.final ? nlohmann::ordered_json(to_string(*v.final)) : nullptr;
      auto& wl = row["worker_labels"] = nlohmann::ordered_json::array();
      if (workers) {
        for (const auto& a : *workers) {
          auto lit = a.labels.find(c);
          if (lit == a.labels.end()) continue;
          wl.push_back({{"worker_id", a.worker_id},
                        {"label", to_string(lit->second)},
                        {"justification", a.justification}});
        }
      }
      row["expert"] = expert_json_locked(c);
      rows.push_back(std::move(row));
    }
    return j;
  }

  /// Validates and stores one expert label.
  ApiResponse label(const std::string& batch_id, std::string_view body) {
    nlohmann::json req;
    try {
      req = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      return error(400, "request body is not valid JSON");
    }
    if (!req.is_object()) return error(400, "request body must be a JSON object");
    auto str = [&](const char* key) -> std::optional<std::string> {
      auto it = req.find(key);
      if (it == req.end() || it->is_null()) return std::string();
      if (!it->is_string()) return std::nullopt;
      return it->get<std::string>();
    };
    auto video = str("video_id");
    auto relevance = str("relevance");
    auto cls = str("uncertainty_class");
    auto note = str("note");
    if (!video || !relevance || !cls || !note) return error(400, "fields must be strings");
    if (video->empty()) return error(400, "video_id is required");

    ExpertLabel e;
    e.video_id = *video;
    e.note = *note;
    {
      std::shared_lock lock(mu_);
      if (!batches_.count(batch_id)) return error(404, "unknown batch '" + batch_id + "'");
      auto b = batch_of_.find(*video);
      if (b == batch_of_.end() || b->second != batch_id) {
        return error(404, "video '" + *video + "' is not in batch '" + batch_id + "'");
      }
    }
    auto parsed = try_parse_relevance(*relevance);
    if (!parsed) return error(400, "unknown relevance '" + *relevance + "'");
    e.label = *parsed;
    if (cls->empty() || !vocab_.find(*cls)) return error(400, "unknown uncertainty class '" + *cls + "'");
    e.uncertainty_class = *cls;

    std::unique_lock lock(mu_);
    auto previous = expert_.find(e.video_id);
    std::optional<ExpertLabel> backup;
    if (previous != expert_.end()) backup = previous->second;
    expert_[e.video_id] = e;
    try {
      write_file_atomic(expert_path_, export_locked());
    } catch (const Error& err) {
      if (backup) {
        expert_[e.video_id] = *backup;
      } else {
        expert_.erase(e.video_id);
      }
      return error(500, err.what());
    }
    return {200, expert_json_locked(e.video_id).dump()};
  }

  nlohmann::ordered_json progress() const {
    std::shared_lock lock(mu_);
    std::size_t total = 0, undecided = 0, undecided_labeled = 0;
    for (const auto& [vid, work] : batch_of_) {
      ++total;
      if (!votes_.at(vid).vote.final) {
        ++undecided;
        if (expert_.count(vid)) ++undecided_labeled;
      }
    }
    nlohmann::ordered_json j;
    j["batches"] = batches_.size();
    j["candidates"] = total;
    j["expert_labeled"] = expert_.size();
    j["undecided"] = undecided;
    j["undecided_labeled"] = undecided_labeled;
    return j;
  }

  /// The expert table, byte-identical to the file on disk.
  std::string export_tsv() const {
    std::shared_lock lock(mu_);
    return export_locked();
  }

  const Vocabulary& vocabulary() const { return vocab_; }

  /// Routes one request. `path` excludes the query string.
  ApiResponse handle(std::string_view method, std::string_view path, std::string_view body = {}) {
    static const std::string prefix = "/api/batch/";
    if (method == "GET") {
      if (path == "/api/batches") return {200, batches().dump()};
      if (path == "/api/progress") return {200, progress().dump()};
      if (path == "/api/vocab") return {200, vocab_.to_json().dump()};
      if (path == "/api/export") return {200, export_tsv(), "text/tab-separated-values; charset=utf-8"};
      if (path.starts_with(prefix)) {
        std::string id(path.substr(prefix.size()));
        if (id.empty() || id.find('/') != std::string::npos) return error(404, "no such route");
        if (auto b = batch(id)) return {200, b->dump()};
        return error(404, "unknown batch '" + id + "'");
      }
    } else if (method == "POST" && path.starts_with(prefix) && path.ends_with("/label")) {
      std::string id(path.substr(prefix.size(), path.size() - prefix.size() - 6));
      if (id.empty() || id.find('/') != std::string::npos) return error(404, "no such route");
      return label(id, body);
    }
    return error(404, "no such route");
  }

 private:
  static ApiResponse error(int status, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = message;
    return {status, j.dump()};
  }

  static std::string video_url(const std::string& video_id) {
    return "https://www.youtube.com/watch?v=" + video_id;
  }

  static nlohmann::ordered_json version_json(const VersionRecord& v) {
    nlohmann::ordered_json j;
    j["video_id"] = v.video_id;
    j["version_id"] = v.version_id;
    j["title"] = v.title;
    j["performer"] = v.performer;
    j["url"] = video_url(v.video_id);
    return j;
  }

  const std::vector<Assignment>* find_assignments(const std::string& hit_id) const {
    auto it = assignments_.find(hit_id);
    return it == assignments_.end() ? nullptr : &it->second;
  }

  nlohmann::ordered_json expert_json_locked(const std::string& video_id) const {
    auto it = expert_.find(video_id);
    if (it == expert_.end()) return nullptr;
    nlohmann::ordered_json j;
    j["video_id"] = it->second.video_id;
    j["relevance"] = to_string(it->second.label);
    j["uncertainty_class"] = it->second.uncertainty_class;
    j["note"] = it->second.note;
    return j;
  }

  std::string export_locked() const {
    std::vector<ExpertLabel> rows;
    rows.reserve(expert_.size());
    for (const auto& [_, e] : expert_) rows.push_back(e);
    return write_expert_tsv(rows);
  }

  std::vector<Hit> hits_;
  Vocabulary vocab_;
  fs::path expert_path_;
  std::unique_ptr<FileLock> lock_;
  std::map<std::string, VoteRow> votes_;
  std::map<std::string, const Hit*> batches_;
  std::map<std::string, std::string> batch_of_;
  std::map<std::string, std::vector<Assignment>> assignments_;
  std::map<std::string, ExpertLabel> expert_;
  mutable std::shared_mutex mu_;
};

/// Binds the store's routes to an HTTP server.
inline void mount_routes(httplib::Server& server, CurationStore& store) {
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  auto get = [&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, store.handle("GET", req.path));
  };
  server.Get("/api/batches", get);
  server.Get("/api/progress", get);
  server.Get("/api/vocab", get);
  server.Get("/api/export", get);
  server.Get(R"(/api/batch/([^/]+))", get);
  server.Post(R"(/api/batch/([^/]+)/label)", [&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, store.handle("POST", req.path, req.body));
  });
  server.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty()) res.set_content(R"({"error":"no such route"})", "application/json");
  });
}

}  // namespace covbench

#endif  // COVBENCH_SERVE_HPP
