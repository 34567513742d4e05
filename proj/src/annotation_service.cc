// Copyright 2026 The Probe Authors.
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

#include "probe/annotation_service.h"

#include <sys/socket.h>

#include <algorithm>
#include <unordered_map>

#include "httplib.h"
#include "probe/analysis.h"
#include "probe/error.h"
#include "probe/run_io.h"

namespace probe {

using nlohmann::json;

namespace {

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json; charset=utf-8");
}

void SendError(httplib::Response& res, int status, const std::string& message,
               const json& extra = json::object()) {
  json body = {{"error", message}};
  body.update(extra);
  SendJson(res, status, body);
}

std::optional<std::size_t> ParseSize(const std::string& s) {
  if (s.empty() || s.size() > 18 || !std::all_of(s.begin(), s.end(), ::isdigit)) {
    return std::nullopt;
  }
  return static_cast<std::size_t>(std::stoull(s));
}

}  // namespace

json CandidateView(const Candidate& c, const ValidSentence* parent,
                   const std::optional<Annotation>& label) {
  const Enumeration& e = c.enumeration;
  json j = {{"candidate_id", c.candidate_id},
            {"pair_id", e.deletion.pair_id},
            {"unit", std::string(UnitKindName(e.deletion.unit))},
            {"position", e.deletion.position},
            {"deleted_surface", e.deletion.deleted_surface},
            {"highlight", {{"start", e.deletion.start}, {"end", e.deletion.end}}},
            {"perturbed_source", e.deletion.perturbed_text},
            {"translation", e.translation},
            {"bleu", ToJson(e.bleu)},
            {"baseline_bleu", e.baseline_bleu},
            {"delta", c.delta},
            {"status", label ? "labeled" : "unlabeled"},
            {"label", label ? ToJson(*label) : json(nullptr)}};
  if (parent != nullptr) {
    j["source"] = parent->pair.source;
    j["reference"] = parent->pair.reference;
    j["original_translation"] = parent->translation;
  }
  return j;
}

std::vector<const Candidate*> WorstFirst(const RunResult& run) {
  std::vector<const Candidate*> out;
  out.reserve(run.candidates.size());
  for (const auto& c : run.candidates) out.push_back(&c);
  std::stable_sort(out.begin(), out.end(), [](const Candidate* a, const Candidate* b) {
    return a->enumeration.bleu.value < b->enumeration.bleu.value;
  });
  return out;
}

AnnotationService::AnnotationService(AnnotationStore& store, const RunResult& run,
                                     ServiceOptions options)
    : store_(store), run_(run), options_(std::move(options)),
      server_(std::make_unique<httplib::Server>()) {
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  Routes();
  if (options_.static_dir) {
    if (!server_->set_mount_point("/", options_.static_dir->string())) {
      throw Error(ErrorCode::kConfigError,
                  "static directory not found: " + options_.static_dir->string());
    }
  }
  if (options_.port == 0) {
    port_ = server_->bind_to_any_port(options_.host);
    if (port_ < 0) port_ = 0;
  } else if (server_->bind_to_port(options_.host, options_.port)) {
    port_ = options_.port;
  }
  if (port_ == 0) {
    throw Error(ErrorCode::kAddressInUse,
                "cannot bind " + options_.host + ":" + std::to_string(options_.port));
  }
}

AnnotationService::~AnnotationService() { Stop(); }

void AnnotationService::Start() {
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
}

void AnnotationService::Run() { server_->listen_after_bind(); }

void AnnotationService::Stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

void AnnotationService::Routes() {
  auto parents = std::make_shared<std::unordered_map<std::string, const ValidSentence*>>();
  for (const auto& v : run_.valid) (*parents)[v.pair.pair_id] = &v;
  auto parent_of = [parents](const Candidate& c) -> const ValidSentence* {
    auto it = parents->find(c.enumeration.deletion.pair_id);
    return it == parents->end() ? nullptr : it->second;
  };

  server_->Get("/api/run", [this](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, ToJson(run_.header));
  });

  server_->Get("/api/candidates", [this, parent_of](const httplib::Request& req,
                                                    httplib::Response& res) {
    const std::string status = req.get_param_value("status");
    const std::string category_name = req.get_param_value("category");
    if (!status.empty() && status != "labeled" && status != "unlabeled") {
      SendError(res, 422, "status must be labeled or unlabeled",
                {{"allowed", {"labeled", "unlabeled"}}});
      return;
    }
    std::optional<ErrorCategory> category;
    if (!category_name.empty()) {
      category = ParseCategory(category_name);
      if (!category) {
        SendError(res, 422, "unknown category '" + category_name + "'",
                  {{"allowed", AllowedCategoryNames()}});
        return;
      }
    }
    std::size_t offset = 0;
    std::optional<std::size_t> limit;
    if (req.has_param("offset")) {
      const auto v = ParseSize(req.get_param_value("offset"));
      if (!v) return SendError(res, 400, "offset must be a non-negative integer");
      offset = *v;
    }
    if (req.has_param("limit")) {
      limit = ParseSize(req.get_param_value("limit"));
      if (!limit) return SendError(res, 400, "limit must be a non-negative integer");
    }
    const auto labels = store_.CurrentAll();
    json items = json::array();
    std::size_t total = 0;
    for (const Candidate* c : WorstFirst(run_)) {
      auto it = labels.find(c->candidate_id);
      const bool labeled = it != labels.end();
      if (status == "labeled" && !labeled) continue;
      if (status == "unlabeled" && labeled) continue;
      if (category && (!labeled || it->second.category != *category)) continue;
      ++total;
      if (total <= offset) continue;
      if (limit && items.size() >= *limit) continue;
      items.push_back(CandidateView(*c, parent_of(*c),
                                    labeled ? std::optional(it->second) : std::nullopt));
    }
    SendJson(res, 200,
             {{"total", total},
              {"offset", offset},
              {"limit", limit ? json(*limit) : json(nullptr)},
              {"candidates", items}});
  });

  server_->Get(R"(/api/candidates/([^/]+))",
               [this, parent_of](const httplib::Request& req, httplib::Response& res) {
                 const std::string id = req.matches[1];
                 const Candidate* c = run_.FindCandidate(id);
                 if (c == nullptr) return SendError(res, 404, "no candidate " + id);
                 SendJson(res, 200, CandidateView(*c, parent_of(*c), store_.Current(id)));
               });

  server_->Post(R"(/api/candidates/([^/]+)/label)", [this, parent_of](const httplib::Request& req,
                                                                      httplib::Response& res) {
    const std::string id = req.matches[1];
    const Candidate* c = run_.FindCandidate(id);
    if (c == nullptr) return SendError(res, 404, "no candidate " + id);
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::exception&) {
      return SendError(res, 400, "body is not JSON");
    }
    if (!body.is_object() || !body.contains("category") || !body["category"].is_string()) {
      return SendError(res, 422, "category is required",
                       {{"allowed", AllowedCategoryNames()}});
    }
    const auto category = ParseCategory(body["category"].get<std::string>());
    if (!category) {
      return SendError(res, 422,
                       "unknown category '" + body["category"].get<std::string>() + "'",
                       {{"allowed", AllowedCategoryNames()}});
    }
    if (!body.contains("annotator") || !body["annotator"].is_string() ||
        body["annotator"].get<std::string>().empty()) {
      return SendError(res, 422, "annotator is required");
    }
    std::optional<std::string> note;
    if (body.contains("note") && body["note"].is_string()) note = body["note"].get<std::string>();
    try {
      const Annotation a =
          store_.RecordLabel(id, *category, body["annotator"].get<std::string>(), note);
      SendJson(res, 200, CandidateView(*c, parent_of(*c), a));
    } catch (const Error& e) {
      SendError(res, 500, e.what());
    }
  });

  server_->Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
    const ErrorStats s = store_.Stats();
    json j = ToJson(s);
    j["severe_rate_display"] = FormatRate(s.severe_rate);
    SendJson(res, 200, j);
  });

  server_->Get("/api/export", [this](const httplib::Request&, httplib::Response& res) {
    res.status = 200;
    res.set_header("Content-Disposition", "attachment; filename=\"annotations.jsonl\"");
    res.set_content(store_.ExportJsonl(), "application/x-ndjson; charset=utf-8");
  });
}

}  // namespace probe
