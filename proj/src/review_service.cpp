// Copyright 2026 The fgseg Authors
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

#include "fgseg/review_service.hpp"

#include "fgseg/error.hpp"
#include "fgseg/qa.hpp"

#include <fstream>
#include <httplib.h>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fgseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, int status, const std::string& message) {
    reply(res, status, json{{"error", message}});
}

std::string url_path(std::string_view prefix, const std::string& rel) { return std::string(prefix) + rel; }

json record_payload(const ImageRecord& r) {
    json j;
    j["record"] = json::parse(record_to_json(r));
    j["source_url"] = url_path("/images/source/", r.source_path);
    j["fg_url"] = r.fg_path ? json(url_path("/images/fg/", *r.fg_path)) : json(nullptr);
    return j;
}

std::string content_type(const fs::path& p) {
    const auto ext = p.extension().string();
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg" || ext == ".JPG") return "image/jpeg";
    if (ext == ".bmp") return "image/bmp";
    return "application/octet-stream";
}

void serve_file(const fs::path& root, const std::string& rel, httplib::Response& res) {
    const fs::path relp = fs::path(rel).lexically_normal();
    if (relp.is_absolute() || relp.empty() || *relp.begin() == "..") {
        reply_error(res, 400, "bad path");
        return;
    }
    std::ifstream in(root / relp, std::ios::binary);
    if (!in) {
        reply_error(res, 404, "no such image");
        return;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    res.status = 200;
    res.set_content(ss.str(), content_type(relp));
}

} // namespace

ReviewService::ReviewService(DatasetManifest base, PipelineConfig config, ReviewServiceOptions options)
    : manifest_(std::move(base)), config_(std::move(config)), options_(std::move(options)),
      segmenter_(make_segmenter(config_.segmenter.backend_id)), log_(options_.log_path),
      server_(std::make_unique<httplib::Server>()) {
    manifest_ = replay(std::move(manifest_), log_.read_all(), *segmenter_, config_);
    install_routes();
}

ReviewService::~ReviewService() { stop(); }

int ReviewService::bind_any_port(const std::string& host) { return server_->bind_to_any_port(host); }

bool ReviewService::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

void ReviewService::serve() { server_->listen_after_bind(); }

void ReviewService::stop() {
    if (server_) {
        server_->stop();
    }
}

DatasetManifest ReviewService::snapshot() const {
    std::lock_guard lock(mu_);
    return manifest_;
}

ImageRecord ReviewService::decide(const ReviewDecision& decision) {
    std::lock_guard lock(mu_);
    // Apply to a copy so a failed decision leaves no partial state behind.
    DatasetManifest next = manifest_;
    apply_decision(decision, next, *segmenter_, config_);
    log_.append(decision);
    manifest_ = std::move(next);
    return *manifest_.find(decision.record_id);
}

void ReviewService::install_routes() {
    auto& s = *server_;

    s.Get("/api/queue", [this](const httplib::Request& req, httplib::Response& res) {
        std::size_t offset = 0;
        std::size_t limit = 50;
        try {
            if (req.has_param("offset")) offset = std::stoul(req.get_param_value("offset"));
            if (req.has_param("limit")) limit = std::stoul(req.get_param_value("limit"));
        } catch (const std::exception&) {
            reply_error(res, 400, "offset/limit must be non-negative integers");
            return;
        }
        std::lock_guard lock(mu_);
        const auto queue = enqueue_flagged(manifest_);
        json items = json::array();
        for (std::size_t i = offset; i < queue.size() && i < offset + limit; ++i) {
            const ImageRecord& r = *manifest_.find(queue[i]);
            json kinds = json::array();
            for (const auto& f : r.flags) {
                kinds.push_back(to_string(f.kind));
            }
            items.push_back({{"record_id", r.record_id},
                             {"flags", kinds},
                             {"thumbnail", url_path("/images/source/", r.source_path)}});
        }
        reply(res, 200, json{{"total", queue.size()}, {"offset", offset}, {"limit", limit}, {"items", items}});
    });

    s.Get(R"(/api/record/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        std::lock_guard lock(mu_);
        const ImageRecord* r = manifest_.find(req.matches[1].str());
        if (r == nullptr) {
            reply_error(res, 404, "no record '" + req.matches[1].str() + "'");
            return;
        }
        reply(res, 200, record_payload(*r));
    });

    s.Post(R"(/api/record/(.+)/decision)", [this](const httplib::Request& req, httplib::Response& res) {
        ReviewDecision d;
        try {
            const auto body = json::parse(req.body);
            d.record_id = req.matches[1].str();
            d.action = parse_review_action(body.at("action").get<std::string>());
            if (d.action == ReviewAction::Reset) {
                throw ValidationError("reset is administrative and not accepted here");
            }
            if (body.contains("manual_box") && !body["manual_box"].is_null()) {
                const auto& b = body["manual_box"];
                d.manual_box = BoundingBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(),
                                           b.at(3).get<int>()};
            }
            d.reviewer = body.value("reviewer", "");
            d.timestamp = utc_timestamp();
            d.validate();
        } catch (const std::exception& e) {
            reply_error(res, 400, e.what());
            return;
        }
        try {
            reply(res, 200, record_payload(decide(d)));
        } catch (const NotFoundError& e) {
            reply_error(res, 404, e.what());
        } catch (const ConflictError& e) {
            reply_error(res, 409, e.what());
        } catch (const ValidationError& e) {
            reply_error(res, 400, e.what());
        } catch (const std::exception& e) {
            reply_error(res, 500, e.what());
        }
    });

    s.Get("/api/stats", [this](const httplib::Request&, httplib::Response& res) {
        std::lock_guard lock(mu_);
        const auto st = flag_stats(manifest_);
        json counts = json::object();
        for (const auto& [kind, n] : st.per_kind) {
            counts[std::string(to_string(kind))] = n;
        }
        json per_dataset = json::object();
        per_dataset[manifest_.name] = {{"records", st.records}, {"flagged", st.flagged}, {"flag_rate", st.flag_rate()}};
        reply(res, 200,
              json{{"records", st.records},
                   {"flagged", st.flagged},
                   {"queue_depth", st.queue_depth},
                   {"flag_rate", st.flag_rate()},
                   {"flag_counts", counts},
                   {"per_dataset", per_dataset}});
    });

    s.Get(R"(/images/source/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        serve_file(config_.source_root, req.matches[1].str(), res);
    });
    s.Get(R"(/images/fg/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
        serve_file(config_.out_root, req.matches[1].str(), res);
    });

    if (options_.ui_dir) {
        s.set_mount_point("/", options_.ui_dir->string());
    }
}

} // namespace fgseg
