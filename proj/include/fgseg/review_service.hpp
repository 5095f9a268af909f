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

#pragma once

#include "fgseg/manifest.hpp"
#include "fgseg/models.hpp"
#include "fgseg/pipeline.hpp"
#include "fgseg/review.hpp"

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

namespace httplib {
class Server;
}

namespace fgseg {

struct ReviewServiceOptions {
    std::filesystem::path log_path;
    std::optional<std::filesystem::path> ui_dir;  // static assets served at /
};

/// HTTP review API over one processed manifest.
///
///   GET  /api/queue?offset=&limit=     pending flagged records
///   GET  /api/record/{id}              record + image URLs
///   POST /api/record/{id}/decision     {action, manual_box?, reviewer}
///   GET  /api/stats                    flag counts, queue depth, flag rates
///   GET  /images/source/<path>, /images/fg/<path>
///
/// Decisions are serialized; a decision is logged only after it has been
/// applied. An existing log is replayed at construction.
class ReviewService {
  public:
    ReviewService(DatasetManifest base, PipelineConfig config, ReviewServiceOptions options);
    ~ReviewService();

    ReviewService(const ReviewService&) = delete;
    ReviewService& operator=(const ReviewService&) = delete;

    /// Binds to an ephemeral port and returns it.
    int bind_any_port(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks until stop().
    void serve();
    void stop();

    /// Thread-safe copy of the current manifest.
    DatasetManifest snapshot() const;

    // The operations the routes call; public for in-process callers.
    ImageRecord decide(const ReviewDecision& decision);

  private:
    void install_routes();

    mutable std::mutex mu_;
    DatasetManifest manifest_;
    PipelineConfig config_;
    ReviewServiceOptions options_;
    std::unique_ptr<Segmenter> segmenter_;
    DecisionLog log_;
    std::unique_ptr<httplib::Server> server_;
};

} // namespace fgseg
