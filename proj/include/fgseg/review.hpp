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

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace fgseg {

enum class ReviewAction {
    Accept,
    Reject,
    Reprompt,
    Reset,  // administrative: returns a decided record to pending
};

std::string_view to_string(ReviewAction action);
ReviewAction parse_review_action(std::string_view text);

struct ReviewDecision {
    std::string record_id;
    ReviewAction action = ReviewAction::Accept;
    std::optional<BoundingBox> manual_box;
    std::string reviewer;
    std::string timestamp;  // ISO-8601 UTC

    /// Reprompt requires a manual box. Throws ValidationError.
    void validate() const;

    friend bool operator==(const ReviewDecision&, const ReviewDecision&) = default;
};

std::string decision_to_json(const ReviewDecision& decision);
ReviewDecision decision_from_json(std::string_view text);
std::string utc_timestamp();

/// Applies one decision in place.
///   accept   -> accepted; foreground written from the existing mask
///   reject   -> rejected; no foreground
///   reprompt -> segment again with the manual box, recompute flags; the
///               record becomes corrected when clean, else stays pending
///   reset    -> back to pending, foreground path dropped
/// Throws NotFoundError for unknown ids and ConflictError when a decision
/// targets a record that is not pending (or a reset targets a pending one).
void apply_decision(const ReviewDecision& decision, DatasetManifest& manifest, Segmenter& segmenter,
                    const PipelineConfig& config);

/// Append-only JSONL log of decisions, one writer.
class DecisionLog {
  public:
    explicit DecisionLog(std::filesystem::path path);

    void append(const ReviewDecision& decision);
    std::vector<ReviewDecision> read_all() const;
    const std::filesystem::path& path() const { return path_; }

  private:
    std::filesystem::path path_;
    std::mutex mu_;
};

/// Folds the log over the processed manifest.
DatasetManifest replay(DatasetManifest base, const std::vector<ReviewDecision>& log, Segmenter& segmenter,
                       const PipelineConfig& config);

} // namespace fgseg
