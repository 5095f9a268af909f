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

#include "fgseg/review.hpp"

#include "fgseg/error.hpp"
#include "fgseg/image_io.hpp"
#include "fgseg/qa.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <nlohmann/json.hpp>

namespace fgseg {

namespace fs = std::filesystem;

std::string_view to_string(ReviewAction action) {
    switch (action) {
    case ReviewAction::Accept:
        return "accept";
    case ReviewAction::Reject:
        return "reject";
    case ReviewAction::Reprompt:
        return "reprompt";
    case ReviewAction::Reset:
        return "reset";
    }
    return "?";
}

ReviewAction parse_review_action(std::string_view text) {
    if (text == "accept") return ReviewAction::Accept;
    if (text == "reject") return ReviewAction::Reject;
    if (text == "reprompt") return ReviewAction::Reprompt;
    if (text == "reset") return ReviewAction::Reset;
    throw ValidationError("unknown review action: '" + std::string(text) + "'");
}

void ReviewDecision::validate() const {
    if (record_id.empty()) {
        throw ValidationError("decision has no record_id");
    }
    if (action == ReviewAction::Reprompt && !manual_box) {
        throw ValidationError("reprompt requires manual_box");
    }
}

std::string decision_to_json(const ReviewDecision& d) {
    nlohmann::ordered_json j;
    j["record_id"] = d.record_id;
    j["action"] = to_string(d.action);
    if (d.manual_box) {
        j["manual_box"] = {d.manual_box->x, d.manual_box->y, d.manual_box->w, d.manual_box->h};
    } else {
        j["manual_box"] = nullptr;
    }
    j["reviewer"] = d.reviewer;
    j["timestamp"] = d.timestamp;
    return j.dump();
}

ReviewDecision decision_from_json(std::string_view text) {
    try {
        const auto j = nlohmann::json::parse(text);
        ReviewDecision d;
        d.record_id = j.at("record_id").get<std::string>();
        d.action = parse_review_action(j.at("action").get<std::string>());
        if (j.contains("manual_box") && !j["manual_box"].is_null()) {
            const auto& b = j["manual_box"];
            d.manual_box = BoundingBox{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()};
        }
        d.reviewer = j.value("reviewer", "");
        d.timestamp = j.value("timestamp", "");
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad decision: ") + e.what());
    }
}

std::string utc_timestamp() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void apply_decision(const ReviewDecision& decision, DatasetManifest& manifest, Segmenter& segmenter,
                    const PipelineConfig& config) {
    decision.validate();
    ImageRecord* rec = manifest.find(decision.record_id);
    if (rec == nullptr) {
        throw NotFoundError("no record '" + decision.record_id + "'");
    }
    if (decision.action == ReviewAction::Reset) {
        if (rec->review == ReviewState::Pending) {
            throw ConflictError("record '" + rec->record_id + "' is already pending");
        }
        rec->review = ReviewState::Pending;
        rec->fg_path.reset();
        return;
    }
    if (rec->review != ReviewState::Pending) {
        throw ConflictError("record '" + rec->record_id + "' already " + std::string(to_string(rec->review)));
    }
    switch (decision.action) {
    case ReviewAction::Accept: {
        if (!rec->mask) {
            throw ConflictError("record '" + rec->record_id + "' has no mask to accept; reprompt or reject");
        }
        const Image image = read_image(config.source_root / rec->source_path);
        rec->fg_path = write_foreground(*rec, image, *rec->mask, config);
        rec->review = ReviewState::Accepted;
        break;
    }
    case ReviewAction::Reject:
        rec->fg_path.reset();
        rec->review = ReviewState::Rejected;
        break;
    case ReviewAction::Reprompt: {
        const Image image = read_image(config.source_root / rec->source_path);
        validate_box(*decision.manual_box, image.width(), image.height());
        const Detection manual{*decision.manual_box, 1.0, rec->detection ? rec->detection->label : "", true};
        std::optional<SegmentationMask> mask;
        try {
            mask = segmenter.segment(image, manual.box, config.segmenter);
        } catch (const SegmentationFailure&) {
        }
        rec->detection = manual;
        rec->mask = mask;
        rec->flags = auto_flag(rec->detection, rec->mask, config.thresholds, FlagContext{config.subject_labels(), false});
        if (rec->flags.empty()) {
            rec->fg_path = write_foreground(*rec, image, *rec->mask, config);
            rec->review = ReviewState::Corrected;
        } else {
            rec->fg_path.reset();
        }
        break;
    }
    case ReviewAction::Reset:
        break;
    }
}

DecisionLog::DecisionLog(fs::path path) : path_(std::move(path)) {}

void DecisionLog::append(const ReviewDecision& decision) {
    std::lock_guard lock(mu_);
    if (path_.has_parent_path()) {
        fs::create_directories(path_.parent_path());
    }
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    if (!out) {
        throw IoError("cannot append to decision log " + path_.string());
    }
    out << decision_to_json(decision) << '\n';
    out.flush();
}

std::vector<ReviewDecision> DecisionLog::read_all() const {
    std::vector<ReviewDecision> out;
    std::ifstream in(path_);
    if (!in) {
        return out;
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        try {
            out.push_back(decision_from_json(line));
        } catch (const ValidationError& e) {
            throw ParseError(line_no, e.what());
        }
    }
    return out;
}

DatasetManifest replay(DatasetManifest base, const std::vector<ReviewDecision>& log, Segmenter& segmenter,
                       const PipelineConfig& config) {
    for (const auto& d : log) {
        apply_decision(d, base, segmenter, config);
    }
    return base;
}

} // namespace fgseg
