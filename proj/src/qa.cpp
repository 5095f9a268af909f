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

#include "fgseg/qa.hpp"

#include "fgseg/error.hpp"

#include <algorithm>
#include <cstdio>

namespace fgseg {

void QAThresholds::validate() const {
    if (!(min_mask_to_box_ratio > 0.0 && min_mask_to_box_ratio < max_mask_to_box_ratio)) {
        throw ConfigError("need 0 < min_mask_to_box_ratio < max_mask_to_box_ratio");
    }
    if (!(max_border_contact_fraction >= 0.0 && max_border_contact_fraction <= 1.0)) {
        throw ConfigError("max_border_contact_fraction must lie in [0, 1]");
    }
    if (max_components < 1) {
        throw ConfigError("max_components must be >= 1");
    }
}

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return buf;
}

void add(std::vector<QAFlag>& flags, FlagKind kind, const std::string& detail, std::optional<double> metric) {
    for (auto& f : flags) {
        if (f.kind == kind) {
            f.detail += "; " + detail;
            return;
        }
    }
    flags.push_back({kind, detail, metric});
}

} // namespace

std::vector<QAFlag> auto_flag(const std::optional<Detection>& detection,
                              const std::optional<SegmentationMask>& mask,
                              const QAThresholds& t,
                              const FlagContext& ctx) {
    std::vector<QAFlag> flags;
    if (!detection) {
        flags.push_back({FlagKind::NoSubject, "detector returned no subject", std::nullopt});
        return flags;
    }
    if (!mask) {
        add(flags, FlagKind::IncompleteObject, "segmenter returned an empty mask", 0.0);
    } else {
        const BinaryMask dense = rle_decode(*mask);
        const double ratio = static_cast<double>(mask->area()) / static_cast<double>(detection->box.area());
        const double contact = border_contact_fraction(dense);
        const int components = label_components(dense).count;
        if (ratio > t.max_mask_to_box_ratio) {
            add(flags, FlagKind::UnwantedBackground, "mask/box area ratio " + fmt(ratio), ratio);
        }
        if (contact > t.max_border_contact_fraction) {
            add(flags, FlagKind::UnwantedBackground, "border contact " + fmt(contact), contact);
        }
        if (ratio < t.min_mask_to_box_ratio) {
            add(flags, FlagKind::IncompleteObject, "mask/box area ratio " + fmt(ratio), ratio);
        }
        if (components > t.max_components) {
            add(flags, FlagKind::IncompleteObject, std::to_string(components) + " connected components",
                static_cast<double>(components));
        }
    }
    if (!detection->manual && !ctx.subject_vocabulary.empty() &&
        std::find(ctx.subject_vocabulary.begin(), ctx.subject_vocabulary.end(), detection->label) ==
            ctx.subject_vocabulary.end()) {
        add(flags, FlagKind::WrongSubject, "label '" + detection->label + "' is not a subject label", std::nullopt);
    }
    if (ctx.ambiguous) {
        add(flags, FlagKind::Ambiguous, "competing detection within the ambiguity margin", std::nullopt);
    }
    std::sort(flags.begin(), flags.end(), [](const QAFlag& a, const QAFlag& b) { return a.kind < b.kind; });
    return flags;
}

std::vector<std::string> enqueue_flagged(const DatasetManifest& manifest) {
    std::vector<std::string> queue;
    for (const auto& r : manifest.records) {
        if (!r.flags.empty() && r.review == ReviewState::Pending) {
            queue.push_back(r.record_id);
        }
    }
    return queue;
}

FlagStats flag_stats(const DatasetManifest& manifest) {
    FlagStats s;
    s.records = manifest.records.size();
    for (const auto& r : manifest.records) {
        if (r.flags.empty()) {
            continue;
        }
        ++s.flagged;
        if (r.review == ReviewState::Pending) {
            ++s.queue_depth;
        }
        for (const auto& f : r.flags) {
            ++s.per_kind[f.kind];
        }
    }
    return s;
}

} // namespace fgseg
