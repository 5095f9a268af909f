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

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fgseg {

/// Heuristics that pre-select records for manual review.
struct QAThresholds {
    double max_mask_to_box_ratio = 1.5;
    double min_mask_to_box_ratio = 0.25;
    double max_border_contact_fraction = 0.4;
    int max_components = 3;

    void validate() const;
};

struct FlagContext {
    // Labels that count as the dataset's subject. Empty disables the
    // WRONG_SUBJECT check.
    std::span<const std::string> subject_vocabulary;
    bool ambiguous = false;
};

/// Pure function of its inputs. NO_SUBJECT is exclusive: with no detection
/// no other check runs. A detection without a mask (segmenter returned
/// nothing) is INCOMPLETE_OBJECT. Returns at most one flag per kind,
/// ordered by kind.
std::vector<QAFlag> auto_flag(const std::optional<Detection>& detection,
                              const std::optional<SegmentationMask>& mask,
                              const QAThresholds& thresholds,
                              const FlagContext& context);

/// Ids of records with flags that are still pending, in manifest order.
std::vector<std::string> enqueue_flagged(const DatasetManifest& manifest);

struct FlagStats {
    std::size_t records = 0;
    std::size_t flagged = 0;
    std::size_t queue_depth = 0;
    std::map<FlagKind, std::size_t> per_kind;

    double flag_rate() const { return records == 0 ? 0.0 : static_cast<double>(flagged) / records; }
};

FlagStats flag_stats(const DatasetManifest& manifest);

} // namespace fgseg
