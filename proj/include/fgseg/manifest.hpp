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

#include "fgseg/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fgseg {

struct BoundingBox {
    int x = 0;
    int y = 0;
    int w = 0;
    int h = 0;

    long long area() const { return static_cast<long long>(w) * h; }
    bool fits(int image_width, int image_height) const;

    friend bool operator==(const BoundingBox&, const BoundingBox&) = default;
    friend auto operator<=>(const BoundingBox&, const BoundingBox&) = default;
};

/// Throws ValidationError unless the box is non-empty and inside the image.
void validate_box(const BoundingBox& box, int image_width, int image_height);

/// Uncompressed COCO-style run lengths: column-major scan, alternating
/// background/foreground runs starting with background (possibly 0).
struct SegmentationMask {
    int height = 0;
    int width = 0;
    std::vector<std::uint32_t> counts;

    std::uint64_t area() const;

    friend bool operator==(const SegmentationMask&, const SegmentationMask&) = default;
};

void validate_mask(const SegmentationMask& mask);

SegmentationMask rle_encode(const BinaryMask& mask);
BinaryMask rle_decode(std::span<const std::uint32_t> counts, int height, int width);
inline BinaryMask rle_decode(const SegmentationMask& m) { return rle_decode(m.counts, m.height, m.width); }

struct Detection {
    BoundingBox box;
    double score = 0.0;
    std::string label;
    bool manual = false;  // box drawn by a reviewer rather than the detector

    friend bool operator==(const Detection&, const Detection&) = default;
};

enum class FlagKind {
    NoSubject,
    WrongSubject,
    UnwantedBackground,
    IncompleteObject,
    Ambiguous,
    ProcessingError,
};

std::string_view to_string(FlagKind kind);
FlagKind parse_flag_kind(std::string_view text);

struct QAFlag {
    FlagKind kind = FlagKind::NoSubject;
    std::string detail;
    std::optional<double> metric;

    friend bool operator==(const QAFlag&, const QAFlag&) = default;
};

enum class Split { Train, Test };
enum class ReviewState { Pending, Accepted, Rejected, Corrected };
enum class DatasetKind { Cub, Cars, Aircraft, Generic };

std::string_view to_string(Split split);
std::string_view to_string(ReviewState state);
std::string_view to_string(DatasetKind kind);
Split parse_split(std::string_view text);
ReviewState parse_review_state(std::string_view text);
DatasetKind parse_dataset_kind(std::string_view text);

struct ImageRecord {
    std::string record_id;
    int class_id = 0;
    std::string class_name;
    Split split = Split::Train;
    std::string source_path;
    std::optional<std::string> fg_path;
    std::optional<Detection> detection;
    std::optional<SegmentationMask> mask;
    std::vector<QAFlag> flags;  // at most one per kind, ordered by kind
    ReviewState review = ReviewState::Pending;

    bool has_flag(FlagKind kind) const;

    friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct Provenance {
    std::string source = "original";
    std::string config_digest;
    std::string split_policy;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct DatasetManifest {
    std::string name;
    DatasetKind kind = DatasetKind::Generic;
    std::vector<std::string> classes;
    std::vector<ImageRecord> records;
    Provenance provenance;
    std::string root;     // directory source_path values are relative to
    std::string fg_root;  // directory fg_path values are relative to

    const ImageRecord* find(std::string_view record_id) const;
    ImageRecord* find(std::string_view record_id);

    friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

/// Checks unique record ids and class ids in range. Throws ValidationError.
void validate_manifest(const DatasetManifest& manifest);

/// JSONL: a header line followed by one record per line.
std::string serialize_manifest(const DatasetManifest& manifest);
DatasetManifest parse_manifest(std::string_view text);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Serialization of single values in the manifest field vocabulary; also used
// by the review API payloads.
std::string record_to_json(const ImageRecord& record);
ImageRecord record_from_json(std::string_view text);

// ---- ingestion ----

struct PublishedStats {
    int classes = 0;
    int images = 0;
};

/// Class/image counts of the pristine public releases.
std::optional<PublishedStats> published_stats(DatasetKind kind);

struct IngestResult {
    DatasetManifest manifest;
    std::vector<std::string> record_errors;  // unreadable images, skipped
};

/// Reads the published on-disk layout of a dataset (see README for the
/// exact files per kind). Missing annotation files throw IngestError naming
/// the file; unreadable images are collected in `record_errors`.
IngestResult load_source_dataset(const std::filesystem::path& root, DatasetKind kind,
                                 std::string name = {});

} // namespace fgseg
