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
#include "fgseg/qa.hpp"
#include "fgseg/raster.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fgseg {

struct CompositeConfig {
    enum class Fill { Opaque, Transparent };
    enum class FormatPolicy { MirrorSource, ForcePng };

    Fill fill = Fill::Opaque;
    Rgb color{255, 255, 255};
    FormatPolicy format = FormatPolicy::MirrorSource;

    /// Transparent fill needs an alpha-capable output, i.e. ForcePng.
    void validate() const;

    /// Relative output path for a relative source path under this policy.
    std::string output_path(const std::string& source_path) const;
};

/// Keeps the source pixel where mask=1 and writes the fill (or alpha 0)
/// elsewhere. Output has the source dimensions; 4 channels for Transparent.
Image compose_foreground(const Image& image, const BinaryMask& mask, const CompositeConfig& config);
Image compose_foreground(const Image& image, const SegmentationMask& mask, const CompositeConfig& config);

struct SubjectChoice {
    std::optional<Detection> chosen;
    bool ambiguous = false;
};

/// Takes the top detection; ambiguous when the runner-up scores within
/// `ambiguity_margin` of it. Expects descending-score input.
SubjectChoice select_subject(std::span<const Detection> detections, const DetectorConfig& config);

struct PipelineConfig {
    DetectorConfig detector;
    SegmenterConfig segmenter;
    CompositeConfig composite;
    QAThresholds thresholds;
    // Labels accepted as the subject by QA; defaults to detector.vocabulary.
    std::vector<std::string> subject_vocabulary;
    std::filesystem::path source_root;
    std::filesystem::path out_root;

    const std::vector<std::string>& subject_labels() const {
        return subject_vocabulary.empty() ? detector.vocabulary : subject_vocabulary;
    }
    void validate() const;
    /// SHA-256 over every field that influences outputs (paths excluded).
    std::string digest() const;
};

struct PipelineStats {
    std::size_t processed = 0;
    std::size_t clean = 0;
    std::size_t flagged = 0;
    std::map<FlagKind, std::size_t> per_flag;
    double wall_seconds = 0.0;
    double images_per_second = 0.0;
};

/// Composites `mask` over the source image and writes it under out_root.
/// Returns the relative fg path.
std::string write_foreground(const ImageRecord& record, const Image& image, const SegmentationMask& mask,
                             const PipelineConfig& config);

/// detect -> select -> segment -> flag -> composite for one record. I/O
/// failures become a PROCESSING_ERROR flag rather than an exception.
ImageRecord process_record(const ImageRecord& record, Detector& detector, Segmenter& segmenter,
                           const PipelineConfig& config);

struct DatasetRun {
    DatasetManifest manifest;
    PipelineStats stats;
    std::vector<std::string> errors;  // record-level, "<record_id>: <message>"
};

/// Data-parallel over records with one backend pair per worker. The
/// manifest is identical for every `parallelism` >= 1.
DatasetRun process_dataset(const DatasetManifest& manifest, const PipelineConfig& config, int parallelism);

/// Plain loop; reference for process_dataset.
DatasetRun process_dataset_serial(const DatasetManifest& manifest, const PipelineConfig& config);

} // namespace fgseg
