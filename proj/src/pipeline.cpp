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

#include "fgseg/pipeline.hpp"

#include "fgseg/config.hpp"
#include "fgseg/error.hpp"
#include "fgseg/image_io.hpp"
#include "fgseg/kernels.hpp"

#include <chrono>
#include <omp.h>

namespace fgseg {

namespace fs = std::filesystem;

void CompositeConfig::validate() const {
    if (fill == Fill::Transparent && format != FormatPolicy::ForcePng) {
        throw ConfigError("transparent fill requires the force-png output policy");
    }
}

std::string CompositeConfig::output_path(const std::string& source_path) const {
    if (format == FormatPolicy::MirrorSource) {
        return source_path;
    }
    return fs::path(source_path).replace_extension(".png").generic_string();
}

Image compose_foreground(const Image& image, const BinaryMask& mask, const CompositeConfig& config) {
    config.validate();
    if (image.channels() != 3) {
        throw ValidationError("compose_foreground expects an RGB image");
    }
    if (mask.height() != image.height() || mask.width() != image.width()) {
        throw ValidationError("mask " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                              " does not match image " + std::to_string(image.width()) + "x" +
                              std::to_string(image.height()));
    }
    const bool alpha = config.fill == CompositeConfig::Fill::Transparent;
    Image out(image.width(), image.height(), alpha ? 4 : 3);
    kernels::CompositeArgs args;
    args.src = image.data();
    args.mask = mask.data();
    args.out = out.data();
    args.out_channels = out.channels();
    args.fill = alpha ? std::array<std::uint8_t, 4>{0, 0, 0, 0}
                      : std::array<std::uint8_t, 4>{config.color.r, config.color.g, config.color.b, 255};
    kernels::omp::composite(args);
    return out;
}

Image compose_foreground(const Image& image, const SegmentationMask& mask, const CompositeConfig& config) {
    return compose_foreground(image, rle_decode(mask), config);
}

SubjectChoice select_subject(std::span<const Detection> detections, const DetectorConfig& config) {
    SubjectChoice out;
    if (detections.empty()) {
        return out;
    }
    out.chosen = detections.front();
    if (detections.size() > 1) {
        out.ambiguous = detections[1].score >= detections.front().score - config.ambiguity_margin;
    }
    return out;
}

void PipelineConfig::validate() const {
    detector.validate();
    segmenter.validate();
    composite.validate();
    thresholds.validate();
}

std::string PipelineConfig::digest() const {
    nlohmann::json j;
    j["detector"] = to_json(detector);
    j["segmenter"] = to_json(segmenter);
    j["composite"] = to_json(composite);
    j["thresholds"] = to_json(thresholds);
    j["subject_vocabulary"] = subject_labels();
    return sha256_hex(j.dump());
}

std::string write_foreground(const ImageRecord& record, const Image& image, const SegmentationMask& mask,
                             const PipelineConfig& config) {
    const std::string rel = config.composite.output_path(record.source_path);
    write_image(config.out_root / rel, compose_foreground(image, mask, config.composite));
    return rel;
}

ImageRecord process_record(const ImageRecord& record, Detector& detector, Segmenter& segmenter,
                           const PipelineConfig& config) {
    ImageRecord out = record;
    out.fg_path.reset();
    out.detection.reset();
    out.mask.reset();
    out.flags.clear();
    out.review = ReviewState::Pending;

    const fs::path source = config.source_root / record.source_path;
    try {
        const Image image = read_image(source);
        const auto detections = detector.detect(image, config.detector, source);
        const auto choice = select_subject(detections, config.detector);
        out.detection = choice.chosen;
        if (choice.chosen) {
            try {
                out.mask = segmenter.segment(image, choice.chosen->box, config.segmenter);
            } catch (const SegmentationFailure&) {
            }
        }
        const auto& vocab = config.subject_labels();
        out.flags = auto_flag(out.detection, out.mask, config.thresholds, FlagContext{vocab, choice.ambiguous});
        if (out.flags.empty()) {
            out.fg_path = write_foreground(out, image, *out.mask, config);
        }
    } catch (const std::exception& e) {
        out.fg_path.reset();
        out.flags = {{FlagKind::ProcessingError, e.what(), std::nullopt}};
    }
    return out;
}

namespace {

DatasetRun finish(const DatasetManifest& in, const PipelineConfig& config, std::vector<ImageRecord> records,
                  double seconds) {
    DatasetRun run;
    run.manifest.name = in.name + "_FG";
    run.manifest.kind = in.kind;
    run.manifest.classes = in.classes;
    run.manifest.provenance.source = in.name;
    run.manifest.provenance.config_digest = config.digest();
    run.manifest.provenance.split_policy = in.provenance.split_policy;
    run.manifest.root = in.root;
    run.manifest.fg_root = fs::absolute(config.out_root).lexically_normal().string();
    run.manifest.records = std::move(records);

    auto& s = run.stats;
    s.processed = run.manifest.records.size();
    for (const auto& r : run.manifest.records) {
        if (r.flags.empty()) {
            ++s.clean;
            continue;
        }
        ++s.flagged;
        for (const auto& f : r.flags) {
            ++s.per_flag[f.kind];
            if (f.kind == FlagKind::ProcessingError) {
                run.errors.push_back(r.record_id + ": " + f.detail);
            }
        }
    }
    s.wall_seconds = seconds;
    s.images_per_second = seconds > 0.0 ? static_cast<double>(s.processed) / seconds : 0.0;
    return run;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

DatasetRun process_dataset(const DatasetManifest& manifest, const PipelineConfig& config, int parallelism) {
    if (parallelism < 1) {
        throw ValidationError("parallelism must be >= 1");
    }
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    // Backends are created up front: one pair per worker, and factory errors
    // must not be thrown inside the parallel region.
    std::vector<std::unique_ptr<Detector>> detectors;
    std::vector<std::unique_ptr<Segmenter>> segmenters;
    for (int w = 0; w < parallelism; ++w) {
        detectors.push_back(make_detector(config.detector.backend_id));
        segmenters.push_back(make_segmenter(config.segmenter.backend_id));
    }
    std::vector<ImageRecord> records(manifest.records.size());
    const auto n = static_cast<std::ptrdiff_t>(records.size());
#pragma omp parallel num_threads(parallelism)
    {
        const int w = omp_get_thread_num();
#pragma omp for schedule(dynamic, 1)
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            records[i] = process_record(manifest.records[i], *detectors[w], *segmenters[w], config);
        }
    }
    return finish(manifest, config, std::move(records), seconds_since(t0));
}

DatasetRun process_dataset_serial(const DatasetManifest& manifest, const PipelineConfig& config) {
    config.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto detector = make_detector(config.detector.backend_id);
    auto segmenter = make_segmenter(config.segmenter.backend_id);
    std::vector<ImageRecord> records;
    records.reserve(manifest.records.size());
    for (const auto& r : manifest.records) {
        records.push_back(process_record(r, *detector, *segmenter, config));
    }
    return finish(manifest, config, std::move(records), seconds_since(t0));
}

} // namespace fgseg
