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
#include "fgseg/raster.hpp"

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fgseg {

struct DetectorConfig {
    std::string backend_id = "stub-detector";
    std::string model_variant;
    std::vector<std::string> vocabulary;
    double confidence_threshold = 0.3;
    double ambiguity_margin = 0.1;

    void validate() const;
};

struct SegmenterConfig {
    std::string backend_id = "stub-segmenter";
    // For the stub: "box" (box interior), "shrink" (box inset by one pixel on
    // every side) or "key" (see StubSegmenter).
    std::string model_variant = "box";

    void validate() const;
};

struct FeatureExtractorConfig {
    std::string backend_id = "stub-extractor";
    int embedding_dim = 64;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Detector queries that pick out the subject category of each dataset.
std::vector<std::string> default_vocabulary(DatasetKind kind);

DetectorConfig reference_detector_config(DatasetKind kind);
SegmenterConfig reference_segmenter_config();
FeatureExtractorConfig reference_extractor_config();

/// Open-vocabulary detector. `detect` validates the config, then clips,
/// thresholds, filters to the vocabulary and sorts the backend output
/// (descending score, ties by box lexicographically).
class Detector {
  public:
    virtual ~Detector() = default;

    std::vector<Detection> detect(const Image& image, const DetectorConfig& config,
                                  const std::filesystem::path& source = {});

  protected:
    virtual std::vector<Detection> raw_detect(const Image& image, const DetectorConfig& config,
                                              const std::filesystem::path& source) = 0;
};

/// Box-prompted segmenter. `segment` checks the box against the image and
/// throws SegmentationFailure when the backend returns an empty mask.
class Segmenter {
  public:
    virtual ~Segmenter() = default;

    SegmentationMask segment(const Image& image, const BoundingBox& box, const SegmenterConfig& config);

  protected:
    virtual BinaryMask raw_segment(const Image& image, const BoundingBox& box, const SegmenterConfig& config) = 0;
};

/// Frozen feature extractor; returns N x embedding_dim.
class FeatureExtractor {
  public:
    virtual ~FeatureExtractor() = default;

    Eigen::MatrixXd extract(std::span<const Image> images, const FeatureExtractorConfig& config);

  protected:
    virtual Eigen::MatrixXd raw_extract(std::span<const Image> images, const FeatureExtractorConfig& config) = 0;
};

// ---- stubs ----

/// Reads ground-truth detections from a sidecar `<source>.det.json`
/// (`[{"box":[x,y,w,h],"score":s,"label":l}, ...]`). Without a sidecar it
/// reports the bounding rectangle of marker pixels (red channel == 255) as
/// one detection of the first vocabulary entry with score 1.0.
class StubDetector final : public Detector {
  protected:
    std::vector<Detection> raw_detect(const Image& image, const DetectorConfig& config,
                                      const std::filesystem::path& source) override;
};

/// Analytic segmenter. In "key" mode the mask is every 4-connected region of
/// marker pixels (red channel == 255) that intersects the box prompt.
class StubSegmenter final : public Segmenter {
  protected:
    BinaryMask raw_segment(const Image& image, const BoundingBox& box, const SegmenterConfig& config) override;
};

/// Seeded random projection of an 8x8 block-averaged RGB thumbnail.
class StubExtractor final : public FeatureExtractor {
  protected:
    Eigen::MatrixXd raw_extract(std::span<const Image> images, const FeatureExtractorConfig& config) override;
};

inline constexpr std::uint8_t kMarkerRed = 255;

// ---- registry ----

using DetectorFactory = std::function<std::unique_ptr<Detector>()>;
using SegmenterFactory = std::function<std::unique_ptr<Segmenter>()>;
using ExtractorFactory = std::function<std::unique_ptr<FeatureExtractor>()>;

/// Plug-ins call these to provide real backends ("detic", "grounding-dino",
/// "sam", "dinov2"). Re-registering an id replaces the factory.
void register_detector(const std::string& backend_id, DetectorFactory factory);
void register_segmenter(const std::string& backend_id, SegmenterFactory factory);
void register_extractor(const std::string& backend_id, ExtractorFactory factory);

/// Throw BackendError for unknown ids and for known real backends that have
/// no plug-in loaded (the message names the checkpoint variable).
std::unique_ptr<Detector> make_detector(const std::string& backend_id);
std::unique_ptr<Segmenter> make_segmenter(const std::string& backend_id);
std::unique_ptr<FeatureExtractor> make_extractor(const std::string& backend_id);

bool backend_available(const std::string& backend_id);

} // namespace fgseg
