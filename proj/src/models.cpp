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

#include "fgseg/models.hpp"

#include "fgseg/error.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

namespace fgseg {

namespace fs = std::filesystem;

void DetectorConfig::validate() const {
    if (vocabulary.empty()) {
        throw ConfigError("detector vocabulary is empty");
    }
    if (!(confidence_threshold > 0.0 && confidence_threshold < 1.0)) {
        throw ConfigError("confidence_threshold must lie in (0, 1)");
    }
    if (!(ambiguity_margin >= 0.0)) {
        throw ConfigError("ambiguity_margin must be >= 0");
    }
}

void SegmenterConfig::validate() const {
    if (backend_id.empty()) {
        throw ConfigError("segmenter backend_id is empty");
    }
}

void FeatureExtractorConfig::validate() const {
    if (embedding_dim <= 0) {
        throw ConfigError("embedding_dim must be positive");
    }
}

std::vector<std::string> default_vocabulary(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::Cub:
        return {"bird"};
    case DatasetKind::Cars:
        return {"car"};
    case DatasetKind::Aircraft:
        return {"airplane", "aircraft"};
    case DatasetKind::Generic:
        break;
    }
    return {"object"};
}

DetectorConfig reference_detector_config(DatasetKind kind) {
    DetectorConfig c;
    c.backend_id = "detic";
    c.model_variant = "Detic_LI21k_CLIP_SwinB";
    c.vocabulary = default_vocabulary(kind);
    return c;
}

SegmenterConfig reference_segmenter_config() { return {"sam", "ViT-L SAM"}; }

FeatureExtractorConfig reference_extractor_config() { return {"dinov2", 768, 0}; }

// ---- NVI wrappers ----

std::vector<Detection> Detector::detect(const Image& image, const DetectorConfig& config, const fs::path& source) {
    if (image.empty()) {
        throw ValidationError("detect: empty image");
    }
    config.validate();
    auto raw = raw_detect(image, config, source);
    std::vector<Detection> out;
    out.reserve(raw.size());
    for (auto& d : raw) {
        if (!(d.score >= config.confidence_threshold && d.score <= 1.0)) {
            continue;
        }
        if (std::find(config.vocabulary.begin(), config.vocabulary.end(), d.label) == config.vocabulary.end()) {
            continue;
        }
        const int x0 = std::max(0, d.box.x);
        const int y0 = std::max(0, d.box.y);
        const int x1 = std::min(image.width(), d.box.x + d.box.w);
        const int y1 = std::min(image.height(), d.box.y + d.box.h);
        if (x1 <= x0 || y1 <= y0) {
            continue;
        }
        d.box = {x0, y0, x1 - x0, y1 - y0};
        out.push_back(std::move(d));
    }
    std::stable_sort(out.begin(), out.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) {
            return a.score > b.score;
        }
        return a.box < b.box;
    });
    return out;
}

SegmentationMask Segmenter::segment(const Image& image, const BoundingBox& box, const SegmenterConfig& config) {
    config.validate();
    validate_box(box, image.width(), image.height());
    BinaryMask m = raw_segment(image, box, config);
    if (m.height() != image.height() || m.width() != image.width()) {
        throw BackendError("segmenter returned a mask of the wrong size");
    }
    if (m.area() == 0) {
        throw SegmentationFailure("segmenter returned an empty mask");
    }
    return rle_encode(m);
}

Eigen::MatrixXd FeatureExtractor::extract(std::span<const Image> images, const FeatureExtractorConfig& config) {
    config.validate();
    if (images.empty()) {
        throw ValidationError("extract_features: empty batch");
    }
    Eigen::MatrixXd out = raw_extract(images, config);
    if (out.rows() != static_cast<Eigen::Index>(images.size()) || out.cols() != config.embedding_dim) {
        throw BackendError("feature extractor returned the wrong shape");
    }
    return out;
}

// ---- stubs ----

namespace {

std::optional<BoundingBox> marker_bounds(const Image& image) {
    int x0 = image.width(), y0 = image.height(), x1 = -1, y1 = -1;
    for (int r = 0; r < image.height(); ++r) {
        for (int c = 0; c < image.width(); ++c) {
            if (image.pixel(r, c)[0] == kMarkerRed) {
                x0 = std::min(x0, c);
                y0 = std::min(y0, r);
                x1 = std::max(x1, c);
                y1 = std::max(y1, r);
            }
        }
    }
    if (x1 < 0) {
        return std::nullopt;
    }
    return BoundingBox{x0, y0, x1 - x0 + 1, y1 - y0 + 1};
}

} // namespace

std::vector<Detection> StubDetector::raw_detect(const Image& image, const DetectorConfig& config,
                                                const fs::path& source) {
    if (!source.empty()) {
        fs::path sidecar = source;
        sidecar += ".det.json";
        std::ifstream in(sidecar);
        if (in) {
            std::vector<Detection> out;
            try {
                const auto j = nlohmann::json::parse(in);
                for (const auto& d : j) {
                    const auto& b = d.at("box");
                    out.push_back({{b.at(0).get<int>(), b.at(1).get<int>(), b.at(2).get<int>(), b.at(3).get<int>()},
                                   d.at("score").get<double>(),
                                   d.at("label").get<std::string>(),
                                   false});
                }
            } catch (const nlohmann::json::exception& e) {
                throw BackendError("bad detection sidecar " + sidecar.string() + ": " + e.what());
            }
            return out;
        }
    }
    if (auto box = marker_bounds(image)) {
        return {{*box, 1.0, config.vocabulary.front(), false}};
    }
    return {};
}

BinaryMask StubSegmenter::raw_segment(const Image& image, const BoundingBox& box, const SegmenterConfig& config) {
    BinaryMask m(image.height(), image.width());
    const auto& mode = config.model_variant;
    if (mode == "box" || mode.empty()) {
        for (int r = box.y; r < box.y + box.h; ++r) {
            for (int c = box.x; c < box.x + box.w; ++c) {
                m.at(r, c) = 1;
            }
        }
    } else if (mode == "shrink") {
        for (int r = box.y + 1; r < box.y + box.h - 1; ++r) {
            for (int c = box.x + 1; c < box.x + box.w - 1; ++c) {
                m.at(r, c) = 1;
            }
        }
    } else if (mode == "key") {
        BinaryMask marker(image.height(), image.width());
        for (int r = 0; r < image.height(); ++r) {
            for (int c = 0; c < image.width(); ++c) {
                marker.at(r, c) = image.pixel(r, c)[0] == kMarkerRed ? 1 : 0;
            }
        }
        const auto comps = label_components(marker);
        std::vector<char> keep(static_cast<std::size_t>(comps.count) + 1, 0);
        for (int r = box.y; r < box.y + box.h; ++r) {
            for (int c = box.x; c < box.x + box.w; ++c) {
                keep[static_cast<std::size_t>(comps.labels[static_cast<std::size_t>(r) * image.width() + c])] = 1;
            }
        }
        keep[0] = 0;
        for (std::size_t i = 0; i < comps.labels.size(); ++i) {
            m.data()[i] = keep[static_cast<std::size_t>(comps.labels[i])] ? 1 : 0;
        }
    } else {
        throw ConfigError("unknown stub-segmenter variant: " + mode);
    }
    return m;
}

Eigen::MatrixXd StubExtractor::raw_extract(std::span<const Image> images, const FeatureExtractorConfig& config) {
    constexpr int kGrid = 8;
    constexpr int kInputs = kGrid * kGrid * 3;
    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(kInputs)));
    Eigen::MatrixXd projection(config.embedding_dim, kInputs);
    for (Eigen::Index j = 0; j < projection.cols(); ++j) {
        for (Eigen::Index i = 0; i < projection.rows(); ++i) {
            projection(i, j) = normal(rng);
        }
    }
    Eigen::MatrixXd out(static_cast<Eigen::Index>(images.size()), config.embedding_dim);
    for (std::size_t n = 0; n < images.size(); ++n) {
        const Image& img = images[n];
        if (img.empty()) {
            throw ValidationError("extract_features: empty image in batch");
        }
        Eigen::VectorXd sums = Eigen::VectorXd::Zero(kInputs);
        Eigen::VectorXd counts = Eigen::VectorXd::Zero(kGrid * kGrid);
        for (int r = 0; r < img.height(); ++r) {
            const int gr = r * kGrid / img.height();
            for (int c = 0; c < img.width(); ++c) {
                const int cell = gr * kGrid + c * kGrid / img.width();
                const auto* p = img.pixel(r, c);
                for (int ch = 0; ch < 3; ++ch) {
                    sums(cell * 3 + ch) += p[ch] / 255.0;
                }
                counts(cell) += 1.0;
            }
        }
        for (int cell = 0; cell < kGrid * kGrid; ++cell) {
            if (counts(cell) > 0) {
                sums.segment(cell * 3, 3) /= counts(cell);
            }
        }
        out.row(static_cast<Eigen::Index>(n)) = (projection * sums).transpose();
    }
    return out;
}

// ---- registry ----

namespace {

struct Registry {
    std::mutex mu;
    std::map<std::string, DetectorFactory> detectors;
    std::map<std::string, SegmenterFactory> segmenters;
    std::map<std::string, ExtractorFactory> extractors;

    Registry() {
        detectors["stub-detector"] = [] { return std::make_unique<StubDetector>(); };
        segmenters["stub-segmenter"] = [] { return std::make_unique<StubSegmenter>(); };
        extractors["stub-extractor"] = [] { return std::make_unique<StubExtractor>(); };
    }
};

Registry& registry() {
    static Registry r;
    return r;
}

const std::map<std::string, std::string>& known_real_backends() {
    static const std::map<std::string, std::string> known = {
        {"detic", "FGSEG_DETIC_CHECKPOINT"},
        {"grounding-dino", "FGSEG_GROUNDING_DINO_CHECKPOINT"},
        {"sam", "FGSEG_SAM_CHECKPOINT"},
        {"dinov2", "FGSEG_DINOV2_CHECKPOINT"},
    };
    return known;
}

[[noreturn]] void unavailable(const std::string& id, const char* role) {
    const auto& known = known_real_backends();
    if (auto it = known.find(id); it != known.end()) {
        throw BackendError(std::string(role) + " backend '" + id +
                           "' is unavailable: no plug-in registered (checkpoint via " + it->second + ")");
    }
    throw BackendError(std::string("unknown ") + role + " backend '" + id + "'");
}

template <typename Map>
auto make_from(Map& map, const std::string& id, const char* role) {
    std::lock_guard lock(registry().mu);
    auto it = map.find(id);
    if (it == map.end()) {
        unavailable(id, role);
    }
    return it->second();
}

} // namespace

void register_detector(const std::string& id, DetectorFactory f) {
    std::lock_guard lock(registry().mu);
    registry().detectors[id] = std::move(f);
}

void register_segmenter(const std::string& id, SegmenterFactory f) {
    std::lock_guard lock(registry().mu);
    registry().segmenters[id] = std::move(f);
}

void register_extractor(const std::string& id, ExtractorFactory f) {
    std::lock_guard lock(registry().mu);
    registry().extractors[id] = std::move(f);
}

std::unique_ptr<Detector> make_detector(const std::string& id) {
    return make_from(registry().detectors, id, "detector");
}

std::unique_ptr<Segmenter> make_segmenter(const std::string& id) {
    return make_from(registry().segmenters, id, "segmenter");
}

std::unique_ptr<FeatureExtractor> make_extractor(const std::string& id) {
    return make_from(registry().extractors, id, "feature extractor");
}

bool backend_available(const std::string& id) {
    auto& r = registry();
    std::lock_guard lock(r.mu);
    return r.detectors.contains(id) || r.segmenters.contains(id) || r.extractors.contains(id);
}

} // namespace fgseg
