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

#include "fgseg/analyze.hpp"
#include "fgseg/bench.hpp"
#include "fgseg/models.hpp"
#include "fgseg/pipeline.hpp"

#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>
#include <string_view>
#include <vector>

namespace fgseg {

std::string sha256_hex(std::string_view data);

nlohmann::json to_json(const DetectorConfig& c);
nlohmann::json to_json(const SegmenterConfig& c);
nlohmann::json to_json(const FeatureExtractorConfig& c);
nlohmann::json to_json(const CompositeConfig& c);
nlohmann::json to_json(const QAThresholds& c);
nlohmann::json to_json(const TsneConfig& c);

DetectorConfig detector_config_from(const nlohmann::json& j);
SegmenterConfig segmenter_config_from(const nlohmann::json& j);
FeatureExtractorConfig extractor_config_from(const nlohmann::json& j);
CompositeConfig composite_config_from(const nlohmann::json& j);
QAThresholds thresholds_from(const nlohmann::json& j);
TsneConfig tsne_config_from(const nlohmann::json& j);

/// Every module configuration in one serializable tree. Precedence when
/// building one: explicit overrides > config file > defaults.
class RunConfig {
  public:
    RunConfig();

    static RunConfig defaults() { return RunConfig(); }

    /// Deep-merges a JSON config file over the current values.
    void merge_file(const std::filesystem::path& path);
    void merge(const nlohmann::json& patch);
    /// `dotted.key=value`; value is parsed as JSON when possible, else taken
    /// as a string.
    void set_override(std::string_view assignment);
    void set(std::string_view dotted_key, nlohmann::json value);

    const nlohmann::json& tree() const { return tree_; }

    DetectorConfig detector() const;
    SegmenterConfig segmenter() const;
    FeatureExtractorConfig extractor() const;
    CompositeConfig composite() const;
    QAThresholds thresholds() const;
    TsneConfig tsne() const;
    std::vector<std::string> subject_vocabulary() const;
    std::vector<std::string> backbones() const;
    std::uint64_t bench_seed() const;
    std::map<std::string, std::string> bench_hyperparams() const;

    /// SHA-256 of the canonical (sorted-key, compact) JSON tree.
    std::string digest() const;

  private:
    nlohmann::json tree_;
};

} // namespace fgseg
