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

#include "fgseg/config.hpp"

#include "fgseg/error.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <fstream>
#include <set>

namespace fgseg {

using nlohmann::json;

std::string sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("SHA-256 computation failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

namespace {

void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        throw ConfigError(std::string(section) + ": expected an object");
    }
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items()) {
        if (!ok.count(k)) {
            throw ConfigError(std::string(section) + ": unknown key '" + k + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* section, const char* key, T& out) {
    auto it = j.find(key);
    if (it == j.end()) {
        return;
    }
    try {
        out = it->get<T>();
    } catch (const json::exception&) {
        throw ConfigError(std::string(section) + "." + key + ": wrong type");
    }
}

const char* fill_name(CompositeConfig::Fill f) { return f == CompositeConfig::Fill::Opaque ? "opaque" : "transparent"; }
const char* format_name(CompositeConfig::FormatPolicy f) {
    return f == CompositeConfig::FormatPolicy::MirrorSource ? "mirror" : "png";
}

} // namespace

json to_json(const DetectorConfig& c) {
    return {{"backend_id", c.backend_id},
            {"model_variant", c.model_variant},
            {"vocabulary", c.vocabulary},
            {"confidence_threshold", c.confidence_threshold},
            {"ambiguity_margin", c.ambiguity_margin}};
}

json to_json(const SegmenterConfig& c) { return {{"backend_id", c.backend_id}, {"model_variant", c.model_variant}}; }

json to_json(const FeatureExtractorConfig& c) {
    return {{"backend_id", c.backend_id}, {"embedding_dim", c.embedding_dim}, {"seed", c.seed}};
}

json to_json(const CompositeConfig& c) {
    return {{"fill", fill_name(c.fill)},
            {"color", {c.color.r, c.color.g, c.color.b}},
            {"format", format_name(c.format)}};
}

json to_json(const QAThresholds& c) {
    return {{"max_mask_to_box_ratio", c.max_mask_to_box_ratio},
            {"min_mask_to_box_ratio", c.min_mask_to_box_ratio},
            {"max_border_contact_fraction", c.max_border_contact_fraction},
            {"max_components", c.max_components}};
}

json to_json(const TsneConfig& c) {
    return {{"perplexity", c.perplexity},
            {"iterations", c.iterations},
            {"learning_rate", c.learning_rate},
            {"seed", c.seed}};
}

DetectorConfig detector_config_from(const json& j) {
    check_keys(j, "detector",
               {"backend_id", "model_variant", "vocabulary", "confidence_threshold", "ambiguity_margin"});
    DetectorConfig c;
    read(j, "detector", "backend_id", c.backend_id);
    read(j, "detector", "model_variant", c.model_variant);
    read(j, "detector", "vocabulary", c.vocabulary);
    read(j, "detector", "confidence_threshold", c.confidence_threshold);
    read(j, "detector", "ambiguity_margin", c.ambiguity_margin);
    return c;
}

SegmenterConfig segmenter_config_from(const json& j) {
    check_keys(j, "segmenter", {"backend_id", "model_variant"});
    SegmenterConfig c;
    read(j, "segmenter", "backend_id", c.backend_id);
    read(j, "segmenter", "model_variant", c.model_variant);
    return c;
}

FeatureExtractorConfig extractor_config_from(const json& j) {
    check_keys(j, "extractor", {"backend_id", "embedding_dim", "seed"});
    FeatureExtractorConfig c;
    read(j, "extractor", "backend_id", c.backend_id);
    read(j, "extractor", "embedding_dim", c.embedding_dim);
    read(j, "extractor", "seed", c.seed);
    return c;
}

CompositeConfig composite_config_from(const json& j) {
    check_keys(j, "composite", {"fill", "color", "format"});
    CompositeConfig c;
    std::string fill = fill_name(c.fill);
    std::string format = format_name(c.format);
    std::vector<int> color{c.color.r, c.color.g, c.color.b};
    read(j, "composite", "fill", fill);
    read(j, "composite", "format", format);
    read(j, "composite", "color", color);
    if (fill == "opaque") {
        c.fill = CompositeConfig::Fill::Opaque;
    } else if (fill == "transparent") {
        c.fill = CompositeConfig::Fill::Transparent;
    } else {
        throw ConfigError("composite.fill must be 'opaque' or 'transparent', got '" + fill + "'");
    }
    if (format == "mirror") {
        c.format = CompositeConfig::FormatPolicy::MirrorSource;
    } else if (format == "png") {
        c.format = CompositeConfig::FormatPolicy::ForcePng;
    } else {
        throw ConfigError("composite.format must be 'mirror' or 'png', got '" + format + "'");
    }
    if (color.size() != 3) {
        throw ConfigError("composite.color needs 3 components");
    }
    for (int v : color) {
        if (v < 0 || v > 255) {
            throw ConfigError("composite.color components must lie in [0, 255]");
        }
    }
    c.color = {static_cast<std::uint8_t>(color[0]), static_cast<std::uint8_t>(color[1]),
               static_cast<std::uint8_t>(color[2])};
    return c;
}

QAThresholds thresholds_from(const json& j) {
    check_keys(j, "thresholds",
               {"max_mask_to_box_ratio", "min_mask_to_box_ratio", "max_border_contact_fraction", "max_components"});
    QAThresholds c;
    read(j, "thresholds", "max_mask_to_box_ratio", c.max_mask_to_box_ratio);
    read(j, "thresholds", "min_mask_to_box_ratio", c.min_mask_to_box_ratio);
    read(j, "thresholds", "max_border_contact_fraction", c.max_border_contact_fraction);
    read(j, "thresholds", "max_components", c.max_components);
    return c;
}

TsneConfig tsne_config_from(const json& j) {
    check_keys(j, "tsne", {"perplexity", "iterations", "learning_rate", "seed"});
    TsneConfig c;
    read(j, "tsne", "perplexity", c.perplexity);
    read(j, "tsne", "iterations", c.iterations);
    read(j, "tsne", "learning_rate", c.learning_rate);
    read(j, "tsne", "seed", c.seed);
    return c;
}

// ---- RunConfig ----

RunConfig::RunConfig() {
    tree_ = json::object();
    tree_["detector"] = to_json(DetectorConfig{});
    tree_["segmenter"] = to_json(SegmenterConfig{});
    tree_["extractor"] = to_json(FeatureExtractorConfig{});
    tree_["composite"] = to_json(CompositeConfig{});
    tree_["thresholds"] = to_json(QAThresholds{});
    tree_["tsne"] = to_json(TsneConfig{});
    tree_["subject_vocabulary"] = json::array();
    tree_["bench"] = {{"backbones", json::array({"toy-linear"})}, {"seed", 0}, {"hyperparams", json::object()}};
}

namespace {

void deep_merge(json& base, const json& patch, const std::string& where) {
    for (const auto& [k, v] : patch.items()) {
        const std::string path = where.empty() ? k : where + "." + k;
        auto it = base.find(k);
        if (it == base.end()) {
            // Only bench.hyperparams accepts free-form keys.
            if (where != "bench.hyperparams") {
                throw ConfigError("unknown config key '" + path + "'");
            }
            base[k] = v;
        } else if (it->is_object() && v.is_object()) {
            deep_merge(*it, v, path);
        } else {
            *it = v;
        }
    }
}

} // namespace

void RunConfig::merge(const json& patch) {
    if (!patch.is_object()) {
        throw ConfigError("config must be a JSON object");
    }
    json next = tree_;
    deep_merge(next, patch, "");
    tree_ = std::move(next);
    // Surface type errors now rather than at first use.
    (void)detector();
    (void)segmenter();
    (void)extractor();
    (void)composite();
    (void)thresholds();
    (void)tsne();
    (void)subject_vocabulary();
    (void)backbones();
    (void)bench_seed();
    (void)bench_hyperparams();
}

void RunConfig::merge_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read config file " + path.string());
    }
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    merge(j);
}

void RunConfig::set(std::string_view dotted, json value) {
    if (dotted.empty()) {
        throw ConfigError("empty config key");
    }
    json patch = std::move(value);
    std::string key(dotted);
    std::size_t dot;
    while ((dot = key.rfind('.')) != std::string::npos) {
        patch = json{{key.substr(dot + 1), std::move(patch)}};
        key.resize(dot);
    }
    merge(json{{key, std::move(patch)}});
}

void RunConfig::set_override(std::string_view assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0) {
        throw ConfigError("override must look like key=value, got '" + std::string(assignment) + "'");
    }
    const std::string raw(assignment.substr(eq + 1));
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) {
        value = raw;
    }
    set(assignment.substr(0, eq), std::move(value));
}

DetectorConfig RunConfig::detector() const { return detector_config_from(tree_.at("detector")); }
SegmenterConfig RunConfig::segmenter() const { return segmenter_config_from(tree_.at("segmenter")); }
FeatureExtractorConfig RunConfig::extractor() const { return extractor_config_from(tree_.at("extractor")); }
CompositeConfig RunConfig::composite() const { return composite_config_from(tree_.at("composite")); }
QAThresholds RunConfig::thresholds() const { return thresholds_from(tree_.at("thresholds")); }
TsneConfig RunConfig::tsne() const { return tsne_config_from(tree_.at("tsne")); }

std::vector<std::string> RunConfig::subject_vocabulary() const {
    std::vector<std::string> v;
    read(tree_, "config", "subject_vocabulary", v);
    return v;
}

std::vector<std::string> RunConfig::backbones() const {
    std::vector<std::string> v;
    read(tree_.at("bench"), "bench", "backbones", v);
    return v;
}

std::uint64_t RunConfig::bench_seed() const {
    std::uint64_t s = 0;
    read(tree_.at("bench"), "bench", "seed", s);
    return s;
}

std::map<std::string, std::string> RunConfig::bench_hyperparams() const {
    std::map<std::string, std::string> out;
    const json& hp = tree_.at("bench").at("hyperparams");
    if (!hp.is_object()) {
        throw ConfigError("bench.hyperparams must be an object");
    }
    for (const auto& [k, v] : hp.items()) {
        out[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return out;
}

std::string RunConfig::digest() const { return sha256_hex(tree_.dump()); }

} // namespace fgseg
