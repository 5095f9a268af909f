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

// Seeded fixture generators for tests, benchmarks and the `synth` command.

#include "fgseg/bench.hpp"
#include "fgseg/manifest.hpp"
#include "fgseg/pipeline.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace fgseg {

struct CorpusOptions {
    int n_clean = 50;
    int failures_per_kind = 2;  // for each of the five review flag kinds
    int width = 96;
    int height = 72;
    double test_fraction = 0.3;
    std::uint64_t seed = 0;
};

/// A generic-layout dataset (train/<class>/*.png, test/<class>/*.png) of
/// noisy backgrounds with red-keyed subjects plus detection sidecars.
/// Background pixels never reach the marker red value, so the stub
/// detector and the "key" stub segmenter recover subjects exactly.
struct SynthCorpus {
    DatasetManifest manifest;
    // record_id -> the flag the pipeline must raise (nullopt: clean image).
    std::map<std::string, std::optional<FlagKind>> expected;
};

SynthCorpus make_corpus(const std::filesystem::path& dir, const CorpusOptions& options);

/// Pipeline settings the corpus is built for: stub detector with
/// vocabulary {bird, branch}, subject vocabulary {bird}, "key" segmenter.
PipelineConfig corpus_pipeline_config(const std::filesystem::path& source_root,
                                      const std::filesystem::path& out_root);

struct FeatureFixtureOptions {
    int classes = 4;
    int signal_dims = 4;
    int noise_dims = 28;
    int train_per_class = 10;
    int test_per_class = 25;
    double class_separation = 1.5;  // sd of class means in signal dims
    double noise_sd = 3.0;          // sd of the background dims
    std::uint64_t seed = 0;
};

/// Embeddings with class-dependent signal dims and shared high-variance
/// noise dims standing in for background. The fg variant is the same
/// samples with the noise dims zeroed.
struct FeatureFixture {
    std::vector<std::string> classes;
    LabelledFeatures source_train;
    LabelledFeatures source_test;
    LabelledFeatures fg_train;
    LabelledFeatures fg_test;
};

FeatureFixture make_feature_fixture(const FeatureFixtureOptions& options);

} // namespace fgseg
