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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fgseg {

struct ExperimentSpec {
    std::string train_manifest;
    std::string test_manifest;
    std::string backbone_id;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> hyperparams;

    /// SHA-256 of the canonical JSON of every field.
    std::string digest() const;

    friend bool operator==(const ExperimentSpec&, const ExperimentSpec&) = default;
};

struct ExperimentResult {
    ExperimentSpec spec;
    double top1_accuracy = 0.0;  // percent
    std::map<std::string, double> per_class_accuracy;
    std::size_t n_test = 0;
};

/// Four cells per backbone in the order source->source, source->fg,
/// fg->fg, fg->source. The list is row-major over those cells, i.e. all
/// backbones for a row before the next row.
std::vector<ExperimentSpec> make_cross_protocol(const std::string& source, const std::string& fg,
                                                const std::vector<std::string>& backbones, std::uint64_t seed);

/// Top-1 accuracy in percent.
double evaluate_accuracy(std::span<const int> predictions, std::span<const int> labels);

/// A labelled feature split ready for a trainer.
struct LabelledFeatures {
    Eigen::MatrixXd features;  // N x D
    std::vector<int> labels;
};

/// Resolves a manifest name and split to features and labels.
class FeatureSource {
  public:
    virtual ~FeatureSource() = default;
    virtual std::vector<std::string> classes(const std::string& manifest) = 0;
    virtual LabelledFeatures load(const std::string& manifest, Split split) = 0;
};

/// Pre-computed features keyed by manifest name.
class InMemoryFeatureSource final : public FeatureSource {
  public:
    void add(const std::string& manifest, std::vector<std::string> classes, LabelledFeatures train,
             LabelledFeatures test);
    std::vector<std::string> classes(const std::string& manifest) override;
    LabelledFeatures load(const std::string& manifest, Split split) override;

  private:
    struct Entry {
        std::vector<std::string> classes;
        LabelledFeatures train;
        LabelledFeatures test;
    };
    std::map<std::string, Entry> entries_;
};

/// Embeds manifest images with a frozen extractor. Foreground manifests
/// (non-empty fg_root) read fg images and skip records without fg_path.
class ManifestFeatureSource final : public FeatureSource {
  public:
    ManifestFeatureSource(std::vector<DatasetManifest> manifests, FeatureExtractorConfig config);
    std::vector<std::string> classes(const std::string& manifest) override;
    LabelledFeatures load(const std::string& manifest, Split split) override;

  private:
    const DatasetManifest& get(const std::string& name) const;

    std::vector<DatasetManifest> manifests_;
    FeatureExtractorConfig config_;
    std::unique_ptr<FeatureExtractor> extractor_;
};

/// Trains on one split and predicts class ids for another.
class Trainer {
  public:
    virtual ~Trainer() = default;
    virtual std::vector<int> fit_predict(const LabelledFeatures& train, const Eigen::MatrixXd& test,
                                         int num_classes, std::uint64_t seed,
                                         const std::map<std::string, std::string>& hyperparams) = 0;
};

/// Multinomial logistic regression on standardized features, full-batch
/// gradient descent. Hyperparameters: lr (0.5), epochs (300), l2 (1e-3).
class ToyLinearTrainer final : public Trainer {
  public:
    std::vector<int> fit_predict(const LabelledFeatures& train, const Eigen::MatrixXd& test, int num_classes,
                                 std::uint64_t seed, const std::map<std::string, std::string>& hyperparams) override;
};

/// "toy-linear" is built in; "vit-b16", "resnet50", "swinv2-b" and
/// "convnext-b" need a registered plug-in. Throws BackendError otherwise.
std::unique_ptr<Trainer> make_trainer(const std::string& backbone_id);
void register_trainer(const std::string& backbone_id, std::function<std::unique_ptr<Trainer>()> factory);

/// Append-only results CSV (train,test,backbone,seed,n_test,top1) with a
/// digest index and per-class accuracies beside it.
class ResultsStore {
  public:
    explicit ResultsStore(std::filesystem::path dir);

    std::optional<ExperimentResult> find(const ExperimentSpec& spec) const;
    void put(const ExperimentResult& result);
    std::vector<ExperimentResult> all() const;
    std::filesystem::path csv_path() const { return dir_ / "results.csv"; }

  private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
};

/// Returns the stored result when the spec digest is already present.
ExperimentResult run_experiment(const ExperimentSpec& spec, Trainer& trainer, FeatureSource& data,
                                ResultsStore* store = nullptr);

/// Runs specs in parallel (each spec single-threaded), preserving order.
std::vector<ExperimentResult> run_protocol(const std::vector<ExperimentSpec>& specs, FeatureSource& data,
                                           ResultsStore* store, int workers);

struct DatasetPair {
    std::string source;
    std::string fg;
};

struct Improvement {
    std::string dataset;
    std::string backbone;
    double delta = 0.0;
};

struct ClaimSummary {
    double avg_source_to_fg_drop = 0.0;
    double avg_fg_to_source_drop = 0.0;
    std::vector<Improvement> fg_training_improvements;
    bool all_improvements_positive = false;
    std::size_t cells = 0;
};

/// Means over every (dataset, backbone) block. Repeated seeds of one cell
/// are averaged first. Throws ValidationError listing missing cells.
ClaimSummary summarize_claims(const std::vector<ExperimentResult>& results, const std::vector<DatasetPair>& pairs);

/// Pairs "<X>" with "<X>_FG" among the manifest names in `results`.
std::vector<DatasetPair> infer_pairs(const std::vector<ExperimentResult>& results);

// ---- results CSV and report ----

std::vector<ExperimentResult> parse_results_csv(std::string_view text);
std::vector<ExperimentResult> load_results_csv(const std::filesystem::path& path);

/// Published cross-validation table shipped with the repository, in the
/// results CSV format (n_test is 0: the table reports only percentages).
std::vector<ExperimentResult> reference_table();
inline constexpr double kPublishedSourceToFgDropClaim = 6.0;
inline constexpr double kPublishedFgToSourceDropClaim = 2.5;

struct Report {
    std::string table_text;
    std::string table_csv;
    std::string claims_text;
};

/// Table with one row per (train, test) cell in protocol order and one
/// column per backbone.
Report make_report(const std::vector<ExperimentResult>& results, const std::vector<DatasetPair>& pairs,
                   const std::vector<std::string>& backbones);

/// Grouped bar chart per dataset pair (PNG).
void write_bar_chart(const std::vector<ExperimentResult>& results, const DatasetPair& pair,
                     const std::vector<std::string>& backbones, const std::filesystem::path& path);

} // namespace fgseg
