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

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fgseg {

// ---- t-SNE ----

struct TsneConfig {
    double perplexity = 30.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    std::uint64_t seed = 0;

    /// Throws ConfigError on non-positive fields, N < 2, or
    /// perplexity >= (N - 1) / 3.
    void validate(std::size_t n_points) const;
};

struct TsneResult {
    Eigen::MatrixXd embedding;  // N x 2
    double initial_kl = 0.0;
    double final_kl = 0.0;
};

/// Exact t-SNE (dense P, O(N^2) per iteration). Inputs enter only through
/// pairwise differences, so translated inputs give identical output.
TsneResult tsne_run(const Eigen::MatrixXd& points, const TsneConfig& config);
Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& points, const TsneConfig& config);

// ---- cluster metrics ----

struct ClusterReport {
    double silhouette = 0.0;
    double mean_intra_class_distance = 0.0;   // mean over same-class pairs
    double mean_inter_centroid_distance = 0.0;  // mean over class-centroid pairs
    std::size_t points = 0;
    std::size_t classes = 0;

    friend bool operator==(const ClusterReport&, const ClusterReport&) = default;
};

/// Standard mean silhouette (Euclidean). A point whose a and b are both
/// zero scores 0. Needs >= 2 classes, each with >= 2 points.
ClusterReport cluster_metrics(const Eigen::MatrixXd& points, std::span<const int> labels);
std::string to_text(const ClusterReport& report);

enum class MetricSpace { Embedding, Projection };

struct CompareConfig {
    TsneConfig tsne;
    bool project = true;  // run t-SNE and emit scatter artifacts
    MetricSpace metric_space = MetricSpace::Embedding;
    std::filesystem::path artifact_dir;  // empty: no files written
};

struct Comparison {
    ClusterReport source;
    ClusterReport fg;
    Eigen::MatrixXd source_2d;
    Eigen::MatrixXd fg_2d;
};

/// Cluster reports for both sides plus, when projecting, t-SNE scatter
/// plots (scatter.png, side by side) and points_source.csv/points_fg.csv.
Comparison compare_distributions(const Eigen::MatrixXd& source, std::span<const int> source_labels,
                                 const Eigen::MatrixXd& fg, std::span<const int> fg_labels,
                                 const CompareConfig& config);

/// CSV x,y,label.
void write_points_csv(const Eigen::MatrixXd& points_2d, std::span<const int> labels,
                      const std::filesystem::path& path);

// ---- Grad-CAM ----

struct Tensor3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;  // channel-major

    Tensor3() = default;
    Tensor3(int c, int h, int w, double value = 0.0)
        : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, value) {}

    double& at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
    double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;
};

/// RGB image to a 3 x H x W tensor scaled to [0, 1].
Tensor3 image_to_tensor(const Image& image);

struct LayerPass {
    Tensor3 activations;
    Tensor3 gradients;  // d score / d activations
    double score = 0.0;
};

/// A classifier that exposes one layer's activations and the gradient of a
/// class score with respect to them.
class CamModel {
  public:
    virtual ~CamModel() = default;
    virtual std::vector<std::string> layers() const = 0;
    /// Throws ValidationError for unknown or non-spatial layers.
    virtual LayerPass forward_backward(const Tensor3& input, int target_class, const std::string& layer) const = 0;
    /// Target score with the layer's activations replaced by `activations`
    /// (the finite-difference oracle perturbs these).
    virtual double score_from_layer(const Tensor3& input, int target_class, const std::string& layer,
                                    const Tensor3& activations) const = 0;
};

/// Layer "act" is the first input channel; the score ignores it.
class ConstantScoreModel final : public CamModel {
  public:
    explicit ConstantScoreModel(double score = 1.0) : score_(score) {}
    std::vector<std::string> layers() const override { return {"act"}; }
    LayerPass forward_backward(const Tensor3& input, int target_class, const std::string& layer) const override;
    double score_from_layer(const Tensor3& input, int target_class, const std::string& layer,
                            const Tensor3& activations) const override;

  private:
    double score_;
};

/// Layer "act" is the first input channel; score = its spatial mean.
class MeanActivationModel final : public CamModel {
  public:
    std::vector<std::string> layers() const override { return {"act"}; }
    LayerPass forward_backward(const Tensor3& input, int target_class, const std::string& layer) const override;
    double score_from_layer(const Tensor3& input, int target_class, const std::string& layer,
                            const Tensor3& activations) const override;
};

/// conv3x3 -> ReLU -> conv3x3 -> ReLU -> global average pool -> linear,
/// zero padding, seeded Gaussian weights. Layers: "conv1", "conv2"
/// (post-ReLU maps) and "fc" (non-spatial, rejected).
class TinyConvNet final : public CamModel {
  public:
    TinyConvNet(int in_channels, int conv1_channels, int conv2_channels, int num_classes, std::uint64_t seed);

    std::vector<std::string> layers() const override { return {"conv1", "conv2", "fc"}; }
    LayerPass forward_backward(const Tensor3& input, int target_class, const std::string& layer) const override;
    double score_from_layer(const Tensor3& input, int target_class, const std::string& layer,
                            const Tensor3& activations) const override;
    int num_classes() const { return num_classes_; }

  private:
    Tensor3 conv(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b, int out_c) const;
    double head(const Tensor3& a2, int target_class) const;
    void check(const Tensor3& input, int target_class, const std::string& layer) const;

    int in_c_;
    int c1_;
    int c2_;
    int num_classes_;
    std::vector<double> w1_, b1_, w2_, b2_, fc_w_, fc_b_;
};

/// "toy-cnn" builds a TinyConvNet(3, 8, 8, num_classes, seed). Real backbone
/// ids raise BackendError.
std::unique_ptr<CamModel> make_cam_model(const std::string& id, int num_classes, std::uint64_t seed);

struct CamComputation {
    Tensor3 activations;
    Tensor3 gradients;
    std::vector<double> alpha;  // spatial mean of gradients per channel
    Eigen::MatrixXd heatmap;    // out_h x out_w, in [0, 1]
    bool degenerate = false;    // constant map: normalization skipped, heatmap zero
};

/// heatmap = minmax(upsample(ReLU(sum_k alpha_k A_k))), bilinear upsampling.
CamComputation cam_from_maps(const Tensor3& activations, const Tensor3& gradients, int out_height, int out_width);

CamComputation grad_cam(const CamModel& model, const Tensor3& input, int target_class, const std::string& layer);
CamComputation grad_cam(const CamModel& model, const Image& image, int target_class, const std::string& layer);

/// Heatmap blended over the image (jet colormap), written as PNG/JPEG.
void write_cam_overlay(const Image& image, const CamComputation& cam, const std::filesystem::path& path);

} // namespace fgseg
