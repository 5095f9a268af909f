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

#include "fgseg/analyze.hpp"
#include "fgseg/error.hpp"
#include "fgseg/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>

namespace fgseg {
namespace {

// ---- cluster metrics ----

TEST(Silhouette, TwoTrianglesMatchHandComputation) {
    Eigen::MatrixXd p(6, 2);
    p << 0, 0, 1, 0, 0, 1, 3, 0, 4, 0, 3, 1;
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    const double r2 = std::sqrt(2.0), r5 = std::sqrt(5.0), r10 = std::sqrt(10.0), r17 = std::sqrt(17.0);
    // a(i): mean distance within the triangle; b(i): mean distance to the other one.
    const double a[6] = {1.0, (1 + r2) / 2, (1 + r2) / 2, 1.0, (1 + r2) / 2, (1 + r2) / 2};
    const double b[6] = {(7 + r10) / 3, (5 + r5) / 3,      (3 + r10 + r17) / 3,
                         (5 + r10) / 3, (7 + r17) / 3,     (3 + r5 + r10) / 3};
    double expected = 0.0;
    for (int i = 0; i < 6; ++i) expected += (b[i] - a[i]) / std::max(a[i], b[i]);
    expected /= 6.0;
    const auto rep = cluster_metrics(p, labels);
    EXPECT_NEAR(rep.silhouette, expected, 1e-9);
    EXPECT_NEAR(rep.mean_intra_class_distance, (2 + r2) / 3, 1e-12);
    EXPECT_NEAR(rep.mean_inter_centroid_distance, 3.0, 1e-12);
    EXPECT_EQ(rep.points, 6u);
    EXPECT_EQ(rep.classes, 2u);
}

TEST(Silhouette, PointMassesScoreOne) {
    Eigen::MatrixXd p(6, 3);
    p.setZero();
    p.bottomRows(3).col(0).setConstant(10.0);
    const std::vector<int> labels{0, 0, 0, 1, 1, 1};
    const auto rep = cluster_metrics(p, labels);
    EXPECT_GE(rep.silhouette, 0.99);
    EXPECT_EQ(rep.mean_intra_class_distance, 0.0);
    EXPECT_NEAR(rep.mean_inter_centroid_distance, 10.0, 1e-12);
}

Eigen::MatrixXd blobs(std::mt19937_64& rng, int per_blob, int dims, double separation, std::vector<int>& labels) {
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(2 * per_blob, dims);
    labels.clear();
    for (int i = 0; i < 2 * per_blob; ++i) {
        const int c = i < per_blob ? 0 : 1;
        for (int k = 0; k < dims; ++k) x(i, k) = normal(rng) + (k == 0 ? separation * c : 0.0);
        labels.push_back(c);
    }
    return x;
}

TEST(Silhouette, PermutedLabelsScoreNearZero) {
    std::mt19937_64 rng(71);
    std::vector<int> labels;
    const Eigen::MatrixXd x = blobs(rng, 50, 4, 8.0, labels);
    EXPECT_GT(cluster_metrics(x, labels).silhouette, 0.5);
    for (int trial = 0; trial < 10; ++trial) {
        std::shuffle(labels.begin(), labels.end(), rng);
        EXPECT_LT(std::abs(cluster_metrics(x, labels).silhouette), 0.1);
    }
}

TEST(Silhouette, RangeAndRigidMotionInvariance) {
    std::mt19937_64 rng(72);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 30; ++trial) {
        const int n = 6 + static_cast<int>(rng() % 30);
        Eigen::MatrixXd x(n, 2);
        std::vector<int> labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            x(i, 0) = u(rng);
            x(i, 1) = u(rng);
            labels[static_cast<std::size_t>(i)] = i % 3;
        }
        const auto base = cluster_metrics(x, labels);
        ASSERT_GE(base.silhouette, -1.0);
        ASSERT_LE(base.silhouette, 1.0);
        const double theta = u(rng) * 3.14159;
        Eigen::Matrix2d rot;
        rot << std::cos(theta), -std::sin(theta), std::sin(theta), std::cos(theta);
        Eigen::MatrixXd moved = (x * rot.transpose()).rowwise() + Eigen::RowVector2d(u(rng) * 50, u(rng) * 50);
        ASSERT_NEAR(cluster_metrics(moved, labels).silhouette, base.silhouette, 1e-9);
        const double scale = 0.1 + 10 * (u(rng) + 1);
        ASSERT_NEAR(cluster_metrics(x * scale, labels).silhouette, base.silhouette, 1e-9);
    }
}

TEST(Silhouette, Errors) {
    Eigen::MatrixXd x(4, 2);
    x.setRandom();
    try {
        cluster_metrics(x, std::vector<int>{0, 0, 0, 7});
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("7"), std::string::npos);
    }
    EXPECT_THROW(cluster_metrics(x, std::vector<int>{0, 0, 0, 0}), ValidationError);
    EXPECT_THROW(cluster_metrics(x, std::vector<int>{0, 1}), ValidationError);
}

// ---- t-SNE ----

TEST(Tsne, SeparatesBlobsAndLowersKl) {
    std::mt19937_64 rng(73);
    std::vector<int> labels;
    const Eigen::MatrixXd x = blobs(rng, 50, 16, 20.0, labels);
    TsneConfig cfg;
    cfg.seed = 3;
    const auto res = tsne_run(x, cfg);
    ASSERT_EQ(res.embedding.rows(), 100);
    ASSERT_EQ(res.embedding.cols(), 2);
    EXPECT_LT(res.final_kl, res.initial_kl);
    const Eigen::RowVector2d c0 = res.embedding.topRows(50).colwise().mean();
    const Eigen::RowVector2d c1 = res.embedding.bottomRows(50).colwise().mean();
    double r0 = 0.0, r1 = 0.0;
    for (int i = 0; i < 50; ++i) {
        r0 = std::max(r0, (res.embedding.row(i) - c0).norm());
        r1 = std::max(r1, (res.embedding.row(50 + i) - c1).norm());
    }
    EXPECT_GT((c0 - c1).norm(), std::max(r0, r1));
}

TEST(Tsne, DeterministicAndTranslationInvariant) {
    // Dyadic coordinates keep every difference exact under the shift.
    std::mt19937_64 rng(74);
    Eigen::MatrixXd x(40, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(rng() % 64) / 8.0;
    TsneConfig cfg;
    cfg.perplexity = 8;
    cfg.iterations = 300;
    const Eigen::MatrixXd a = tsne_embed(x, cfg);
    EXPECT_TRUE(a == tsne_embed(x, cfg));
    const Eigen::MatrixXd shifted = x.array() + 16.0;
    EXPECT_TRUE(a == tsne_embed(shifted, cfg));
    cfg.seed = 1;
    EXPECT_FALSE(a == tsne_embed(x, cfg));
}

TEST(Tsne, InfeasiblePerplexityIsConfigError) {
    Eigen::MatrixXd x(5, 3);
    x.setRandom();
    EXPECT_THROW(tsne_embed(x, {}), ConfigError);
    TsneConfig small;
    small.perplexity = 1.0;
    EXPECT_NO_THROW(tsne_embed(x, small));
    Eigen::MatrixXd one(1, 3);
    EXPECT_THROW(tsne_embed(one, small), ConfigError);
}

// ---- compare ----

TEST(Compare, ZeroingNoiseDimsImprovesSilhouette) {
    const auto fx = make_feature_fixture({});
    CompareConfig cfg;
    cfg.project = false;
    const auto cmp = compare_distributions(fx.source_test.features, fx.source_test.labels, fx.fg_test.features,
                                           fx.fg_test.labels, cfg);
    EXPECT_GT(cmp.fg.silhouette, cmp.source.silhouette);
    EXPECT_LT(cmp.fg.mean_intra_class_distance, cmp.source.mean_intra_class_distance);
}

TEST(Compare, IdenticalInputsIdenticalReportsAndArtifacts) {
    test::TempDir dir;
    const auto fx = make_feature_fixture({});
    CompareConfig cfg;
    cfg.artifact_dir = dir.path();
    cfg.tsne.iterations = 250;
    const auto cmp = compare_distributions(fx.source_test.features, fx.source_test.labels,
                                           fx.source_test.features, fx.source_test.labels, cfg);
    EXPECT_EQ(cmp.source, cmp.fg);
    EXPECT_TRUE(cmp.source_2d == cmp.fg_2d);
    for (const char* f : {"cluster_report.txt", "points_source.csv", "points_fg.csv", "scatter.png"}) {
        EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
    }
    std::ifstream csv(dir / "points_fg.csv");
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "x,y,label");
}

TEST(Compare, MismatchedDimsRejected) {
    const auto fx = make_feature_fixture({});
    const Eigen::MatrixXd narrow = fx.fg_test.features.leftCols(4);
    CompareConfig cfg;
    cfg.project = false;
    EXPECT_THROW(compare_distributions(fx.source_test.features, fx.source_test.labels, narrow, fx.fg_test.labels, cfg),
                 ValidationError);
    cfg.metric_space = MetricSpace::Projection;
    EXPECT_THROW(compare_distributions(fx.source_test.features, fx.source_test.labels, fx.fg_test.features,
                                       fx.fg_test.labels, cfg),
                 ConfigError);
}

// ---- Grad-CAM ----

Tensor3 random_tensor(std::mt19937_64& rng, int c, int h, int w) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Tensor3 t(c, h, w);
    for (auto& v : t.data) v = u(rng);
    return t;
}

TEST(GradCam, ConstantScoreIsDegenerate) {
    std::mt19937_64 rng(81);
    const ConstantScoreModel model(2.5);
    const auto cam = grad_cam(model, random_tensor(rng, 1, 6, 7), 0, "act");
    EXPECT_TRUE(cam.degenerate);
    EXPECT_EQ(cam.heatmap.rows(), 6);
    EXPECT_EQ(cam.heatmap.cols(), 7);
    EXPECT_TRUE(cam.heatmap.isZero(0.0));
    EXPECT_EQ(cam.alpha, std::vector<double>{0.0});
}

TEST(GradCam, MeanActivationIsProportionalToRelu) {
    Tensor3 input(1, 8, 8);
    std::mt19937_64 rng(82);
    for (auto& v : input.data) v = static_cast<double>(static_cast<int>(rng() % 33) - 16) / 4.0;
    input.at(0, 0, 0) = -1.0;  // keeps the ReLU floor at zero
    input.at(0, 7, 7) = 5.0;
    const MeanActivationModel model;
    const auto cam = grad_cam(model, input, 0, "act");
    ASSERT_EQ(cam.alpha.size(), 1u);
    EXPECT_EQ(cam.alpha[0], 1.0 / 64.0);
    EXPECT_FALSE(cam.degenerate);
    double mx = 0.0;
    for (double v : input.data) mx = std::max(mx, v);
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) EXPECT_EQ(cam.heatmap(y, x), std::max(input.at(0, y, x), 0.0) / mx);
}

TEST(GradCam, TinyConvNetGradientsMatchFiniteDifferences) {
    std::mt19937_64 rng(83);
    const TinyConvNet net(3, 4, 5, 3, 7);
    const Tensor3 input = random_tensor(rng, 3, 6, 6);
    for (const std::string layer : {"conv1", "conv2"}) {
        for (int target = 0; target < 3; ++target) {
            const LayerPass pass = net.forward_backward(input, target, layer);
            ASSERT_NEAR(net.score_from_layer(input, target, layer, pass.activations), pass.score, 1e-12);
            double max_err = 0.0, max_fd = 0.0;
            const double h = 1e-6;
            for (std::size_t k = 0; k < pass.activations.data.size(); ++k) {
                Tensor3 up = pass.activations, down = pass.activations;
                up.data[k] += h;
                down.data[k] -= h;
                const double fd = (net.score_from_layer(input, target, layer, up) -
                                   net.score_from_layer(input, target, layer, down)) /
                                  (2 * h);
                max_err = std::max(max_err, std::abs(fd - pass.gradients.data[k]));
                max_fd = std::max(max_fd, std::abs(fd));
            }
            ASSERT_GT(max_fd, 0.0);
            EXPECT_LE(max_err / max_fd, 1e-4) << layer << " class " << target;
        }
    }
}

TEST(GradCam, HeatmapInvariants) {
    std::mt19937_64 rng(84);
    const auto net = make_cam_model("toy-cnn", 4, 1);
    for (int trial = 0; trial < 10; ++trial) {
        const Tensor3 input = random_tensor(rng, 3, 12, 10);
        const auto cam = grad_cam(*net, input, trial % 4, trial % 2 ? "conv1" : "conv2");
        ASSERT_EQ(cam.heatmap.rows(), 12);
        ASSERT_EQ(cam.heatmap.cols(), 10);
        if (!cam.degenerate) {
            ASSERT_EQ(cam.heatmap.minCoeff(), 0.0);
            ASSERT_EQ(cam.heatmap.maxCoeff(), 1.0);
        }
        for (std::size_t c = 0; c < cam.alpha.size(); ++c) {
            double s = 0.0;
            const std::size_t plane = 12 * 10;
            for (std::size_t k = 0; k < plane; ++k) s += cam.gradients.data[c * plane + k];
            ASSERT_NEAR(cam.alpha[c], s / plane, 1e-15);
        }
    }
}

TEST(GradCam, JointRescalingLeavesHeatmapUnchanged) {
    std::mt19937_64 rng(85);
    for (int trial = 0; trial < 20; ++trial) {
        const Tensor3 a = random_tensor(rng, 4, 5, 5);
        Tensor3 g = random_tensor(rng, 4, 5, 5);
        for (auto& v : g.data) v -= 0.5;
        const double c = 0.25 + 4.0 * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        Tensor3 ca = a, gc = g;
        for (auto& v : ca.data) v *= c;
        for (auto& v : gc.data) v /= c;
        const auto base = cam_from_maps(a, g, 9, 11);
        const auto scaled = cam_from_maps(ca, gc, 9, 11);
        ASSERT_EQ(base.degenerate, scaled.degenerate);
        ASSERT_LE((base.heatmap - scaled.heatmap).cwiseAbs().maxCoeff(), 1e-9);
    }
}

TEST(GradCam, NonSpatialLayerAndBadTargetRejected) {
    std::mt19937_64 rng(86);
    const TinyConvNet net(3, 2, 2, 2, 0);
    const Tensor3 input = random_tensor(rng, 3, 4, 4);
    EXPECT_THROW(grad_cam(net, input, 0, "fc"), ValidationError);
    EXPECT_THROW(grad_cam(net, input, 0, "conv9"), ValidationError);
    EXPECT_THROW(grad_cam(net, input, 5, "conv1"), ValidationError);
    EXPECT_THROW(make_cam_model("resnet50", 2, 0), BackendError);
}

TEST(GradCam, OverlayIsWritten) {
    test::TempDir dir;
    std::mt19937_64 rng(87);
    const Image img = test::random_image(rng, 16, 12);
    const auto net = make_cam_model("toy-cnn", 2, 0);
    const auto cam = grad_cam(*net, img, 1, "conv2");
    write_cam_overlay(img, cam, dir / "cam.png");
    EXPECT_TRUE(std::filesystem::exists(dir / "cam.png"));
}

} // namespace
} // namespace fgseg
