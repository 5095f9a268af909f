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
#include "fgseg/kernels.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

namespace fgseg {

ClusterReport cluster_metrics(const Eigen::MatrixXd& points, std::span<const int> labels) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (labels.size() != n) {
        throw ValidationError("cluster_metrics: " + std::to_string(labels.size()) + " labels for " +
                              std::to_string(n) + " points");
    }
    std::map<int, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < n; ++i) {
        members[labels[i]].push_back(i);
    }
    if (members.size() < 2) {
        throw ValidationError("cluster_metrics needs at least 2 classes");
    }
    for (const auto& [label, idx] : members) {
        if (idx.size() < 2) {
            throw ValidationError("cluster_metrics: class " + std::to_string(label) + " has a single point");
        }
    }

    const Eigen::MatrixXd d = kernels::omp::pairwise_distances(points);
    ClusterReport rep;
    rep.points = n;
    rep.classes = members.size();

    double sil_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double a = 0.0;
        double b = std::numeric_limits<double>::infinity();
        for (const auto& [label, idx] : members) {
            double s = 0.0;
            for (auto j : idx) {
                s += d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
            if (label == labels[i]) {
                a = s / static_cast<double>(idx.size() - 1);
            } else {
                b = std::min(b, s / static_cast<double>(idx.size()));
            }
        }
        const double m = std::max(a, b);
        sil_sum += m > 0.0 ? (b - a) / m : 0.0;
    }
    rep.silhouette = sil_sum / static_cast<double>(n);

    double intra = 0.0;
    std::size_t intra_pairs = 0;
    std::vector<Eigen::RowVectorXd> centroids;
    for (const auto& [label, idx] : members) {
        Eigen::RowVectorXd c = Eigen::RowVectorXd::Zero(points.cols());
        for (std::size_t u = 0; u < idx.size(); ++u) {
            c += points.row(static_cast<Eigen::Index>(idx[u]));
            for (std::size_t v = u + 1; v < idx.size(); ++v) {
                intra += d(static_cast<Eigen::Index>(idx[u]), static_cast<Eigen::Index>(idx[v]));
                ++intra_pairs;
            }
        }
        centroids.push_back(c / static_cast<double>(idx.size()));
    }
    rep.mean_intra_class_distance = intra / static_cast<double>(intra_pairs);

    double inter = 0.0;
    std::size_t inter_pairs = 0;
    for (std::size_t u = 0; u < centroids.size(); ++u) {
        for (std::size_t v = u + 1; v < centroids.size(); ++v) {
            inter += (centroids[u] - centroids[v]).norm();
            ++inter_pairs;
        }
    }
    rep.mean_inter_centroid_distance = inter / static_cast<double>(inter_pairs);
    return rep;
}

std::string to_text(const ClusterReport& r) {
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "points: %zu\nclasses: %zu\nsilhouette: %.6f\nmean_intra_class_distance: %.6f\n"
                  "mean_inter_centroid_distance: %.6f\n",
                  r.points, r.classes, r.silhouette, r.mean_intra_class_distance, r.mean_inter_centroid_distance);
    return buf;
}

void write_points_csv(const Eigen::MatrixXd& pts, std::span<const int> labels, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << "x,y,label\n";
    char buf[96];
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%d\n", pts(i, 0), pts(i, 1), labels[static_cast<std::size_t>(i)]);
        out << buf;
    }
}

namespace {

void draw_panel(cv::Mat& canvas, int x0, int size, const Eigen::MatrixXd& pts, std::span<const int> labels,
                const std::string& title) {
    const int pad = 20;
    const double min_x = pts.col(0).minCoeff();
    const double max_x = pts.col(0).maxCoeff();
    const double min_y = pts.col(1).minCoeff();
    const double max_y = pts.col(1).maxCoeff();
    const double span = std::max({max_x - min_x, max_y - min_y, 1e-12});
    cv::rectangle(canvas, {x0, 30}, {x0 + size, 30 + size}, {200, 200, 200}, 1);
    cv::putText(canvas, title, {x0, 20}, cv::FONT_HERSHEY_SIMPLEX, 0.5, {0, 0, 0}, 1);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        const int px = x0 + pad + static_cast<int>((pts(i, 0) - min_x) / span * (size - 2 * pad));
        const int py = 30 + pad + static_cast<int>((pts(i, 1) - min_y) / span * (size - 2 * pad));
        // Golden-angle hue per label keeps neighbouring class ids distinct.
        const int label = labels[static_cast<std::size_t>(i)];
        cv::Mat hsv(1, 1, CV_8UC3, cv::Scalar((label * 137) % 180, 200, 220));
        cv::Mat bgr;
        cv::cvtColor(hsv, bgr, cv::COLOR_HSV2BGR);
        const auto c = bgr.at<cv::Vec3b>(0, 0);
        cv::circle(canvas, {px, py}, 3, cv::Scalar(c[0], c[1], c[2]), cv::FILLED);
    }
}

} // namespace

Comparison compare_distributions(const Eigen::MatrixXd& source, std::span<const int> source_labels,
                                 const Eigen::MatrixXd& fg, std::span<const int> fg_labels,
                                 const CompareConfig& config) {
    if (source.cols() != fg.cols()) {
        throw ValidationError("embedding dimensions differ: " + std::to_string(source.cols()) + " vs " +
                              std::to_string(fg.cols()) + " (different extractors?)");
    }
    if (config.metric_space == MetricSpace::Projection && !config.project) {
        throw ConfigError("metrics in projection space require project=true");
    }
    Comparison out;
    if (config.project) {
        out.source_2d = tsne_embed(source, config.tsne);
        out.fg_2d = tsne_embed(fg, config.tsne);
    }
    const bool in_2d = config.metric_space == MetricSpace::Projection;
    out.source = cluster_metrics(in_2d ? out.source_2d : source, source_labels);
    out.fg = cluster_metrics(in_2d ? out.fg_2d : fg, fg_labels);

    if (!config.artifact_dir.empty()) {
        std::filesystem::create_directories(config.artifact_dir);
        std::ofstream(config.artifact_dir / "cluster_report.txt")
            << "[source]\n" << to_text(out.source) << "[fg]\n" << to_text(out.fg);
        if (config.project) {
            write_points_csv(out.source_2d, source_labels, config.artifact_dir / "points_source.csv");
            write_points_csv(out.fg_2d, fg_labels, config.artifact_dir / "points_fg.csv");
            const int size = 400;
            cv::Mat canvas(size + 40, 2 * size + 30, CV_8UC3, cv::Scalar(255, 255, 255));
            draw_panel(canvas, 10, size, out.source_2d, source_labels, "source");
            draw_panel(canvas, size + 20, size, out.fg_2d, fg_labels, "foreground");
            const auto png = config.artifact_dir / "scatter.png";
            if (!cv::imwrite(png.string(), canvas)) {
                throw IoError("cannot write " + png.string());
            }
        }
    }
    return out;
}

} // namespace fgseg
