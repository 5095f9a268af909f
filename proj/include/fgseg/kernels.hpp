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

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp`; the two must
// agree bit-for-bit (tests and bench/ compare them). Module code calls the
// OpenMP versions.

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <span>

namespace fgseg::kernels {

/// Per-pixel compositing. `src` is RGB, `out` has `out_channels` (3 or 4)
/// channels. mask=1 copies the source pixel (alpha 255), mask=0 writes `fill`.
struct CompositeArgs {
    std::span<const std::uint8_t> src;
    std::span<const std::uint8_t> mask;
    std::span<std::uint8_t> out;
    int out_channels = 3;
    std::array<std::uint8_t, 4> fill{255, 255, 255, 255};
};

/// Joint RGB histogram over mask=1 pixels; `counts` has bins^3 entries,
/// indexed ((r * bins) + g) * bins + b.
struct HistogramArgs {
    std::span<const std::uint8_t> src;
    std::span<const std::uint8_t> mask;
    int bins = 8;
    std::span<std::uint64_t> counts;
};

/// t-SNE gradient of KL(P || Q) w.r.t. the 2-D embedding. Returns KL using
/// the un-exaggerated P.
struct TsneGradientArgs {
    const Eigen::MatrixXd* P = nullptr;  // n x n symmetric joint probabilities
    const Eigen::MatrixXd* Y = nullptr;  // n x 2
    double exaggeration = 1.0;
    Eigen::MatrixXd* grad = nullptr;     // n x 2
};

namespace serial {
void composite(const CompositeArgs& args);
void select_pixels(std::span<const std::uint8_t> fg, std::span<const std::uint8_t> bg,
                   std::span<const std::uint8_t> mask, std::span<std::uint8_t> out);
void histogram(const HistogramArgs& args);
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);
Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& points);
double tsne_gradient(const TsneGradientArgs& args);
} // namespace serial

namespace omp {
void composite(const CompositeArgs& args);
void select_pixels(std::span<const std::uint8_t> fg, std::span<const std::uint8_t> bg,
                   std::span<const std::uint8_t> mask, std::span<std::uint8_t> out);
void histogram(const HistogramArgs& args);
Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& points);
Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& points);
double tsne_gradient(const TsneGradientArgs& args);
} // namespace omp

} // namespace fgseg::kernels
