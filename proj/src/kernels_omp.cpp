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

#include "fgseg/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <omp.h>
#include <vector>

namespace fgseg::kernels::omp {

void composite(const CompositeArgs& a) {
    const auto n = static_cast<std::ptrdiff_t>(a.mask.size());
    const int oc = a.out_channels;
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        std::uint8_t* dst = a.out.data() + i * oc;
        if (a.mask[i] != 0) {
            const std::uint8_t* s = a.src.data() + i * 3;
            dst[0] = s[0];
            dst[1] = s[1];
            dst[2] = s[2];
            if (oc == 4) {
                dst[3] = 255;
            }
        } else {
            for (int c = 0; c < oc; ++c) {
                dst[c] = a.fill[c];
            }
        }
    }
}

void select_pixels(std::span<const std::uint8_t> fg, std::span<const std::uint8_t> bg,
                   std::span<const std::uint8_t> mask, std::span<std::uint8_t> out) {
    const auto n = static_cast<std::ptrdiff_t>(mask.size());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto& from = mask[i] != 0 ? fg : bg;
        out[i * 3 + 0] = from[i * 3 + 0];
        out[i * 3 + 1] = from[i * 3 + 1];
        out[i * 3 + 2] = from[i * 3 + 2];
    }
}

void histogram(const HistogramArgs& a) {
    std::fill(a.counts.begin(), a.counts.end(), 0);
    const int bins = a.bins;
    const auto n = static_cast<std::ptrdiff_t>(a.mask.size());
    const std::size_t nbins = a.counts.size();
#pragma omp parallel
    {
        std::vector<std::uint64_t> local(nbins, 0);
#pragma omp for schedule(static) nowait
        for (std::ptrdiff_t i = 0; i < n; ++i) {
            if (a.mask[i] == 0) {
                continue;
            }
            const std::uint8_t* p = a.src.data() + i * 3;
            const int r = p[0] * bins / 256;
            const int g = p[1] * bins / 256;
            const int b = p[2] * bins / 256;
            ++local[(static_cast<std::size_t>(r) * bins + g) * bins + b];
        }
#pragma omp critical(fgseg_histogram_merge)
        for (std::size_t k = 0; k < nbins; ++k) {
            a.counts[k] += local[k];
        }
    }
}

Eigen::MatrixXd pairwise_sq_distances(const Eigen::MatrixXd& x) {
    const Eigen::Index n = x.rows();
    const Eigen::Index d = x.cols();
    Eigen::MatrixXd out(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            double s = 0.0;
            for (Eigen::Index k = 0; k < d; ++k) {
                const double diff = x(i, k) - x(j, k);
                s += diff * diff;
            }
            out(i, j) = s;
        }
    }
    return out;
}

Eigen::MatrixXd pairwise_distances(const Eigen::MatrixXd& x) {
    Eigen::MatrixXd out = pairwise_sq_distances(x);
    const Eigen::Index cols = out.cols();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < out.rows(); ++i) {
            out(i, j) = std::sqrt(out(i, j));
        }
    }
    return out;
}

double tsne_gradient(const TsneGradientArgs& a) {
    const Eigen::MatrixXd& P = *a.P;
    const Eigen::MatrixXd& Y = *a.Y;
    Eigen::MatrixXd& grad = *a.grad;
    const Eigen::Index n = Y.rows();
    Eigen::MatrixXd num(n, n);
    std::vector<double> row_sum(static_cast<std::size_t>(n), 0.0);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                num(i, j) = 0.0;
                continue;
            }
            const double dx = Y(i, 0) - Y(j, 0);
            const double dy = Y(i, 1) - Y(j, 1);
            num(i, j) = 1.0 / (1.0 + dx * dx + dy * dy);
            s += num(i, j);
        }
        row_sum[static_cast<std::size_t>(i)] = s;
    }
    // Reduced in row order so the result does not depend on thread count.
    double z = 0.0;
    for (double s : row_sum) {
        z += s;
    }
    std::vector<double> row_kl(static_cast<std::size_t>(n), 0.0);
    grad.resize(n, 2);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
        double gx = 0.0;
        double gy = 0.0;
        double kl = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (i == j) {
                continue;
            }
            const double q = std::max(num(i, j) / z, 1e-300);
            const double p = P(i, j);
            const double mult = (a.exaggeration * p - q) * num(i, j);
            gx += mult * (Y(i, 0) - Y(j, 0));
            gy += mult * (Y(i, 1) - Y(j, 1));
            if (p > 0.0) {
                kl += p * std::log(p / q);
            }
        }
        grad(i, 0) = 4.0 * gx;
        grad(i, 1) = 4.0 * gy;
        row_kl[static_cast<std::size_t>(i)] = kl;
    }
    double kl = 0.0;
    for (double v : row_kl) {
        kl += v;
    }
    return kl;
}

} // namespace fgseg::kernels::omp
