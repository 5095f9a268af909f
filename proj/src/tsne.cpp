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

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fgseg {

void TsneConfig::validate(std::size_t n) const {
    if (!(perplexity > 0.0)) {
        throw ConfigError("t-SNE perplexity must be > 0");
    }
    if (iterations < 1) {
        throw ConfigError("t-SNE iterations must be >= 1");
    }
    if (!(learning_rate > 0.0)) {
        throw ConfigError("t-SNE learning_rate must be > 0");
    }
    if (n < 2) {
        throw ConfigError("t-SNE needs at least 2 points");
    }
    if (perplexity >= static_cast<double>(n - 1) / 3.0) {
        throw ConfigError("t-SNE perplexity " + std::to_string(perplexity) + " is too large for " +
                          std::to_string(n) + " points (needs < (N - 1) / 3)");
    }
}

namespace {

// Row-conditional probabilities with per-row precision found by bisection
// so that each row's entropy matches log(perplexity).
Eigen::MatrixXd conditional_p(const Eigen::MatrixXd& d2, double perplexity) {
    const Eigen::Index n = d2.rows();
    const double target = std::log(perplexity);
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
    std::vector<double> row(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
        double beta = 1.0;
        double lo = 0.0;
        double hi = std::numeric_limits<double>::infinity();
        double min_d = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i) {
                min_d = std::min(min_d, d2(i, j));
            }
        }
        for (int step = 0; step < 100; ++step) {
            // Shift by the nearest distance so exp() never underflows to 0 everywhere.
            double sum = 0.0;
            double weighted = 0.0;
            for (Eigen::Index j = 0; j < n; ++j) {
                const double v = j == i ? 0.0 : std::exp(-beta * (d2(i, j) - min_d));
                row[static_cast<std::size_t>(j)] = v;
                sum += v;
                weighted += v * (d2(i, j) - min_d);
            }
            const double entropy = std::log(sum) + beta * weighted / sum;
            for (Eigen::Index j = 0; j < n; ++j) {
                p(i, j) = row[static_cast<std::size_t>(j)] / sum;
            }
            const double diff = entropy - target;
            if (std::abs(diff) < 1e-5) {
                break;
            }
            if (diff > 0.0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
            } else {
                hi = beta;
                beta = (beta + lo) / 2.0;
            }
        }
    }
    return p;
}

} // namespace

TsneResult tsne_run(const Eigen::MatrixXd& x, const TsneConfig& cfg) {
    const auto n = static_cast<std::size_t>(x.rows());
    cfg.validate(n);
    const Eigen::MatrixXd d2 = kernels::omp::pairwise_sq_distances(x);
    const Eigen::MatrixXd cond = conditional_p(d2, cfg.perplexity);
    Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
    p = p.cwiseMax(1e-12);
    p.diagonal().setZero();

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> normal(0.0, 1e-4);
    Eigen::MatrixXd y(x.rows(), 2);
    for (Eigen::Index i = 0; i < y.rows(); ++i) {
        y(i, 0) = normal(rng);
        y(i, 1) = normal(rng);
    }

    // Early exaggeration and the momentum switch follow the usual 250-step
    // schedule, shortened proportionally for runs under 1000 iterations.
    const int early = std::min(250, cfg.iterations / 4);
    Eigen::MatrixXd grad(y.rows(), 2);
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(y.rows(), 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(y.rows(), 2);

    TsneResult result;
    result.initial_kl = kernels::omp::tsne_gradient({&p, &y, 1.0, &grad});
    for (int it = 0; it < cfg.iterations; ++it) {
        const double exaggeration = it < early ? 12.0 : 1.0;
        const double momentum = it < early ? 0.5 : 0.8;
        kernels::omp::tsne_gradient({&p, &y, exaggeration, &grad});
        for (Eigen::Index i = 0; i < y.rows(); ++i) {
            for (Eigen::Index k = 0; k < 2; ++k) {
                const bool same_sign = (grad(i, k) > 0.0) == (update(i, k) > 0.0);
                gains(i, k) = same_sign ? std::max(gains(i, k) * 0.8, 0.01) : gains(i, k) + 0.2;
                update(i, k) = momentum * update(i, k) - cfg.learning_rate * gains(i, k) * grad(i, k);
                y(i, k) += update(i, k);
            }
        }
        const Eigen::RowVector2d mean = y.colwise().mean();
        y.rowwise() -= mean;
    }
    result.final_kl = kernels::omp::tsne_gradient({&p, &y, 1.0, &grad});
    result.embedding = std::move(y);
    return result;
}

Eigen::MatrixXd tsne_embed(const Eigen::MatrixXd& points, const TsneConfig& config) {
    return tsne_run(points, config).embedding;
}

} // namespace fgseg
