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
#include "fgseg/raster.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace fgseg {
namespace {

TEST(Raster, ImageStoresInterleavedRgb) {
    Image img(3, 2, 3, 7);
    EXPECT_EQ(img.pixel_count(), 6u);
    img.set_rgb(1, 2, {1, 2, 3});
    EXPECT_EQ(img.rgb(1, 2), (Rgb{1, 2, 3}));
    EXPECT_EQ(img.data()[(1 * 3 + 2) * 3 + 1], 2);
    EXPECT_EQ(img.rgb(0, 0), (Rgb{7, 7, 7}));
}

TEST(Raster, FourConnectedComponentsIgnoreDiagonals) {
    BinaryMask m(3, 3);
    m.at(0, 0) = 1;
    m.at(1, 1) = 1;
    m.at(2, 2) = 1;
    m.at(2, 1) = 1;
    const auto comps = label_components(m);
    EXPECT_EQ(comps.count, 2);
    EXPECT_EQ(comps.labels[0], 1);
    EXPECT_EQ(comps.labels[4], 2);
    EXPECT_EQ(comps.labels[8], 2);
}

TEST(Raster, BorderContactCountsBorderPixels) {
    BinaryMask m(4, 4);
    EXPECT_DOUBLE_EQ(border_contact_fraction(m), 0.0);
    m.at(0, 0) = 1;
    m.at(0, 1) = 1;
    m.at(1, 1) = 1;  // interior
    EXPECT_DOUBLE_EQ(border_contact_fraction(m), 2.0 / 12.0);
}

// The OpenMP kernels must reproduce the serial reference bit for bit.

TEST(Kernels, CompositeMatchesSerial) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const int w = 1 + static_cast<int>(rng() % 40);
        const int h = 1 + static_cast<int>(rng() % 40);
        const Image src = test::random_image(rng, w, h);
        const BinaryMask mask = test::random_mask(rng, h, w);
        for (int channels : {3, 4}) {
            std::vector<std::uint8_t> a(static_cast<std::size_t>(w) * h * channels);
            std::vector<std::uint8_t> b(a.size());
            kernels::serial::composite({src.data(), mask.data(), a, channels, {1, 2, 3, 0}});
            kernels::omp::composite({src.data(), mask.data(), b, channels, {1, 2, 3, 0}});
            ASSERT_EQ(a, b);
        }
    }
}

TEST(Kernels, HistogramMatchesSerial) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        const int w = 1 + static_cast<int>(rng() % 64);
        const int h = 1 + static_cast<int>(rng() % 64);
        const Image src = test::random_image(rng, w, h);
        const BinaryMask mask = test::random_mask(rng, h, w);
        const int bins = 1 + static_cast<int>(rng() % 16);
        std::vector<std::uint64_t> a(static_cast<std::size_t>(bins) * bins * bins);
        std::vector<std::uint64_t> b(a.size());
        kernels::serial::histogram({src.data(), mask.data(), bins, a});
        kernels::omp::histogram({src.data(), mask.data(), bins, b});
        ASSERT_EQ(a, b);
    }
}

TEST(Kernels, SelectPixelsMatchesSerial) {
    std::mt19937_64 rng(3);
    const Image fg = test::random_image(rng, 33, 17);
    const Image bg = test::random_image(rng, 33, 17);
    const BinaryMask mask = test::random_mask(rng, 17, 33);
    std::vector<std::uint8_t> a(fg.data().size());
    std::vector<std::uint8_t> b(a.size());
    kernels::serial::select_pixels(fg.data(), bg.data(), mask.data(), a);
    kernels::omp::select_pixels(fg.data(), bg.data(), mask.data(), b);
    EXPECT_EQ(a, b);
}

TEST(Kernels, PairwiseDistancesMatchSerialAndAreSymmetric) {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> normal;
    Eigen::MatrixXd x(37, 5);
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        x.data()[i] = normal(rng);
    }
    const Eigen::MatrixXd a = kernels::serial::pairwise_distances(x);
    const Eigen::MatrixXd b = kernels::omp::pairwise_distances(x);
    EXPECT_TRUE(a == b);
    EXPECT_TRUE(a == a.transpose());
    EXPECT_DOUBLE_EQ(a(3, 5), (x.row(3) - x.row(5)).norm());
    EXPECT_EQ(a(7, 7), 0.0);
}

TEST(Kernels, TsneGradientMatchesSerial) {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 23;
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            p(i, j) = p(j, i) = i == j ? 0.0 : u(rng);
        }
    }
    p /= p.sum();
    Eigen::MatrixXd y(n, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y.data()[i] = u(rng);
    }
    Eigen::MatrixXd ga, gb;
    const double ka = kernels::serial::tsne_gradient({&p, &y, 4.0, &ga});
    const double kb = kernels::omp::tsne_gradient({&p, &y, 4.0, &gb});
    EXPECT_EQ(ka, kb);
    EXPECT_TRUE(ga == gb);
}

TEST(Kernels, TsneGradientAgreesWithFiniteDifferences) {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int n = 8;
    Eigen::MatrixXd p(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j <= i; ++j) {
            p(i, j) = p(j, i) = i == j ? 0.0 : u(rng);
        }
    }
    p /= p.sum();
    Eigen::MatrixXd y(n, 2);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        y.data()[i] = u(rng);
    }
    Eigen::MatrixXd grad, scratch;
    kernels::serial::tsne_gradient({&p, &y, 1.0, &grad});
    const double h = 1e-6;
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < 2; ++k) {
            Eigen::MatrixXd yp = y, ym = y;
            yp(i, k) += h;
            ym(i, k) -= h;
            const double fd = (kernels::serial::tsne_gradient({&p, &yp, 1.0, &scratch}) -
                               kernels::serial::tsne_gradient({&p, &ym, 1.0, &scratch})) /
                              (2 * h);
            EXPECT_NEAR(grad(i, k), fd, 1e-6 * std::max(1.0, std::abs(fd)));
        }
    }
}

} // namespace
} // namespace fgseg
