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
#include "fgseg/raster.hpp"

#include <atomic>
#include <filesystem>
#include <random>
#include <string>
#include <unistd.h>

namespace fgseg::test {

/// Scratch directory removed on destruction.
class TempDir {
  public:
    explicit TempDir(const std::string& tag = "fgseg") {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                (tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

  private:
    std::filesystem::path path_;
};

inline std::filesystem::path data_dir() { return FGSEG_TEST_DATA; }

inline Image random_image(std::mt19937_64& rng, int width, int height, int channels = 3) {
    Image img(width, height, channels);
    std::uniform_int_distribution<int> byte(0, 255);
    for (auto& v : img.data()) {
        v = static_cast<std::uint8_t>(byte(rng));
    }
    return img;
}

/// Random mask with density drawn per call, so runs of every length occur.
inline BinaryMask random_mask(std::mt19937_64& rng, int height, int width) {
    BinaryMask m(height, width);
    const double p = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    std::bernoulli_distribution on(p);
    for (auto& v : m.data()) {
        v = on(rng) ? 1 : 0;
    }
    return m;
}

/// Run-length oracle built from change points of the flattened
/// column-major scan, independent of the codec's run counter.
inline std::vector<std::uint32_t> naive_rle(const BinaryMask& m) {
    std::vector<std::uint8_t> flat;
    for (int c = 0; c < m.width(); ++c) {
        for (int r = 0; r < m.height(); ++r) {
            flat.push_back(m.at(r, c));
        }
    }
    std::vector<std::uint32_t> counts;
    if (flat.empty()) {
        return {0};
    }
    if (flat[0] == 1) {
        counts.push_back(0);
    }
    std::size_t start = 0;
    for (std::size_t i = 1; i <= flat.size(); ++i) {
        if (i == flat.size() || flat[i] != flat[i - 1]) {
            counts.push_back(static_cast<std::uint32_t>(i - start));
            start = i;
        }
    }
    return counts;
}

} // namespace fgseg::test
