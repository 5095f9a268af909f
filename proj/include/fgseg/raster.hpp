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

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fgseg {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Interleaved 8-bit raster, row-major. `channels` is 3 (RGB) or 4 (RGBA).
class Image {
  public:
    Image() = default;
    Image(int width, int height, int channels = 3, std::uint8_t value = 0);

    int width() const { return width_; }
    int height() const { return height_; }
    int channels() const { return channels_; }
    bool empty() const { return width_ == 0 || height_ == 0; }
    std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * height_; }

    std::uint8_t* pixel(int row, int col) { return data_.data() + offset(row, col); }
    const std::uint8_t* pixel(int row, int col) const { return data_.data() + offset(row, col); }

    Rgb rgb(int row, int col) const;
    void set_rgb(int row, int col, Rgb c);

    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> data() const { return data_; }

    friend bool operator==(const Image&, const Image&) = default;

  private:
    std::size_t offset(int row, int col) const {
        return (static_cast<std::size_t>(row) * width_ + col) * channels_;
    }

    int width_ = 0;
    int height_ = 0;
    int channels_ = 3;
    std::vector<std::uint8_t> data_;
};

/// Dense binary mask, row-major, one byte per pixel holding 0 or 1.
class BinaryMask {
  public:
    BinaryMask() = default;
    BinaryMask(int height, int width, std::uint8_t value = 0);

    int height() const { return height_; }
    int width() const { return width_; }
    std::size_t size() const { return data_.size(); }

    std::uint8_t at(int row, int col) const { return data_[static_cast<std::size_t>(row) * width_ + col]; }
    std::uint8_t& at(int row, int col) { return data_[static_cast<std::size_t>(row) * width_ + col]; }

    std::size_t area() const;
    bool is_binary() const;

    std::span<std::uint8_t> data() { return data_; }
    std::span<const std::uint8_t> data() const { return data_; }

    friend bool operator==(const BinaryMask&, const BinaryMask&) = default;

  private:
    int height_ = 0;
    int width_ = 0;
    std::vector<std::uint8_t> data_;
};

/// 4-connected component labels: 0 for background, 1..count for components,
/// numbered in row-major order of each component's first pixel.
struct ComponentLabels {
    int count = 0;
    std::vector<int> labels;
};

ComponentLabels label_components(const BinaryMask& mask);

/// Fraction of the image border pixels that are foreground.
double border_contact_fraction(const BinaryMask& mask);

} // namespace fgseg
