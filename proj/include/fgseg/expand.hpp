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

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace fgseg {

struct Point {
    int x = 0;
    int y = 0;

    friend bool operator==(const Point&, const Point&) = default;
};

/// Outer boundaries of the 4-connected foreground components. Vertices lie
/// on pixel corners, so a polygon's area equals its component's pixel count
/// when the component has no holes (holes are not represented). Polygons are
/// closed implicitly and wound counter-clockwise in (x, y), i.e. their
/// signed shoelace area is positive. Collinear vertices are dropped.
struct ContourSet {
    std::vector<std::vector<Point>> polygons;
    std::vector<double> areas;
};

double shoelace_area(const std::vector<Point>& polygon);  // signed

ContourSet extract_contours(const BinaryMask& mask);
ContourSet extract_contours(const SegmentationMask& mask);

/// Joint RGB histogram of the mask=1 pixels.
struct ColorHistogram {
    int bins_per_channel = 8;
    std::vector<std::uint64_t> counts;  // bins^3, index ((r*bins)+g)*bins+b
    std::uint64_t total = 0;

    std::uint64_t at(int r_bin, int g_bin, int b_bin) const {
        return counts[(static_cast<std::size_t>(r_bin) * bins_per_channel + g_bin) * bins_per_channel + b_bin];
    }
};

ColorHistogram foreground_histogram(const Image& image, const BinaryMask& mask, int bins_per_channel);
ColorHistogram foreground_histogram(const Image& image, const SegmentationMask& mask, int bins_per_channel);

/// mask=1 keeps the source pixel, mask=0 takes the background pixel.
Image replace_background(const Image& image, const BinaryMask& mask, const Image& background);

std::string contours_to_json(const ContourSet& contours);
std::string histogram_to_csv(const ColorHistogram& histogram);

} // namespace fgseg
