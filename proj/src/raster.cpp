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

#include "fgseg/raster.hpp"

#include <algorithm>
#include <stdexcept>

namespace fgseg {

Image::Image(int width, int height, int channels, std::uint8_t value)
    : width_(width), height_(height), channels_(channels),
      data_(static_cast<std::size_t>(width) * height * channels, value) {
    if (width < 0 || height < 0 || (channels != 3 && channels != 4)) {
        throw std::invalid_argument("Image: bad geometry");
    }
}

Rgb Image::rgb(int row, int col) const {
    const auto* p = pixel(row, col);
    return {p[0], p[1], p[2]};
}

void Image::set_rgb(int row, int col, Rgb c) {
    auto* p = pixel(row, col);
    p[0] = c.r;
    p[1] = c.g;
    p[2] = c.b;
}

BinaryMask::BinaryMask(int height, int width, std::uint8_t value)
    : height_(height), width_(width), data_(static_cast<std::size_t>(height) * width, value) {
    if (height < 0 || width < 0) {
        throw std::invalid_argument("BinaryMask: negative size");
    }
}

std::size_t BinaryMask::area() const {
    return static_cast<std::size_t>(std::count(data_.begin(), data_.end(), std::uint8_t{1}));
}

bool BinaryMask::is_binary() const {
    return std::all_of(data_.begin(), data_.end(), [](std::uint8_t v) { return v <= 1; });
}

ComponentLabels label_components(const BinaryMask& mask) {
    const int h = mask.height();
    const int w = mask.width();
    ComponentLabels out;
    out.labels.assign(mask.size(), 0);
    std::vector<int> stack;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            const int idx = r * w + c;
            if (mask.at(r, c) == 0 || out.labels[idx] != 0) {
                continue;
            }
            const int label = ++out.count;
            out.labels[idx] = label;
            stack.push_back(idx);
            while (!stack.empty()) {
                const int cur = stack.back();
                stack.pop_back();
                const int cr = cur / w;
                const int cc = cur % w;
                const int nbr[4][2] = {{cr - 1, cc}, {cr + 1, cc}, {cr, cc - 1}, {cr, cc + 1}};
                for (const auto& n : nbr) {
                    if (n[0] < 0 || n[0] >= h || n[1] < 0 || n[1] >= w) {
                        continue;
                    }
                    const int ni = n[0] * w + n[1];
                    if (mask.at(n[0], n[1]) != 0 && out.labels[ni] == 0) {
                        out.labels[ni] = label;
                        stack.push_back(ni);
                    }
                }
            }
        }
    }
    return out;
}

double border_contact_fraction(const BinaryMask& mask) {
    const int h = mask.height();
    const int w = mask.width();
    if (h == 0 || w == 0) {
        return 0.0;
    }
    std::size_t border = 0;
    std::size_t hits = 0;
    for (int r = 0; r < h; ++r) {
        for (int c = 0; c < w; ++c) {
            if (r != 0 && r != h - 1 && c != 0 && c != w - 1) {
                continue;
            }
            ++border;
            hits += mask.at(r, c);
        }
    }
    return static_cast<double>(hits) / static_cast<double>(border);
}

} // namespace fgseg
