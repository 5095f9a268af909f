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

#include "fgseg/expand.hpp"

#include "fgseg/error.hpp"
#include "fgseg/kernels.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <sstream>

namespace fgseg {

double shoelace_area(const std::vector<Point>& poly) {
    long long twice = 0;
    const std::size_t n = poly.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& a = poly[i];
        const Point& b = poly[(i + 1) % n];
        twice += static_cast<long long>(a.x) * b.y - static_cast<long long>(b.x) * a.y;
    }
    return static_cast<double>(twice) / 2.0;
}

namespace {

// Crack-following trace of one component's outer boundary. Edges are
// directed with the component on their left; at a vertex shared by two
// diagonal pixels the left turn is taken so diagonal neighbours stay
// separate, which is what 4-connectivity requires.
class BoundaryTracer {
  public:
    BoundaryTracer(const ComponentLabels& comps, int height, int width)
        : comps_(comps), height_(height), width_(width) {}

    std::vector<Point> trace(int label, int start_row, int start_col) const {
        std::vector<Point> vertices;
        const Point start{start_col, start_row};
        Point v = start;
        int dx = 1;
        int dy = 0;  // along the top edge of the start pixel
        do {
            vertices.push_back(v);
            v = {v.x + dx, v.y + dy};
            // Candidates in order: left, straight, right.
            const int cand[3][2] = {{-dy, dx}, {dx, dy}, {dy, -dx}};
            bool moved = false;
            for (const auto& c : cand) {
                if (is_edge(label, v, c[0], c[1])) {
                    dx = c[0];
                    dy = c[1];
                    moved = true;
                    break;
                }
            }
            if (!moved) {
                throw std::logic_error("contour trace lost the boundary");
            }
        } while (!(v == start && dx == 1 && dy == 0));
        return simplify(vertices);
    }

  private:
    bool inside(int label, int r, int c) const {
        return r >= 0 && r < height_ && c >= 0 && c < width_ &&
               comps_.labels[static_cast<std::size_t>(r) * width_ + c] == label;
    }

    // Directed edge from v along (dx, dy) with the component on its left.
    bool is_edge(int label, Point v, int dx, int dy) const {
        const int lx = -dy;
        const int ly = dx;
        // Doubled coordinates of the pixel centres either side of the edge.
        const int left_c2 = 2 * v.x + dx + lx;
        const int left_r2 = 2 * v.y + dy + ly;
        const int right_c2 = 2 * v.x + dx - lx;
        const int right_r2 = 2 * v.y + dy - ly;
        return inside(label, floor_half(left_r2), floor_half(left_c2)) &&
               !inside(label, floor_half(right_r2), floor_half(right_c2));
    }

    // floor(odd / 2); odd - 1 is even so the division is exact.
    static int floor_half(int odd) { return (odd - 1) / 2; }

    static std::vector<Point> simplify(const std::vector<Point>& pts) {
        std::vector<Point> out;
        const std::size_t n = pts.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Point& prev = pts[(i + n - 1) % n];
            const Point& cur = pts[i];
            const Point& next = pts[(i + 1) % n];
            const long long cross = static_cast<long long>(cur.x - prev.x) * (next.y - cur.y) -
                                    static_cast<long long>(cur.y - prev.y) * (next.x - cur.x);
            if (cross != 0) {
                out.push_back(cur);
            }
        }
        return out;
    }

    const ComponentLabels& comps_;
    int height_;
    int width_;
};

} // namespace

ContourSet extract_contours(const BinaryMask& mask) {
    if (mask.area() == 0) {
        throw ValidationError("extract_contours: empty mask");
    }
    const auto comps = label_components(mask);
    BoundaryTracer tracer(comps, mask.height(), mask.width());
    ContourSet out;
    std::vector<char> done(static_cast<std::size_t>(comps.count) + 1, 0);
    // Row-major scan: the first pixel seen of each component is its
    // top-most, left-most one, whose top edge is on the outer boundary.
    for (int r = 0; r < mask.height(); ++r) {
        for (int c = 0; c < mask.width(); ++c) {
            const int label = comps.labels[static_cast<std::size_t>(r) * mask.width() + c];
            if (label == 0 || done[static_cast<std::size_t>(label)]) {
                continue;
            }
            done[static_cast<std::size_t>(label)] = 1;
            auto poly = tracer.trace(label, r, c);
            out.areas.push_back(shoelace_area(poly));
            out.polygons.push_back(std::move(poly));
        }
    }
    return out;
}

ContourSet extract_contours(const SegmentationMask& mask) { return extract_contours(rle_decode(mask)); }

ColorHistogram foreground_histogram(const Image& image, const BinaryMask& mask, int bins) {
    if (bins < 1 || bins > 256) {
        throw ValidationError("bins_per_channel must lie in [1, 256]");
    }
    if (image.channels() != 3 || mask.height() != image.height() || mask.width() != image.width()) {
        throw ValidationError("foreground_histogram: image/mask dimensions differ");
    }
    if (mask.area() == 0) {
        throw ValidationError("foreground_histogram: empty mask");
    }
    ColorHistogram h;
    h.bins_per_channel = bins;
    h.counts.assign(static_cast<std::size_t>(bins) * bins * bins, 0);
    kernels::omp::histogram({image.data(), mask.data(), bins, h.counts});
    for (auto c : h.counts) {
        h.total += c;
    }
    return h;
}

ColorHistogram foreground_histogram(const Image& image, const SegmentationMask& mask, int bins) {
    return foreground_histogram(image, rle_decode(mask), bins);
}

Image replace_background(const Image& image, const BinaryMask& mask, const Image& background) {
    if (image.channels() != 3 || background.channels() != 3) {
        throw ValidationError("replace_background expects RGB rasters");
    }
    if (background.width() != image.width() || background.height() != image.height() ||
        mask.width() != image.width() || mask.height() != image.height()) {
        throw ValidationError("replace_background: dimensions differ");
    }
    Image out(image.width(), image.height(), 3);
    kernels::omp::select_pixels(image.data(), background.data(), mask.data(), out.data());
    return out;
}

std::string contours_to_json(const ContourSet& contours) {
    nlohmann::json polys = nlohmann::json::array();
    for (const auto& p : contours.polygons) {
        nlohmann::json pts = nlohmann::json::array();
        for (const auto& pt : p) {
            pts.push_back({pt.x, pt.y});
        }
        polys.push_back(std::move(pts));
    }
    return nlohmann::json{{"polygons", polys}, {"areas", contours.areas}}.dump();
}

std::string histogram_to_csv(const ColorHistogram& h) {
    std::ostringstream out;
    out << "r_bin,g_bin,b_bin,count\n";
    const int b = h.bins_per_channel;
    for (int r = 0; r < b; ++r) {
        for (int g = 0; g < b; ++g) {
            for (int bl = 0; bl < b; ++bl) {
                out << r << ',' << g << ',' << bl << ',' << h.at(r, g, bl) << '\n';
            }
        }
    }
    return out.str();
}

} // namespace fgseg
