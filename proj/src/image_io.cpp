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

#include "fgseg/image_io.hpp"

#include "fgseg/error.hpp"

#include <algorithm>
#include <cctype>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <string>
#include <vector>

namespace fgseg {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

} // namespace

Image read_image(const std::filesystem::path& path) {
    cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw IoError("cannot decode image: " + path.string());
    }
    cv::Mat rgb;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    Image out(rgb.cols, rgb.rows, 3);
    for (int r = 0; r < rgb.rows; ++r) {
        std::copy_n(rgb.ptr<std::uint8_t>(r), static_cast<std::size_t>(rgb.cols) * 3, out.pixel(r, 0));
    }
    return out;
}

void write_image(const std::filesystem::path& path, const Image& image) {
    const auto ext = lower_extension(path);
    if (image.channels() == 4 && ext != ".png") {
        throw ValidationError("RGBA output requires .png, got " + path.string());
    }
    std::error_code ec;
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    const int type = image.channels() == 4 ? CV_8UC4 : CV_8UC3;
    cv::Mat src(image.height(), image.width(), type, const_cast<std::uint8_t*>(image.data().data()));
    cv::Mat converted;
    cv::cvtColor(src, converted, image.channels() == 4 ? cv::COLOR_RGBA2BGRA : cv::COLOR_RGB2BGR);
    std::vector<int> params;
    if (ext == ".jpg" || ext == ".jpeg") {
        params = {cv::IMWRITE_JPEG_QUALITY, 95};
    } else if (ext == ".png") {
        params = {cv::IMWRITE_PNG_COMPRESSION, 3};
    }
    if (!cv::imwrite(path.string(), converted, params)) {
        throw IoError("cannot write image: " + path.string());
    }
}

bool is_image_extension(const std::filesystem::path& path) {
    static const std::vector<std::string> known = {".jpg", ".jpeg", ".png", ".bmp", ".ppm", ".tif", ".tiff"};
    const auto ext = lower_extension(path);
    return std::find(known.begin(), known.end(), ext) != known.end();
}

} // namespace fgseg
