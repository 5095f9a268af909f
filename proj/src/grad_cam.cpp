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

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <cmath>
#include <random>

namespace fgseg {

Tensor3 image_to_tensor(const Image& image) {
    if (image.channels() < 3) {
        throw ValidationError("image_to_tensor expects an RGB raster");
    }
    Tensor3 t(3, image.height(), image.width());
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const std::uint8_t* p = image.pixel(y, x);
            for (int c = 0; c < 3; ++c) {
                t.at(c, y, x) = p[c] / 255.0;
            }
        }
    }
    return t;
}

namespace {

Tensor3 first_channel(const Tensor3& input) {
    if (input.channels < 1 || input.height < 1 || input.width < 1) {
        throw ValidationError("empty input tensor");
    }
    Tensor3 a(1, input.height, input.width);
    std::copy_n(input.data.begin(), a.data.size(), a.data.begin());
    return a;
}

void require_layer(const std::string& layer, const char* expected) {
    if (layer != expected) {
        throw ValidationError("unknown layer '" + layer + "'");
    }
}

void require_shape(const Tensor3& a, const Tensor3& b) {
    if (a.channels != b.channels || a.height != b.height || a.width != b.width) {
        throw ValidationError("activation shape does not match the layer");
    }
}

} // namespace

LayerPass ConstantScoreModel::forward_backward(const Tensor3& input, int, const std::string& layer) const {
    require_layer(layer, "act");
    LayerPass pass;
    pass.activations = first_channel(input);
    pass.gradients = Tensor3(1, input.height, input.width, 0.0);
    pass.score = score_;
    return pass;
}

double ConstantScoreModel::score_from_layer(const Tensor3& input, int, const std::string& layer,
                                            const Tensor3& activations) const {
    require_layer(layer, "act");
    require_shape(activations, Tensor3(1, input.height, input.width));
    return score_;
}

LayerPass MeanActivationModel::forward_backward(const Tensor3& input, int, const std::string& layer) const {
    require_layer(layer, "act");
    LayerPass pass;
    pass.activations = first_channel(input);
    const double hw = static_cast<double>(input.height) * input.width;
    pass.gradients = Tensor3(1, input.height, input.width, 1.0 / hw);
    double s = 0.0;
    for (double v : pass.activations.data) {
        s += v;
    }
    pass.score = s / hw;
    return pass;
}

double MeanActivationModel::score_from_layer(const Tensor3& input, int, const std::string& layer,
                                             const Tensor3& activations) const {
    require_layer(layer, "act");
    require_shape(activations, Tensor3(1, input.height, input.width));
    double s = 0.0;
    for (double v : activations.data) {
        s += v;
    }
    return s / (static_cast<double>(input.height) * input.width);
}

// ---- TinyConvNet ----

TinyConvNet::TinyConvNet(int in_channels, int conv1_channels, int conv2_channels, int num_classes,
                         std::uint64_t seed)
    : in_c_(in_channels), c1_(conv1_channels), c2_(conv2_channels), num_classes_(num_classes) {
    if (in_c_ < 1 || c1_ < 1 || c2_ < 1 || num_classes_ < 1) {
        throw ValidationError("TinyConvNet sizes must be positive");
    }
    std::mt19937_64 rng(seed);
    auto fill = [&rng](std::vector<double>& v, std::size_t n, double sd) {
        std::normal_distribution<double> d(0.0, sd);
        v.resize(n);
        for (auto& x : v) {
            x = d(rng);
        }
    };
    fill(w1_, static_cast<std::size_t>(c1_) * in_c_ * 9, 1.0 / std::sqrt(9.0 * in_c_));
    fill(b1_, static_cast<std::size_t>(c1_), 0.1);
    fill(w2_, static_cast<std::size_t>(c2_) * c1_ * 9, 1.0 / std::sqrt(9.0 * c1_));
    fill(b2_, static_cast<std::size_t>(c2_), 0.1);
    fill(fc_w_, static_cast<std::size_t>(num_classes_) * c2_, 1.0);
    fill(fc_b_, static_cast<std::size_t>(num_classes_), 0.1);
}

Tensor3 TinyConvNet::conv(const Tensor3& in, const std::vector<double>& w, const std::vector<double>& b,
                          int out_c) const {
    Tensor3 out(out_c, in.height, in.width);
    for (int o = 0; o < out_c; ++o) {
        for (int y = 0; y < in.height; ++y) {
            for (int x = 0; x < in.width; ++x) {
                double s = b[static_cast<std::size_t>(o)];
                for (int i = 0; i < in.channels; ++i) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = y + ky - 1;
                        if (yy < 0 || yy >= in.height) {
                            continue;
                        }
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = x + kx - 1;
                            if (xx < 0 || xx >= in.width) {
                                continue;
                            }
                            s += w[((static_cast<std::size_t>(o) * in.channels + i) * 3 + ky) * 3 + kx] *
                                 in.at(i, yy, xx);
                        }
                    }
                }
                out.at(o, y, x) = s;
            }
        }
    }
    return out;
}

namespace {

Tensor3 relu(Tensor3 t) {
    for (auto& v : t.data) {
        v = std::max(v, 0.0);
    }
    return t;
}

} // namespace

double TinyConvNet::head(const Tensor3& a2, int t) const {
    const double hw = static_cast<double>(a2.height) * a2.width;
    double score = fc_b_[static_cast<std::size_t>(t)];
    for (int c = 0; c < c2_; ++c) {
        double s = 0.0;
        for (int y = 0; y < a2.height; ++y) {
            for (int x = 0; x < a2.width; ++x) {
                s += a2.at(c, y, x);
            }
        }
        score += fc_w_[static_cast<std::size_t>(t) * c2_ + c] * s / hw;
    }
    return score;
}

void TinyConvNet::check(const Tensor3& input, int target_class, const std::string& layer) const {
    if (layer == "fc") {
        throw ValidationError("layer 'fc' has no spatial activations");
    }
    if (layer != "conv1" && layer != "conv2") {
        throw ValidationError("unknown layer '" + layer + "'");
    }
    if (input.channels != in_c_ || input.height < 1 || input.width < 1) {
        throw ValidationError("input must have " + std::to_string(in_c_) + " channels");
    }
    if (target_class < 0 || target_class >= num_classes_) {
        throw ValidationError("target class " + std::to_string(target_class) + " out of range");
    }
}

LayerPass TinyConvNet::forward_backward(const Tensor3& input, int t, const std::string& layer) const {
    check(input, t, layer);
    const Tensor3 a1 = relu(conv(input, w1_, b1_, c1_));
    const Tensor3 z2 = conv(a1, w2_, b2_, c2_);
    const Tensor3 a2 = relu(z2);
    const double hw = static_cast<double>(input.height) * input.width;

    Tensor3 g2(c2_, input.height, input.width);
    for (int c = 0; c < c2_; ++c) {
        const double g = fc_w_[static_cast<std::size_t>(t) * c2_ + c] / hw;
        std::fill_n(g2.data.begin() + static_cast<std::ptrdiff_t>(c) * input.height * input.width,
                    input.height * input.width, g);
    }
    LayerPass pass;
    pass.score = head(a2, t);
    if (layer == "conv2") {
        pass.activations = a2;
        pass.gradients = std::move(g2);
        return pass;
    }

    // Back through ReLU and the second convolution (its transpose).
    for (std::size_t k = 0; k < g2.data.size(); ++k) {
        if (z2.data[k] <= 0.0) {
            g2.data[k] = 0.0;
        }
    }
    Tensor3 g1(c1_, input.height, input.width);
    for (int o = 0; o < c2_; ++o) {
        for (int y = 0; y < input.height; ++y) {
            for (int x = 0; x < input.width; ++x) {
                const double g = g2.at(o, y, x);
                if (g == 0.0) {
                    continue;
                }
                for (int i = 0; i < c1_; ++i) {
                    for (int ky = 0; ky < 3; ++ky) {
                        const int yy = y + ky - 1;
                        if (yy < 0 || yy >= input.height) {
                            continue;
                        }
                        for (int kx = 0; kx < 3; ++kx) {
                            const int xx = x + kx - 1;
                            if (xx < 0 || xx >= input.width) {
                                continue;
                            }
                            g1.at(i, yy, xx) += w2_[((static_cast<std::size_t>(o) * c1_ + i) * 3 + ky) * 3 + kx] * g;
                        }
                    }
                }
            }
        }
    }
    pass.activations = a1;
    pass.gradients = std::move(g1);
    return pass;
}

double TinyConvNet::score_from_layer(const Tensor3& input, int t, const std::string& layer,
                                     const Tensor3& activations) const {
    check(input, t, layer);
    if (layer == "conv2") {
        require_shape(activations, Tensor3(c2_, input.height, input.width));
        return head(activations, t);
    }
    require_shape(activations, Tensor3(c1_, input.height, input.width));
    return head(relu(conv(activations, w2_, b2_, c2_)), t);
}

std::unique_ptr<CamModel> make_cam_model(const std::string& id, int num_classes, std::uint64_t seed) {
    if (id == "toy-cnn") {
        return std::make_unique<TinyConvNet>(3, 8, 8, num_classes, seed);
    }
    static const std::vector<std::string> real = {"vit-b16", "resnet50", "swinv2-b", "convnext-b"};
    if (std::find(real.begin(), real.end(), id) != real.end()) {
        throw BackendError("CAM model '" + id + "' is unavailable: backbone plug-ins are optional");
    }
    throw BackendError("unknown CAM model '" + id + "'");
}

// ---- CAM ----

CamComputation cam_from_maps(const Tensor3& a, const Tensor3& g, int out_h, int out_w) {
    require_shape(g, a);
    if (a.channels < 1 || a.height < 1 || a.width < 1) {
        throw ValidationError("empty activation map");
    }
    if (out_h < 1 || out_w < 1) {
        throw ValidationError("output size must be positive");
    }
    CamComputation cam;
    cam.activations = a;
    cam.gradients = g;
    const std::size_t plane = static_cast<std::size_t>(a.height) * a.width;
    cam.alpha.assign(static_cast<std::size_t>(a.channels), 0.0);
    for (int c = 0; c < a.channels; ++c) {
        double s = 0.0;
        for (std::size_t k = 0; k < plane; ++k) {
            s += g.data[c * plane + k];
        }
        cam.alpha[static_cast<std::size_t>(c)] = s / static_cast<double>(plane);
    }

    cv::Mat low(a.height, a.width, CV_64F, cv::Scalar(0.0));
    for (int y = 0; y < a.height; ++y) {
        for (int x = 0; x < a.width; ++x) {
            double v = 0.0;
            for (int c = 0; c < a.channels; ++c) {
                v += cam.alpha[static_cast<std::size_t>(c)] * a.at(c, y, x);
            }
            low.at<double>(y, x) = std::max(v, 0.0);
        }
    }
    cv::Mat full;
    if (out_h == a.height && out_w == a.width) {
        full = low;
    } else {
        cv::resize(low, full, cv::Size(out_w, out_h), 0.0, 0.0, cv::INTER_LINEAR);
    }
    double lo = 0.0;
    double hi = 0.0;
    cv::minMaxLoc(full, &lo, &hi);
    cam.heatmap = Eigen::MatrixXd::Zero(out_h, out_w);
    if (!(hi > lo)) {
        cam.degenerate = true;
        return cam;
    }
    for (int y = 0; y < out_h; ++y) {
        for (int x = 0; x < out_w; ++x) {
            cam.heatmap(y, x) = (full.at<double>(y, x) - lo) / (hi - lo);
        }
    }
    return cam;
}

CamComputation grad_cam(const CamModel& model, const Tensor3& input, int target_class, const std::string& layer) {
    const LayerPass pass = model.forward_backward(input, target_class, layer);
    return cam_from_maps(pass.activations, pass.gradients, input.height, input.width);
}

CamComputation grad_cam(const CamModel& model, const Image& image, int target_class, const std::string& layer) {
    return grad_cam(model, image_to_tensor(image), target_class, layer);
}

void write_cam_overlay(const Image& image, const CamComputation& cam, const std::filesystem::path& path) {
    if (cam.heatmap.rows() != image.height() || cam.heatmap.cols() != image.width()) {
        throw ValidationError("heatmap and image sizes differ");
    }
    cv::Mat heat(image.height(), image.width(), CV_8UC1);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            heat.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(cam.heatmap(y, x) * 255.0));
        }
    }
    cv::Mat color;
    cv::applyColorMap(heat, color, cv::COLORMAP_JET);
    cv::Mat bgr(image.height(), image.width(), CV_8UC3);
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            const std::uint8_t* p = image.pixel(y, x);
            bgr.at<cv::Vec3b>(y, x) = {p[2], p[1], p[0]};
        }
    }
    cv::Mat blend;
    cv::addWeighted(bgr, 0.5, color, 0.5, 0.0, blend);
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), blend)) {
        throw IoError("cannot write " + path.string());
    }
}

} // namespace fgseg
