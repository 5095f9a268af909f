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

#include "fgseg/synth.hpp"

#include "fgseg/error.hpp"
#include "fgseg/image_io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <random>

namespace fgseg {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum class Kind { Clean, Blank, Background, Fragmented, Mislabeled, Ambiguous };

struct ClassLook {
    const char* name;
    std::uint8_t g;
    std::uint8_t b;
};

constexpr ClassLook kClasses[] = {{"sparrow", 150, 80}, {"wren", 70, 150}};

class Painter {
  public:
    Painter(Image& img, std::mt19937_64& rng, const ClassLook& look) : img_(img), rng_(rng), look_(look) {}

    void background() {
        std::uniform_int_distribution<int> r(40, 200);
        std::uniform_int_distribution<int> gb(0, 255);
        for (int y = 0; y < img_.height(); ++y) {
            for (int x = 0; x < img_.width(); ++x) {
                img_.set_rgb(y, x, {static_cast<std::uint8_t>(r(rng_)), static_cast<std::uint8_t>(gb(rng_)),
                                    static_cast<std::uint8_t>(gb(rng_))});
            }
        }
    }

    void key(int y, int x) {
        if (y < 0 || y >= img_.height() || x < 0 || x >= img_.width()) {
            return;
        }
        std::uniform_int_distribution<int> jitter(-10, 10);
        img_.set_rgb(y, x, {kMarkerRed, static_cast<std::uint8_t>(look_.g + jitter(rng_)),
                            static_cast<std::uint8_t>(look_.b + jitter(rng_))});
    }

    // Filled ellipse; returns the bounding box of the painted pixels.
    BoundingBox ellipse(int cx, int cy, int a, int b) {
        int x0 = img_.width(), y0 = img_.height(), x1 = -1, y1 = -1;
        for (int y = cy - b; y <= cy + b; ++y) {
            for (int x = cx - a; x <= cx + a; ++x) {
                const double u = static_cast<double>(x - cx) / a;
                const double v = static_cast<double>(y - cy) / b;
                if (u * u + v * v <= 1.0) {
                    key(y, x);
                    x0 = std::min(x0, x);
                    y0 = std::min(y0, y);
                    x1 = std::max(x1, x);
                    y1 = std::max(y1, y);
                }
            }
        }
        return {x0, y0, x1 - x0 + 1, y1 - y0 + 1};
    }

    void rect(int x0, int y0, int x1, int y1) {
        for (int y = y0; y < y1; ++y) {
            for (int x = x0; x < x1; ++x) {
                key(y, x);
            }
        }
    }

  private:
    Image& img_;
    std::mt19937_64& rng_;
    const ClassLook& look_;
};

json det(const BoundingBox& b, double score, const std::string& label) {
    return {{"box", {b.x, b.y, b.w, b.h}}, {"score", score}, {"label", label}};
}

} // namespace

SynthCorpus make_corpus(const fs::path& dir, const CorpusOptions& opt) {
    if (opt.n_clean < 0 || opt.failures_per_kind < 0 || opt.n_clean + opt.failures_per_kind == 0) {
        throw ValidationError("corpus needs at least one image");
    }
    if (opt.width < 64 || opt.height < 48) {
        throw ValidationError("corpus images must be at least 64x48");
    }
    std::mt19937_64 rng(opt.seed);
    std::vector<Kind> kinds(static_cast<std::size_t>(opt.n_clean), Kind::Clean);
    for (Kind k : {Kind::Blank, Kind::Background, Kind::Fragmented, Kind::Mislabeled, Kind::Ambiguous}) {
        kinds.insert(kinds.end(), static_cast<std::size_t>(opt.failures_per_kind), k);
    }
    std::shuffle(kinds.begin(), kinds.end(), rng);

    const int w = opt.width;
    const int h = opt.height;
    std::map<std::string, std::optional<FlagKind>> expected;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        const ClassLook& look = kClasses[i % 2];
        const bool test = unit(rng) < opt.test_fraction;
        char name[32];
        std::snprintf(name, sizeof name, "img_%04zu.png", i);
        const std::string rel = std::string(test ? "test/" : "train/") + look.name + "/" + name;

        Image img(w, h, 3);
        Painter paint(img, rng, look);
        paint.background();
        json dets = json::array();
        std::optional<FlagKind> flag;
        auto rand_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };

        switch (kinds[i]) {
        case Kind::Clean:
        case Kind::Mislabeled: {
            const int a = rand_int(10, std::min(22, w / 2 - 6));
            const int b = rand_int(8, std::min(16, h / 2 - 6));
            const BoundingBox box = paint.ellipse(rand_int(a + 3, w - a - 4), rand_int(b + 3, h - b - 4), a, b);
            if (kinds[i] == Kind::Clean) {
                dets.push_back(det(box, 0.6 + 0.39 * unit(rng), "bird"));
                if (unit(rng) < 0.3) {
                    // Below-threshold distractor that the detector must drop.
                    dets.push_back(det({0, 0, w / 4, h / 4}, 0.1 + 0.1 * unit(rng), "branch"));
                }
            } else {
                dets.push_back(det(box, 0.9, "branch"));
                flag = FlagKind::WrongSubject;
            }
            break;
        }
        case Kind::Blank:
            flag = FlagKind::NoSubject;
            break;
        case Kind::Background: {
            // Subject fused to a keyed wall that runs off the image edge.
            const int cx = rand_int(w * 2 / 3 - 4, w * 2 / 3 + 4);
            const int cy = h / 2;
            const BoundingBox box = paint.ellipse(cx, cy, 12, 10);
            paint.rect(0, 0, w / 3, h);
            paint.rect(w / 3, cy - 2, cx, cy + 3);
            dets.push_back(det(box, 0.95, "bird"));
            flag = FlagKind::UnwantedBackground;
            break;
        }
        case Kind::Fragmented: {
            const int x0 = rand_int(2, w - 42);
            const int y0 = rand_int(2, h - 32);
            const int centres[5][2] = {{6, 6}, {34, 6}, {20, 15}, {6, 24}, {34, 24}};
            for (const auto& c : centres) {
                paint.ellipse(x0 + c[0], y0 + c[1], 2, 2);
            }
            dets.push_back(det({x0, y0, 40, 30}, 0.8, "bird"));
            flag = FlagKind::IncompleteObject;
            break;
        }
        case Kind::Ambiguous: {
            const BoundingBox left = paint.ellipse(w / 4, h / 2, 10, 8);
            const BoundingBox right = paint.ellipse(3 * w / 4, h / 2, 10, 8);
            dets.push_back(det(left, 0.9, "bird"));
            dets.push_back(det(right, 0.86, "bird"));
            flag = FlagKind::Ambiguous;
            break;
        }
        }

        write_image(dir / rel, img);
        if (!dets.empty()) {
            std::ofstream(dir / (rel + ".det.json")) << dets.dump() << '\n';
        }
        expected[rel] = flag;
    }

    SynthCorpus corpus;
    // A split with no images would leave no class directories behind.
    for (const char* split : {"train", "test"}) {
        for (const auto& c : kClasses) {
            fs::create_directories(dir / split / c.name);
        }
    }
    IngestResult ingested = load_source_dataset(dir, DatasetKind::Generic, "synth");
    if (!ingested.record_errors.empty()) {
        throw IoError("synthetic corpus has unreadable images: " + ingested.record_errors.front());
    }
    corpus.manifest = std::move(ingested.manifest);
    corpus.expected = std::move(expected);
    return corpus;
}

PipelineConfig corpus_pipeline_config(const fs::path& source_root, const fs::path& out_root) {
    PipelineConfig c;
    c.detector.vocabulary = {"bird", "branch"};
    c.subject_vocabulary = {"bird"};
    c.segmenter.model_variant = "key";
    c.source_root = source_root;
    c.out_root = out_root;
    return c;
}

FeatureFixture make_feature_fixture(const FeatureFixtureOptions& opt) {
    if (opt.classes < 2 || opt.signal_dims < 1 || opt.noise_dims < 0 || opt.train_per_class < 2 ||
        opt.test_per_class < 1) {
        throw ValidationError("invalid feature fixture options");
    }
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> unit(0.0, 1.0);
    const int d = opt.signal_dims + opt.noise_dims;
    Eigen::MatrixXd means(opt.classes, opt.signal_dims);
    for (int c = 0; c < opt.classes; ++c) {
        for (int k = 0; k < opt.signal_dims; ++k) {
            means(c, k) = opt.class_separation * unit(rng);
        }
    }

    FeatureFixture fx;
    for (int c = 0; c < opt.classes; ++c) {
        fx.classes.push_back("class_" + std::to_string(c));
    }
    auto sample = [&](int per_class, LabelledFeatures& src, LabelledFeatures& fg) {
        const int n = per_class * opt.classes;
        src.features.resize(n, d);
        src.labels.clear();
        for (int i = 0; i < n; ++i) {
            const int c = i % opt.classes;
            for (int k = 0; k < opt.signal_dims; ++k) {
                src.features(i, k) = means(c, k) + unit(rng);
            }
            for (int k = opt.signal_dims; k < d; ++k) {
                src.features(i, k) = opt.noise_sd * unit(rng);
            }
            src.labels.push_back(c);
        }
        fg = src;
        fg.features.rightCols(opt.noise_dims).setZero();
    };
    sample(opt.train_per_class, fx.source_train, fx.fg_train);
    sample(opt.test_per_class, fx.source_test, fx.fg_test);
    return fx;
}

} // namespace fgseg
