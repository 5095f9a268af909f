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

#include "fgseg/error.hpp"
#include "fgseg/image_io.hpp"
#include "fgseg/models.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>

namespace fgseg {
namespace {

DetectorConfig bird_config() {
    DetectorConfig c;
    c.vocabulary = {"bird"};
    return c;
}

Image with_marker_rect(int w, int h, const BoundingBox& box) {
    Image img(w, h, 3, 90);
    for (int r = box.y; r < box.y + box.h; ++r) {
        for (int c = box.x; c < box.x + box.w; ++c) {
            img.set_rgb(r, c, {kMarkerRed, 10, 10});
        }
    }
    return img;
}

TEST(Detector, MarkerRectangleIsDetectedExactly) {
    const BoundingBox box{7, 5, 13, 9};
    StubDetector det;
    const auto out = det.detect(with_marker_rect(40, 30, box), bird_config());
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].box, box);
    EXPECT_EQ(out[0].score, 1.0);
    EXPECT_EQ(out[0].label, "bird");
}

TEST(Detector, BlankImageYieldsNothing) {
    StubDetector det;
    EXPECT_TRUE(det.detect(Image(20, 20, 3, 40), bird_config()).empty());
}

TEST(Detector, EmptyVocabularyIsConfigError) {
    StubDetector det;
    EXPECT_THROW(det.detect(Image(4, 4), DetectorConfig{}), ConfigError);
}

TEST(Detector, SidecarIsThresholdedClippedFilteredAndSorted) {
    test::TempDir dir;
    const auto src = dir / "img.png";
    write_image(src, Image(50, 40, 3, 0));
    std::ofstream(dir / "img.png.det.json") << R"([
        {"box":[10,10,5,5],"score":0.5,"label":"bird"},
        {"box":[40,30,20,20],"score":0.8,"label":"bird"},
        {"box":[0,0,5,5],"score":0.2,"label":"bird"},
        {"box":[1,1,5,5],"score":0.9,"label":"tree"},
        {"box":[2,2,5,5],"score":0.5,"label":"bird"}
    ])";
    StubDetector det;
    const auto out = det.detect(read_image(src), bird_config(), src);
    ASSERT_EQ(out.size(), 3u);
    EXPECT_EQ(out[0].box, (BoundingBox{40, 30, 10, 10}));
    EXPECT_EQ(out[1].box, (BoundingBox{2, 2, 5, 5}));
    EXPECT_EQ(out[2].box, (BoundingBox{10, 10, 5, 5}));
    for (const auto& d : out) {
        EXPECT_GE(d.score, 0.3);
    }
}

TEST(Detector, ReferenceConfigNamesThePaperBackend) {
    const auto c = reference_detector_config(DatasetKind::Cub);
    EXPECT_EQ(c.backend_id, "detic");
    EXPECT_EQ(c.model_variant, "Detic_LI21k_CLIP_SwinB");
    EXPECT_EQ(c.vocabulary, (std::vector<std::string>{"bird"}));
    EXPECT_EQ(default_vocabulary(DatasetKind::Aircraft), (std::vector<std::string>{"airplane", "aircraft"}));
    EXPECT_EQ(reference_segmenter_config().model_variant, "ViT-L SAM");
}

TEST(Segmenter, BoxModeAreaEqualsBoxArea) {
    StubSegmenter seg;
    const BoundingBox box{3, 4, 11, 7};
    const auto m = seg.segment(Image(30, 20), box, {"stub-segmenter", "box"});
    EXPECT_EQ(m.height, 20);
    EXPECT_EQ(m.width, 30);
    EXPECT_EQ(m.area(), static_cast<std::uint64_t>(box.area()));
    EXPECT_NO_THROW(validate_mask(m));
}

TEST(Segmenter, ShrinkModeIsCenteredInset) {
    StubSegmenter seg;
    const auto m = rle_decode(seg.segment(Image(20, 20), {5, 5, 10, 10}, {"stub-segmenter", "shrink"}));
    EXPECT_EQ(m.area(), 64u);
    for (int r = 0; r < 20; ++r) {
        for (int c = 0; c < 20; ++c) {
            const bool inside = r >= 6 && r < 14 && c >= 6 && c < 14;
            ASSERT_EQ(m.at(r, c), inside ? 1 : 0) << r << "," << c;
        }
    }
}

TEST(Segmenter, KeyModeKeepsMarkerRegionsTouchingTheBox) {
    Image img = with_marker_rect(30, 20, {2, 2, 4, 4});
    for (int c = 20; c < 25; ++c) {
        img.set_rgb(10, c, {kMarkerRed, 0, 0});
    }
    StubSegmenter seg;
    const auto m = rle_decode(seg.segment(img, {3, 3, 2, 2}, {"stub-segmenter", "key"}));
    EXPECT_EQ(m.area(), 16u);
    EXPECT_EQ(m.at(10, 22), 0);
}

TEST(Segmenter, EmptyMaskIsSegmentationFailure) {
    StubSegmenter seg;
    EXPECT_THROW(seg.segment(Image(10, 10), {0, 0, 2, 2}, {"stub-segmenter", "shrink"}), SegmentationFailure);
    EXPECT_THROW(seg.segment(Image(10, 10), {0, 0, 4, 4}, {"stub-segmenter", "key"}), SegmentationFailure);
}

TEST(Segmenter, BoxOutsideImageIsValidationError) {
    StubSegmenter seg;
    EXPECT_THROW(seg.segment(Image(10, 10), {5, 5, 6, 2}, {}), ValidationError);
}

TEST(Segmenter, RandomBoxesGiveValidMasks) {
    std::mt19937_64 rng(31);
    StubSegmenter seg;
    for (int trial = 0; trial < 200; ++trial) {
        const int w = 3 + static_cast<int>(rng() % 40);
        const int h = 3 + static_cast<int>(rng() % 40);
        const int bw = 3 + static_cast<int>(rng() % static_cast<unsigned>(w - 2));
        const int bh = 3 + static_cast<int>(rng() % static_cast<unsigned>(h - 2));
        const BoundingBox box{static_cast<int>(rng() % static_cast<unsigned>(w - bw + 1)),
                              static_cast<int>(rng() % static_cast<unsigned>(h - bh + 1)), bw, bh};
        for (const char* mode : {"box", "shrink"}) {
            const auto m = seg.segment(Image(w, h), box, {"stub-segmenter", mode});
            ASSERT_NO_THROW(validate_mask(m));
            ASSERT_EQ(m.height, h);
            ASSERT_EQ(m.width, w);
        }
    }
}

TEST(Extractor, DeterministicAndShaped) {
    std::mt19937_64 rng(41);
    std::vector<Image> batch;
    for (int i = 0; i < 5; ++i) {
        batch.push_back(test::random_image(rng, 20 + i, 17));
    }
    StubExtractor ex;
    FeatureExtractorConfig cfg{"stub-extractor", 16, 3};
    const Eigen::MatrixXd a = ex.extract(batch, cfg);
    const Eigen::MatrixXd b = ex.extract(batch, cfg);
    EXPECT_EQ(a.rows(), 5);
    EXPECT_EQ(a.cols(), 16);
    EXPECT_TRUE(a == b);
    const std::vector<Image> same{batch[0], batch[0]};
    const Eigen::MatrixXd s = ex.extract(same, cfg);
    EXPECT_TRUE(s.row(0) == s.row(1));
}

TEST(Extractor, SinglePixelChangeMovesEmbedding) {
    std::mt19937_64 rng(42);
    StubExtractor ex;
    FeatureExtractorConfig cfg{"stub-extractor", 16, 0};
    for (int trial = 0; trial < 20; ++trial) {
        Image a = test::random_image(rng, 24, 24);
        Image b = a;
        const int r = static_cast<int>(rng() % 24);
        const int c = static_cast<int>(rng() % 24);
        b.pixel(r, c)[rng() % 3] ^= 1;
        const std::vector<Image> batch{a, b};
        const Eigen::MatrixXd out = ex.extract(batch, cfg);
        EXPECT_FALSE(out.row(0) == out.row(1));
    }
}

TEST(Extractor, EmptyBatchAndBadDimRejected) {
    StubExtractor ex;
    EXPECT_THROW(ex.extract({}, {}), ValidationError);
    const std::vector<Image> one{Image(4, 4)};
    EXPECT_THROW(ex.extract(one, {"stub-extractor", 0, 0}), ConfigError);
}

TEST(Registry, StubsAvailableAndRealBackendsExplainThemselves) {
    EXPECT_NE(make_detector("stub-detector"), nullptr);
    EXPECT_NE(make_segmenter("stub-segmenter"), nullptr);
    EXPECT_NE(make_extractor("stub-extractor"), nullptr);
    try {
        make_segmenter("sam");
        FAIL() << "expected BackendError";
    } catch (const BackendError& e) {
        EXPECT_NE(std::string(e.what()).find("FGSEG_SAM_CHECKPOINT"), std::string::npos);
    }
    EXPECT_THROW(make_detector("nope"), BackendError);
    EXPECT_THROW(make_detector("grounding-dino"), BackendError);
}

TEST(Registry, PluginRegistrationReplacesFactory) {
    register_extractor("test-extractor", [] { return std::make_unique<StubExtractor>(); });
    EXPECT_TRUE(backend_available("test-extractor"));
    EXPECT_NE(make_extractor("test-extractor"), nullptr);
}

} // namespace
} // namespace fgseg
