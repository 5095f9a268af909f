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
#include "fgseg/pipeline.hpp"
#include "fgseg/qa.hpp"
#include "fgseg/synth.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

namespace fgseg {
namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- compositing ----

// Per-pixel oracle written independently of the kernels.
Image oracle_composite(const Image& img, const BinaryMask& m, const CompositeConfig& cfg) {
    const bool alpha = cfg.fill == CompositeConfig::Fill::Transparent;
    Image out(img.width(), img.height(), alpha ? 4 : 3);
    for (int r = 0; r < img.height(); ++r) {
        for (int c = 0; c < img.width(); ++c) {
            std::uint8_t* o = out.pixel(r, c);
            if (m.at(r, c)) {
                const Rgb p = img.rgb(r, c);
                o[0] = p.r;
                o[1] = p.g;
                o[2] = p.b;
                if (alpha) o[3] = 255;
            } else if (alpha) {
                o[0] = o[1] = o[2] = o[3] = 0;
            } else {
                o[0] = cfg.color.r;
                o[1] = cfg.color.g;
                o[2] = cfg.color.b;
            }
        }
    }
    return out;
}

TEST(Composite, FullMaskIsIdentity) {
    std::mt19937_64 rng(1);
    const Image img = test::random_image(rng, 17, 9);
    EXPECT_EQ(compose_foreground(img, BinaryMask(9, 17, 1), {}), img);
}

TEST(Composite, EmptyMaskIsUniformFill) {
    std::mt19937_64 rng(2);
    const Image img = test::random_image(rng, 6, 5);
    CompositeConfig cfg;
    cfg.color = {9, 8, 7};
    const Image out = compose_foreground(img, BinaryMask(5, 6, 0), cfg);
    for (int r = 0; r < 5; ++r) {
        for (int c = 0; c < 6; ++c) {
            ASSERT_EQ(out.rgb(r, c), (Rgb{9, 8, 7}));
        }
    }
}

TEST(Composite, CheckerboardMatchesOracle) {
    std::mt19937_64 rng(3);
    const Image img = test::random_image(rng, 31, 23);
    BinaryMask m(23, 31);
    for (int r = 0; r < 23; ++r) {
        for (int c = 0; c < 31; ++c) {
            m.at(r, c) = static_cast<std::uint8_t>((r + c) % 2);
        }
    }
    CompositeConfig opaque;
    EXPECT_EQ(compose_foreground(img, m, opaque), oracle_composite(img, m, opaque));
    CompositeConfig alpha;
    alpha.fill = CompositeConfig::Fill::Transparent;
    alpha.format = CompositeConfig::FormatPolicy::ForcePng;
    EXPECT_EQ(compose_foreground(img, m, alpha), oracle_composite(img, m, alpha));
}

TEST(Composite, PreservesForegroundAndErasesBackgroundForRandomInputs) {
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 100; ++trial) {
        const int w = 1 + static_cast<int>(rng() % 50);
        const int h = 1 + static_cast<int>(rng() % 50);
        const Image a = test::random_image(rng, w, h);
        Image b = test::random_image(rng, w, h);
        const BinaryMask m = test::random_mask(rng, h, w);
        // b shares a's foreground pixels; background differs arbitrarily.
        for (int r = 0; r < h; ++r) {
            for (int c = 0; c < w; ++c) {
                if (m.at(r, c)) b.set_rgb(r, c, a.rgb(r, c));
            }
        }
        const Image oa = compose_foreground(a, m, {});
        ASSERT_EQ(oa.width(), w);
        ASSERT_EQ(oa.height(), h);
        ASSERT_EQ(oa, oracle_composite(a, m, {}));
        // Zero information from background pixels.
        ASSERT_EQ(oa, compose_foreground(b, m, {}));
    }
}

TEST(Composite, RejectsMismatchAndTransparentJpeg) {
    EXPECT_THROW(compose_foreground(Image(4, 4), BinaryMask(4, 5), {}), ValidationError);
    CompositeConfig cfg;
    cfg.fill = CompositeConfig::Fill::Transparent;
    EXPECT_THROW(cfg.validate(), ConfigError);
    cfg.format = CompositeConfig::FormatPolicy::ForcePng;
    EXPECT_EQ(cfg.output_path("a/b.jpg"), "a/b.png");
    EXPECT_EQ(CompositeConfig{}.output_path("a/b.jpg"), "a/b.jpg");
}

// ---- subject selection ----

Detection det(double score, int x = 0) { return {{x, 0, 4, 4}, score, "bird", false}; }

TEST(SelectSubject, Examples) {
    DetectorConfig cfg;
    cfg.vocabulary = {"bird"};
    cfg.ambiguity_margin = 0.1;
    EXPECT_FALSE(select_subject({}, cfg).chosen.has_value());
    EXPECT_FALSE(select_subject({}, cfg).ambiguous);
    const std::vector<Detection> one{det(0.9)};
    EXPECT_EQ(*select_subject(one, cfg).chosen, one[0]);
    EXPECT_FALSE(select_subject(one, cfg).ambiguous);
    const std::vector<Detection> two{det(0.9), det(0.85, 5)};
    EXPECT_EQ(*select_subject(two, cfg).chosen, two[0]);
    EXPECT_TRUE(select_subject(two, cfg).ambiguous);
    const std::vector<Detection> apart{det(0.9), det(0.7, 5)};
    EXPECT_FALSE(select_subject(apart, cfg).ambiguous);
}

// ---- auto_flag ----

const std::vector<std::string> kBird{"bird"};

std::vector<FlagKind> kinds(const std::vector<QAFlag>& flags) {
    std::vector<FlagKind> out;
    for (const auto& f : flags) out.push_back(f.kind);
    return out;
}

BinaryMask rect_mask(int h, int w, int x0, int y0, int x1, int y1) {
    BinaryMask m(h, w);
    for (int r = y0; r < y1; ++r)
        for (int c = x0; c < x1; ++c) m.at(r, c) = 1;
    return m;
}

TEST(AutoFlag, NoDetectionIsNoSubjectOnly) {
    EXPECT_EQ(kinds(auto_flag(std::nullopt, std::nullopt, {}, {kBird, true})),
              (std::vector<FlagKind>{FlagKind::NoSubject}));
}

TEST(AutoFlag, WholeImageMaskOverSmallBoxIsUnwantedBackground) {
    // Box covers 30% of a 100x100 image; ratio 10000 / 3000 = 3.33.
    const Detection d{{20, 20, 50, 60}, 0.9, "bird", false};
    const auto flags = auto_flag(d, rle_encode(BinaryMask(100, 100, 1)), {}, {kBird, false});
    ASSERT_EQ(kinds(flags), (std::vector<FlagKind>{FlagKind::UnwantedBackground}));
    EXPECT_NEAR(*flags[0].metric, 10000.0 / 3000.0, 1e-12);
}

TEST(AutoFlag, ScatteredBlobsAreIncomplete) {
    BinaryMask m(60, 60);
    for (const auto& [r, c] : std::vector<std::pair<int, int>>{{12, 12}, {12, 40}, {25, 26}, {40, 12}, {40, 40}}) {
        for (int dr = -3; dr <= 3; ++dr)
            for (int dc = -3; dc <= 3; ++dc) m.at(r + dr, c + dc) = 1;
    }
    const Detection d{{10, 10, 34, 34}, 0.9, "bird", false};
    // 245 / 1156 = 0.21, and 5 components.
    const auto flags = auto_flag(d, rle_encode(m), {}, {kBird, false});
    EXPECT_EQ(kinds(flags), (std::vector<FlagKind>{FlagKind::IncompleteObject}));
}

TEST(AutoFlag, CleanRecordHasNoFlags) {
    const Detection d{{10, 10, 20, 20}, 0.9, "bird", false};
    EXPECT_TRUE(auto_flag(d, rle_encode(rect_mask(50, 50, 12, 12, 28, 28)), {}, {kBird, false}).empty());
}

TEST(AutoFlag, WrongLabelAndAmbiguityCombine) {
    const Detection d{{10, 10, 20, 20}, 0.9, "branch", false};
    const auto mask = rle_encode(rect_mask(50, 50, 12, 12, 28, 28));
    EXPECT_EQ(kinds(auto_flag(d, mask, {}, {kBird, true})),
              (std::vector<FlagKind>{FlagKind::WrongSubject, FlagKind::Ambiguous}));
    Detection manual = d;
    manual.manual = true;
    EXPECT_TRUE(auto_flag(manual, mask, {}, {kBird, false}).empty());
}

TEST(AutoFlag, BorderContactIsUnwantedBackground) {
    const Detection d{{0, 0, 50, 50}, 0.9, "bird", false};
    EXPECT_EQ(kinds(auto_flag(d, rle_encode(BinaryMask(50, 50, 1)), {}, {kBird, false})),
              (std::vector<FlagKind>{FlagKind::UnwantedBackground}));
}

TEST(AutoFlag, MissingMaskIsIncomplete) {
    const Detection d{{0, 0, 5, 5}, 0.9, "bird", false};
    EXPECT_EQ(kinds(auto_flag(d, std::nullopt, {}, {kBird, false})),
              (std::vector<FlagKind>{FlagKind::IncompleteObject}));
}

TEST(AutoFlag, DeterministicOverRandomInputs) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 100; ++trial) {
        const BinaryMask m = test::random_mask(rng, 20, 20);
        const Detection d{{static_cast<int>(rng() % 10), static_cast<int>(rng() % 10), 5, 5}, 0.5, "bird", false};
        std::optional<SegmentationMask> enc;
        if (m.area() > 0) enc = rle_encode(m);
        const bool ambiguous = rng() % 2 == 0;
        const auto a = auto_flag(d, enc, {}, {kBird, ambiguous});
        const auto b = auto_flag(d, enc, {}, {kBird, ambiguous});
        ASSERT_EQ(a, b);
        ASSERT_TRUE(std::is_sorted(a.begin(), a.end(), [](const QAFlag& x, const QAFlag& y) { return x.kind < y.kind; }));
    }
}

TEST(Thresholds, Validation) {
    QAThresholds t;
    EXPECT_NO_THROW(t.validate());
    t.min_mask_to_box_ratio = 2.0;
    EXPECT_THROW(t.validate(), ConfigError);
}

// ---- queue ----

TEST(Queue, FlaggedPendingInOrderAndIdempotent) {
    DatasetManifest m;
    m.classes = {"a"};
    for (int i = 0; i < 4; ++i) {
        ImageRecord r;
        r.record_id = std::to_string(i);
        m.records.push_back(r);
    }
    EXPECT_TRUE(enqueue_flagged(m).empty());
    m.records[2].flags.push_back({FlagKind::NoSubject, "", std::nullopt});
    EXPECT_EQ(enqueue_flagged(m), (std::vector<std::string>{"2"}));
    EXPECT_EQ(enqueue_flagged(m), enqueue_flagged(m));
    m.records[0].flags.push_back({FlagKind::Ambiguous, "", std::nullopt});
    m.records[0].review = ReviewState::Rejected;
    EXPECT_EQ(enqueue_flagged(m), (std::vector<std::string>{"2"}));
    const auto st = flag_stats(m);
    EXPECT_EQ(st.flagged, 2u);
    EXPECT_EQ(st.queue_depth, 1u);
}

// ---- pipeline ----

// Four-record fixture: three marker rectangles and one blank image.
struct Fixture {
    test::TempDir src{"fgseg_src"};
    test::TempDir out{"fgseg_out"};
    DatasetManifest manifest;
    PipelineConfig config;
    std::vector<BoundingBox> boxes{{4, 5, 20, 12}, {10, 2, 15, 25}, {0, 0, 1, 1}, {30, 20, 9, 9}};

    Fixture() {
        std::mt19937_64 rng(7);
        for (int i = 0; i < 4; ++i) {
            Image img = test::random_image(rng, 48, 32);
            for (int r = 0; r < img.height(); ++r)
                for (int c = 0; c < img.width(); ++c) img.pixel(r, c)[0] = std::min<std::uint8_t>(img.pixel(r, c)[0], 200);
            if (i != 2) {
                const auto& b = boxes[static_cast<std::size_t>(i)];
                for (int r = b.y; r < b.y + b.h; ++r)
                    for (int c = b.x; c < b.x + b.w; ++c) img.pixel(r, c)[0] = kMarkerRed;
            }
            write_image(src / ("c/" + std::to_string(i) + ".png"), img);
        }
        manifest = load_source_dataset(src.path(), DatasetKind::Generic, "fix").manifest;
        config.detector.vocabulary = {"bird"};
        config.source_root = src.path();
        config.out_root = out.path();
    }
};

TEST(Pipeline, CleanRecordMatchesOracleComposite) {
    Fixture fx;
    StubDetector det;
    StubSegmenter seg;
    const ImageRecord r = process_record(fx.manifest.records[0], det, seg, fx.config);
    ASSERT_TRUE(r.flags.empty());
    ASSERT_TRUE(r.fg_path.has_value());
    EXPECT_EQ(r.detection->box, fx.boxes[0]);
    const Image src = read_image(fx.src / "c/0.png");
    const Image fg = read_image(fx.out / *r.fg_path);
    const auto& b = fx.boxes[0];
    EXPECT_EQ(fg, oracle_composite(src, rect_mask(32, 48, b.x, b.y, b.x + b.w, b.y + b.h), {}));
}

TEST(Pipeline, BlankRecordIsNoSubject) {
    Fixture fx;
    StubDetector det;
    StubSegmenter seg;
    const ImageRecord r = process_record(fx.manifest.records[2], det, seg, fx.config);
    EXPECT_EQ(kinds(r.flags), (std::vector<FlagKind>{FlagKind::NoSubject}));
    EXPECT_FALSE(r.fg_path.has_value());
    EXPECT_FALSE(r.detection.has_value());
}

TEST(Pipeline, ReprocessingIsByteIdentical) {
    Fixture fx;
    StubDetector det;
    StubSegmenter seg;
    const ImageRecord a = process_record(fx.manifest.records[1], det, seg, fx.config);
    const std::string bytes = slurp(fx.out / *a.fg_path);
    const ImageRecord b = process_record(a, det, seg, fx.config);
    EXPECT_EQ(a, b);
    EXPECT_EQ(slurp(fx.out / *b.fg_path), bytes);
}

TEST(Pipeline, UnreadableImageBecomesProcessingError) {
    Fixture fx;
    std::ofstream(fx.src / "c/1.png", std::ios::trunc) << "not an image";
    const auto run = process_dataset(fx.manifest, fx.config, 2);
    ASSERT_EQ(run.manifest.records.size(), 4u);
    EXPECT_TRUE(run.manifest.records[1].has_flag(FlagKind::ProcessingError));
    ASSERT_EQ(run.errors.size(), 1u);
    EXPECT_EQ(run.errors[0].rfind(fx.manifest.records[1].record_id, 0), 0u);
    EXPECT_EQ(run.stats.processed, 4u);
}

TEST(Pipeline, StatsAndParallelismInvariance) {
    Fixture fx;
    const auto one = process_dataset(fx.manifest, fx.config, 1);
    const auto four = process_dataset(fx.manifest, fx.config, 4);
    const auto serial = process_dataset_serial(fx.manifest, fx.config);
    EXPECT_EQ(one.manifest, four.manifest);
    EXPECT_EQ(one.manifest, serial.manifest);
    EXPECT_EQ(one.stats.processed, 4u);
    EXPECT_EQ(one.stats.clean, 3u);
    EXPECT_EQ(one.stats.flagged, 1u);
    EXPECT_EQ(one.stats.per_flag.at(FlagKind::NoSubject), 1u);
    EXPECT_EQ(one.stats.processed, one.stats.clean + one.stats.flagged);
    EXPECT_GT(one.stats.images_per_second, 0.0);
    EXPECT_DOUBLE_EQ(one.stats.images_per_second, one.stats.processed / one.stats.wall_seconds);
    EXPECT_EQ(one.manifest.name, "fix_FG");
    EXPECT_EQ(one.manifest.provenance.source, "fix");
    EXPECT_EQ(one.manifest.provenance.config_digest, fx.config.digest());
    for (std::size_t i = 0; i < 4; ++i) {
        EXPECT_EQ(one.manifest.records[i].record_id, fx.manifest.records[i].record_id);
    }
    EXPECT_THROW(process_dataset(fx.manifest, fx.config, 0), ValidationError);
}

TEST(Pipeline, ForegroundMirrorsSourceLayoutAndDimensions) {
    Fixture fx;
    const auto run = process_dataset(fx.manifest, fx.config, 2);
    for (const auto& r : run.manifest.records) {
        if (!r.fg_path) continue;
        EXPECT_EQ(*r.fg_path, r.source_path);
        const Image s = read_image(fx.src / r.source_path);
        const Image f = read_image(fx.out / *r.fg_path);
        EXPECT_EQ(s.width(), f.width());
        EXPECT_EQ(s.height(), f.height());
    }
}

TEST(Pipeline, ConfigDigestTracksOutputRelevantFields) {
    PipelineConfig a;
    a.detector.vocabulary = {"bird"};
    PipelineConfig b = a;
    b.out_root = "/elsewhere";
    EXPECT_EQ(a.digest(), b.digest());
    b.thresholds.max_components = 4;
    EXPECT_NE(a.digest(), b.digest());
}

// ---- adversarial corpus ----

TEST(Corpus, InjectedFailuresGetTheirFlagsAndCleanImagesStayClean) {
    test::TempDir src, out;
    CorpusOptions opt;
    opt.n_clean = 40;
    opt.failures_per_kind = 2;
    opt.seed = 99;
    const auto corpus = make_corpus(src.path(), opt);
    const auto run = process_dataset(corpus.manifest, corpus_pipeline_config(src.path(), out.path()), 3);
    std::size_t false_flags = 0;
    for (const auto& r : run.manifest.records) {
        const auto& want = corpus.expected.at(r.record_id);
        if (want) {
            EXPECT_TRUE(r.has_flag(*want)) << r.record_id << " missing " << to_string(*want);
        } else if (!r.flags.empty()) {
            ++false_flags;
        }
    }
    EXPECT_LE(static_cast<double>(false_flags) / opt.n_clean, 0.02);
}

} // namespace
} // namespace fgseg
