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

#include "fgseg/cli.hpp"

#include "fgseg/analyze.hpp"
#include "fgseg/bench.hpp"
#include "fgseg/config.hpp"
#include "fgseg/error.hpp"
#include "fgseg/expand.hpp"
#include "fgseg/image_io.hpp"
#include "fgseg/manifest.hpp"
#include "fgseg/pipeline.hpp"
#include "fgseg/qa.hpp"
#include "fgseg/review.hpp"
#include "fgseg/review_service.hpp"
#include "fgseg/synth.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <csignal>
#include <fstream>
#include <iostream>

namespace fgseg {

namespace fs = std::filesystem;

namespace {

struct Globals {
    std::string config_file;
    std::vector<std::string> overrides;
};

RunConfig build_config(const Globals& g) {
    RunConfig rc;
    if (!g.config_file.empty()) {
        rc.merge_file(g.config_file);
    }
    for (const auto& o : g.overrides) {
        rc.set_override(o);
    }
    return rc;
}

void write_text(const fs::path& path, const std::string& text) {
    if (!path.parent_path().empty()) {
        fs::create_directories(path.parent_path());
    }
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
}

// Resolves the vocabulary and backends for a manifest and returns the
// pipeline configuration the run uses.
PipelineConfig pipeline_config(RunConfig& rc, const DatasetManifest& m, const fs::path& out_root) {
    if (rc.detector().vocabulary.empty()) {
        rc.set("detector.vocabulary", default_vocabulary(m.kind));
    }
    PipelineConfig pc;
    pc.detector = rc.detector();
    pc.segmenter = rc.segmenter();
    pc.composite = rc.composite();
    pc.thresholds = rc.thresholds();
    pc.subject_vocabulary = rc.subject_vocabulary();
    pc.source_root = m.root;
    pc.out_root = out_root;
    pc.validate();
    return pc;
}

void print_stats(std::ostream& out, const PipelineStats& s) {
    out << "processed: " << s.processed << "\nclean: " << s.clean << "\nflagged: " << s.flagged << '\n';
    for (const auto& [kind, n] : s.per_flag) {
        out << "  " << to_string(kind) << ": " << n << '\n';
    }
    out << "wall_seconds: " << s.wall_seconds << "\nimages_per_second: " << s.images_per_second << '\n';
}

const ImageRecord& require_record(const DatasetManifest& m, const std::string& id) {
    const ImageRecord* r = m.find(id);
    if (r == nullptr) {
        throw NotFoundError("no record '" + id + "' in manifest " + m.name);
    }
    return *r;
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= s.size()) {
        const auto comma = s.find(',', start);
        const auto part = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!part.empty()) {
            out.push_back(part);
        }
        if (comma == std::string::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::vector<std::string> backbones_in(const std::vector<ExperimentResult>& results) {
    std::vector<std::string> out;
    for (const auto& r : results) {
        if (std::find(out.begin(), out.end(), r.spec.backbone_id) == out.end()) {
            out.push_back(r.spec.backbone_id);
        }
    }
    return out;
}

ReviewService* g_service = nullptr;

extern "C" void stop_service(int) {
    if (g_service != nullptr) {
        g_service->stop();
    }
}

} // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"fgseg: foreground-only dataset curation, benchmarking and analysis", "fgseg"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("-c,--config", g.config_file, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("-s,--set", g.overrides, "override a config value, e.g. detector.confidence_threshold=0.4");

    // ingest
    auto* ingest = app.add_subcommand("ingest", "read a dataset's published layout into a manifest");
    std::string kind_text;
    std::string root;
    std::string out_path;
    std::string name;
    ingest->add_option("--kind", kind_text, "cub | cars | aircraft | generic")->required();
    ingest->add_option("--root", root, "dataset root")->required()->check(CLI::ExistingDirectory);
    ingest->add_option("--out", out_path, "manifest to write")->required();
    ingest->add_option("--name", name, "manifest name (default: the dataset's short name)");

    // process
    auto* process = app.add_subcommand("process", "detect, segment, flag and composite every record");
    std::string manifest_path;
    std::string out_root;
    std::string detector_id;
    std::string segmenter_id;
    int workers = 1;
    process->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    process->add_option("--out-root", out_root, "foreground image root")->required();
    process->add_option("--out", out_path, "output manifest (default <out-root>/manifest.jsonl)");
    process->add_option("--detector", detector_id, "detector backend id");
    process->add_option("--segmenter", segmenter_id, "segmenter backend id");
    process->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

    // review-serve
    auto* serve = app.add_subcommand("review-serve", "serve the review API for a processed manifest");
    std::string log_path;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string ui_dir;
    serve->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    serve->add_option("--log", log_path, "decision log (created if missing)")->required();
    serve->add_option("--host", host);
    serve->add_option("--port", port, "0 picks a free port");
    serve->add_option("--ui", ui_dir, "static UI assets")->check(CLI::ExistingDirectory);

    // export
    auto* exp = app.add_subcommand("export", "materialize the release layout");
    std::string rejected = "drop";
    exp->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
    exp->add_option("--log", log_path, "decision log to replay first")->check(CLI::ExistingFile);
    exp->add_option("--out", out_root, "release directory")->required();
    exp->add_option("--rejected", rejected, "drop | keep-source")
        ->check(CLI::IsMember({"drop", "keep-source"}));

    // expand
    auto* expand = app.add_subcommand("expand", "derived annotations from foreground masks");
    expand->require_subcommand(1);
    std::string record_id;
    auto* contours = expand->add_subcommand("contours", "polygon outlines of a record's mask (JSON)");
    auto* histogram = expand->add_subcommand("histogram", "joint RGB histogram of a record's foreground (CSV)");
    auto* replace = expand->add_subcommand("replace-bg", "paste a record's foreground onto another background");
    int bins = 8;
    std::string background;
    for (auto* sub : {contours, histogram, replace}) {
        sub->add_option("--manifest", manifest_path)->required()->check(CLI::ExistingFile);
        sub->add_option("--record", record_id)->required();
        sub->add_option("--out", out_path)->required();
    }
    histogram->add_option("--bins", bins, "bins per channel")->check(CLI::Range(1, 256));
    replace->add_option("--background", background)->required()->check(CLI::ExistingFile);

    // bench
    auto* bench = app.add_subcommand("bench", "cross-validation benchmark");
    bench->require_subcommand(1);
    auto* bench_run = bench->add_subcommand("run", "run the four-cell protocol per dataset pair");
    auto* bench_report = bench->add_subcommand("report", "table, claim summary and charts from results");
    std::vector<std::string> manifests;
    std::string results_dir;
    std::string backbones_text;
    bool fixture = false;
    bench_run->add_option("--manifests", manifests, "source and _FG manifests");
    bench_run->add_flag("--fixture", fixture, "use the synthetic feature fixture instead of manifests");
    bench_run->add_option("--results", results_dir, "results store directory")->required();
    bench_run->add_option("--backbones", backbones_text, "comma-separated backbone ids (default from config)");
    bench_run->add_option("--workers", workers)->check(CLI::PositiveNumber);
    std::string results_csv;
    bool reference = false;
    bench_report->add_option("--results", results_csv, "results directory or CSV");
    bench_report->add_flag("--reference", reference, "report the shipped published table");
    bench_report->add_option("--out", out_root, "artifact directory");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "feature-space and saliency analysis");
    analyze->require_subcommand(1);
    auto* tsne = analyze->add_subcommand("tsne", "t-SNE scatter and cluster metrics, source vs foreground");
    std::string fg_manifest_path;
    std::string split_text;
    int max_classes = 0;
    std::string metric_space = "embedding";
    tsne->add_option("--manifest", manifest_path, "source manifest")->required()->check(CLI::ExistingFile);
    tsne->add_option("--fg-manifest", fg_manifest_path, "foreground manifest")->required()->check(CLI::ExistingFile);
    tsne->add_option("--split", split_text, "train | test")->required()->check(CLI::IsMember({"train", "test"}));
    tsne->add_option("--classes", max_classes, "use the first N classes")->required()->check(CLI::PositiveNumber);
    tsne->add_option("--metric-space", metric_space)->check(CLI::IsMember({"embedding", "projection"}));
    tsne->add_option("--out", out_root, "artifact directory")->required();
    auto* cam = analyze->add_subcommand("cam", "Grad-CAM heatmap for one image");
    std::string image_path;
    std::string model_id = "toy-cnn";
    std::string layer = "conv2";
    int num_classes = 2;
    int target = 0;
    std::uint64_t seed = 0;
    cam->add_option("--image", image_path)->required()->check(CLI::ExistingFile);
    cam->add_option("--model", model_id);
    cam->add_option("--layer", layer);
    cam->add_option("--num-classes", num_classes)->check(CLI::PositiveNumber);
    cam->add_option("--target", target)->check(CLI::NonNegativeNumber);
    cam->add_option("--seed", seed);
    cam->add_option("--out", out_path, "overlay image")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "write the synthetic fixture corpus");
    CorpusOptions copts;
    synth->add_option("--out", out_root)->required();
    synth->add_option("--clean", copts.n_clean);
    synth->add_option("--failures-per-kind", copts.failures_per_kind);
    synth->add_option("--seed", copts.seed);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitUsage;
    }

    try {
        RunConfig rc = build_config(g);
        auto print_digest = [&] { out << "config digest: " << rc.digest() << '\n'; };

        if (ingest->parsed()) {
            const DatasetKind kind = parse_dataset_kind(kind_text);
            if (name.empty()) {
                name = kind == DatasetKind::Cub        ? "CUB"
                       : kind == DatasetKind::Cars     ? "Cars"
                       : kind == DatasetKind::Aircraft ? "Aircraft"
                                                       : fs::path(root).filename().string();
            }
            IngestResult res = load_source_dataset(root, kind, name);
            res.manifest.provenance.config_digest = rc.digest();
            save_manifest(res.manifest, out_path);
            print_digest();
            out << "records: " << res.manifest.records.size() << "\nclasses: " << res.manifest.classes.size()
                << '\n';
            if (auto pub = published_stats(kind)) {
                out << "published: " << pub->classes << " classes, " << pub->images << " images\n";
            }
            for (const auto& e : res.record_errors) {
                err << "skipped: " << e << '\n';
            }
            return kExitOk;
        }

        if (process->parsed()) {
            if (!detector_id.empty()) {
                rc.set("detector.backend_id", detector_id);
            }
            if (!segmenter_id.empty()) {
                rc.set("segmenter.backend_id", segmenter_id);
            }
            const DatasetManifest m = load_manifest(manifest_path);
            const PipelineConfig pc = pipeline_config(rc, m, fs::absolute(out_root));
            print_digest();
            DatasetRun run = process_dataset(m, pc, workers);
            run.manifest.provenance.config_digest = rc.digest();
            const fs::path dest = out_path.empty() ? fs::path(out_root) / "manifest.jsonl" : fs::path(out_path);
            save_manifest(run.manifest, dest);
            write_text(dest.string() + ".config.json", rc.tree().dump(2) + "\n");
            print_stats(out, run.stats);
            for (const auto& e : run.errors) {
                err << "record error: " << e << '\n';
            }
            return kExitOk;
        }

        if (serve->parsed()) {
            const DatasetManifest m = load_manifest(manifest_path);
            const PipelineConfig pc = pipeline_config(rc, m, m.fg_root);
            print_digest();
            ReviewServiceOptions opts{log_path, ui_dir.empty() ? std::nullopt : std::optional<fs::path>(ui_dir)};
            ReviewService service(m, pc, opts);
            const int bound = port == 0 ? service.bind_any_port(host) : (service.bind(host, port) ? port : -1);
            if (bound < 0) {
                throw IoError("cannot bind " + host + ":" + std::to_string(port));
            }
            out << "listening on http://" << host << ':' << bound << std::endl;
            g_service = &service;
            std::signal(SIGINT, stop_service);
            std::signal(SIGTERM, stop_service);
            service.serve();
            g_service = nullptr;
            return kExitOk;
        }

        if (exp->parsed()) {
            DatasetManifest m = load_manifest(manifest_path);
            const PipelineConfig pc = pipeline_config(rc, m, m.fg_root);
            print_digest();
            if (!log_path.empty()) {
                auto seg = make_segmenter(pc.segmenter.backend_id);
                m = replay(std::move(m), DecisionLog(log_path).read_all(), *seg, pc);
            }
            const fs::path dest = fs::absolute(out_root);
            const fs::path images = dest / "images";
            DatasetManifest release = m;
            release.records.clear();
            release.fg_root = images.string();
            std::size_t kept_source = 0;
            std::size_t unreviewed = 0;
            for (const auto& r : m.records) {
                ImageRecord copy = r;
                if (r.review == ReviewState::Rejected) {
                    if (rejected == "drop") {
                        continue;
                    }
                    fs::create_directories((images / r.source_path).parent_path());
                    fs::copy_file(fs::path(m.root) / r.source_path, images / r.source_path,
                                  fs::copy_options::overwrite_existing);
                    copy.fg_path = r.source_path;
                    ++kept_source;
                } else if (!r.fg_path) {
                    ++unreviewed;
                    continue;
                } else {
                    fs::create_directories((images / *r.fg_path).parent_path());
                    fs::copy_file(fs::path(m.fg_root) / *r.fg_path, images / *r.fg_path,
                                  fs::copy_options::overwrite_existing);
                }
                release.records.push_back(std::move(copy));
            }
            save_manifest(release, dest / "manifest.jsonl");
            write_text(dest / "config.json", rc.tree().dump(2) + "\n");
            out << "released: " << release.records.size() << "\nrejected kept as source: " << kept_source
                << "\nwithheld (flagged, undecided): " << unreviewed << '\n';
            return kExitOk;
        }

        if (expand->parsed()) {
            print_digest();
            const DatasetManifest m = load_manifest(manifest_path);
            const ImageRecord& r = require_record(m, record_id);
            if (!r.mask) {
                throw ValidationError("record '" + record_id + "' has no mask");
            }
            if (contours->parsed()) {
                const ContourSet cs = extract_contours(*r.mask);
                write_text(out_path, contours_to_json(cs) + "\n");
                out << "polygons: " << cs.polygons.size() << '\n';
            } else if (histogram->parsed()) {
                const Image img = read_image(fs::path(m.root) / r.source_path);
                write_text(out_path, histogram_to_csv(foreground_histogram(img, *r.mask, bins)));
            } else {
                const Image img = read_image(fs::path(m.root) / r.source_path);
                const Image bg = read_image(background);
                write_image(out_path, replace_background(img, rle_decode(*r.mask), bg));
            }
            return kExitOk;
        }

        if (bench_run->parsed()) {
            std::vector<std::string> backbones = backbones_text.empty() ? rc.backbones() : split_list(backbones_text);
            rc.set("bench.backbones", backbones);
            print_digest();
            ResultsStore store(results_dir);
            std::vector<ExperimentSpec> specs;
            std::unique_ptr<FeatureSource> source;
            if (fixture) {
                FeatureFixtureOptions fo;
                fo.seed = rc.bench_seed();
                const FeatureFixture fx = make_feature_fixture(fo);
                auto mem = std::make_unique<InMemoryFeatureSource>();
                mem->add("Fixture", fx.classes, fx.source_train, fx.source_test);
                mem->add("Fixture_FG", fx.classes, fx.fg_train, fx.fg_test);
                source = std::move(mem);
                specs = make_cross_protocol("Fixture", "Fixture_FG", backbones, rc.bench_seed());
            } else {
                if (manifests.empty()) {
                    throw ConfigError("bench run needs --manifests or --fixture");
                }
                std::vector<DatasetManifest> loaded;
                for (const auto& p : manifests) {
                    loaded.push_back(load_manifest(p));
                }
                std::vector<std::string> names;
                for (const auto& m : loaded) {
                    names.push_back(m.name);
                }
                for (const auto& n : names) {
                    if (std::find(names.begin(), names.end(), n + "_FG") != names.end()) {
                        auto block = make_cross_protocol(n, n + "_FG", backbones, rc.bench_seed());
                        specs.insert(specs.end(), block.begin(), block.end());
                    }
                }
                if (specs.empty()) {
                    throw ConfigError("no <name>/<name>_FG manifest pair among --manifests");
                }
                source = std::make_unique<ManifestFeatureSource>(std::move(loaded), rc.extractor());
            }
            for (auto& s : specs) {
                s.hyperparams = rc.bench_hyperparams();
            }
            const auto results = run_protocol(specs, *source, &store, workers);
            for (const auto& r : results) {
                out << r.spec.train_manifest << " -> " << r.spec.test_manifest << " [" << r.spec.backbone_id
                    << "]: " << r.top1_accuracy << '\n';
            }
            return kExitOk;
        }

        if (bench_report->parsed()) {
            print_digest();
            std::vector<ExperimentResult> results;
            if (reference) {
                results = reference_table();
            } else if (!results_csv.empty()) {
                const fs::path p = results_csv;
                results = load_results_csv(fs::is_directory(p) ? p / "results.csv" : p);
            } else {
                throw ConfigError("bench report needs --results or --reference");
            }
            const auto pairs = infer_pairs(results);
            if (pairs.empty()) {
                throw ValidationError("results contain no <name>/<name>_FG pair");
            }
            const auto backbones = backbones_in(results);
            const Report rep = make_report(results, pairs, backbones);
            out << rep.table_text << '\n' << rep.claims_text;
            if (!out_root.empty()) {
                write_text(fs::path(out_root) / "table.txt", rep.table_text);
                write_text(fs::path(out_root) / "table.csv", rep.table_csv);
                write_text(fs::path(out_root) / "claims.txt", rep.claims_text);
                for (const auto& p : pairs) {
                    write_bar_chart(results, p, backbones, fs::path(out_root) / ("chart_" + p.source + ".png"));
                }
            }
            return kExitOk;
        }

        if (tsne->parsed()) {
            print_digest();
            const Split split = parse_split(split_text);
            auto subset = [&](DatasetManifest m) {
                std::erase_if(m.records, [&](const ImageRecord& r) { return r.class_id >= max_classes; });
                return m;
            };
            const DatasetManifest src = subset(load_manifest(manifest_path));
            const DatasetManifest fg = subset(load_manifest(fg_manifest_path));
            ManifestFeatureSource features({src, fg}, rc.extractor());
            const LabelledFeatures a = features.load(src.name, split);
            const LabelledFeatures b = features.load(fg.name, split);
            CompareConfig cc;
            cc.tsne = rc.tsne();
            cc.metric_space = metric_space == "projection" ? MetricSpace::Projection : MetricSpace::Embedding;
            cc.artifact_dir = out_root;
            const Comparison cmp = compare_distributions(a.features, a.labels, b.features, b.labels, cc);
            out << "[source]\n" << to_text(cmp.source) << "[fg]\n" << to_text(cmp.fg);
            write_text(fs::path(out_root) / "config.json", rc.tree().dump(2) + "\n");
            return kExitOk;
        }

        if (cam->parsed()) {
            print_digest();
            const auto model = make_cam_model(model_id, num_classes, seed);
            const Image img = read_image(image_path);
            const CamComputation c = grad_cam(*model, img, target, layer);
            write_cam_overlay(img, c, out_path);
            out << "degenerate: " << (c.degenerate ? "yes" : "no") << '\n';
            return kExitOk;
        }

        if (synth->parsed()) {
            print_digest();
            const SynthCorpus corpus = make_corpus(out_root, copts);
            save_manifest(corpus.manifest, fs::path(out_root) / "manifest.jsonl");
            nlohmann::json expected = nlohmann::json::object();
            for (const auto& [id, flag] : corpus.expected) {
                expected[id] = flag ? nlohmann::json(std::string(to_string(*flag))) : nlohmann::json(nullptr);
            }
            write_text(fs::path(out_root) / "expected_flags.json", expected.dump(2) + "\n");
            const PipelineConfig pc = corpus_pipeline_config(out_root, "");
            nlohmann::json cfg = {{"detector", to_json(pc.detector)},
                                  {"segmenter", to_json(pc.segmenter)},
                                  {"subject_vocabulary", pc.subject_vocabulary}};
            write_text(fs::path(out_root) / "pipeline.json", cfg.dump(2) + "\n");
            out << "records: " << corpus.manifest.records.size() << '\n';
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    err << app.help();
    return kExitUsage;
}

int dispatch(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) {
        args.emplace_back(argv[i]);
    }
    return dispatch(args, std::cout, std::cerr);
}

} // namespace fgseg
