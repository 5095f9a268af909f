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

#include "fgseg/bench.hpp"
#include "fgseg/error.hpp"

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace fgseg {

namespace {

constexpr std::string_view kResultsHeader = "train,test,backbone,seed,n_test,top1";

// Cross-validation accuracies (%) as published, one row per cell.
constexpr std::string_view kReferenceCsv = R"(train,test,backbone,seed,n_test,top1
CUB,CUB,vit-b16,0,0,90.3
CUB,CUB,resnet50,0,0,86.9
CUB,CUB,swinv2-b,0,0,88.7
CUB,CUB,convnext-b,0,0,90.0
CUB,CUB_FG,vit-b16,0,0,84.0
CUB,CUB_FG,resnet50,0,0,82.1
CUB,CUB_FG,swinv2-b,0,0,81.7
CUB,CUB_FG,convnext-b,0,0,83.2
CUB_FG,CUB_FG,vit-b16,0,0,91.3
CUB_FG,CUB_FG,resnet50,0,0,88.8
CUB_FG,CUB_FG,swinv2-b,0,0,89.4
CUB_FG,CUB_FG,convnext-b,0,0,90.7
CUB_FG,CUB,vit-b16,0,0,88.5
CUB_FG,CUB,resnet50,0,0,86.2
CUB_FG,CUB,swinv2-b,0,0,87.5
CUB_FG,CUB,convnext-b,0,0,88.1
Cars,Cars,vit-b16,0,0,94.4
Cars,Cars,resnet50,0,0,94.0
Cars,Cars,swinv2-b,0,0,91.8
Cars,Cars,convnext-b,0,0,93.6
Cars,Cars_FG,vit-b16,0,0,88.6
Cars,Cars_FG,resnet50,0,0,88.5
Cars,Cars_FG,swinv2-b,0,0,86.4
Cars,Cars_FG,convnext-b,0,0,89.0
Cars_FG,Cars_FG,vit-b16,0,0,95.3
Cars_FG,Cars_FG,resnet50,0,0,95.1
Cars_FG,Cars_FG,swinv2-b,0,0,94.1
Cars_FG,Cars_FG,convnext-b,0,0,94.6
Cars_FG,Cars,vit-b16,0,0,93.2
Cars_FG,Cars,resnet50,0,0,93.7
Cars_FG,Cars,swinv2-b,0,0,91.5
Cars_FG,Cars,convnext-b,0,0,92.9
Aircraft,Aircraft,vit-b16,0,0,92.8
Aircraft,Aircraft,resnet50,0,0,92.4
Aircraft,Aircraft,swinv2-b,0,0,90.4
Aircraft,Aircraft,convnext-b,0,0,92.6
Aircraft,Aircraft_FG,vit-b16,0,0,87.3
Aircraft,Aircraft_FG,resnet50,0,0,88.5
Aircraft,Aircraft_FG,swinv2-b,0,0,87.0
Aircraft,Aircraft_FG,convnext-b,0,0,87.6
Aircraft_FG,Aircraft_FG,vit-b16,0,0,93.8
Aircraft_FG,Aircraft_FG,resnet50,0,0,93.1
Aircraft_FG,Aircraft_FG,swinv2-b,0,0,91.6
Aircraft_FG,Aircraft_FG,convnext-b,0,0,93.1
Aircraft_FG,Aircraft,vit-b16,0,0,90.2
Aircraft_FG,Aircraft,resnet50,0,0,89.7
Aircraft_FG,Aircraft,swinv2-b,0,0,90.0
Aircraft_FG,Aircraft,convnext-b,0,0,90.3
)";

std::vector<std::string> split_csv(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.emplace_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const char* field) {
    T v{};
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || end != s.data() + s.size()) {
        throw ParseError(line, std::string("bad ") + field + " '" + s + "'");
    }
    return v;
}

std::string fmt2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

using CellKey = std::tuple<std::string, std::string, std::string>;

std::map<CellKey, double> cell_means(const std::vector<ExperimentResult>& results) {
    std::map<CellKey, std::pair<double, int>> acc;
    for (const auto& r : results) {
        auto& [sum, n] = acc[{r.spec.train_manifest, r.spec.test_manifest, r.spec.backbone_id}];
        sum += r.top1_accuracy;
        ++n;
    }
    std::map<CellKey, double> out;
    for (const auto& [k, v] : acc) {
        out[k] = v.first / v.second;
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> protocol_rows(const DatasetPair& p) {
    return {{p.source, p.source}, {p.source, p.fg}, {p.fg, p.fg}, {p.fg, p.source}};
}

} // namespace

std::vector<ExperimentResult> parse_results_csv(std::string_view text) {
    std::vector<ExperimentResult> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            nl = text.size();
        }
        std::string_view line = text.substr(pos, nl - pos);
        pos = nl + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
        if (line.empty()) {
            continue;
        }
        if (!header_seen) {
            if (line != kResultsHeader) {
                throw ParseError(line_no, "expected header '" + std::string(kResultsHeader) + "'");
            }
            header_seen = true;
            continue;
        }
        const auto f = split_csv(line);
        if (f.size() != 6) {
            throw ParseError(line_no, "expected 6 fields, got " + std::to_string(f.size()));
        }
        ExperimentResult r;
        r.spec.train_manifest = f[0];
        r.spec.test_manifest = f[1];
        r.spec.backbone_id = f[2];
        r.spec.seed = parse_number<std::uint64_t>(f[3], line_no, "seed");
        r.n_test = parse_number<std::size_t>(f[4], line_no, "n_test");
        r.top1_accuracy = parse_number<double>(f[5], line_no, "top1");
        out.push_back(std::move(r));
    }
    if (!header_seen) {
        throw ParseError(line_no, "missing results header");
    }
    return out;
}

std::vector<ExperimentResult> load_results_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot read " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_results_csv(buf.str());
}

std::vector<ExperimentResult> reference_table() { return parse_results_csv(kReferenceCsv); }

Report make_report(const std::vector<ExperimentResult>& results, const std::vector<DatasetPair>& pairs,
                   const std::vector<std::string>& backbones) {
    if (pairs.empty() || backbones.empty()) {
        throw ValidationError("report needs at least one dataset pair and one backbone");
    }
    const auto cells = cell_means(results);
    Report rep;

    std::size_t w_train = 5;
    std::size_t w_test = 4;
    for (const auto& p : pairs) {
        w_train = std::max({w_train, p.source.size(), p.fg.size()});
        w_test = std::max({w_test, p.source.size(), p.fg.size()});
    }
    std::vector<std::size_t> w_cols;
    for (const auto& b : backbones) {
        w_cols.push_back(std::max<std::size_t>(b.size(), 6));
    }
    auto pad = [](const std::string& s, std::size_t w, bool right) {
        const std::string fill(w > s.size() ? w - s.size() : 0, ' ');
        return right ? fill + s : s + fill;
    };
    std::string rule(w_train + w_test + 3, '-');
    for (auto w : w_cols) {
        rule += std::string(w + 3, '-');
    }

    std::ostringstream text;
    std::ostringstream csv;
    text << pad("Train", w_train, false) << " | " << pad("Test", w_test, false);
    csv << "train,test";
    for (std::size_t i = 0; i < backbones.size(); ++i) {
        text << " | " << pad(backbones[i], w_cols[i], true);
        csv << ',' << backbones[i];
    }
    text << '\n';
    csv << '\n';
    for (const auto& p : pairs) {
        text << rule << '\n';
        for (const auto& [train, test] : protocol_rows(p)) {
            text << pad(train, w_train, false) << " | " << pad(test, w_test, false);
            csv << train << ',' << test;
            for (std::size_t i = 0; i < backbones.size(); ++i) {
                auto it = cells.find({train, test, backbones[i]});
                const std::string v = it == cells.end() ? "-" : fmt2(it->second);
                text << " | " << pad(v, w_cols[i], true);
                csv << ',' << (it == cells.end() ? "" : v);
            }
            text << '\n';
            csv << '\n';
        }
    }
    rep.table_text = text.str();
    rep.table_csv = csv.str();

    std::ostringstream claims;
    try {
        const ClaimSummary s = summarize_claims(results, pairs);
        claims << "cells: " << s.cells << '\n';
        claims << "avg source->fg drop: " << fmt2(s.avg_source_to_fg_drop) << " points (published claim: over "
               << fmt2(kPublishedSourceToFgDropClaim) << "; "
               << (s.avg_source_to_fg_drop > kPublishedSourceToFgDropClaim
                       ? "consistent with the per-cell mean)"
                       : "NOT reproduced by the per-cell mean)")
               << '\n';
        claims << "avg fg->source drop: " << fmt2(s.avg_fg_to_source_drop) << " points (published claim: within "
               << fmt2(kPublishedFgToSourceDropClaim) << "; "
               << (s.avg_fg_to_source_drop <= kPublishedFgToSourceDropClaim ? "consistent)" : "NOT reproduced)")
               << '\n';
        claims << "fg-training improvements (fg->fg minus source->source):\n";
        for (const auto& imp : s.fg_training_improvements) {
            claims << "  " << imp.dataset << " [" << imp.backbone << "]: " << (imp.delta >= 0 ? "+" : "")
                   << fmt2(imp.delta) << '\n';
        }
        claims << "all improvements positive: " << (s.all_improvements_positive ? "yes" : "no") << '\n';
    } catch (const ValidationError& e) {
        claims << "claim summary unavailable: " << e.what() << '\n';
    }
    rep.claims_text = claims.str();
    return rep;
}

void write_bar_chart(const std::vector<ExperimentResult>& results, const DatasetPair& pair,
                     const std::vector<std::string>& backbones, const std::filesystem::path& path) {
    const auto cells = cell_means(results);
    const auto rows = protocol_rows(pair);
    const int bar_w = 18;
    const int group_gap = 30;
    const int margin = 60;
    const int plot_h = 300;
    const int n_groups = static_cast<int>(backbones.size());
    const int group_w = static_cast<int>(rows.size()) * bar_w;
    const int width = 2 * margin + n_groups * group_w + (n_groups - 1) * group_gap + 200;
    const int height = plot_h + 2 * margin + 20;
    cv::Mat canvas(height, width, CV_8UC3, cv::Scalar(255, 255, 255));

    double lo = 100.0;
    for (const auto& [k, v] : cells) {
        lo = std::min(lo, v);
    }
    lo = std::max(0.0, std::floor(lo / 10.0) * 10.0 - 10.0);
    const double hi = 100.0;
    auto y_of = [&](double v) { return margin + static_cast<int>((hi - v) / (hi - lo) * plot_h); };

    const cv::Scalar palette[4] = {{180, 119, 31}, {14, 127, 255}, {44, 160, 44}, {40, 39, 214}};
    cv::line(canvas, {margin, margin}, {margin, margin + plot_h}, {0, 0, 0}, 1);
    cv::line(canvas, {margin, margin + plot_h}, {width - 200, margin + plot_h}, {0, 0, 0}, 1);
    for (double t = lo; t <= hi + 1e-9; t += 10.0) {
        cv::putText(canvas, fmt2(t).substr(0, fmt2(t).find('.')), {10, y_of(t) + 4}, cv::FONT_HERSHEY_SIMPLEX, 0.4,
                    {0, 0, 0}, 1);
    }
    for (int g = 0; g < n_groups; ++g) {
        const int x0 = margin + 10 + g * (group_w + group_gap);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            auto it = cells.find({rows[r].first, rows[r].second, backbones[static_cast<std::size_t>(g)]});
            if (it == cells.end()) {
                continue;
            }
            const int x = x0 + static_cast<int>(r) * bar_w;
            cv::rectangle(canvas, {x, y_of(it->second)}, {x + bar_w - 2, margin + plot_h}, palette[r % 4],
                          cv::FILLED);
        }
        cv::putText(canvas, backbones[static_cast<std::size_t>(g)], {x0, margin + plot_h + 18},
                    cv::FONT_HERSHEY_SIMPLEX, 0.4, {0, 0, 0}, 1);
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const int y = margin + 20 * static_cast<int>(r);
        cv::rectangle(canvas, {width - 190, y}, {width - 176, y + 12}, palette[r % 4], cv::FILLED);
        cv::putText(canvas, rows[r].first + " -> " + rows[r].second, {width - 170, y + 11}, cv::FONT_HERSHEY_SIMPLEX,
                    0.4, {0, 0, 0}, 1);
    }
    cv::putText(canvas, "Classification acc. (%), " + pair.source + " cross-validation", {margin, 30},
                cv::FONT_HERSHEY_SIMPLEX, 0.5, {0, 0, 0}, 1);
    if (!path.parent_path().empty()) {
        std::filesystem::create_directories(path.parent_path());
    }
    if (!cv::imwrite(path.string(), canvas)) {
        throw IoError("cannot write " + path.string());
    }
}

} // namespace fgseg
