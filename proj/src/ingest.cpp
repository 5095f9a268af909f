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
#include "fgseg/manifest.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace fgseg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> read_lines(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IngestError("missing annotation file: " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (!line.empty()) {
            lines.push_back(line);
        }
    }
    return lines;
}

// "<key> <rest of line>"
std::pair<std::string, std::string> split_first(const std::string& line, const fs::path& file) {
    const auto sp = line.find(' ');
    if (sp == std::string::npos) {
        throw IngestError("malformed line in " + file.string() + ": '" + line + "'");
    }
    return {line.substr(0, sp), line.substr(sp + 1)};
}

int to_int(const std::string& s, const fs::path& file) {
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used != s.size()) {
            throw std::invalid_argument(s);
        }
        return v;
    } catch (const std::exception&) {
        throw IngestError("expected integer in " + file.string() + ", got '" + s + "'");
    }
}

struct Builder {
    const fs::path& root;
    IngestResult& result;

    void add(std::string rel, int class_id, Split split) {
        const fs::path full = root / rel;
        std::error_code ec;
        if (!fs::is_regular_file(full, ec)) {
            result.record_errors.push_back(rel + ": missing or unreadable image");
            return;
        }
        std::ifstream probe(full, std::ios::binary);
        if (!probe) {
            result.record_errors.push_back(rel + ": missing or unreadable image");
            return;
        }
        ImageRecord r;
        r.record_id = rel;
        r.class_id = class_id;
        r.class_name = result.manifest.classes.at(static_cast<std::size_t>(class_id));
        r.split = split;
        r.source_path = std::move(rel);
        result.manifest.records.push_back(std::move(r));
    }
};

void ingest_cub(const fs::path& root, IngestResult& out) {
    const auto classes_file = root / "classes.txt";
    const auto images_file = root / "images.txt";
    const auto labels_file = root / "image_class_labels.txt";
    const auto split_file = root / "train_test_split.txt";
    const auto class_lines = read_lines(classes_file);
    const auto image_lines = read_lines(images_file);
    const auto label_lines = read_lines(labels_file);
    const auto split_lines = read_lines(split_file);

    for (const auto& line : class_lines) {
        out.manifest.classes.push_back(split_first(line, classes_file).second);
    }
    std::map<std::string, int> label_of;
    for (const auto& line : label_lines) {
        auto [id, cls] = split_first(line, labels_file);
        label_of[id] = to_int(cls, labels_file) - 1;
    }
    std::map<std::string, bool> is_train;
    for (const auto& line : split_lines) {
        auto [id, flag] = split_first(line, split_file);
        is_train[id] = to_int(flag, split_file) == 1;
    }
    Builder b{root, out};
    for (const auto& line : image_lines) {
        auto [id, rel] = split_first(line, images_file);
        const auto lbl = label_of.find(id);
        const auto spl = is_train.find(id);
        if (lbl == label_of.end() || spl == is_train.end()) {
            throw IngestError("image id " + id + " missing from " +
                              (lbl == label_of.end() ? labels_file : split_file).string());
        }
        if (lbl->second < 0 || static_cast<std::size_t>(lbl->second) >= out.manifest.classes.size()) {
            throw IngestError("class id out of range for image " + id + " in " + labels_file.string());
        }
        b.add("images/" + rel, lbl->second, spl->second ? Split::Train : Split::Test);
    }
    out.manifest.provenance.split_policy = "train_test_split.txt";
}

void ingest_cars(const fs::path& root, IngestResult& out) {
    const auto names_file = root / "names.csv";
    const auto train_file = root / "anno_train.csv";
    const auto test_file = root / "anno_test.csv";
    out.manifest.classes = read_lines(names_file);
    const auto train_lines = read_lines(train_file);
    const auto test_lines = read_lines(test_file);
    Builder b{root, out};
    auto consume = [&](const std::vector<std::string>& lines, const fs::path& file, const std::string& dir,
                       Split split) {
        for (const auto& line : lines) {
            std::vector<std::string> cells;
            std::stringstream ss(line);
            std::string cell;
            while (std::getline(ss, cell, ',')) {
                cells.push_back(cell);
            }
            if (cells.size() != 6) {
                throw IngestError("expected 6 columns in " + file.string() + ": '" + line + "'");
            }
            const int cls = to_int(cells[5], file) - 1;
            if (cls < 0 || static_cast<std::size_t>(cls) >= out.manifest.classes.size()) {
                throw IngestError("class id out of range in " + file.string() + ": '" + line + "'");
            }
            b.add(dir + "/" + cells[0], cls, split);
        }
    };
    consume(train_lines, train_file, "cars_train", Split::Train);
    consume(test_lines, test_file, "cars_test", Split::Test);
    out.manifest.provenance.split_policy = "anno_train.csv=train, anno_test.csv=test";
}

void ingest_aircraft(const fs::path& root, IngestResult& out) {
    const auto data = root / "data";
    const auto variants_file = data / "variants.txt";
    const auto trainval_file = data / "images_variant_trainval.txt";
    const auto test_file = data / "images_variant_test.txt";
    out.manifest.classes = read_lines(variants_file);
    std::map<std::string, int> class_of;
    for (std::size_t i = 0; i < out.manifest.classes.size(); ++i) {
        class_of[out.manifest.classes[i]] = static_cast<int>(i);
    }
    const auto trainval = read_lines(trainval_file);
    const auto test = read_lines(test_file);
    Builder b{root, out};
    auto consume = [&](const std::vector<std::string>& lines, const fs::path& file, Split split) {
        for (const auto& line : lines) {
            auto [id, variant] = split_first(line, file);
            const auto it = class_of.find(variant);
            if (it == class_of.end()) {
                throw IngestError("unknown variant '" + variant + "' in " + file.string());
            }
            b.add("data/images/" + id + ".jpg", it->second, split);
        }
    };
    consume(trainval, trainval_file, Split::Train);
    consume(test, test_file, Split::Test);
    out.manifest.provenance.split_policy = "trainval=train, test=test";
}

std::vector<fs::path> sorted_entries(const fs::path& dir, bool directories) {
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir)) {
        if (directories ? e.is_directory() : (e.is_regular_file() && is_image_extension(e.path()))) {
            out.push_back(e.path());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ingest_generic(const fs::path& root, IngestResult& out) {
    const bool has_splits = fs::is_directory(root / "train") && fs::is_directory(root / "test");
    std::vector<std::pair<fs::path, Split>> split_dirs;
    if (has_splits) {
        split_dirs = {{root / "train", Split::Train}, {root / "test", Split::Test}};
    } else {
        split_dirs = {{root, Split::Train}};
    }
    std::map<std::string, int> class_of;
    for (const auto& [dir, _] : split_dirs) {
        for (const auto& cls : sorted_entries(dir, true)) {
            class_of.emplace(cls.filename().string(), 0);
        }
    }
    if (class_of.empty()) {
        throw IngestError("no class directories under " + root.string());
    }
    for (auto& [name, id] : class_of) {
        id = static_cast<int>(out.manifest.classes.size());
        out.manifest.classes.push_back(name);
    }
    Builder b{root, out};
    for (const auto& [dir, split] : split_dirs) {
        for (const auto& cls : sorted_entries(dir, true)) {
            const int id = class_of.at(cls.filename().string());
            for (const auto& img : sorted_entries(cls, false)) {
                b.add(fs::relative(img, root).generic_string(), id, split);
            }
        }
    }
    out.manifest.provenance.split_policy = has_splits ? "train/ and test/ directories" : "all train";
}

} // namespace

std::optional<PublishedStats> published_stats(DatasetKind kind) {
    switch (kind) {
    case DatasetKind::Cub:
        return PublishedStats{200, 11788};
    case DatasetKind::Cars:
        return PublishedStats{196, 16185};
    case DatasetKind::Aircraft:
        return PublishedStats{100, 10000};
    case DatasetKind::Generic:
        break;
    }
    return std::nullopt;
}

IngestResult load_source_dataset(const fs::path& root, DatasetKind kind, std::string name) {
    std::error_code ec;
    if (!fs::is_directory(root, ec)) {
        throw IngestError("dataset root is not a directory: " + root.string());
    }
    IngestResult out;
    out.manifest.kind = kind;
    out.manifest.root = fs::absolute(root).lexically_normal().string();
    out.manifest.name = name.empty() ? std::string(to_string(kind)) : std::move(name);
    switch (kind) {
    case DatasetKind::Cub:
        ingest_cub(root, out);
        break;
    case DatasetKind::Cars:
        ingest_cars(root, out);
        break;
    case DatasetKind::Aircraft:
        ingest_aircraft(root, out);
        break;
    case DatasetKind::Generic:
        ingest_generic(root, out);
        break;
    }
    if (out.manifest.records.empty()) {
        throw IngestError("no images found under " + root.string());
    }
    validate_manifest(out.manifest);
    return out;
}

} // namespace fgseg
