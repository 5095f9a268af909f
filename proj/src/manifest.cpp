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

#include "fgseg/manifest.hpp"

#include "fgseg/error.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace fgseg {

using ojson = nlohmann::ordered_json;

bool BoundingBox::fits(int image_width, int image_height) const {
    return w > 0 && h > 0 && x >= 0 && y >= 0 && static_cast<long long>(x) + w <= image_width &&
           static_cast<long long>(y) + h <= image_height;
}

void validate_box(const BoundingBox& box, int image_width, int image_height) {
    if (!box.fits(image_width, image_height)) {
        throw ValidationError("box [" + std::to_string(box.x) + "," + std::to_string(box.y) + "," +
                              std::to_string(box.w) + "," + std::to_string(box.h) + "] invalid for " +
                              std::to_string(image_width) + "x" + std::to_string(image_height) + " image");
    }
}

std::uint64_t SegmentationMask::area() const {
    std::uint64_t a = 0;
    for (std::size_t i = 1; i < counts.size(); i += 2) {
        a += counts[i];
    }
    return a;
}

void validate_mask(const SegmentationMask& mask) {
    if (mask.height < 0 || mask.width < 0) {
        throw ValidationError("mask has negative size");
    }
    std::uint64_t total = 0;
    for (std::size_t i = 0; i < mask.counts.size(); ++i) {
        if (i > 0 && mask.counts[i] == 0) {
            throw ValidationError("zero-length run at position " + std::to_string(i));
        }
        total += mask.counts[i];
    }
    const auto expected = static_cast<std::uint64_t>(mask.height) * static_cast<std::uint64_t>(mask.width);
    if (total != expected) {
        throw ValidationError("run lengths sum to " + std::to_string(total) + ", expected " +
                              std::to_string(expected));
    }
}

SegmentationMask rle_encode(const BinaryMask& mask) {
    if (!mask.is_binary()) {
        throw ValidationError("rle_encode: mask has values other than 0 and 1");
    }
    SegmentationMask out{mask.height(), mask.width(), {}};
    std::uint8_t current = 0;
    std::uint32_t run = 0;
    for (int c = 0; c < mask.width(); ++c) {
        for (int r = 0; r < mask.height(); ++r) {
            const std::uint8_t v = mask.at(r, c);
            if (v != current) {
                out.counts.push_back(run);
                run = 0;
                current = v;
            }
            ++run;
        }
    }
    if (run > 0 || out.counts.empty()) {
        out.counts.push_back(run);
    }
    return out;
}

BinaryMask rle_decode(std::span<const std::uint32_t> counts, int height, int width) {
    SegmentationMask view{height, width, {counts.begin(), counts.end()}};
    validate_mask(view);
    BinaryMask out(height, width);
    std::uint64_t pos = 0;
    std::uint8_t value = 0;
    for (std::uint32_t run : counts) {
        for (std::uint32_t k = 0; k < run; ++k, ++pos) {
            if (value != 0) {
                const int c = static_cast<int>(pos / static_cast<std::uint64_t>(height));
                const int r = static_cast<int>(pos % static_cast<std::uint64_t>(height));
                out.at(r, c) = 1;
            }
        }
        value ^= 1;
    }
    return out;
}

// ---- enums ----

namespace {

template <typename E, std::size_t N>
E parse_enum(std::string_view text, const std::array<std::pair<E, std::string_view>, N>& table,
             const char* what) {
    for (const auto& [e, s] : table) {
        if (s == text) {
            return e;
        }
    }
    throw ValidationError(std::string("unknown ") + what + ": '" + std::string(text) + "'");
}

template <typename E, std::size_t N>
std::string_view enum_name(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
    for (const auto& [e, s] : table) {
        if (e == value) {
            return s;
        }
    }
    return "?";
}

constexpr std::array<std::pair<FlagKind, std::string_view>, 6> kFlagNames{{
    {FlagKind::NoSubject, "NO_SUBJECT"},
    {FlagKind::WrongSubject, "WRONG_SUBJECT"},
    {FlagKind::UnwantedBackground, "UNWANTED_BACKGROUND"},
    {FlagKind::IncompleteObject, "INCOMPLETE_OBJECT"},
    {FlagKind::Ambiguous, "AMBIGUOUS"},
    {FlagKind::ProcessingError, "PROCESSING_ERROR"},
}};
constexpr std::array<std::pair<Split, std::string_view>, 2> kSplitNames{{
    {Split::Train, "train"},
    {Split::Test, "test"},
}};
constexpr std::array<std::pair<ReviewState, std::string_view>, 4> kReviewNames{{
    {ReviewState::Pending, "pending"},
    {ReviewState::Accepted, "accepted"},
    {ReviewState::Rejected, "rejected"},
    {ReviewState::Corrected, "corrected"},
}};
constexpr std::array<std::pair<DatasetKind, std::string_view>, 4> kKindNames{{
    {DatasetKind::Cub, "cub"},
    {DatasetKind::Cars, "cars"},
    {DatasetKind::Aircraft, "aircraft"},
    {DatasetKind::Generic, "generic"},
}};

} // namespace

std::string_view to_string(FlagKind kind) { return enum_name(kind, kFlagNames); }
std::string_view to_string(Split split) { return enum_name(split, kSplitNames); }
std::string_view to_string(ReviewState state) { return enum_name(state, kReviewNames); }
std::string_view to_string(DatasetKind kind) { return enum_name(kind, kKindNames); }
FlagKind parse_flag_kind(std::string_view text) { return parse_enum(text, kFlagNames, "flag kind"); }
Split parse_split(std::string_view text) { return parse_enum(text, kSplitNames, "split"); }
ReviewState parse_review_state(std::string_view text) { return parse_enum(text, kReviewNames, "review state"); }
DatasetKind parse_dataset_kind(std::string_view text) { return parse_enum(text, kKindNames, "dataset kind"); }

bool ImageRecord::has_flag(FlagKind kind) const {
    return std::any_of(flags.begin(), flags.end(), [kind](const QAFlag& f) { return f.kind == kind; });
}

const ImageRecord* DatasetManifest::find(std::string_view record_id) const {
    auto it = std::find_if(records.begin(), records.end(),
                           [&](const ImageRecord& r) { return r.record_id == record_id; });
    return it == records.end() ? nullptr : &*it;
}

ImageRecord* DatasetManifest::find(std::string_view record_id) {
    return const_cast<ImageRecord*>(std::as_const(*this).find(record_id));
}

void validate_manifest(const DatasetManifest& manifest) {
    std::unordered_set<std::string> seen;
    for (const auto& rec : manifest.records) {
        if (!seen.insert(rec.record_id).second) {
            throw ValidationError("duplicate record_id: " + rec.record_id);
        }
        if (rec.class_id < 0 || static_cast<std::size_t>(rec.class_id) >= manifest.classes.size()) {
            throw ValidationError("record " + rec.record_id + " has class_id " + std::to_string(rec.class_id) +
                                  " outside [0, " + std::to_string(manifest.classes.size()) + ")");
        }
    }
}

// ---- JSON ----

namespace {

ojson box_json(const BoundingBox& b) { return ojson::array({b.x, b.y, b.w, b.h}); }

BoundingBox box_from(const ojson& j) {
    if (!j.is_array() || j.size() != 4) {
        throw ValidationError("box must be [x, y, w, h]");
    }
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>(), j[3].get<int>()};
}

ojson detection_json(const Detection& d) {
    ojson j;
    j["box"] = box_json(d.box);
    j["score"] = d.score;
    j["label"] = d.label;
    if (d.manual) {
        j["manual"] = true;
    }
    return j;
}

Detection detection_from(const ojson& j) {
    Detection d;
    d.box = box_from(j.at("box"));
    d.score = j.at("score").get<double>();
    d.label = j.at("label").get<std::string>();
    d.manual = j.value("manual", false);
    return d;
}

ojson mask_json(const SegmentationMask& m) {
    ojson j;
    j["size"] = ojson::array({m.height, m.width});
    j["counts"] = m.counts;
    return j;
}

SegmentationMask mask_from(const ojson& j) {
    SegmentationMask m;
    const auto& size = j.at("size");
    m.height = size.at(0).get<int>();
    m.width = size.at(1).get<int>();
    m.counts = j.at("counts").get<std::vector<std::uint32_t>>();
    validate_mask(m);
    return m;
}

ojson record_json(const ImageRecord& r) {
    ojson j;
    j["record_id"] = r.record_id;
    j["class_id"] = r.class_id;
    j["class_name"] = r.class_name;
    j["split"] = to_string(r.split);
    j["source_path"] = r.source_path;
    j["fg_path"] = r.fg_path ? ojson(*r.fg_path) : ojson(nullptr);
    j["detection"] = r.detection ? detection_json(*r.detection) : ojson(nullptr);
    j["mask"] = r.mask ? mask_json(*r.mask) : ojson(nullptr);
    ojson flags = ojson::array();
    for (const auto& f : r.flags) {
        ojson fj;
        fj["kind"] = to_string(f.kind);
        fj["detail"] = f.detail;
        fj["metric"] = f.metric ? ojson(*f.metric) : ojson(nullptr);
        flags.push_back(std::move(fj));
    }
    j["flags"] = std::move(flags);
    j["review"] = to_string(r.review);
    return j;
}

ImageRecord record_from(const ojson& j) {
    ImageRecord r;
    r.record_id = j.at("record_id").get<std::string>();
    r.class_id = j.at("class_id").get<int>();
    r.class_name = j.at("class_name").get<std::string>();
    r.split = parse_split(j.at("split").get<std::string>());
    r.source_path = j.at("source_path").get<std::string>();
    if (const auto& fg = j.at("fg_path"); !fg.is_null()) {
        r.fg_path = fg.get<std::string>();
    }
    if (const auto& d = j.at("detection"); !d.is_null()) {
        r.detection = detection_from(d);
    }
    if (const auto& m = j.at("mask"); !m.is_null()) {
        r.mask = mask_from(m);
    }
    for (const auto& fj : j.at("flags")) {
        QAFlag f;
        f.kind = parse_flag_kind(fj.at("kind").get<std::string>());
        f.detail = fj.value("detail", "");
        if (fj.contains("metric") && !fj["metric"].is_null()) {
            f.metric = fj["metric"].get<double>();
        }
        r.flags.push_back(std::move(f));
    }
    r.review = parse_review_state(j.at("review").get<std::string>());
    return r;
}

ojson header_json(const DatasetManifest& m) {
    ojson j;
    j["manifest"] = m.name;
    j["kind"] = to_string(m.kind);
    j["classes"] = m.classes;
    j["provenance"] = {{"source", m.provenance.source},
                       {"config_digest", m.provenance.config_digest},
                       {"split_policy", m.provenance.split_policy}};
    j["root"] = m.root;
    j["fg_root"] = m.fg_root;
    return j;
}

} // namespace

std::string record_to_json(const ImageRecord& record) { return record_json(record).dump(); }

ImageRecord record_from_json(std::string_view text) {
    try {
        return record_from(ojson::parse(text));
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bad record: ") + e.what());
    }
}

std::string serialize_manifest(const DatasetManifest& manifest) {
    std::string out = header_json(manifest).dump();
    out += '\n';
    for (const auto& r : manifest.records) {
        out += record_json(r).dump();
        out += '\n';
    }
    return out;
}

DatasetManifest parse_manifest(std::string_view text) {
    DatasetManifest m;
    std::size_t line_no = 0;
    bool have_header = false;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        const std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) {
            continue;
        }
        try {
            const ojson j = ojson::parse(line);
            if (!have_header) {
                if (!j.is_object() || !j.contains("manifest")) {
                    throw ParseError(line_no, "expected manifest header");
                }
                m.name = j.at("manifest").get<std::string>();
                m.kind = parse_dataset_kind(j.at("kind").get<std::string>());
                m.classes = j.at("classes").get<std::vector<std::string>>();
                const auto& p = j.at("provenance");
                m.provenance.source = p.at("source").get<std::string>();
                m.provenance.config_digest = p.at("config_digest").get<std::string>();
                m.provenance.split_policy = p.value("split_policy", "");
                m.root = j.value("root", "");
                m.fg_root = j.value("fg_root", "");
                have_header = true;
                continue;
            }
            m.records.push_back(record_from(j));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(line_no, e.what());
        }
    }
    if (!have_header) {
        throw ParseError(line_no == 0 ? 1 : line_no, "missing manifest header");
    }
    try {
        validate_manifest(m);
    } catch (const ValidationError& e) {
        throw ParseError(line_no, e.what());
    }
    return m;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    if (path.has_parent_path()) {
        std::filesystem::create_directories(path.parent_path());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write manifest: " + path.string());
    }
    out << serialize_manifest(manifest);
    if (!out) {
        throw IoError("write failed: " + path.string());
    }
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open manifest: " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str());
}

} // namespace fgseg
