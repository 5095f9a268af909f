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

#include "fgseg/config.hpp"
#include "fgseg/error.hpp"
#include "fgseg/image_io.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

namespace fgseg {

namespace fs = std::filesystem;
using nlohmann::json;

std::string ExperimentSpec::digest() const {
    json j;
    j["train"] = train_manifest;
    j["test"] = test_manifest;
    j["backbone"] = backbone_id;
    j["seed"] = seed;
    j["hyperparams"] = hyperparams;
    return sha256_hex(j.dump());
}

std::vector<ExperimentSpec> make_cross_protocol(const std::string& source, const std::string& fg,
                                                const std::vector<std::string>& backbones, std::uint64_t seed) {
    if (source == fg) {
        throw ConfigError("source and foreground manifests must differ (both '" + source + "')");
    }
    if (backbones.empty()) {
        throw ConfigError("no backbones given");
    }
    const std::pair<const std::string*, const std::string*> rows[] = {
        {&source, &source}, {&source, &fg}, {&fg, &fg}, {&fg, &source}};
    std::vector<ExperimentSpec> specs;
    for (const auto& [train, test] : rows) {
        for (const auto& b : backbones) {
            specs.push_back({*train, *test, b, seed, {}});
        }
    }
    return specs;
}

double evaluate_accuracy(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size()) {
        throw ValidationError("predictions and labels differ in length");
    }
    if (labels.empty()) {
        throw ValidationError("cannot score an empty test set");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hits += predictions[i] == labels[i] ? 1 : 0;
    }
    return 100.0 * static_cast<double>(hits) / static_cast<double>(labels.size());
}

// ---- feature sources ----

void InMemoryFeatureSource::add(const std::string& manifest, std::vector<std::string> classes,
                                LabelledFeatures train, LabelledFeatures test) {
    entries_[manifest] = {std::move(classes), std::move(train), std::move(test)};
}

std::vector<std::string> InMemoryFeatureSource::classes(const std::string& manifest) {
    auto it = entries_.find(manifest);
    if (it == entries_.end()) {
        throw NotFoundError("unknown manifest '" + manifest + "'");
    }
    return it->second.classes;
}

LabelledFeatures InMemoryFeatureSource::load(const std::string& manifest, Split split) {
    auto it = entries_.find(manifest);
    if (it == entries_.end()) {
        throw NotFoundError("unknown manifest '" + manifest + "'");
    }
    return split == Split::Train ? it->second.train : it->second.test;
}

ManifestFeatureSource::ManifestFeatureSource(std::vector<DatasetManifest> manifests, FeatureExtractorConfig config)
    : manifests_(std::move(manifests)), config_(std::move(config)),
      extractor_(make_extractor(config_.backend_id)) {}

const DatasetManifest& ManifestFeatureSource::get(const std::string& name) const {
    for (const auto& m : manifests_) {
        if (m.name == name) {
            return m;
        }
    }
    throw NotFoundError("unknown manifest '" + name + "'");
}

std::vector<std::string> ManifestFeatureSource::classes(const std::string& manifest) { return get(manifest).classes; }

LabelledFeatures ManifestFeatureSource::load(const std::string& manifest, Split split) {
    const DatasetManifest& m = get(manifest);
    const bool foreground = !m.fg_root.empty();
    std::vector<Image> images;
    LabelledFeatures out;
    for (const auto& r : m.records) {
        if (r.split != split) {
            continue;
        }
        if (foreground && !r.fg_path) {
            continue;
        }
        const fs::path path = foreground ? fs::path(m.fg_root) / *r.fg_path : fs::path(m.root) / r.source_path;
        Image img = read_image(path);
        // Transparent composites are read back as RGB; the extractor only sees RGB.
        images.push_back(std::move(img));
        out.labels.push_back(r.class_id);
    }
    if (images.empty()) {
        throw ValidationError("manifest '" + manifest + "' has no usable " + std::string(to_string(split)) +
                              " records");
    }
    out.features = extractor_->extract(images, config_);
    return out;
}

// ---- toy-linear ----

namespace {

double hyper(const std::map<std::string, std::string>& hp, const std::string& key, double fallback) {
    auto it = hp.find(key);
    if (it == hp.end()) {
        return fallback;
    }
    try {
        return std::stod(it->second);
    } catch (const std::exception&) {
        throw ConfigError("hyperparameter " + key + " is not a number: '" + it->second + "'");
    }
}

} // namespace

std::vector<int> ToyLinearTrainer::fit_predict(const LabelledFeatures& train, const Eigen::MatrixXd& test,
                                               int num_classes, std::uint64_t seed,
                                               const std::map<std::string, std::string>& hp) {
    const double lr = hyper(hp, "lr", 0.5);
    const int epochs = static_cast<int>(hyper(hp, "epochs", 300));
    const double l2 = hyper(hp, "l2", 1e-3);
    const Eigen::Index n = train.features.rows();
    const Eigen::Index d = train.features.cols();
    if (n == 0 || static_cast<std::size_t>(n) != train.labels.size()) {
        throw ValidationError("training features and labels disagree");
    }
    if (test.cols() != d) {
        throw ValidationError("train and test feature dimensions differ");
    }

    const Eigen::RowVectorXd mean = train.features.colwise().mean();
    Eigen::RowVectorXd stddev = ((train.features.rowwise() - mean).array().square().colwise().sum() /
                                 static_cast<double>(n))
                                    .sqrt();
    for (Eigen::Index j = 0; j < d; ++j) {
        if (stddev(j) < 1e-12) {
            stddev(j) = 1.0;
        }
    }
    const Eigen::MatrixXd x = (train.features.rowwise() - mean).array().rowwise() / stddev.array();
    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, num_classes);
    for (Eigen::Index i = 0; i < n; ++i) {
        onehot(i, train.labels[static_cast<std::size_t>(i)]) = 1.0;
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 0.01);
    Eigen::MatrixXd w(d, num_classes);
    for (Eigen::Index k = 0; k < w.cols(); ++k) {
        for (Eigen::Index j = 0; j < w.rows(); ++j) {
            w(j, k) = normal(rng);
        }
    }
    Eigen::RowVectorXd b = Eigen::RowVectorXd::Zero(num_classes);

    for (int e = 0; e < epochs; ++e) {
        Eigen::MatrixXd logits = (x * w).rowwise() + b;
        const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
        logits = (logits.colwise() - row_max).array().exp();
        const Eigen::VectorXd z = logits.rowwise().sum();
        const Eigen::MatrixXd p = logits.array().colwise() / z.array();
        const Eigen::MatrixXd err = p - onehot;
        const Eigen::MatrixXd gw = x.transpose() * err / static_cast<double>(n) + l2 * w;
        const Eigen::RowVectorXd gb = err.colwise().mean();
        w -= lr * gw;
        b -= lr * gb;
    }

    const Eigen::MatrixXd xt = (test.rowwise() - mean).array().rowwise() / stddev.array();
    const Eigen::MatrixXd scores = (xt * w).rowwise() + b;
    std::vector<int> pred(static_cast<std::size_t>(scores.rows()));
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        Eigen::Index best = 0;
        scores.row(i).maxCoeff(&best);
        pred[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return pred;
}

namespace {

struct TrainerRegistry {
    std::mutex mu;
    std::map<std::string, std::function<std::unique_ptr<Trainer>()>> factories{
        {"toy-linear", [] { return std::make_unique<ToyLinearTrainer>(); }}};
};

TrainerRegistry& trainers() {
    static TrainerRegistry r;
    return r;
}

} // namespace

void register_trainer(const std::string& id, std::function<std::unique_ptr<Trainer>()> factory) {
    std::lock_guard lock(trainers().mu);
    trainers().factories[id] = std::move(factory);
}

std::unique_ptr<Trainer> make_trainer(const std::string& id) {
    std::lock_guard lock(trainers().mu);
    auto it = trainers().factories.find(id);
    if (it != trainers().factories.end()) {
        return it->second();
    }
    static const std::vector<std::string> real = {"vit-b16", "resnet50", "swinv2-b", "convnext-b"};
    if (std::find(real.begin(), real.end(), id) != real.end()) {
        throw BackendError("backbone '" + id + "' is unavailable: fine-tuning backends are optional plug-ins");
    }
    throw BackendError("unknown backbone '" + id + "'");
}

// ---- results store ----

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

json result_json(const ExperimentResult& r) {
    json j;
    j["spec"] = {{"train", r.spec.train_manifest},
                 {"test", r.spec.test_manifest},
                 {"backbone", r.spec.backbone_id},
                 {"seed", r.spec.seed},
                 {"hyperparams", r.spec.hyperparams}};
    j["top1"] = r.top1_accuracy;
    j["n_test"] = r.n_test;
    j["per_class"] = r.per_class_accuracy;
    return j;
}

ExperimentResult result_from(const json& j) {
    ExperimentResult r;
    const auto& s = j.at("spec");
    r.spec.train_manifest = s.at("train").get<std::string>();
    r.spec.test_manifest = s.at("test").get<std::string>();
    r.spec.backbone_id = s.at("backbone").get<std::string>();
    r.spec.seed = s.at("seed").get<std::uint64_t>();
    r.spec.hyperparams = s.at("hyperparams").get<std::map<std::string, std::string>>();
    r.top1_accuracy = j.at("top1").get<double>();
    r.n_test = j.at("n_test").get<std::size_t>();
    r.per_class_accuracy = j.at("per_class").get<std::map<std::string, double>>();
    return r;
}

} // namespace

ResultsStore::ResultsStore(fs::path dir) : dir_(std::move(dir)) {
    fs::create_directories(dir_ / "by_digest");
    if (!fs::exists(csv_path())) {
        std::ofstream(csv_path()) << "train,test,backbone,seed,n_test,top1\n";
    }
}

std::optional<ExperimentResult> ResultsStore::find(const ExperimentSpec& spec) const {
    std::lock_guard lock(mu_);
    std::ifstream in(dir_ / "by_digest" / (spec.digest() + ".json"));
    if (!in) {
        return std::nullopt;
    }
    return result_from(json::parse(in));
}

void ResultsStore::put(const ExperimentResult& r) {
    std::lock_guard lock(mu_);
    const std::string digest = r.spec.digest();
    const fs::path entry = dir_ / "by_digest" / (digest + ".json");
    if (fs::exists(entry)) {
        return;
    }
    std::ofstream(entry) << result_json(r).dump(2) << '\n';
    std::ofstream csv(csv_path(), std::ios::app);
    csv << r.spec.train_manifest << ',' << r.spec.test_manifest << ',' << r.spec.backbone_id << ','
        << r.spec.seed << ',' << r.n_test << ',' << format_double(r.top1_accuracy) << '\n';
    std::ofstream(dir_ / "index.csv", std::ios::app) << digest << ',' << r.spec.train_manifest << ','
                                                     << r.spec.test_manifest << ',' << r.spec.backbone_id << ','
                                                     << r.spec.seed << '\n';
}

std::vector<ExperimentResult> ResultsStore::all() const {
    std::lock_guard lock(mu_);
    return load_results_csv(csv_path());
}

ExperimentResult run_experiment(const ExperimentSpec& spec, Trainer& trainer, FeatureSource& data,
                                ResultsStore* store) {
    if (store != nullptr) {
        if (auto hit = store->find(spec)) {
            return *hit;
        }
    }
    const auto classes = data.classes(spec.train_manifest);
    if (classes != data.classes(spec.test_manifest)) {
        throw ValidationError("manifests '" + spec.train_manifest + "' and '" + spec.test_manifest +
                              "' have different class lists");
    }
    const LabelledFeatures train = data.load(spec.train_manifest, Split::Train);
    const LabelledFeatures test = data.load(spec.test_manifest, Split::Test);
    const auto pred = trainer.fit_predict(train, test.features, static_cast<int>(classes.size()), spec.seed,
                                          spec.hyperparams);

    ExperimentResult r;
    r.spec = spec;
    r.n_test = test.labels.size();
    r.top1_accuracy = evaluate_accuracy(pred, test.labels);
    std::vector<std::size_t> hits(classes.size(), 0);
    std::vector<std::size_t> totals(classes.size(), 0);
    for (std::size_t i = 0; i < test.labels.size(); ++i) {
        const auto c = static_cast<std::size_t>(test.labels[i]);
        ++totals[c];
        hits[c] += pred[i] == test.labels[i] ? 1 : 0;
    }
    for (std::size_t c = 0; c < classes.size(); ++c) {
        if (totals[c] > 0) {
            r.per_class_accuracy[classes[c]] = 100.0 * static_cast<double>(hits[c]) / static_cast<double>(totals[c]);
        }
    }
    if (store != nullptr) {
        store->put(r);
    }
    return r;
}

namespace {

// Serializes access to a FeatureSource whose backends are not thread-safe,
// caching each (manifest, split) so parallel specs embed images only once.
class CachedSource final : public FeatureSource {
  public:
    explicit CachedSource(FeatureSource& inner) : inner_(inner) {}

    std::vector<std::string> classes(const std::string& manifest) override {
        std::lock_guard lock(mu_);
        return inner_.classes(manifest);
    }

    LabelledFeatures load(const std::string& manifest, Split split) override {
        std::lock_guard lock(mu_);
        const auto key = std::make_pair(manifest, split);
        auto it = cache_.find(key);
        if (it == cache_.end()) {
            it = cache_.emplace(key, inner_.load(manifest, split)).first;
        }
        return it->second;
    }

  private:
    FeatureSource& inner_;
    std::mutex mu_;
    std::map<std::pair<std::string, Split>, LabelledFeatures> cache_;
};

} // namespace

std::vector<ExperimentResult> run_protocol(const std::vector<ExperimentSpec>& specs, FeatureSource& data,
                                           ResultsStore* store, int workers) {
    if (workers < 1) {
        throw ValidationError("workers must be >= 1");
    }
    std::vector<std::unique_ptr<Trainer>> per_spec;
    for (const auto& s : specs) {
        per_spec.push_back(make_trainer(s.backbone_id));
    }
    CachedSource cached(data);
    std::vector<ExperimentResult> results(specs.size());
    std::vector<std::exception_ptr> errors(specs.size());
    const auto n = static_cast<std::ptrdiff_t>(specs.size());
#pragma omp parallel for num_threads(workers) schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        try {
            results[i] = run_experiment(specs[i], *per_spec[i], cached, store);
        } catch (...) {
            errors[i] = std::current_exception();
        }
    }
    for (const auto& e : errors) {
        if (e) {
            std::rethrow_exception(e);
        }
    }
    return results;
}

// ---- claims ----

namespace {

using CellKey = std::tuple<std::string, std::string, std::string>;  // train, test, backbone

std::map<CellKey, double> mean_cells(const std::vector<ExperimentResult>& results) {
    std::map<CellKey, std::pair<double, int>> acc;
    for (const auto& r : results) {
        auto& [sum, count] = acc[{r.spec.train_manifest, r.spec.test_manifest, r.spec.backbone_id}];
        sum += r.top1_accuracy;
        ++count;
    }
    std::map<CellKey, double> out;
    for (const auto& [k, v] : acc) {
        out[k] = v.first / v.second;
    }
    return out;
}

} // namespace

std::vector<DatasetPair> infer_pairs(const std::vector<ExperimentResult>& results) {
    std::vector<std::string> names;
    auto note = [&](const std::string& n) {
        if (std::find(names.begin(), names.end(), n) == names.end()) {
            names.push_back(n);
        }
    };
    for (const auto& r : results) {
        note(r.spec.train_manifest);
        note(r.spec.test_manifest);
    }
    std::vector<DatasetPair> pairs;
    for (const auto& n : names) {
        if (std::find(names.begin(), names.end(), n + "_FG") != names.end()) {
            pairs.push_back({n, n + "_FG"});
        }
    }
    return pairs;
}

ClaimSummary summarize_claims(const std::vector<ExperimentResult>& results, const std::vector<DatasetPair>& pairs) {
    if (pairs.empty()) {
        throw ValidationError("no dataset pairs to summarize");
    }
    const auto cells = mean_cells(results);
    ClaimSummary s;
    std::vector<std::string> missing;
    double drop_s2f = 0.0;
    double drop_f2s = 0.0;
    for (const auto& pair : pairs) {
        std::vector<std::string> backbones;
        for (const auto& r : results) {
            const auto& sp = r.spec;
            const bool in_pair = (sp.train_manifest == pair.source || sp.train_manifest == pair.fg) &&
                                 (sp.test_manifest == pair.source || sp.test_manifest == pair.fg);
            if (in_pair && std::find(backbones.begin(), backbones.end(), sp.backbone_id) == backbones.end()) {
                backbones.push_back(sp.backbone_id);
            }
        }
        if (backbones.empty()) {
            missing.push_back(pair.source + "/" + pair.fg + ": no results");
            continue;
        }
        for (const auto& b : backbones) {
            auto get = [&](const std::string& train, const std::string& test) -> std::optional<double> {
                auto it = cells.find({train, test, b});
                if (it == cells.end()) {
                    missing.push_back(train + "->" + test + " [" + b + "]");
                    return std::nullopt;
                }
                return it->second;
            };
            const auto ss = get(pair.source, pair.source);
            const auto sf = get(pair.source, pair.fg);
            const auto ff = get(pair.fg, pair.fg);
            const auto fs_ = get(pair.fg, pair.source);
            if (!ss || !sf || !ff || !fs_) {
                continue;
            }
            drop_s2f += *ss - *sf;
            drop_f2s += *ff - *fs_;
            s.fg_training_improvements.push_back({pair.source, b, *ff - *ss});
            ++s.cells;
        }
    }
    if (!missing.empty()) {
        std::string msg = "incomplete cross-validation blocks, missing:";
        for (const auto& m : missing) {
            msg += " " + m + ";";
        }
        throw ValidationError(msg);
    }
    s.avg_source_to_fg_drop = drop_s2f / static_cast<double>(s.cells);
    s.avg_fg_to_source_drop = drop_f2s / static_cast<double>(s.cells);
    s.all_improvements_positive = std::all_of(s.fg_training_improvements.begin(), s.fg_training_improvements.end(),
                                              [](const Improvement& i) { return i.delta > 0.0; });
    return s;
}

} // namespace fgseg
