#include "stx/knn.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace stx {

std::string ModelVersion::to_string() const {
    return "v" + std::to_string(id) + ":" + std::to_string(content_hash);
}

std::optional<double> ConfusionMatrix::precision() const {
    if (tp + fp == 0) return std::nullopt;
    return static_cast<double>(tp) / static_cast<double>(tp + fp);
}

double ConfusionMatrix::accuracy() const {
    std::int64_t n = total();
    if (n == 0) return 0.0;
    return static_cast<double>(tp + tn) / static_cast<double>(n);
}

ConfusionMatrix& ConfusionMatrix::operator+=(const ConfusionMatrix& other) {
    tp += other.tp;
    fp += other.fp;
    tn += other.tn;
    fn += other.fn;
    return *this;
}

TooFewPointsError::TooFewPointsError(const std::string& detail) : std::runtime_error(detail) {}

LengthMismatchError::LengthMismatchError(const std::string& detail)
    : std::runtime_error(detail) {}

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;

void hash_bytes(std::uint64_t& h, const void* data, std::size_t size) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < size; ++i) {
        h ^= p[i];
        h *= kFnvPrime;
    }
}

void hash_double(std::uint64_t& h, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    hash_bytes(h, &bits, sizeof(bits));
}

std::uint64_t model_content_hash(int k, double threshold, const Scaler& scaler,
                                 const std::vector<FeatureArray>& points,
                                 const std::vector<std::uint8_t>& labels) {
    std::uint64_t h = kFnvOffset;
    std::uint64_t kk = static_cast<std::uint64_t>(k);
    hash_bytes(h, &kk, sizeof(kk));
    hash_double(h, threshold);
    for (double v : scaler.mean) hash_double(h, v);
    for (double v : scaler.stddev) hash_double(h, v);
    for (const FeatureArray& p : points) {
        for (double v : p) hash_double(h, v);
    }
    hash_bytes(h, labels.data(), labels.size());
    return h;
}

// Fixed accumulation order so every caller computes bit-identical distances.
double squared_distance(const FeatureArray& a, const FeatureArray& b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        double d = a[i] - b[i];
        sum += d * d;
    }
    return sum;
}

using DistIndex = std::pair<double, std::uint32_t>;

constexpr std::size_t kNoExclude = static_cast<std::size_t>(-1);

// Counts positive labels among the k nearest candidates, ties broken by
// (distance, insertion index). `exclude` skips one index (LOOCV self).
int positives_in_k_nearest(const std::vector<FeatureArray>& points,
                           const std::vector<std::uint8_t>& labels, const FeatureArray& query,
                           int k, std::size_t exclude) {
    std::vector<DistIndex> heap;  // max-heap of the current k best
    heap.reserve(static_cast<std::size_t>(k) + 1);
    for (std::size_t j = 0; j < points.size(); ++j) {
        if (j == exclude) continue;
        DistIndex cand{squared_distance(query, points[j]), static_cast<std::uint32_t>(j)};
        if (heap.size() < static_cast<std::size_t>(k)) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
        }
    }
    int positives = 0;
    for (const DistIndex& di : heap) {
        positives += labels[di.second];
    }
    return positives;
}

Prediction vote(int positives, int k) {
    Prediction p;
    p.positive = 2 * positives > k;  // exact half resolves to negative
    p.vote_fraction = static_cast<double>(positives) / static_cast<double>(k);
    return p;
}

std::vector<std::uint8_t> binarize_labels(const Dataset& dataset, double threshold) {
    std::vector<std::uint8_t> labels;
    labels.reserve(dataset.points.size());
    for (const LabeledPoint& p : dataset.points) {
        labels.push_back(p.label_value >= threshold ? 1 : 0);
    }
    return labels;
}

}  // namespace

Prediction KnnModel::predict(const FeatureVector& raw_features) const {
    return predict_standardized(scaler.apply(raw_features.as_array()));
}

Prediction KnnModel::predict_standardized(const FeatureArray& z) const {
    int positives = positives_in_k_nearest(*points, *labels, z, k, kNoExclude);
    return vote(positives, k);
}

KnnModel train(const Dataset& dataset, int k, double threshold) {
    if (k < 1 || static_cast<std::size_t>(k) > dataset.points.size()) {
        throw TooFewPointsError("train: k=" + std::to_string(k) + " with " +
                                std::to_string(dataset.points.size()) + " points");
    }
    if (!(threshold > 0.0)) {
        throw std::invalid_argument("train: threshold must be > 0");
    }

    KnnModel model;
    model.k = k;
    model.threshold = threshold;

    auto matrix = std::make_shared<std::vector<FeatureArray>>();
    matrix->reserve(dataset.points.size());
    if (dataset.scaler.has_value()) {
        model.scaler = *dataset.scaler;
        for (const LabeledPoint& p : dataset.points) {
            matrix->push_back(p.features.as_array());
        }
    } else {
        model.scaler = fit_scaler(dataset);
        for (const LabeledPoint& p : dataset.points) {
            matrix->push_back(model.scaler.apply(p.features.as_array()));
        }
    }
    auto labels = std::make_shared<std::vector<std::uint8_t>>(binarize_labels(dataset, threshold));

    model.version.content_hash =
        model_content_hash(k, threshold, model.scaler, *matrix, *labels);
    model.points = std::move(matrix);
    model.labels = std::move(labels);
    return model;
}

HoldoutResult holdout_validate(const Dataset& dataset, int k, double threshold,
                               double test_fraction, int repeats, std::uint64_t seed) {
    if (repeats < 1) {
        throw std::invalid_argument("holdout_validate: repeats must be >= 1");
    }
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("holdout_validate: test_fraction must be in (0,1)");
    }
    const std::size_t n = dataset.points.size();
    std::size_t n_test = static_cast<std::size_t>(std::llround(test_fraction * double(n)));
    n_test = std::clamp<std::size_t>(n_test, 1, n > 1 ? n - 1 : 1);
    const std::size_t n_train = n - n_test;
    if (n_train < static_cast<std::size_t>(k)) {
        throw TooFewPointsError("holdout_validate: train split smaller than k");
    }

    std::mt19937_64 rng(seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    HoldoutResult result;
    const bool standardized = dataset.scaler.has_value();

    for (int r = 0; r < repeats; ++r) {
        std::shuffle(order.begin(), order.end(), rng);

        Dataset train_split;
        train_split.scaler = dataset.scaler;
        train_split.points.reserve(n_train);
        for (std::size_t i = n_test; i < n; ++i) {
            train_split.points.push_back(dataset.points[order[i]]);
        }
        KnnModel model = train(train_split, k, threshold);

        ConfusionMatrix cm;
        for (std::size_t i = 0; i < n_test; ++i) {
            const LabeledPoint& p = dataset.points[order[i]];
            Prediction pred = standardized
                                  ? model.predict_standardized(p.features.as_array())
                                  : model.predict(p.features);
            bool truth = p.label_value >= threshold;
            if (pred.positive && truth) ++cm.tp;
            else if (pred.positive && !truth) ++cm.fp;
            else if (!pred.positive && truth) ++cm.fn;
            else ++cm.tn;
        }
        result.confusion += cm;
        result.per_repeat.push_back(cm.precision());
    }

    double sum = 0.0;
    for (const auto& p : result.per_repeat) {
        if (!p.has_value()) continue;
        ++result.defined_repeats;
        sum += *p;
        if (!result.precision_min || *p < *result.precision_min) result.precision_min = *p;
        if (!result.precision_max || *p > *result.precision_max) result.precision_max = *p;
    }
    if (result.defined_repeats > 0) {
        result.precision_mean = sum / result.defined_repeats;
    }
    return result;
}

ValidationResult loocv(const Dataset& dataset, int k, double threshold) {
    const std::size_t n = dataset.points.size();
    if (k < 1 || n < static_cast<std::size_t>(k) + 1) {
        throw TooFewPointsError("loocv: need at least k+1 points");
    }

    std::vector<FeatureArray> coords;
    coords.reserve(n);
    for (const LabeledPoint& p : dataset.points) coords.push_back(p.features.as_array());
    std::vector<std::uint8_t> labels = binarize_labels(dataset, threshold);

    ValidationResult result;
    result.predictions.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        int positives = positives_in_k_nearest(coords, labels, coords[i], k, i);
        Prediction pred = vote(positives, k);
        result.predictions[i] = pred.positive ? 1 : 0;
        bool truth = labels[i] != 0;
        if (pred.positive && truth) ++result.confusion.tp;
        else if (pred.positive && !truth) ++result.confusion.fp;
        else if (!pred.positive && truth) ++result.confusion.fn;
        else ++result.confusion.tn;
    }
    result.precision = result.confusion.precision();
    return result;
}

ValidationResult evaluate_on(const KnnModel& model, const Dataset& dataset) {
    ValidationResult result;
    result.predictions.resize(dataset.points.size());
    for (std::size_t i = 0; i < dataset.points.size(); ++i) {
        const LabeledPoint& p = dataset.points[i];
        Prediction pred = model.predict(p.features);
        result.predictions[i] = pred.positive ? 1 : 0;
        bool truth = p.label_value >= model.threshold;
        if (pred.positive && truth) ++result.confusion.tp;
        else if (pred.positive && !truth) ++result.confusion.fp;
        else if (!pred.positive && truth) ++result.confusion.fn;
        else ++result.confusion.tn;
    }
    result.precision = result.confusion.precision();
    return result;
}

ConfusionMatrix confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels) {
    if (predictions.size() != labels.size()) {
        throw LengthMismatchError("confusion: " + std::to_string(predictions.size()) +
                                  " predictions vs " + std::to_string(labels.size()) +
                                  " labels");
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        bool pred = predictions[i] != 0;
        bool truth = labels[i] != 0;
        if (pred && truth) ++cm.tp;
        else if (pred && !truth) ++cm.fp;
        else if (!pred && truth) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

std::vector<double> EnsembleModel::thresholds() const {
    std::vector<double> out;
    out.reserve(models.size());
    for (const KnnModel& m : models) out.push_back(m.threshold);
    return out;
}

std::vector<double> default_thresholds() {
    std::vector<double> out;
    out.reserve(19);
    for (int i = 1; i <= 19; ++i) {
        out.push_back(0.006 + 0.005 * (i - 1));
    }
    return out;
}

namespace {

bool shares_training_data(const std::vector<KnnModel>& models) {
    if (models.empty()) return false;
    const auto& first = models.front();
    for (const KnnModel& m : models) {
        if (m.points != first.points || m.scaler != first.scaler) return false;
    }
    return true;
}

}  // namespace

std::vector<Prediction> EnsembleModel::evaluate(const FeatureVector& raw_features) const {
    std::vector<Prediction> out(models.size());
    if (models.empty()) return out;

    if (!shares_training_data(models)) {
        for (std::size_t m = 0; m < models.size(); ++m) {
            out[m] = models[m].predict(raw_features);
        }
        return out;
    }

    // All members share one point matrix and scaler: compute distances once
    // and reuse the sorted max-k prefix for every member.
    const std::vector<FeatureArray>& points = *models.front().points;
    FeatureArray z = models.front().scaler.apply(raw_features.as_array());

    int max_k = 0;
    for (const KnnModel& m : models) max_k = std::max(max_k, m.k);
    max_k = std::min<int>(max_k, static_cast<int>(points.size()));

    std::vector<DistIndex> pairs;
    pairs.reserve(points.size());
    for (std::size_t j = 0; j < points.size(); ++j) {
        pairs.emplace_back(squared_distance(z, points[j]), static_cast<std::uint32_t>(j));
    }
    std::nth_element(pairs.begin(), pairs.begin() + max_k - 1, pairs.end());
    std::sort(pairs.begin(), pairs.begin() + max_k);

    for (std::size_t m = 0; m < models.size(); ++m) {
        const std::vector<std::uint8_t>& labels = *models[m].labels;
        int k = models[m].k;
        int positives = 0;
        for (int j = 0; j < k; ++j) {
            positives += labels[pairs[j].second];
        }
        out[m] = vote(positives, k);
    }
    return out;
}

EnsembleModel train_ensemble(const Dataset& dataset, const std::vector<double>& thresholds,
                             int k) {
    return train_ensemble(dataset, thresholds, std::vector<int>(thresholds.size(), k));
}

EnsembleModel train_ensemble(const Dataset& dataset, const std::vector<double>& thresholds,
                             const std::vector<int>& ks) {
    if (thresholds.empty()) {
        throw std::invalid_argument("train_ensemble: no thresholds");
    }
    if (ks.size() != thresholds.size()) {
        throw std::invalid_argument("train_ensemble: ks/thresholds size mismatch");
    }
    for (std::size_t i = 1; i < thresholds.size(); ++i) {
        if (!(thresholds[i] > thresholds[i - 1])) {
            throw std::invalid_argument("train_ensemble: thresholds must be strictly ascending");
        }
    }

    // Standardize once and share the point matrix across all members.
    Dataset standardized;
    const Dataset* source = &dataset;
    if (!dataset.scaler.has_value()) {
        standardized = apply_scaler(fit_scaler(dataset), dataset);
        source = &standardized;
    }
    auto matrix = std::make_shared<std::vector<FeatureArray>>();
    matrix->reserve(source->points.size());
    for (const LabeledPoint& p : source->points) matrix->push_back(p.features.as_array());

    EnsembleModel ensemble;
    std::uint64_t h = kFnvOffset;
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        int k = ks[i];
        if (k < 1 || static_cast<std::size_t>(k) > matrix->size()) {
            throw TooFewPointsError("train_ensemble: k=" + std::to_string(k) + " with " +
                                    std::to_string(matrix->size()) + " points");
        }
        KnnModel model;
        model.k = k;
        model.threshold = thresholds[i];
        model.scaler = *source->scaler;
        model.points = matrix;
        model.labels = std::make_shared<std::vector<std::uint8_t>>(
            binarize_labels(*source, thresholds[i]));
        model.version.content_hash =
            model_content_hash(k, thresholds[i], model.scaler, *matrix, *model.labels);
        hash_double(h, thresholds[i]);
        hash_bytes(h, &model.version.content_hash, sizeof(std::uint64_t));
        ensemble.models.push_back(std::move(model));
    }
    ensemble.version.content_hash = h;
    return ensemble;
}

std::vector<RankedPrediction> ensemble_rank(
    const EnsembleModel& ensemble,
    const std::map<std::string, FeatureVector>& features_by_symbol) {
    std::vector<RankedPrediction> ranked;
    ranked.reserve(features_by_symbol.size());
    for (const auto& [symbol, features] : features_by_symbol) {
        RankedPrediction rp;
        rp.symbol = symbol;
        rp.per_model = ensemble.evaluate(features);
        for (std::size_t m = 0; m < rp.per_model.size(); ++m) {
            if (rp.per_model[m].positive) {
                rp.score = ensemble.models[m].threshold;
                rp.vote_fraction = rp.per_model[m].vote_fraction;
            }
        }
        ranked.push_back(std::move(rp));
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const RankedPrediction& a, const RankedPrediction& b) {
                  if (a.score != b.score) return a.score > b.score;
                  if (a.vote_fraction != b.vote_fraction) return a.vote_fraction > b.vote_fraction;
                  return a.symbol < b.symbol;
              });
    return ranked;
}

namespace {

double parse_double_token(const std::string& token, const std::string& context) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw std::runtime_error("model file: bad double '" + token + "' in " + context);
    }
    return value;
}

}  // namespace

void save_model(const std::filesystem::path& path, const KnnModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "stx-knn 1\n";
    out << "k " << model.k << '\n';
    out << "threshold " << format_double(model.threshold) << '\n';
    out << "version " << model.version.id << ' ' << model.version.content_hash << '\n';
    out << "scaler_mean";
    for (double v : model.scaler.mean) out << ' ' << format_double(v);
    out << "\nscaler_stddev";
    for (double v : model.scaler.stddev) out << ' ' << format_double(v);
    out << "\npoints " << model.size() << '\n';
    for (std::size_t i = 0; i < model.size(); ++i) {
        out << 'p';
        for (double v : (*model.points)[i]) out << ' ' << format_double(v);
        out << ' ' << int((*model.labels)[i]) << '\n';
    }
}

KnnModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    std::string tag;
    int format = 0;
    in >> tag >> format;
    if (tag != "stx-knn" || format != 1) {
        throw std::runtime_error("not a model file: " + path.string());
    }
    KnnModel model;
    std::string key, token;
    in >> key >> model.k;
    if (key != "k") throw std::runtime_error("model file: expected 'k'");
    in >> key >> token;
    if (key != "threshold") throw std::runtime_error("model file: expected 'threshold'");
    model.threshold = parse_double_token(token, "threshold");
    in >> key >> model.version.id >> model.version.content_hash;
    if (key != "version") throw std::runtime_error("model file: expected 'version'");
    in >> key;
    if (key != "scaler_mean") throw std::runtime_error("model file: expected 'scaler_mean'");
    for (double& v : model.scaler.mean) {
        in >> token;
        v = parse_double_token(token, "scaler_mean");
    }
    in >> key;
    if (key != "scaler_stddev") throw std::runtime_error("model file: expected 'scaler_stddev'");
    for (double& v : model.scaler.stddev) {
        in >> token;
        v = parse_double_token(token, "scaler_stddev");
    }
    std::size_t n = 0;
    in >> key >> n;
    if (key != "points") throw std::runtime_error("model file: expected 'points'");

    auto matrix = std::make_shared<std::vector<FeatureArray>>();
    auto labels = std::make_shared<std::vector<std::uint8_t>>();
    matrix->reserve(n);
    labels->reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        in >> key;
        if (key != "p") throw std::runtime_error("model file: expected point row");
        FeatureArray a{};
        for (double& v : a) {
            in >> token;
            v = parse_double_token(token, "point");
        }
        int label = 0;
        in >> label;
        if (label != 0 && label != 1) throw std::runtime_error("model file: bad label");
        matrix->push_back(a);
        labels->push_back(static_cast<std::uint8_t>(label));
    }
    if (!in) {
        throw std::runtime_error("model file truncated: " + path.string());
    }
    if (model.k < 1 || static_cast<std::size_t>(model.k) > n) {
        throw std::runtime_error("model file: k out of range");
    }
    std::uint64_t expected =
        model_content_hash(model.k, model.threshold, model.scaler, *matrix, *labels);
    if (expected != model.version.content_hash) {
        throw std::runtime_error("model file: content hash mismatch in " + path.string());
    }
    model.points = std::move(matrix);
    model.labels = std::move(labels);
    return model;
}

void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& ensemble) {
    std::filesystem::create_directories(dir);
    std::ofstream manifest(dir / "ensemble.manifest", std::ios::binary);
    if (!manifest) {
        throw std::runtime_error("cannot write " + (dir / "ensemble.manifest").string());
    }
    manifest << "stx-ensemble 1\n";
    manifest << "version " << ensemble.version.id << ' ' << ensemble.version.content_hash << '\n';
    manifest << "models " << ensemble.models.size() << '\n';
    for (std::size_t i = 0; i < ensemble.models.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "model_%02zu.knn", i + 1);
        save_model(dir / name, ensemble.models[i]);
        manifest << "m " << format_double(ensemble.models[i].threshold) << ' ' << name << '\n';
    }
}

EnsembleModel load_ensemble(const std::filesystem::path& dir) {
    std::ifstream manifest(dir / "ensemble.manifest");
    if (!manifest) {
        throw std::runtime_error("cannot open " + (dir / "ensemble.manifest").string());
    }
    std::string tag;
    int format = 0;
    manifest >> tag >> format;
    if (tag != "stx-ensemble" || format != 1) {
        throw std::runtime_error("not an ensemble manifest: " + dir.string());
    }
    EnsembleModel ensemble;
    std::string key, token;
    manifest >> key >> ensemble.version.id >> ensemble.version.content_hash;
    if (key != "version") throw std::runtime_error("manifest: expected 'version'");
    std::size_t count = 0;
    manifest >> key >> count;
    if (key != "models") throw std::runtime_error("manifest: expected 'models'");
    double last_threshold = 0.0;
    for (std::size_t i = 0; i < count; ++i) {
        std::string name;
        manifest >> key >> token >> name;
        if (key != "m") throw std::runtime_error("manifest: expected member row");
        double threshold = parse_double_token(token, "manifest threshold");
        KnnModel model = load_model(dir / name);
        if (model.threshold != threshold) {
            throw std::runtime_error("manifest threshold mismatch for " + name);
        }
        if (i > 0 && !(threshold > last_threshold)) {
            throw std::runtime_error("manifest thresholds not strictly ascending");
        }
        last_threshold = threshold;
        ensemble.models.push_back(std::move(model));
    }
    if (!manifest) {
        throw std::runtime_error("manifest truncated: " + dir.string());
    }
    return ensemble;
}

}  // namespace stx
