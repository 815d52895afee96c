#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stx/features.hpp"

namespace stx {

struct ModelVersion {
    // Monotonic identifier assigned at promotion time; 0 means unassigned.
    std::uint64_t id = 0;
    // Deterministic content hash over k, threshold, scaler, points, labels.
    std::uint64_t content_hash = 0;

    std::string to_string() const;
    bool operator==(const ModelVersion&) const = default;
};

struct Prediction {
    bool positive = false;
    double vote_fraction = 0.0;

    bool operator==(const Prediction&) const = default;
};

struct ConfusionMatrix {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    std::int64_t total() const { return tp + fp + tn + fn; }
    // tp / (tp + fp); absent when nothing was predicted positive.
    std::optional<double> precision() const;
    double accuracy() const;
    ConfusionMatrix& operator+=(const ConfusionMatrix& other);

    bool operator==(const ConfusionMatrix&) const = default;
};

struct TooFewPointsError : std::runtime_error {
    explicit TooFewPointsError(const std::string& detail);
};

struct LengthMismatchError : std::runtime_error {
    explicit LengthMismatchError(const std::string& detail);
};

// A single k-NN threshold classifier: predicts whether next-day intraday gain
// exceeds `threshold`. Training points are standardized; the fitted scaler is
// stored so raw query features can be standardized on entry. The point matrix
// is shared (not copied) between the 19 ensemble members trained on the same
// dataset.
struct KnnModel {
    int k = 1;
    double threshold = 0.0;
    Scaler scaler;
    std::shared_ptr<const std::vector<FeatureArray>> points;
    std::shared_ptr<const std::vector<std::uint8_t>> labels;  // label_value >= threshold
    ModelVersion version;

    std::size_t size() const { return points ? points->size() : 0; }

    // Standardizes the query, finds the k nearest stored points by Euclidean
    // distance (ties broken by insertion index), and votes. Positive iff
    // strictly more than half the neighbors are positive.
    Prediction predict(const FeatureVector& raw_features) const;
    Prediction predict_standardized(const FeatureArray& z) const;
};

// Trains a model on `dataset`. If the dataset is already standardized (scaler
// present) the stored coordinates are used as-is; otherwise a scaler is fitted
// on the dataset and applied. Throws TooFewPointsError unless 1 <= k <= size.
KnnModel train(const Dataset& dataset, int k, double threshold);

struct HoldoutResult {
    std::optional<double> precision_mean;
    std::optional<double> precision_min;
    std::optional<double> precision_max;
    std::vector<std::optional<double>> per_repeat;
    ConfusionMatrix confusion;  // summed over repeats
    int defined_repeats = 0;
};

// Seeded random split validation, repeated. The split scaler is fitted on the
// training half only. Precision is absent for repeats with no positive
// predictions and is averaged over the defined repeats.
HoldoutResult holdout_validate(const Dataset& dataset, int k, double threshold,
                               double test_fraction, int repeats, std::uint64_t seed);

struct ValidationResult {
    ConfusionMatrix confusion;
    std::optional<double> precision;
    std::vector<std::uint8_t> predictions;  // one per dataset point
};

// Leave-one-out cross-validation without retraining per point: each point is
// predicted from its k nearest neighbors excluding itself. Distances use the
// dataset's stored coordinates, so standardize upstream. Output is
// bit-identical to the naive retrain-per-point procedure.
ValidationResult loocv(const Dataset& dataset, int k, double threshold);

// Evaluates every point of a labeled dataset with the trained model (raw
// features standardized per the model's scaler).
ValidationResult evaluate_on(const KnnModel& model, const Dataset& dataset);

ConfusionMatrix confusion(const std::vector<std::uint8_t>& predictions,
                          const std::vector<std::uint8_t>& labels);

// The 19 threshold models, strictly ascending by threshold.
struct EnsembleModel {
    std::vector<KnnModel> models;
    ModelVersion version;

    std::vector<double> thresholds() const;
    // Per-model outputs for one query. When all members share one point
    // matrix and scaler (the normal case) distances are computed once.
    std::vector<Prediction> evaluate(const FeatureVector& raw_features) const;
};

// tau_i = 0.6% + 0.5% * (i - 1), i = 1..19  (0.6% .. 9.6%)
std::vector<double> default_thresholds();

EnsembleModel train_ensemble(const Dataset& dataset, const std::vector<double>& thresholds,
                             int k);
// Per-threshold k values (e.g. from grid search); ks.size() must match.
EnsembleModel train_ensemble(const Dataset& dataset, const std::vector<double>& thresholds,
                             const std::vector<int>& ks);

struct RankedPrediction {
    std::string symbol;
    // Highest threshold with a positive prediction; 0 when no model fires.
    double score = 0.0;
    // Vote fraction of the model at the scoring threshold (0 when score is 0).
    double vote_fraction = 0.0;
    std::vector<Prediction> per_model;
};

// Orders symbols by score desc, then vote_fraction desc, then symbol asc.
std::vector<RankedPrediction> ensemble_rank(
    const EnsembleModel& ensemble, const std::map<std::string, FeatureVector>& features_by_symbol);

// Self-contained textual model file; ensemble directories hold one file per
// member plus a manifest.
void save_model(const std::filesystem::path& path, const KnnModel& model);
KnnModel load_model(const std::filesystem::path& path);
void save_ensemble(const std::filesystem::path& dir, const EnsembleModel& ensemble);
EnsembleModel load_ensemble(const std::filesystem::path& dir);

}  // namespace stx
