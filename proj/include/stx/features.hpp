#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stx/marketdata.hpp"

namespace stx {

inline constexpr std::size_t kFeatureCount = 7;

using FeatureArray = std::array<double, kFeatureCount>;

// The 7 engineered features for one (symbol, day). All values come from bars
// strictly before the prediction day t:
//   hl_rel      = H/L - 1 of the previous trading day
//   co_rel      = C/O - 1 of the previous trading day
//   ma7/14/21   = mean close over the trailing 7/14/21 trading days
//   vol7_rel    = population stddev of close over 7 days divided by ma7
//   volume_prev = previous-day share volume
struct FeatureVector {
    double hl_rel = 0.0;
    double co_rel = 0.0;
    double ma7 = 0.0;
    double ma14 = 0.0;
    double ma21 = 0.0;
    double vol7_rel = 0.0;
    double volume_prev = 0.0;

    FeatureArray as_array() const {
        return {hl_rel, co_rel, ma7, ma14, ma21, vol7_rel, volume_prev};
    }
    static FeatureVector from_array(const FeatureArray& a) {
        return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
    }

    bool operator==(const FeatureVector&) const = default;
};

inline constexpr std::array<const char*, kFeatureCount> kFeatureNames = {
    "hl_rel", "co_rel", "ma7", "ma14", "ma21", "vol7_rel", "volume_prev"};

// One labeled training point. Features use days <= t-1 only; the label is the
// intraday gain high_t / open_t - 1 of day t itself.
struct LabeledPoint {
    std::string symbol;
    Date date;
    FeatureVector features;
    double label_value = 0.0;

    bool operator==(const LabeledPoint&) const = default;
};

// Per-feature z-score parameters fitted on training data. A feature with zero
// spread is degenerate: it standardizes to 0 and inverts back to its mean.
struct Scaler {
    FeatureArray mean{};
    FeatureArray stddev{};

    bool degenerate(std::size_t i) const { return stddev[i] == 0.0; }
    std::size_t degenerate_count() const;

    FeatureArray apply(const FeatureArray& x) const;
    FeatureVector apply(const FeatureVector& x) const;
    FeatureArray invert(const FeatureArray& z) const;

    bool operator==(const Scaler&) const = default;
};

struct Dataset {
    std::vector<LabeledPoint> points;
    // Present iff points are standardized.
    std::optional<Scaler> scaler;
};

struct InsufficientHistoryError : std::runtime_error {
    explicit InsufficientHistoryError(const std::string& detail);
};

struct MissingDayError : std::runtime_error {
    explicit MissingDayError(const std::string& detail);
};

struct EmptyDatasetError : std::runtime_error {
    explicit EmptyDatasetError(const std::string& detail);
};

inline constexpr int kMinHistoryDays = 21;

// Requires at least kMinHistoryDays bars strictly before t; t itself need not
// exist in the series (it does not at prediction time).
FeatureVector extract_features(const StockSeries& series, Date t);

// high_t / open_t - 1; MissingDayError if the series has no bar at t.
double label_point(const StockSeries& series, Date t);

// Which previous-day gain the eligibility prefilter uses.
enum class PrefilterBase {
    open_to_close,   // C_{t-1}/O_{t-1} - 1
    close_to_close,  // C_{t-1}/C_{t-2} - 1
};

struct DatasetOptions {
    // <= 0 disables the prefilter entirely.
    double prefilter_min_gain = 0.10;
    PrefilterBase prefilter_base = PrefilterBase::open_to_close;
};

bool prefilter_passes(const StockSeries& series, std::size_t bar_index,
                      const DatasetOptions& options);

// One unstandardized LabeledPoint per (stock, calendar day t) where history
// suffices and the prefilter holds. Throws EmptyDatasetError when nothing
// qualifies.
Dataset build_dataset(const std::vector<StockSeries>& series_set, const Calendar& calendar,
                      const DatasetOptions& options = {});

// Population mean/stddev per feature. Constant features come back with
// stddev 0 (degenerate); callers decide whether to warn.
Scaler fit_scaler(const Dataset& dataset);

FeatureVector apply_scaler(const Scaler& scaler, const FeatureVector& features);
Dataset apply_scaler(const Scaler& scaler, Dataset dataset);

// Feature cache: `symbol,date,f1..f7,label` CSV.
void save_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);
Dataset load_dataset_csv(const std::filesystem::path& path);

}  // namespace stx
