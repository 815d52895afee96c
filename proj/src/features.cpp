#include "stx/features.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace stx {

InsufficientHistoryError::InsufficientHistoryError(const std::string& detail)
    : std::runtime_error(detail) {}

MissingDayError::MissingDayError(const std::string& detail) : std::runtime_error(detail) {}

EmptyDatasetError::EmptyDatasetError(const std::string& detail) : std::runtime_error(detail) {}

std::size_t Scaler::degenerate_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        if (degenerate(i)) ++n;
    }
    return n;
}

FeatureArray Scaler::apply(const FeatureArray& x) const {
    FeatureArray z{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        z[i] = degenerate(i) ? 0.0 : (x[i] - mean[i]) / stddev[i];
    }
    return z;
}

FeatureVector Scaler::apply(const FeatureVector& x) const {
    return FeatureVector::from_array(apply(x.as_array()));
}

FeatureArray Scaler::invert(const FeatureArray& z) const {
    FeatureArray x{};
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        x[i] = degenerate(i) ? mean[i] : z[i] * stddev[i] + mean[i];
    }
    return x;
}

namespace {

double mean_close(const std::vector<Bar>& bars, std::size_t end_exclusive, std::size_t window) {
    double sum = 0.0;
    for (std::size_t i = end_exclusive - window; i < end_exclusive; ++i) {
        sum += bars[i].close;
    }
    return sum / static_cast<double>(window);
}

double population_stddev_close(const std::vector<Bar>& bars, std::size_t end_exclusive,
                               std::size_t window, double mean) {
    double sum_sq = 0.0;
    for (std::size_t i = end_exclusive - window; i < end_exclusive; ++i) {
        double d = bars[i].close - mean;
        sum_sq += d * d;
    }
    return std::sqrt(sum_sq / static_cast<double>(window));
}

}  // namespace

FeatureVector extract_features(const StockSeries& series, Date t) {
    const std::size_t pos = series.lower_bound(t);  // bars[0..pos) are strictly before t
    if (pos < static_cast<std::size_t>(kMinHistoryDays)) {
        throw InsufficientHistoryError(series.symbol + ": " + std::to_string(pos) +
                                       " bars before " + t.to_string() + ", need " +
                                       std::to_string(kMinHistoryDays));
    }
    const Bar& prev = series.bars[pos - 1];

    FeatureVector f;
    f.hl_rel = prev.high / prev.low - 1.0;
    f.co_rel = prev.close / prev.open - 1.0;
    f.ma7 = mean_close(series.bars, pos, 7);
    f.ma14 = mean_close(series.bars, pos, 14);
    f.ma21 = mean_close(series.bars, pos, 21);
    f.vol7_rel = population_stddev_close(series.bars, pos, 7, f.ma7) / f.ma7;
    f.volume_prev = static_cast<double>(prev.volume);
    return f;
}

double label_point(const StockSeries& series, Date t) {
    const Bar* bar = series.find(t);
    if (bar == nullptr) {
        throw MissingDayError(series.symbol + ": no bar at " + t.to_string());
    }
    return bar->high / bar->open - 1.0;
}

bool prefilter_passes(const StockSeries& series, std::size_t bar_index,
                      const DatasetOptions& options) {
    if (options.prefilter_min_gain <= 0.0) return true;
    if (bar_index == 0) return false;
    const Bar& prev = series.bars[bar_index - 1];
    double gain;
    if (options.prefilter_base == PrefilterBase::open_to_close) {
        gain = prev.close / prev.open - 1.0;
    } else {
        if (bar_index < 2) return false;
        gain = prev.close / series.bars[bar_index - 2].close - 1.0;
    }
    return gain >= options.prefilter_min_gain;
}

Dataset build_dataset(const std::vector<StockSeries>& series_set, const Calendar& calendar,
                      const DatasetOptions& options) {
    if (options.prefilter_min_gain > 0.0 && !(options.prefilter_min_gain < 1.0)) {
        throw std::invalid_argument("prefilter_min_gain out of range");
    }
    Dataset dataset;
    for (const StockSeries& series : series_set) {
        for (std::size_t i = kMinHistoryDays; i < series.bars.size(); ++i) {
            Date t = series.bars[i].date;
            if (!calendar.contains(t)) continue;
            if (!prefilter_passes(series, i, options)) continue;
            LabeledPoint point;
            point.symbol = series.symbol;
            point.date = t;
            point.features = extract_features(series, t);
            point.label_value = series.bars[i].high / series.bars[i].open - 1.0;
            dataset.points.push_back(std::move(point));
        }
    }
    if (dataset.points.empty()) {
        throw EmptyDatasetError("no (stock, day) pair passed history and prefilter checks");
    }
    return dataset;
}

Scaler fit_scaler(const Dataset& dataset) {
    if (dataset.points.empty()) {
        throw EmptyDatasetError("fit_scaler: empty dataset");
    }
    const double n = static_cast<double>(dataset.points.size());
    Scaler scaler;
    for (const LabeledPoint& p : dataset.points) {
        FeatureArray x = p.features.as_array();
        for (std::size_t i = 0; i < kFeatureCount; ++i) scaler.mean[i] += x[i];
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) scaler.mean[i] /= n;
    for (const LabeledPoint& p : dataset.points) {
        FeatureArray x = p.features.as_array();
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            double d = x[i] - scaler.mean[i];
            scaler.stddev[i] += d * d;
        }
    }
    for (std::size_t i = 0; i < kFeatureCount; ++i) {
        scaler.stddev[i] = std::sqrt(scaler.stddev[i] / n);
    }
    return scaler;
}

FeatureVector apply_scaler(const Scaler& scaler, const FeatureVector& features) {
    return scaler.apply(features);
}

Dataset apply_scaler(const Scaler& scaler, Dataset dataset) {
    for (LabeledPoint& p : dataset.points) {
        p.features = scaler.apply(p.features);
    }
    dataset.scaler = scaler;
    return dataset;
}

void save_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "symbol,date";
    for (const char* name : kFeatureNames) out << ',' << name;
    out << ",label\n";
    for (const LabeledPoint& p : dataset.points) {
        out << p.symbol << ',' << p.date.to_string();
        for (double v : p.features.as_array()) out << ',' << format_double(v);
        out << ',' << format_double(p.label_value) << '\n';
    }
}

Dataset load_dataset_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    Dataset dataset;
    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line)) {
        throw MalformedRowError(1, "missing header");
    }
    ++line_number;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string field;
        LabeledPoint p;
        if (!std::getline(row, field, ',')) throw MalformedRowError(line_number, "bad row");
        p.symbol = field;
        if (!std::getline(row, field, ',')) throw MalformedRowError(line_number, "bad row");
        p.date = Date::parse(field);
        FeatureArray values{};
        for (std::size_t i = 0; i < kFeatureCount; ++i) {
            if (!std::getline(row, field, ',')) throw MalformedRowError(line_number, "bad row");
            auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), values[i]);
            if (ec != std::errc{} || ptr != field.data() + field.size()) {
                throw MalformedRowError(line_number, "bad feature value '" + field + "'");
            }
        }
        p.features = FeatureVector::from_array(values);
        if (!std::getline(row, field, ',')) throw MalformedRowError(line_number, "bad row");
        auto [ptr, ec] =
            std::from_chars(field.data(), field.data() + field.size(), p.label_value);
        if (ec != std::errc{} || ptr != field.data() + field.size()) {
            throw MalformedRowError(line_number, "bad label '" + field + "'");
        }
        dataset.points.push_back(std::move(p));
    }
    return dataset;
}

}  // namespace stx
