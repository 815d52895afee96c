#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stx/date.hpp"

namespace stx {

// One trading day of OHLCV data for one symbol.
struct Bar {
    Date date;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    std::int64_t volume = 0;

    // low <= open,close <= high, all prices > 0, volume >= 0
    bool valid() const;

    bool operator==(const Bar&) const = default;
};

// Ordered per-symbol history: bars strictly ascending by date, no duplicates.
struct StockSeries {
    std::string symbol;
    std::vector<Bar> bars;

    // Index of the first bar with date >= d.
    std::size_t lower_bound(Date d) const;
    // Index of the bar at exactly d, or npos.
    std::size_t index_of(Date d) const;
    const Bar* find(Date d) const;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    bool operator==(const StockSeries&) const = default;
};

struct UniverseEntry {
    std::string symbol;
    double market_cap_usd = 0.0;
};

// Tradable symbols with market capitalization; symbols unique.
struct Universe {
    std::vector<UniverseEntry> entries;
};

// Cross-stock trading calendar. A date is a trading day iff it appears in at
// least quorum * (number of stocks) series.
struct Calendar {
    std::vector<Date> trading_days;  // ascending
    double quorum = 0.5;

    bool contains(Date d) const;
    std::size_t index_of(Date d) const;  // npos if absent
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

struct MalformedRowError : std::runtime_error {
    std::size_t line_number;
    MalformedRowError(std::size_t line, const std::string& detail);
};

struct SymbolMismatchError : std::runtime_error {
    explicit SymbolMismatchError(const std::string& detail);
};

struct ConflictingDuplicateError : std::runtime_error {
    Date date;
    ConflictingDuplicateError(Date d, const std::string& detail);
};

inline constexpr std::string_view kSeriesCsvHeader = "date,open,high,low,close,volume";

// Per-stock CSV: header `date,open,high,low,close,volume`, ISO dates, decimal
// prices, UNIX line endings. Header-only input yields an empty series. Rows
// violating the Bar invariants raise MalformedRowError with the line number.
// Identical duplicate rows are collapsed; conflicting ones are an error.
StockSeries parse_series_csv(std::istream& in, std::string symbol);
StockSeries parse_series_csv(const std::string& text, std::string symbol);

// Inverse of parse: parse(serialize(parse(f))) == parse(f) for valid files.
std::string serialize_series_csv(const StockSeries& series);

StockSeries load_series_csv(const std::filesystem::path& path, std::string symbol);
void save_series_csv(const std::filesystem::path& path, const StockSeries& series);

// Collapse per-stock chunk files into one ascending series. Fragments may
// arrive in any order and overlap; identical duplicate dates merge silently,
// conflicting ones raise ConflictingDuplicateError.
StockSeries merge_chunks(const std::vector<StockSeries>& fragments);

Calendar build_calendar(const std::vector<StockSeries>& series_set, double quorum = 0.5);

// Universe file: header `symbol,market_cap_usd`, one entry per line.
Universe parse_universe_csv(std::istream& in);
Universe load_universe_csv(const std::filesystem::path& path);
void save_universe_csv(const std::filesystem::path& path, const Universe& universe);

// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);

}  // namespace stx
