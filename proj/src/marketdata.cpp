#include "stx/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>

namespace stx {

bool Bar::valid() const {
    if (!(low > 0.0 && high > 0.0 && open > 0.0 && close > 0.0)) return false;
    if (!(low <= open && open <= high)) return false;
    if (!(low <= close && close <= high)) return false;
    if (volume < 0) return false;
    return true;
}

std::size_t StockSeries::lower_bound(Date d) const {
    auto it = std::lower_bound(bars.begin(), bars.end(), d,
                               [](const Bar& b, Date date) { return b.date < date; });
    return static_cast<std::size_t>(it - bars.begin());
}

std::size_t StockSeries::index_of(Date d) const {
    std::size_t i = lower_bound(d);
    if (i < bars.size() && bars[i].date == d) return i;
    return npos;
}

const Bar* StockSeries::find(Date d) const {
    std::size_t i = index_of(d);
    return i == npos ? nullptr : &bars[i];
}

bool Calendar::contains(Date d) const {
    return std::binary_search(trading_days.begin(), trading_days.end(), d);
}

std::size_t Calendar::index_of(Date d) const {
    auto it = std::lower_bound(trading_days.begin(), trading_days.end(), d);
    if (it != trading_days.end() && *it == d) {
        return static_cast<std::size_t>(it - trading_days.begin());
    }
    return npos;
}

MalformedRowError::MalformedRowError(std::size_t line, const std::string& detail)
    : std::runtime_error("line " + std::to_string(line) + ": " + detail), line_number(line) {}

SymbolMismatchError::SymbolMismatchError(const std::string& detail)
    : std::runtime_error(detail) {}

ConflictingDuplicateError::ConflictingDuplicateError(Date d, const std::string& detail)
    : std::runtime_error(detail + " at " + d.to_string()), date(d) {}

std::string format_double(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) return "0";
    return std::string(buf, ptr);
}

namespace {

double parse_price(std::string_view field, std::size_t line) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size() || !std::isfinite(value)) {
        throw MalformedRowError(line, "bad price field '" + std::string(field) + "'");
    }
    return value;
}

std::int64_t parse_volume(std::string_view field, std::size_t line) {
    std::int64_t value = 0;
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size()) {
        throw MalformedRowError(line, "bad volume field '" + std::string(field) + "'");
    }
    return value;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return out;
}

}  // namespace

StockSeries parse_series_csv(std::istream& in, std::string symbol) {
    StockSeries series;
    series.symbol = std::move(symbol);

    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line)) {
        throw MalformedRowError(1, "missing header");
    }
    ++line_number;
    if (line != kSeriesCsvHeader) {
        throw MalformedRowError(1, "bad header '" + line + "'");
    }

    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 6) {
            throw MalformedRowError(line_number, "expected 6 fields, got " +
                                                     std::to_string(fields.size()));
        }
        Bar bar;
        try {
            bar.date = Date::parse(fields[0]);
        } catch (const std::invalid_argument& e) {
            throw MalformedRowError(line_number, e.what());
        }
        bar.open = parse_price(fields[1], line_number);
        bar.high = parse_price(fields[2], line_number);
        bar.low = parse_price(fields[3], line_number);
        bar.close = parse_price(fields[4], line_number);
        bar.volume = parse_volume(fields[5], line_number);
        if (!bar.valid()) {
            throw MalformedRowError(line_number, "bar violates price invariants");
        }
        series.bars.push_back(bar);
    }

    std::stable_sort(series.bars.begin(), series.bars.end(),
                     [](const Bar& a, const Bar& b) { return a.date < b.date; });

    // Collapse identical duplicate dates; conflicting duplicates are an error.
    std::vector<Bar> unique_bars;
    unique_bars.reserve(series.bars.size());
    for (const Bar& bar : series.bars) {
        if (!unique_bars.empty() && unique_bars.back().date == bar.date) {
            if (unique_bars.back() != bar) {
                throw ConflictingDuplicateError(bar.date, "conflicting duplicate row");
            }
            continue;
        }
        unique_bars.push_back(bar);
    }
    series.bars = std::move(unique_bars);
    return series;
}

StockSeries parse_series_csv(const std::string& text, std::string symbol) {
    std::istringstream in(text);
    return parse_series_csv(in, std::move(symbol));
}

std::string serialize_series_csv(const StockSeries& series) {
    std::string out;
    out.reserve(series.bars.size() * 48 + 32);
    out += kSeriesCsvHeader;
    out += '\n';
    for (const Bar& bar : series.bars) {
        out += bar.date.to_string();
        out += ',';
        out += format_double(bar.open);
        out += ',';
        out += format_double(bar.high);
        out += ',';
        out += format_double(bar.low);
        out += ',';
        out += format_double(bar.close);
        out += ',';
        out += std::to_string(bar.volume);
        out += '\n';
    }
    return out;
}

StockSeries load_series_csv(const std::filesystem::path& path, std::string symbol) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_series_csv(in, std::move(symbol));
}

void save_series_csv(const std::filesystem::path& path, const StockSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << serialize_series_csv(series);
}

StockSeries merge_chunks(const std::vector<StockSeries>& fragments) {
    if (fragments.empty()) {
        throw std::invalid_argument("merge_chunks: no fragments");
    }
    const std::string& symbol = fragments.front().symbol;
    for (const StockSeries& fragment : fragments) {
        if (fragment.symbol != symbol) {
            throw SymbolMismatchError("merge_chunks: fragment for '" + fragment.symbol +
                                      "' mixed with '" + symbol + "'");
        }
    }

    std::map<Date, Bar> by_date;
    for (const StockSeries& fragment : fragments) {
        for (const Bar& bar : fragment.bars) {
            auto [it, inserted] = by_date.emplace(bar.date, bar);
            if (!inserted && it->second != bar) {
                throw ConflictingDuplicateError(bar.date, "conflicting duplicate bar");
            }
        }
    }

    StockSeries merged;
    merged.symbol = symbol;
    merged.bars.reserve(by_date.size());
    for (const auto& [date, bar] : by_date) {
        merged.bars.push_back(bar);
    }
    return merged;
}

Calendar build_calendar(const std::vector<StockSeries>& series_set, double quorum) {
    if (series_set.empty()) {
        throw std::invalid_argument("build_calendar: empty series set");
    }
    if (!(quorum > 0.0 && quorum <= 1.0)) {
        throw std::invalid_argument("build_calendar: quorum must be in (0,1]");
    }

    std::map<Date, std::size_t> counts;
    for (const StockSeries& series : series_set) {
        for (const Bar& bar : series.bars) {
            ++counts[bar.date];
        }
    }

    const double needed = quorum * static_cast<double>(series_set.size());
    Calendar calendar;
    calendar.quorum = quorum;
    for (const auto& [date, count] : counts) {
        if (static_cast<double>(count) >= needed - 1e-12) {
            calendar.trading_days.push_back(date);
        }
    }
    return calendar;
}

Universe parse_universe_csv(std::istream& in) {
    Universe universe;
    std::string line;
    std::size_t line_number = 0;
    if (!std::getline(in, line)) {
        throw MalformedRowError(1, "missing header");
    }
    ++line_number;
    if (line != "symbol,market_cap_usd") {
        throw MalformedRowError(1, "bad universe header '" + line + "'");
    }
    std::set<std::string> seen;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.empty()) continue;
        auto fields = split_fields(line);
        if (fields.size() != 2) {
            throw MalformedRowError(line_number, "expected 2 fields");
        }
        UniverseEntry entry;
        entry.symbol = std::string(fields[0]);
        entry.market_cap_usd = parse_price(fields[1], line_number);
        if (entry.symbol.empty()) {
            throw MalformedRowError(line_number, "empty symbol");
        }
        if (!seen.insert(entry.symbol).second) {
            throw MalformedRowError(line_number, "duplicate symbol " + entry.symbol);
        }
        universe.entries.push_back(std::move(entry));
    }
    return universe;
}

Universe load_universe_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path.string());
    }
    return parse_universe_csv(in);
}

void save_universe_csv(const std::filesystem::path& path, const Universe& universe) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "symbol,market_cap_usd\n";
    for (const auto& entry : universe.entries) {
        out << entry.symbol << ',' << format_double(entry.market_cap_usd) << '\n';
    }
}

}  // namespace stx
