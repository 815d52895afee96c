#include "stx/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>

namespace stx {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, const std::string& symbol) {
    // FNV-1a over the symbol, folded into the caller's seed.
    std::uint64_t h = 14695981039346656037ull;
    for (char c : symbol) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h ^ (seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
}

std::vector<Date> weekdays_before(Date end_date, int count) {
    std::vector<Date> days;
    days.reserve(count);
    Date d = end_date.plus_days(-1);
    while (static_cast<int>(days.size()) < count) {
        if (d.is_weekday()) days.push_back(d);
        d = d.plus_days(-1);
    }
    std::reverse(days.begin(), days.end());
    return days;
}

}  // namespace

StockSeries generate_series(const std::string& symbol, std::uint64_t seed, int days,
                            Date end_date, const SyntheticParams& params) {
    std::mt19937_64 rng(mix_seed(seed, symbol));
    std::uniform_real_distribution<double> price_dist(params.start_price_min,
                                                      params.start_price_max);
    std::normal_distribution<double> drift(0.0, params.daily_sigma);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::uniform_real_distribution<double> spike_gain(params.spike_gain_min,
                                                      params.spike_gain_max);

    StockSeries series;
    series.symbol = symbol;
    double prev_close = price_dist(rng);

    for (Date date : weekdays_before(end_date, days)) {
        Bar bar;
        bar.date = date;
        bar.open = prev_close * (1.0 + 0.25 * drift(rng));
        double intraday;
        if (unit(rng) < params.spike_probability) {
            intraday = spike_gain(rng);
        } else {
            intraday = drift(rng);
        }
        bar.close = bar.open * (1.0 + intraday);
        double wick = std::abs(drift(rng)) * 0.5;
        bar.high = std::max(bar.open, bar.close) * (1.0 + wick);
        bar.low = std::min(bar.open, bar.close) * (1.0 - wick);
        bar.low = std::max(bar.low, 0.01);
        bar.volume = params.volume_base +
                     static_cast<std::int64_t>(unit(rng) * params.volume_base);
        series.bars.push_back(bar);
        prev_close = bar.close;
    }
    return series;
}

std::vector<StockSeries> generate_market(const std::vector<std::string>& symbols,
                                         std::uint64_t seed, int days, Date end_date,
                                         const SyntheticParams& params) {
    std::vector<StockSeries> market;
    market.reserve(symbols.size());
    for (const std::string& symbol : symbols) {
        market.push_back(generate_series(symbol, seed, days, end_date, params));
    }
    return market;
}

std::vector<std::string> synthetic_symbols(int count) {
    std::vector<std::string> symbols;
    symbols.reserve(count);
    for (int i = 1; i <= count; ++i) {
        char buf[16];
        std::snprintf(buf, sizeof(buf), "SYM%03d", i);
        symbols.emplace_back(buf);
    }
    return symbols;
}

}  // namespace stx
