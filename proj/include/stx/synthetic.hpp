#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stx/marketdata.hpp"

namespace stx {

// Deterministic synthetic daily OHLCV, used by the mock providers and paper
// mode. Prices follow a seeded geometric random walk on weekdays; a fraction
// of days are "spike" days with a large open-to-close gain so the previous-day
// prefilter has something to select.
struct SyntheticParams {
    double start_price_min = 20.0;
    double start_price_max = 200.0;
    double daily_sigma = 0.02;
    double spike_probability = 0.08;
    double spike_gain_min = 0.08;
    double spike_gain_max = 0.20;
    std::int64_t volume_base = 500'000;
};

// `days` weekday bars ending the day before `end_date` (exclusive).
StockSeries generate_series(const std::string& symbol, std::uint64_t seed, int days,
                            Date end_date, const SyntheticParams& params = {});

// A whole market: one series per symbol, seeds derived from `seed` and the
// symbol name, all sharing the same weekday calendar.
std::vector<StockSeries> generate_market(const std::vector<std::string>& symbols,
                                         std::uint64_t seed, int days, Date end_date,
                                         const SyntheticParams& params = {});

// SYM001..SYMnnn
std::vector<std::string> synthetic_symbols(int count);

}  // namespace stx
