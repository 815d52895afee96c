#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "stx/marketdata.hpp"

namespace stx {

// Missing trading days for one stock, measured against the cross-stock
// calendar within the stock's own first..last date span.
struct GapRecord {
    std::string symbol;
    std::vector<Date> missing_days;
    std::size_t max_consecutive = 0;
};

struct ShortFile {
    std::filesystem::path path;
    std::size_t line_count = 0;
};

struct MissingChunk {
    std::string symbol;
    int chunk_index = 0;
};

struct ExcludedStock {
    std::string symbol;
    std::string reason;  // machine-readable, e.g. "gap_run_exceeds_2"
};

// Findings are report entries, never exceptions.
struct QualityReport {
    std::vector<ShortFile> short_files;
    std::vector<MissingChunk> missing_chunks;
    std::vector<ExcludedStock> excluded_stocks;
    std::vector<GapRecord> gap_records;
};

struct QualitySummary {
    std::size_t stocks_with_gaps = 0;
    std::size_t total_missing_days = 0;
    std::size_t max_gap = 0;
    std::size_t short_files = 0;
    std::size_t missing_chunks = 0;
    std::size_t excluded_stocks = 0;
};

inline constexpr std::size_t kDefaultMinChunkLines = 100;
inline constexpr std::size_t kDefaultMaxConsecutiveMissing = 2;

// Expected chunk paths are checked for existence and line count. Files
// shorter than min_lines are flagged (deletion is a separate, gated step);
// absent files land in missing_chunks for re-fetch.
QualityReport validate_chunks(const std::vector<std::filesystem::path>& chunk_paths,
                              std::size_t min_lines = kDefaultMinChunkLines);

// Deletes flagged short files unless dry_run (the default). Returns the
// paths actually removed.
std::vector<std::filesystem::path> delete_short_files(const QualityReport& report,
                                                      bool dry_run = true);

// Per-stock missing trading days against the calendar. A run of more than
// max_consecutive_allowed consecutive missing trading days excludes the
// stock; smaller gaps are recorded and the stock is retained.
QualityReport detect_gaps(const std::vector<StockSeries>& series_set, const Calendar& calendar,
                          std::size_t max_consecutive_allowed = kDefaultMaxConsecutiveMissing);

// Combines report fragments.
QualityReport merge_reports(QualityReport a, const QualityReport& b);

QualitySummary quality_summary(const QualityReport& report);

std::string summary_text(const QualitySummary& summary);

// `symbol,reason,missing_days,max_consecutive` per affected stock.
void save_report_csv(const std::filesystem::path& path, const QualityReport& report);

// True if the symbol is listed in excluded_stocks.
bool is_excluded(const QualityReport& report, const std::string& symbol);

}  // namespace stx
