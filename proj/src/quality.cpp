#include "stx/quality.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace stx {

namespace {

std::size_t count_lines(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    return lines;
}

// Parses "<symbol>.chunk<index>.csv"; falls back to the stem as symbol.
std::pair<std::string, int> parse_chunk_name(const std::filesystem::path& path) {
    std::string name = path.filename().string();
    auto chunk_pos = name.find(".chunk");
    if (chunk_pos == std::string::npos) {
        return {path.stem().string(), -1};
    }
    std::string symbol = name.substr(0, chunk_pos);
    int index = -1;
    try {
        index = std::stoi(name.substr(chunk_pos + 6));
    } catch (...) {
        index = -1;
    }
    return {symbol, index};
}

}  // namespace

QualityReport validate_chunks(const std::vector<std::filesystem::path>& chunk_paths,
                              std::size_t min_lines) {
    if (min_lines < 1) {
        throw std::invalid_argument("validate_chunks: min_lines must be >= 1");
    }
    QualityReport report;
    for (const auto& path : chunk_paths) {
        auto [symbol, index] = parse_chunk_name(path);
        if (!std::filesystem::exists(path)) {
            report.missing_chunks.push_back({symbol, index});
            continue;
        }
        std::size_t lines = count_lines(path);
        if (lines < min_lines) {
            report.short_files.push_back({path, lines});
            report.excluded_stocks.push_back({symbol, "short_chunk_" + std::to_string(lines) +
                                                          "_lines"});
        }
    }
    return report;
}

std::vector<std::filesystem::path> delete_short_files(const QualityReport& report,
                                                      bool dry_run) {
    std::vector<std::filesystem::path> removed;
    if (dry_run) return removed;
    for (const ShortFile& sf : report.short_files) {
        std::error_code ec;
        if (std::filesystem::remove(sf.path, ec) && !ec) {
            removed.push_back(sf.path);
        }
    }
    return removed;
}

QualityReport detect_gaps(const std::vector<StockSeries>& series_set, const Calendar& calendar,
                          std::size_t max_consecutive_allowed) {
    QualityReport report;
    for (const StockSeries& series : series_set) {
        if (series.bars.empty()) {
            report.excluded_stocks.push_back({series.symbol, "empty_series"});
            continue;
        }
        Date first = series.bars.front().date;
        Date last = series.bars.back().date;

        GapRecord record;
        record.symbol = series.symbol;
        std::size_t run = 0;
        for (Date day : calendar.trading_days) {
            if (day < first || day > last) continue;
            if (series.index_of(day) != StockSeries::npos) {
                run = 0;
                continue;
            }
            record.missing_days.push_back(day);
            ++run;
            record.max_consecutive = std::max(record.max_consecutive, run);
        }

        if (record.missing_days.empty()) continue;
        if (record.max_consecutive > max_consecutive_allowed) {
            report.excluded_stocks.push_back(
                {series.symbol,
                 "gap_run_" + std::to_string(record.max_consecutive) + "_exceeds_" +
                     std::to_string(max_consecutive_allowed)});
        }
        report.gap_records.push_back(std::move(record));
    }
    return report;
}

QualityReport merge_reports(QualityReport a, const QualityReport& b) {
    a.short_files.insert(a.short_files.end(), b.short_files.begin(), b.short_files.end());
    a.missing_chunks.insert(a.missing_chunks.end(), b.missing_chunks.begin(),
                            b.missing_chunks.end());
    a.excluded_stocks.insert(a.excluded_stocks.end(), b.excluded_stocks.begin(),
                             b.excluded_stocks.end());
    a.gap_records.insert(a.gap_records.end(), b.gap_records.begin(), b.gap_records.end());
    return a;
}

QualitySummary quality_summary(const QualityReport& report) {
    QualitySummary summary;
    summary.short_files = report.short_files.size();
    summary.missing_chunks = report.missing_chunks.size();
    summary.excluded_stocks = report.excluded_stocks.size();
    for (const GapRecord& record : report.gap_records) {
        if (record.missing_days.empty()) continue;
        ++summary.stocks_with_gaps;
        summary.total_missing_days += record.missing_days.size();
        summary.max_gap = std::max(summary.max_gap, record.max_consecutive);
    }
    return summary;
}

std::string summary_text(const QualitySummary& s) {
    std::ostringstream out;
    out << s.stocks_with_gaps << " stocks with gaps, " << s.total_missing_days
        << " missing days, max gap " << s.max_gap << "; " << s.short_files << " short files, "
        << s.missing_chunks << " missing chunks, " << s.excluded_stocks << " stocks excluded";
    return out.str();
}

void save_report_csv(const std::filesystem::path& path, const QualityReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw std::runtime_error("cannot write " + path.string());
    }
    out << "symbol,reason,missing_days,max_consecutive\n";

    std::map<std::string, const GapRecord*> gaps;
    for (const GapRecord& record : report.gap_records) {
        gaps[record.symbol] = &record;
    }
    std::map<std::string, std::string> reasons;
    for (const ExcludedStock& ex : report.excluded_stocks) {
        reasons.emplace(ex.symbol, ex.reason);
    }

    for (const auto& [symbol, reason] : reasons) {
        auto it = gaps.find(symbol);
        std::size_t missing = it != gaps.end() ? it->second->missing_days.size() : 0;
        std::size_t max_run = it != gaps.end() ? it->second->max_consecutive : 0;
        out << symbol << ',' << reason << ',' << missing << ',' << max_run << '\n';
    }
    for (const auto& [symbol, record] : gaps) {
        if (reasons.count(symbol)) continue;
        out << symbol << ",retained_with_gaps," << record->missing_days.size() << ','
            << record->max_consecutive << '\n';
    }
}

bool is_excluded(const QualityReport& report, const std::string& symbol) {
    return std::any_of(report.excluded_stocks.begin(), report.excluded_stocks.end(),
                       [&](const ExcludedStock& ex) { return ex.symbol == symbol; });
}

}  // namespace stx
