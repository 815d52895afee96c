#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stx/marketdata.hpp"
#include "stx/synthetic.hpp"

namespace stx {

using TimePoint = std::chrono::system_clock::time_point;

// Injectable time source. The simulated clock advances instantly on sleep so
// multi-day retrieval schedules run in milliseconds under test.
class Clock {
public:
    virtual ~Clock() = default;
    virtual TimePoint now() = 0;
    virtual void sleep_until(TimePoint t) = 0;
    void sleep_for(std::chrono::nanoseconds d) { sleep_until(now() + d); }

    Date today() { return Date{std::chrono::floor<std::chrono::days>(now())}; }
};

class SystemClock final : public Clock {
public:
    TimePoint now() override { return std::chrono::system_clock::now(); }
    void sleep_until(TimePoint t) override;
};

class SimulatedClock final : public Clock {
public:
    explicit SimulatedClock(TimePoint start) : now_(start) {}
    explicit SimulatedClock(Date start_day)
        : now_(std::chrono::sys_days{start_day.sys_days()}) {}

    TimePoint now() override;
    void sleep_until(TimePoint t) override;
    void advance(std::chrono::nanoseconds d);

private:
    std::mutex mutex_;
    TimePoint now_;
};

struct RateLimitPolicy {
    int max_per_minute = 0;  // 0 = unlimited
    int max_per_day = 0;     // 0 = unlimited
    std::chrono::seconds min_gap{0};

    // min_gap must cover 60/max_per_minute when both are set.
    void validate() const;
};

// Alpha-Vantage-shaped limits: 5/min (12 s gaps), 500/day.
RateLimitPolicy historical_rate_limits();
// Alpaca-shaped limits: 1000/min.
RateLimitPolicy recent_rate_limits();

// Thread-safe dispatch gate. acquire() sleeps on the injected clock until the
// next dispatch keeps every sliding 60 s window at or under max_per_minute
// and consecutive dispatches at least min_gap apart.
class RateLimiter {
public:
    explicit RateLimiter(RateLimitPolicy policy);

    // Returns the dispatch timestamp.
    TimePoint acquire(Clock& clock);

    const std::vector<TimePoint>& dispatch_log() const { return log_; }

private:
    RateLimitPolicy policy_;
    std::mutex mutex_;
    std::deque<TimePoint> window_;
    std::optional<TimePoint> last_;
    std::vector<TimePoint> log_;
};

struct ProviderError : std::runtime_error {
    explicit ProviderError(const std::string& detail);
};

inline constexpr int kChunksPerStock = 24;
inline constexpr int kDaysPerChunk = 30;

// Historical source contract: chunk 0 is the most recent 30 days, chunk 23
// the oldest (720-day span). fetch_chunk returns one CSV fragment or throws
// ProviderError.
class HistoricalProviderContract {
public:
    virtual ~HistoricalProviderContract() = default;
    virtual std::string fetch_chunk(const std::string& symbol, int chunk_index) = 0;
    virtual RateLimitPolicy advertised_limits() const { return historical_rate_limits(); }
};

// Recent source contract: one request serves up to 1000 symbols.
class RecentProviderContract {
public:
    static constexpr std::size_t kMaxSymbolsPerRequest = 1000;

    virtual ~RecentProviderContract() = default;
    virtual std::map<std::string, StockSeries> fetch_recent(
        const std::vector<std::string>& symbols, int days) = 0;
    virtual RateLimitPolicy advertised_limits() const { return recent_rate_limits(); }
};

enum class ChunkStatus { pending, done, failed };

struct ChunkKey {
    std::string symbol;
    int chunk_index = 0;
    auto operator<=>(const ChunkKey&) const = default;
};

struct ChunkState {
    ChunkStatus status = ChunkStatus::pending;
    int attempts = 0;
};

// Resumable retrieval state, persisted as a line-oriented text file so a
// 34-day retrieval survives restarts. Done entries never revert to pending.
struct FetchCheckpoint {
    std::map<ChunkKey, ChunkState> chunks;
    int requests_today = 0;
    std::optional<Date> day_stamp;

    std::size_t count(ChunkStatus status) const;

    void save(const std::filesystem::path& path) const;
    static FetchCheckpoint load(const std::filesystem::path& path);
};

struct EmptyUniverseError : std::runtime_error {
    explicit EmptyUniverseError(const std::string& detail);
};

struct RetrievalPlan {
    std::vector<ChunkKey> requests;  // ordered
    int total_requests = 0;
    int days_needed = 0;
    std::vector<std::string> symbols;  // the filtered universe, ascending
};

// Covers exactly the symbols with market_cap >= min_cap, chunks_per_stock
// requests each; days = ceil(total / daily_budget).
RetrievalPlan plan_retrieval(const Universe& universe, double min_cap, int chunks_per_stock,
                             int daily_budget);

enum class RetrievalStop { completed, daily_budget_exhausted };

struct RetrievalRunReport {
    RetrievalStop stop = RetrievalStop::completed;
    int dispatched = 0;
    int succeeded = 0;
    int failed = 0;
    int skipped_done = 0;
};

inline constexpr int kMaxChunkAttempts = 3;  // initial try + 2 retries on later runs

struct RetrievalConfig {
    std::filesystem::path chunk_dir;
    std::filesystem::path checkpoint_path;
    int daily_budget = 500;
};

// Executes the plan under the rate-limit policy. Chunks already done are
// skipped; failures are marked and retried on later runs up to
// kMaxChunkAttempts total attempts. Stops cleanly with the checkpoint
// persisted when the daily budget is exhausted.
RetrievalRunReport run_retrieval(const RetrievalPlan& plan, HistoricalProviderContract& provider,
                                 const RateLimitPolicy& policy, FetchCheckpoint& checkpoint,
                                 Clock& clock, const RetrievalConfig& config);

std::filesystem::path chunk_file_path(const std::filesystem::path& dir,
                                      const std::string& symbol, int chunk_index);

struct RecentFetchResult {
    std::map<std::string, StockSeries> series;
    std::vector<std::string> missing;  // requested symbols with no data

    bool partial() const { return !missing.empty(); }
};

// Partitions symbols into batches of <= 1000 and fetches them (batches run
// concurrently). The result covers every requested symbol or names the
// missing ones.
RecentFetchResult fetch_recent_all(const std::vector<std::string>& symbols, int days,
                                   RecentProviderContract& provider);

// Deterministic in-memory providers backed by the synthetic market generator;
// every test and the paper-trading mode use these.
class MockHistoricalProvider final : public HistoricalProviderContract {
public:
    MockHistoricalProvider(std::uint64_t seed, Date end_date,
                           SyntheticParams params = {});

    std::string fetch_chunk(const std::string& symbol, int chunk_index) override;

    // The next `count` fetches of `key` throw ProviderError.
    void inject_failures(const ChunkKey& key, int count);
    int call_count() const { return calls_; }

private:
    std::uint64_t seed_;
    Date end_date_;
    SyntheticParams params_;
    std::map<ChunkKey, int> failures_;
    int calls_ = 0;
};

class MockRecentProvider final : public RecentProviderContract {
public:
    explicit MockRecentProvider(std::vector<StockSeries> series);

    std::map<std::string, StockSeries> fetch_recent(const std::vector<std::string>& symbols,
                                                    int days) override;

    int request_count() const { return requests_; }

private:
    std::map<std::string, StockSeries> by_symbol_;
    int requests_ = 0;
};

// HTTP implementations of the provider contracts (cpp-httplib client).
// Construction is runtime-flagged; tests never instantiate these.
std::unique_ptr<HistoricalProviderContract> make_http_historical_provider(
    const std::string& base_url, const std::string& api_key);
std::unique_ptr<RecentProviderContract> make_http_recent_provider(const std::string& base_url,
                                                                  const std::string& api_key);

}  // namespace stx
