#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace stx {

// Calendar date without time zone. Thin wrapper over std::chrono::sys_days
// so comparisons, day arithmetic, and weekday queries come from <chrono>.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days d) : days_(d) {}
    Date(int year, unsigned month, unsigned day)
        : days_(std::chrono::sys_days{std::chrono::year{year} / std::chrono::month{month} /
                                      std::chrono::day{day}}) {}

    // Strict ISO-8601 YYYY-MM-DD. Throws std::invalid_argument on anything else.
    static Date parse(std::string_view iso);

    std::string to_string() const;  // YYYY-MM-DD

    std::chrono::sys_days sys_days() const { return days_; }
    std::int64_t day_number() const { return days_.time_since_epoch().count(); }

    Date plus_days(int n) const { return Date{days_ + std::chrono::days{n}}; }
    std::chrono::weekday weekday() const { return std::chrono::weekday{days_}; }
    bool is_weekday() const {
        auto wd = weekday();
        return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
    }

    auto operator<=>(const Date&) const = default;

private:
    std::chrono::sys_days days_{};
};

}  // namespace stx
