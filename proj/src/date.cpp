#include "stx/date.hpp"

#include <charconv>
#include <cstdio>
#include <stdexcept>

namespace stx {

namespace {

int parse_int_field(std::string_view text, std::size_t pos, std::size_t len) {
    int value = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last) {
        throw std::invalid_argument("bad date: " + std::string(text));
    }
    return value;
}

}  // namespace

Date Date::parse(std::string_view iso) {
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') {
        throw std::invalid_argument("bad date: " + std::string(iso));
    }
    int y = parse_int_field(iso, 0, 4);
    int m = parse_int_field(iso, 5, 2);
    int d = parse_int_field(iso, 8, 2);
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) {
        throw std::invalid_argument("bad date: " + std::string(iso));
    }
    return Date{std::chrono::sys_days{ymd}};
}

std::string Date::to_string() const {
    std::chrono::year_month_day ymd{days_};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", int(ymd.year()), unsigned(ymd.month()),
                  unsigned(ymd.day()));
    return buf;
}

}  // namespace stx
