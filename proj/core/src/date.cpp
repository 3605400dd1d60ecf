#include "reits/date.hpp"

#include <charconv>
#include <cstdio>
#include <system_error>

#include "reits/error.hpp"

namespace reits {

Date Date::parse(std::string_view iso) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto bad = [&] { return DataError("invalid date '" + std::string(iso) + "' (expected YYYY-MM-DD)"); };
    if (iso.size() != 10 || iso[4] != '-' || iso[7] != '-') throw bad();
    auto num = [&](std::string_view part, auto& out) {
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), out);
        if (ec != std::errc{} || p != part.data() + part.size()) throw bad();
    };
    num(iso.substr(0, 4), y);
    num(iso.substr(5, 2), m);
    num(iso.substr(8, 2), d);
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) throw bad();
    return Date{std::chrono::sys_days{ymd}};
}

std::string Date::iso() const {
    const std::chrono::year_month_day ymd{sys()};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

}  // namespace reits
