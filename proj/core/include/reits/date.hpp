#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

namespace reits {

/// Calendar date (no time of day). Stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::chrono::sys_days d) : days_(d.time_since_epoch().count()) {}
    constexpr Date(int y, unsigned m, unsigned d)
        : Date(std::chrono::sys_days{std::chrono::year{y} / std::chrono::month{m} / std::chrono::day{d}}) {}

    /// Parses YYYY-MM-DD; throws DataError on anything else.
    static Date parse(std::string_view iso);

    [[nodiscard]] std::string iso() const;
    [[nodiscard]] constexpr std::int32_t serial() const { return days_; }
    [[nodiscard]] constexpr std::chrono::sys_days sys() const {
        return std::chrono::sys_days{std::chrono::days{days_}};
    }

    [[nodiscard]] constexpr Date plus_days(std::int32_t n) const {
        Date r;
        r.days_ = days_ + n;
        return r;
    }
    /// Natural days from `earlier` to this date (negative when this precedes it).
    [[nodiscard]] constexpr std::int32_t days_since(Date earlier) const { return days_ - earlier.days_; }

    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t days_ = 0;
};

}  // namespace reits
