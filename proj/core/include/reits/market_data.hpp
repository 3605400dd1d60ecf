#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "reits/date.hpp"
#include "reits/error.hpp"

namespace reits::data {

enum class Sentiment { positive, neutral, negative };
enum class Impact { high, medium, low };
enum class ReportKind { quarterly_report, operational_data };

std::string_view to_string(Sentiment s);
std::string_view to_string(Impact i);
std::string_view to_string(ReportKind k);
Sentiment parse_sentiment(std::string_view s);
Impact parse_impact(std::string_view s);
ReportKind parse_report_kind(std::string_view s);

struct DailyBar {
    Date date;
    double close = 0.0;
    double volume = 0.0;
    double turnover_rate = 0.0;

    bool operator==(const DailyBar&) const = default;
};

struct IndexBar {
    Date date;
    double close = 0.0;

    bool operator==(const IndexBar&) const = default;
};

struct YieldPoint {
    Date date;
    double yield_pct = 0.0;

    bool operator==(const YieldPoint&) const = default;
};

struct Announcement {
    std::string fund_code;
    Date published;
    std::string ann_type;
    std::string summary;
    Sentiment sentiment = Sentiment::neutral;
};

struct NewsItem {
    Date date;
    Impact impact = Impact::low;
    std::string summary;
    Sentiment sentiment = Sentiment::neutral;
};

struct OperationalReport {
    std::string fund_code;
    Date period_end;
    ReportKind kind = ReportKind::operational_data;
    std::string summary;
    Sentiment sentiment = Sentiment::neutral;
    std::string reasoning;
    // Release date when known; reports are only visible from this date on.
    std::optional<Date> published;

    [[nodiscard]] Date visible_from() const { return published.value_or(period_end); }
};

struct FundMeta {
    std::string code;
    Date listing_date;
};

/// A date-keyed observation (return, threshold, ...).
struct DatedValue {
    Date date;
    double value = 0.0;
};

/// Date-ordered observations with no duplicate dates. Construction sorts and validates.
template <class Obs>
class Series {
public:
    Series() = default;
    explicit Series(std::vector<Obs> obs) : obs_(std::move(obs)) {
        std::stable_sort(obs_.begin(), obs_.end(), [](const Obs& a, const Obs& b) { return a.date < b.date; });
        for (std::size_t i = 1; i < obs_.size(); ++i) {
            if (obs_[i].date == obs_[i - 1].date) {
                throw DataError("duplicate date " + obs_[i].date.iso());
            }
        }
    }

    [[nodiscard]] std::span<const Obs> all() const { return obs_; }
    [[nodiscard]] std::size_t size() const { return obs_.size(); }
    [[nodiscard]] bool empty() const { return obs_.empty(); }
    [[nodiscard]] const Obs& operator[](std::size_t i) const { return obs_[i]; }
    [[nodiscard]] auto begin() const { return obs_.begin(); }
    [[nodiscard]] auto end() const { return obs_.end(); }

    /// Number of observations dated on or before `as_of`.
    [[nodiscard]] std::size_t count_until(Date as_of) const {
        return static_cast<std::size_t>(
            std::upper_bound(obs_.begin(), obs_.end(), as_of, [](Date d, const Obs& o) { return d < o.date; }) -
            obs_.begin());
    }

    /// All observations dated on or before `as_of`.
    [[nodiscard]] std::span<const Obs> until(Date as_of) const { return all().first(count_until(as_of)); }

    bool operator==(const Series&) const = default;

private:
    std::vector<Obs> obs_;
};

using BarSeries = Series<DailyBar>;
using IndexSeries = Series<IndexBar>;
using YieldSeries = Series<YieldPoint>;

/// Column layout per series kind. Headers are matched exactly.
template <class Obs>
struct SeriesSchema;

template <>
struct SeriesSchema<DailyBar> {
    static constexpr std::string_view header = "date,close,volume,turnover_rate";
};
template <>
struct SeriesSchema<IndexBar> {
    static constexpr std::string_view header = "date,close";
};
template <>
struct SeriesSchema<YieldPoint> {
    static constexpr std::string_view header = "date,yield_pct";
};

/// Reads a CSV series. Errors name the file and line number of the offending row.
template <class Obs>
Series<Obs> load_series(const std::filesystem::path& path);
template <class Obs>
Series<Obs> read_series(std::istream& in, std::string_view source = "<stream>");
template <class Obs>
void write_series(std::ostream& out, const Series<Obs>& series);

std::vector<Announcement> load_announcements(const std::filesystem::path& path);
std::vector<NewsItem> load_news(const std::filesystem::path& path);
std::vector<OperationalReport> load_reports(const std::filesystem::path& path);
/// CSV `code,listing_date`.
std::vector<FundMeta> load_fund_meta(const std::filesystem::path& path);
/// CSV `fund_code,date` of scheduled periodic-report releases.
std::map<std::string, std::vector<Date>> load_release_calendar(const std::filesystem::path& path);

/// Funds listed at least `min_days` natural days before `as_of`.
std::vector<FundMeta> eligible_funds(std::span<const FundMeta> funds, Date as_of, int min_days = 365);

template <class Obs>
struct Window {
    std::span<const Obs> obs;
    bool short_history = false;
};

/// Last `n` observations dated at or before `as_of`, most recent last.
template <class Obs>
Window<Obs> window(std::span<const Obs> series, Date as_of, std::size_t n) {
    if (n == 0) throw InvariantError("window size must be >= 1");
    const auto end = static_cast<std::size_t>(
        std::upper_bound(series.begin(), series.end(), as_of, [](Date d, const Obs& o) { return d < o.date; }) -
        series.begin());
    if (end == 0) throw DataError("no observation on or before " + as_of.iso());
    const std::size_t begin = end > n ? end - n : 0;
    return {series.subspan(begin, end - begin), end - begin < n};
}

template <class Obs>
Window<Obs> window(const Series<Obs>& series, Date as_of, std::size_t n) {
    return window(series.all(), as_of, n);
}

/// r_t = close_t / close_{t-1} - 1 aligned to the later date.
template <class Obs>
std::vector<DatedValue> daily_returns(std::span<const Obs> bars) {
    if (bars.size() < 2) throw DataError("daily_returns needs at least 2 bars");
    std::vector<DatedValue> out;
    out.reserve(bars.size() - 1);
    for (std::size_t i = 1; i < bars.size(); ++i) {
        out.push_back({bars[i].date, bars[i].close / bars[i - 1].close - 1.0});
    }
    return out;
}

/// Ordered union of trading dates. Must cover every bar date.
class TradingCalendar {
public:
    TradingCalendar() = default;
    explicit TradingCalendar(std::vector<Date> dates);

    [[nodiscard]] std::span<const Date> dates() const { return dates_; }
    [[nodiscard]] bool contains(Date d) const { return std::binary_search(dates_.begin(), dates_.end(), d); }
    /// Throws DataError when a series date is missing from the calendar.
    template <class Obs>
    void check_covers(std::span<const Obs> obs) const {
        for (const auto& o : obs) {
            if (!contains(o.date)) throw DataError("calendar missing bar date " + o.date.iso());
        }
    }

private:
    std::vector<Date> dates_;
};

/// Everything loaded for a run. Immutable after construction.
struct MarketStore {
    std::map<std::string, BarSeries> fund_bars;
    std::vector<FundMeta> funds;
    // REITs total-return index with whole-market volume and turnover in the bar columns.
    BarSeries reits_market;
    IndexSeries sse;
    IndexSeries dividend;
    YieldSeries yields;
    std::map<std::string, std::vector<Announcement>> announcements;  // by fund, sorted by date
    std::vector<NewsItem> news;                                       // sorted by date
    std::map<std::string, std::vector<OperationalReport>> reports;   // by fund, sorted by visibility
    std::map<std::string, std::vector<Date>> release_calendar;       // scheduled, known in advance

    /// Sorts event lists and groups them by fund.
    void add_announcements(std::vector<Announcement> items);
    void add_news(std::vector<NewsItem> items);
    void add_reports(std::vector<OperationalReport> items);

    [[nodiscard]] const BarSeries& bars_of(const std::string& fund) const;
    [[nodiscard]] TradingCalendar calendar() const;
};

/// Records the latest observation date handed out for each point-in-time read.
/// A read whose data is dated after the view's as_of is a lookahead violation.
class AccessAudit {
public:
    struct Violation {
        std::string source;
        Date as_of;
        Date observed;
    };

    void record(std::string_view source, Date as_of, Date latest_observed);

    [[nodiscard]] std::size_t reads() const { return reads_.load(); }
    [[nodiscard]] std::vector<Violation> violations() const;
    /// Latest observation date read for any view with the given as_of.
    [[nodiscard]] std::optional<Date> latest_read_for(Date as_of) const;

private:
    std::atomic<std::size_t> reads_{0};
    mutable std::mutex mu_;
    std::vector<Violation> violations_;
    std::map<Date, Date> latest_;
};

/// The only read path the analysis pipeline has into the store: every accessor
/// is clipped to `as_of` and reported to the audit.
class PointInTimeView {
public:
    static constexpr std::size_t all_history = std::numeric_limits<std::size_t>::max();

    PointInTimeView(const MarketStore& store, std::string fund, Date as_of, AccessAudit* audit = nullptr);

    [[nodiscard]] Date as_of() const { return as_of_; }
    [[nodiscard]] const std::string& fund() const { return fund_; }

    std::span<const DailyBar> fund_bars(std::size_t last_n = all_history) const;
    std::span<const DailyBar> reits_market(std::size_t last_n = all_history) const;
    std::span<const IndexBar> sse(std::size_t last_n = all_history) const;
    std::span<const IndexBar> dividend(std::size_t last_n = all_history) const;
    std::span<const YieldPoint> yields(std::size_t last_n = all_history) const;
    /// Fund announcements published on or before as_of.
    std::vector<Announcement> announcements() const;
    /// News dated on or before as_of.
    std::vector<NewsItem> news() const;
    /// Fund reports visible on or before as_of.
    std::vector<OperationalReport> reports() const;
    /// Scheduled release dates; a published schedule, so future dates are legitimate.
    std::span<const Date> release_schedule() const;

private:
    template <class Obs>
    std::span<const Obs> clip(std::string_view source, const Series<Obs>& s, std::size_t last_n) const;
    void note(std::string_view source, std::optional<Date> latest) const;

    const MarketStore* store_;
    std::string fund_;
    Date as_of_;
    AccessAudit* audit_;
};

}  // namespace reits::data
