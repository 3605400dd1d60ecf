#include "reits/market_data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <system_error>

#include <json.hpp>

namespace reits::data {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        out.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    return s;
}

double parse_number(std::string_view field) {
    field = trim(field);
    double v = 0.0;
    auto [p, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc{} || p != field.data() + field.size() || !std::isfinite(v)) {
        throw DataError("invalid number '" + std::string(field) + "'");
    }
    return v;
}

std::string format_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

template <class Obs>
Obs parse_row(const std::vector<std::string_view>& f);

template <>
DailyBar parse_row<DailyBar>(const std::vector<std::string_view>& f) {
    DailyBar b{Date::parse(trim(f[0])), parse_number(f[1]), parse_number(f[2]), parse_number(f[3])};
    if (b.close <= 0) throw DataError("non-positive close on " + b.date.iso());
    if (b.volume < 0) throw DataError("negative volume on " + b.date.iso());
    if (b.turnover_rate < 0) throw DataError("negative turnover_rate on " + b.date.iso());
    return b;
}

template <>
IndexBar parse_row<IndexBar>(const std::vector<std::string_view>& f) {
    IndexBar b{Date::parse(trim(f[0])), parse_number(f[1])};
    if (b.close <= 0) throw DataError("non-positive close on " + b.date.iso());
    return b;
}

template <>
YieldPoint parse_row<YieldPoint>(const std::vector<std::string_view>& f) {
    return {Date::parse(trim(f[0])), parse_number(f[1])};
}

void write_row(std::ostream& out, const DailyBar& b) {
    out << b.date.iso() << ',' << format_number(b.close) << ',' << format_number(b.volume) << ','
        << format_number(b.turnover_rate) << '\n';
}
void write_row(std::ostream& out, const IndexBar& b) {
    out << b.date.iso() << ',' << format_number(b.close) << '\n';
}
void write_row(std::ostream& out, const YieldPoint& y) {
    out << y.date.iso() << ',' << format_number(y.yield_pct) << '\n';
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path.string());
    return in;
}

/// Runs `fn` on each non-blank JSONL record, tagging errors with the line number.
template <class Fn>
void each_jsonl(const std::filesystem::path& path, Fn&& fn) {
    auto in = open(path);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        try {
            fn(json::parse(line));
        } catch (const json::exception& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
}

}  // namespace

std::string_view to_string(Sentiment s) {
    switch (s) {
        case Sentiment::positive: return "positive";
        case Sentiment::neutral: return "neutral";
        case Sentiment::negative: return "negative";
    }
    return "neutral";
}

std::string_view to_string(Impact i) {
    switch (i) {
        case Impact::high: return "high";
        case Impact::medium: return "medium";
        case Impact::low: return "low";
    }
    return "low";
}

std::string_view to_string(ReportKind k) {
    return k == ReportKind::quarterly_report ? "quarterly_report" : "operational_data";
}

Sentiment parse_sentiment(std::string_view s) {
    if (s == "positive") return Sentiment::positive;
    if (s == "neutral") return Sentiment::neutral;
    if (s == "negative") return Sentiment::negative;
    throw DataError("unknown sentiment '" + std::string(s) + "'");
}

Impact parse_impact(std::string_view s) {
    if (s == "high") return Impact::high;
    if (s == "medium") return Impact::medium;
    if (s == "low") return Impact::low;
    throw DataError("unknown impact '" + std::string(s) + "'");
}

ReportKind parse_report_kind(std::string_view s) {
    if (s == "quarterly_report") return ReportKind::quarterly_report;
    if (s == "operational_data") return ReportKind::operational_data;
    throw DataError("unknown report kind '" + std::string(s) + "'");
}

template <class Obs>
Series<Obs> read_series(std::istream& in, std::string_view source) {
    constexpr auto header = SeriesSchema<Obs>::header;
    const auto columns = split_csv(header).size();
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw DataError(std::string(source) + ": empty file");
    ++lineno;
    if (trim(line) != header) {
        throw DataError(std::string(source) + ":1: expected header '" + std::string(header) + "'");
    }
    std::vector<Obs> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv(line);
        try {
            if (fields.size() != columns) {
                throw DataError("expected " + std::to_string(columns) + " columns, got " +
                                std::to_string(fields.size()));
            }
            rows.push_back(parse_row<Obs>(fields));
        } catch (const DataError& e) {
            throw DataError(std::string(source) + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    try {
        return Series<Obs>(std::move(rows));
    } catch (const DataError& e) {
        throw DataError(std::string(source) + ": " + e.what());
    }
}

template <class Obs>
Series<Obs> load_series(const std::filesystem::path& path) {
    auto in = open(path);
    return read_series<Obs>(in, path.string());
}

template <class Obs>
void write_series(std::ostream& out, const Series<Obs>& series) {
    out << SeriesSchema<Obs>::header << '\n';
    for (const auto& o : series) write_row(out, o);
}

template Series<DailyBar> read_series<DailyBar>(std::istream&, std::string_view);
template Series<IndexBar> read_series<IndexBar>(std::istream&, std::string_view);
template Series<YieldPoint> read_series<YieldPoint>(std::istream&, std::string_view);
template Series<DailyBar> load_series<DailyBar>(const std::filesystem::path&);
template Series<IndexBar> load_series<IndexBar>(const std::filesystem::path&);
template Series<YieldPoint> load_series<YieldPoint>(const std::filesystem::path&);
template void write_series<DailyBar>(std::ostream&, const Series<DailyBar>&);
template void write_series<IndexBar>(std::ostream&, const Series<IndexBar>&);
template void write_series<YieldPoint>(std::ostream&, const Series<YieldPoint>&);

std::vector<Announcement> load_announcements(const std::filesystem::path& path) {
    std::vector<Announcement> out;
    each_jsonl(path, [&](const json& j) {
        out.push_back({j.at("fund_code").get<std::string>(), Date::parse(j.at("published").get<std::string>()),
                       j.at("ann_type").get<std::string>(), j.value("summary", std::string{}),
                       parse_sentiment(j.at("sentiment").get<std::string>())});
    });
    return out;
}

std::vector<NewsItem> load_news(const std::filesystem::path& path) {
    std::vector<NewsItem> out;
    each_jsonl(path, [&](const json& j) {
        out.push_back({Date::parse(j.at("date").get<std::string>()), parse_impact(j.at("impact").get<std::string>()),
                       j.value("summary", std::string{}), parse_sentiment(j.at("sentiment").get<std::string>())});
    });
    return out;
}

std::vector<OperationalReport> load_reports(const std::filesystem::path& path) {
    std::vector<OperationalReport> out;
    each_jsonl(path, [&](const json& j) {
        OperationalReport r{j.at("fund_code").get<std::string>(),
                            Date::parse(j.at("period_end").get<std::string>()),
                            parse_report_kind(j.at("kind").get<std::string>()),
                            j.value("summary", std::string{}),
                            parse_sentiment(j.at("sentiment").get<std::string>()),
                            j.value("reasoning", std::string{}),
                            std::nullopt};
        if (j.contains("published") && !j["published"].is_null()) {
            r.published = Date::parse(j["published"].get<std::string>());
        }
        out.push_back(std::move(r));
    });
    return out;
}

namespace {

std::vector<std::pair<std::string, Date>> load_code_date_csv(const std::filesystem::path& path,
                                                             std::string_view header) {
    auto in = open(path);
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(in, line) || trim(line) != header) {
        throw DataError(path.string() + ":1: expected header '" + std::string(header) + "'");
    }
    std::vector<std::pair<std::string, Date>> rows;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv(line);
        try {
            if (f.size() != 2) throw DataError("expected 2 columns");
            rows.emplace_back(std::string(trim(f[0])), Date::parse(trim(f[1])));
        } catch (const DataError& e) {
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

}  // namespace

std::vector<FundMeta> load_fund_meta(const std::filesystem::path& path) {
    std::vector<FundMeta> out;
    for (auto& [code, date] : load_code_date_csv(path, "code,listing_date")) out.push_back({code, date});
    return out;
}

std::map<std::string, std::vector<Date>> load_release_calendar(const std::filesystem::path& path) {
    std::map<std::string, std::vector<Date>> out;
    for (auto& [code, date] : load_code_date_csv(path, "fund_code,date")) out[code].push_back(date);
    for (auto& [code, dates] : out) std::sort(dates.begin(), dates.end());
    return out;
}

std::vector<FundMeta> eligible_funds(std::span<const FundMeta> funds, Date as_of, int min_days) {
    std::vector<FundMeta> out;
    for (const auto& f : funds) {
        if (as_of.days_since(f.listing_date) >= min_days) out.push_back(f);
    }
    return out;
}

TradingCalendar::TradingCalendar(std::vector<Date> dates) : dates_(std::move(dates)) {
    std::sort(dates_.begin(), dates_.end());
    dates_.erase(std::unique(dates_.begin(), dates_.end()), dates_.end());
}

void MarketStore::add_announcements(std::vector<Announcement> items) {
    for (auto& a : items) announcements[a.fund_code].push_back(std::move(a));
    for (auto& [code, list] : announcements) {
        std::stable_sort(list.begin(), list.end(),
                         [](const Announcement& a, const Announcement& b) { return a.published < b.published; });
    }
}

void MarketStore::add_news(std::vector<NewsItem> items) {
    for (auto& n : items) news.push_back(std::move(n));
    std::stable_sort(news.begin(), news.end(), [](const NewsItem& a, const NewsItem& b) { return a.date < b.date; });
}

void MarketStore::add_reports(std::vector<OperationalReport> items) {
    for (auto& r : items) reports[r.fund_code].push_back(std::move(r));
    for (auto& [code, list] : reports) {
        std::stable_sort(list.begin(), list.end(), [](const OperationalReport& a, const OperationalReport& b) {
            return a.visible_from() < b.visible_from();
        });
    }
}

const BarSeries& MarketStore::bars_of(const std::string& fund) const {
    const auto it = fund_bars.find(fund);
    if (it == fund_bars.end()) throw DataError("no bars loaded for fund " + fund);
    return it->second;
}

TradingCalendar MarketStore::calendar() const {
    std::vector<Date> dates;
    for (const auto& [code, bars] : fund_bars) {
        for (const auto& b : bars) dates.push_back(b.date);
    }
    for (const auto& b : reits_market) dates.push_back(b.date);
    for (const auto& b : sse) dates.push_back(b.date);
    for (const auto& b : dividend) dates.push_back(b.date);
    return TradingCalendar(std::move(dates));
}

void AccessAudit::record(std::string_view source, Date as_of, Date latest_observed) {
    reads_.fetch_add(1);
    std::lock_guard lock(mu_);
    auto [it, inserted] = latest_.try_emplace(as_of, latest_observed);
    if (!inserted && it->second < latest_observed) it->second = latest_observed;
    if (latest_observed > as_of) violations_.push_back({std::string(source), as_of, latest_observed});
}

std::vector<AccessAudit::Violation> AccessAudit::violations() const {
    std::lock_guard lock(mu_);
    return violations_;
}

std::optional<Date> AccessAudit::latest_read_for(Date as_of) const {
    std::lock_guard lock(mu_);
    const auto it = latest_.find(as_of);
    if (it == latest_.end()) return std::nullopt;
    return it->second;
}

PointInTimeView::PointInTimeView(const MarketStore& store, std::string fund, Date as_of, AccessAudit* audit)
    : store_(&store), fund_(std::move(fund)), as_of_(as_of), audit_(audit) {}

void PointInTimeView::note(std::string_view source, std::optional<Date> latest) const {
    if (audit_ != nullptr && latest) audit_->record(source, as_of_, *latest);
}

template <class Obs>
std::span<const Obs> PointInTimeView::clip(std::string_view source, const Series<Obs>& s, std::size_t last_n) const {
    auto visible = s.until(as_of_);
    if (visible.size() > last_n) visible = visible.last(last_n);
    note(source, visible.empty() ? std::nullopt : std::optional<Date>(visible.back().date));
    return visible;
}

std::span<const DailyBar> PointInTimeView::fund_bars(std::size_t last_n) const {
    return clip("fund_bars", store_->bars_of(fund_), last_n);
}
std::span<const DailyBar> PointInTimeView::reits_market(std::size_t last_n) const {
    return clip("reits_market", store_->reits_market, last_n);
}
std::span<const IndexBar> PointInTimeView::sse(std::size_t last_n) const { return clip("sse", store_->sse, last_n); }
std::span<const IndexBar> PointInTimeView::dividend(std::size_t last_n) const {
    return clip("dividend", store_->dividend, last_n);
}
std::span<const YieldPoint> PointInTimeView::yields(std::size_t last_n) const {
    return clip("yields", store_->yields, last_n);
}

std::vector<Announcement> PointInTimeView::announcements() const {
    std::vector<Announcement> out;
    if (const auto it = store_->announcements.find(fund_); it != store_->announcements.end()) {
        for (const auto& a : it->second) {
            if (a.published <= as_of_) out.push_back(a);
        }
    }
    note("announcements", out.empty() ? std::nullopt : std::optional<Date>(out.back().published));
    return out;
}

std::vector<NewsItem> PointInTimeView::news() const {
    std::vector<NewsItem> out;
    for (const auto& n : store_->news) {
        if (n.date <= as_of_) out.push_back(n);
    }
    note("news", out.empty() ? std::nullopt : std::optional<Date>(out.back().date));
    return out;
}

std::vector<OperationalReport> PointInTimeView::reports() const {
    std::vector<OperationalReport> out;
    if (const auto it = store_->reports.find(fund_); it != store_->reports.end()) {
        for (const auto& r : it->second) {
            if (r.visible_from() <= as_of_) out.push_back(r);
        }
    }
    note("reports", out.empty() ? std::nullopt : std::optional<Date>(out.back().visible_from()));
    return out;
}

std::span<const Date> PointInTimeView::release_schedule() const {
    const auto it = store_->release_calendar.find(fund_);
    if (it == store_->release_calendar.end()) return {};
    return it->second;
}

}  // namespace reits::data
