#include "synthetic.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

namespace reits::testing {

using nlohmann::json;
namespace fs = std::filesystem;

std::vector<Date> weekdays(Date first, std::size_t n) {
    std::vector<Date> out;
    Date d = first;
    while (out.size() < n) {
        const unsigned wd = std::chrono::weekday(d.sys()).c_encoding();
        if (wd != 0 && wd != 6) out.push_back(d);
        d = d.plus_days(1);
    }
    return out;
}

std::vector<data::DailyBar> random_walk_bars(std::size_t n, std::uint64_t seed, double sigma, double start, Date first) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> ret(0.0, sigma);
    std::lognormal_distribution<double> vol(13.0, 0.4);
    const auto dates = weekdays(first, n);
    std::vector<data::DailyBar> out;
    double p = start;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) p *= 1.0 + ret(rng);
        const double v = std::round(vol(rng));
        out.push_back({dates[i], p, v, v / 2.0e8});
    }
    return out;
}

std::vector<data::DailyBar> bars_from_closes(const std::vector<double>& closes, Date first) {
    const auto dates = weekdays(first, closes.size());
    std::vector<data::DailyBar> out;
    for (std::size_t i = 0; i < closes.size(); ++i) out.push_back({dates[i], closes[i], 1000.0 + 10.0 * (i % 7), 0.01});
    return out;
}

namespace {

std::vector<data::IndexBar> index_walk(const std::vector<Date>& dates, std::mt19937_64& rng, double sigma, double start) {
    std::normal_distribution<double> ret(0.0002, sigma);
    std::vector<data::IndexBar> out;
    double p = start;
    for (std::size_t i = 0; i < dates.size(); ++i) {
        if (i > 0) p *= 1.0 + ret(rng);
        out.push_back({dates[i], p});
    }
    return out;
}

Date quarter_end(int y, int q) {
    const unsigned months[] = {3, 6, 9, 12};
    const unsigned days[] = {31, 30, 30, 31};
    return Date(y, months[q], days[q]);
}

}  // namespace

SyntheticMarket make_market(const SyntheticOptions& opt) {
    SyntheticMarket m;
    std::mt19937_64 rng(opt.seed);
    const std::size_t total = opt.warmup_days + opt.period_days + opt.tail_days;
    const auto dates = weekdays(opt.first_day, total);
    m.period_start = dates[opt.warmup_days];
    m.period_end = dates[opt.warmup_days + opt.period_days - 1];
    auto& s = m.store;

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int i = 0; i < opt.n_funds; ++i) {
        char code[16];
        std::snprintf(code, sizeof code, i < 20 ? "5080%02d.SH" : "1800%02d.SZ", i < 20 ? i + 1 : i - 19);
        m.codes.emplace_back(code);
        const double sigma = 0.004 + 0.005 * unit(rng);
        auto bars = random_walk_bars(total, opt.seed * 1000 + static_cast<std::uint64_t>(i), sigma, 3.0 + 6.0 * unit(rng),
                                     opt.first_day);
        if (i == 3) {
            // a two-day suspension inside the period
            bars.erase(bars.begin() + static_cast<std::ptrdiff_t>(opt.warmup_days + 50),
                       bars.begin() + static_cast<std::ptrdiff_t>(opt.warmup_days + 52));
        }
        s.funds.push_back({code, opt.first_day.plus_days(-30)});
        s.fund_bars.emplace(code, data::BarSeries(std::move(bars)));
    }
    {
        // listed too recently to be eligible at the period start
        const std::string code = "180999.SZ";
        const Date listed = m.period_start.plus_days(-100);
        std::vector<data::DailyBar> bars;
        for (const auto& b : random_walk_bars(total, opt.seed + 99, 0.006, 5.0, opt.first_day)) {
            if (listed <= b.date) bars.push_back(b);
        }
        s.funds.push_back({code, listed});
        s.fund_bars.emplace(code, data::BarSeries(std::move(bars)));
    }

    {
        std::normal_distribution<double> ret(0.0002, 0.004);
        std::lognormal_distribution<double> vol(18.0, 0.3);
        std::vector<data::DailyBar> bars;
        double p = 1000.0;
        for (std::size_t i = 0; i < dates.size(); ++i) {
            if (i > 0) p *= 1.0 + ret(rng);
            const double v = std::round(vol(rng));
            bars.push_back({dates[i], p, v, 0.004 + 0.004 * unit(rng)});
        }
        s.reits_market = data::BarSeries(std::move(bars));
    }
    s.sse = data::IndexSeries(index_walk(dates, rng, 0.011, 3000.0));
    s.dividend = data::IndexSeries(index_walk(dates, rng, 0.008, 5000.0));
    {
        std::normal_distribution<double> step(0.0, 0.015);
        std::vector<data::YieldPoint> y;
        double level = 2.8;
        for (const auto& d : dates) {
            level = std::max(0.5, level + step(rng));
            y.push_back({d, level});
        }
        s.yields = data::YieldSeries(std::move(y));
    }

    const char* types[] = {"distribution", "quarterly_report", "expansion", "unitholder_meeting", "other"};
    const data::Sentiment sentiments[] = {data::Sentiment::positive, data::Sentiment::neutral, data::Sentiment::negative};
    std::vector<data::Announcement> anns;
    for (const auto& code : m.codes) {
        for (std::size_t k = 5 + static_cast<std::size_t>(unit(rng) * 10); k < dates.size();
             k += 12 + static_cast<std::size_t>(unit(rng) * 12)) {
            const auto* type = types[static_cast<int>(unit(rng) * 5) % 5];
            const auto sent = sentiments[static_cast<int>(unit(rng) * 3) % 3];
            const Date published = unit(rng) < 0.2 ? dates[k].plus_days(1) : dates[k];
            anns.push_back({code, published, type, std::string("Synthetic ") + type + " notice", sent});
        }
    }
    s.add_announcements(std::move(anns));

    const data::Impact impacts[] = {data::Impact::high, data::Impact::medium, data::Impact::low};
    std::vector<data::NewsItem> news;
    for (std::size_t k = 2; k < dates.size(); k += 3) {
        news.push_back({dates[k], impacts[static_cast<int>(unit(rng) * 3) % 3], "Synthetic sector news",
                        sentiments[static_cast<int>(unit(rng) * 3) % 3]});
    }
    s.add_news(std::move(news));

    std::vector<data::OperationalReport> reports;
    const int y0 = static_cast<int>(std::chrono::year_month_day(opt.first_day.sys()).year());
    const Date last = dates.back();
    for (const auto& code : m.codes) {
        for (int y = y0; y <= y0 + 3; ++y) {
            for (int q = 0; q < 4; ++q) {
                const Date qe = quarter_end(y, q);
                if (last < qe) continue;
                reports.push_back({code, qe, data::ReportKind::quarterly_report, "Synthetic quarterly report",
                                   sentiments[static_cast<int>(unit(rng) * 3) % 3], "Rent collection steady",
                                   qe.plus_days(25)});
                reports.push_back({code, qe.plus_days(-30), data::ReportKind::operational_data,
                                   "Synthetic operating data", sentiments[static_cast<int>(unit(rng) * 3) % 3],
                                   "Traffic volume within seasonal range", qe.plus_days(-20)});
            }
        }
    }
    s.add_reports(std::move(reports));

    for (const auto& code : m.codes) {
        auto& cal = s.release_calendar[code];
        for (int y = y0; y <= y0 + 3; ++y) {
            for (int q = 0; q < 4; ++q) cal.push_back(quarter_end(y, q).plus_days(25));
        }
    }
    return m;
}

namespace {

void write_text(const fs::path& p, const std::string& text) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
}

template <class Obs>
void write_csv(const fs::path& p, const data::Series<Obs>& s) {
    fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    data::write_series(out, s);
}

}  // namespace

fs::path write_dataset(const SyntheticMarket& m, const fs::path& dir, const std::string& extra_config_json) {
    const auto& s = m.store;
    std::string funds = "code,listing_date\n";
    for (const auto& f : s.funds) {
        funds += f.code + "," + f.listing_date.iso() + "\n";
        write_csv(dir / "bars" / (f.code + ".csv"), s.fund_bars.at(f.code));
    }
    write_text(dir / "funds.csv", funds);
    write_csv(dir / "reits_market.csv", s.reits_market);
    write_csv(dir / "sse.csv", s.sse);
    write_csv(dir / "dividend.csv", s.dividend);
    write_csv(dir / "yields.csv", s.yields);

    std::string ann;
    for (const auto& [code, list] : s.announcements) {
        for (const auto& a : list) {
            ann += json{{"fund_code", a.fund_code},
                        {"published", a.published.iso()},
                        {"ann_type", a.ann_type},
                        {"summary", a.summary},
                        {"sentiment", data::to_string(a.sentiment)}}
                       .dump() +
                   "\n";
        }
    }
    write_text(dir / "announcements.jsonl", ann);
    std::string news;
    for (const auto& n : s.news) {
        news += json{{"date", n.date.iso()},
                     {"impact", data::to_string(n.impact)},
                     {"summary", n.summary},
                     {"sentiment", data::to_string(n.sentiment)}}
                    .dump() +
                "\n";
    }
    write_text(dir / "news.jsonl", news);
    std::string rep;
    for (const auto& [code, list] : s.reports) {
        for (const auto& r : list) {
            json j = {{"fund_code", r.fund_code},
                      {"period_end", r.period_end.iso()},
                      {"kind", data::to_string(r.kind)},
                      {"summary", r.summary},
                      {"sentiment", data::to_string(r.sentiment)},
                      {"reasoning", r.reasoning}};
            if (r.published) j["published"] = r.published->iso();
            rep += j.dump() + "\n";
        }
    }
    write_text(dir / "reports.jsonl", rep);
    std::string cal = "fund_code,date\n";
    for (const auto& [code, dates] : s.release_calendar) {
        for (const auto& d : dates) cal += code + "," + d.iso() + "\n";
    }
    write_text(dir / "release_calendar.csv", cal);

    json cfg = {{"data",
                 {{"funds", "funds.csv"},
                  {"fund_bars", "bars"},
                  {"reits_market", "reits_market.csv"},
                  {"sse", "sse.csv"},
                  {"dividend", "dividend.csv"},
                  {"yields", "yields.csv"},
                  {"announcements", "announcements.jsonl"},
                  {"news", "news.jsonl"},
                  {"reports", "reports.jsonl"},
                  {"release_calendar", "release_calendar.csv"}}},
                {"period", m.period_start.iso() + ":" + m.period_end.iso()},
                {"output_dir", "out"}};
    cfg.merge_patch(json::parse(extra_config_json));
    write_text(dir / "config.json", cfg.dump(2) + "\n");
    return dir / "config.json";
}

fs::path scratch_dir(const std::string& name) {
    const char* base = std::getenv("REITS_TEST_TMP");
    const fs::path dir = (base != nullptr ? fs::path(base) : fs::temp_directory_path() / "reits_tests") / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace reits::testing
