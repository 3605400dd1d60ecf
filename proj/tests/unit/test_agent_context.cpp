#include <doctest.h>

#include "golden.hpp"
#include "reits/agent_context.hpp"
#include "synthetic.hpp"

using namespace reits;
using namespace reits::agents;
using data::Sentiment;

namespace {

const std::vector<double> hand_closes{10,   10.1, 10.0, 10.2, 10.3, 10.1, 10.4, 10.5, 10.2, 10.6,
                                      10.8, 10.7, 10.9, 11.0, 10.8, 10.6, 10.9, 11.1, 11.2, 11.0,
                                      11.3, 11.4, 11.2, 11.5, 11.6, 11.4, 11.7, 11.9, 11.8, 12.0};

data::Announcement ann(Date d, Sentiment s, std::string type = "distribution") {
    return {"F", d, std::move(type), "note", s};
}

macro::MarketSnapshot hand_snapshot() {
    macro::MarketSnapshot s;
    s.as_of = Date(2024, 6, 28);
    s.reits_price_quantile_1y = 0.15;
    s.reits_chg_5d = -0.8;
    s.reits_chg_20d = -2.5;
    s.reits_chg_60d = -4.0;
    s.reits_rsi = 38.5;
    s.reits_macd_state = "below_signal";
    s.vol_quantile_1y = 0.4;
    s.up_day_ratio_20d = 0.35;
    s.rate_level_pct = 2.25;
    s.rate_quantile_1y = 0.1;
    s.rate_bp_chg_20d = -12.5;
    s.rate_ma_dev_pct = -1.5;
    s.rate_reits_corr_60d = -0.3;
    s.sse_chg_20d = -1.0;
    s.sse_rsi = 45.0;
    s.div_chg_20d = 1.5;
    s.div_rsi = 58.0;
    s.rel_strength_reits_vs_div_20d = -4.0;
    s.market_turnover = 0.004;
    s.market_volume = 6.5e7;
    s.pv_label = "price_down_vol_down";
    s.interpretation_labels = {"interest rate relatively low", "REITs price relatively low",
                               "momentum relatively weak", "dividend strong"};
    s.rate_trend = macro::classify_rate_trend(s.rate_bp_chg_20d);
    s.equity_state = macro::classify_equity_state(s.sse_chg_20d, s.sse_rsi);
    s.quadrant = macro::quadrant(s.rate_trend, s.equity_state);
    return s;
}

}  // namespace

TEST_SUITE("agent_context") {

TEST_CASE("agent kinds round-trip in fixed order") {
    CHECK(agent_order[0] == AgentKind::momentum);
    CHECK(agent_order[3] == AgentKind::market);
    for (auto k : agent_order) CHECK(parse_agent_kind(to_string(k)) == k);
    CHECK_THROWS(parse_agent_kind("oracle"));
}

TEST_CASE("momentum payload matches golden file") {
    const auto s = data::load_series<data::DailyBar>(std::string(REITS_FIXTURE_DIR) + "/ind_case1.csv");
    const auto bars = s.all();
    const Date as_of = bars.back().date;
    const auto snap = indicators::compute_snapshot(bars, as_of);
    const auto hist = threshold::theta_history(bars, {});
    const auto last5 = std::span(hist).last(5);
    const auto flags = breach_flags(bars, last5);
    REQUIRE(flags.size() == 5);
    const auto r = build_momentum_context("508001.SH", as_of, snap, last5, flags);
    CHECK(r.payload["schema_version"] == "momentum/1");
    for (const char* group : {"trend", "momentum", "bollinger", "price_volume", "volatility", "support_resistance",
                              "structure", "threshold"})
        CHECK(r.payload.contains(group));
    check_golden("momentum_ind_case1.json", r.payload.dump(2) + "\n");
}

TEST_CASE("momentum breach flags and errors") {
    const auto flat = testing::bars_from_closes(std::vector<double>(140, 6.0));
    const auto hist = threshold::theta_history(flat, {});
    const auto flags = breach_flags(flat, std::span(hist).last(5));
    for (bool b : flags) CHECK_FALSE(b);
    const auto snap = indicators::compute_snapshot(flat, flat.back().date);
    const auto r = build_momentum_context("F", flat.back().date, snap, std::span(hist).last(5), flags);
    CHECK(r.payload["threshold"]["breach_count"] == 0);
    CHECK_THROWS_AS(build_momentum_context("F", flat.back().date, snap, {}, flags), DataError);
    CHECK_THROWS_AS(build_momentum_context("F", flat[100].date, snap, std::span(hist).last(5), flags), DataError);

    // breach flags agree with |r_t| > theta_t by hand
    const auto bars = testing::random_walk_bars(150, 12);
    const auto th = threshold::theta_history(bars, {});
    const auto f = breach_flags(bars, std::span(th).last(5));
    for (std::size_t i = 0; i < 5; ++i) {
        const std::size_t t = bars.size() - 5 + i;
        const double r = bars[t].close / bars[t - 1].close - 1.0;
        CHECK(f[i] == (std::abs(r) > th[th.size() - 5 + i].value.theta));
    }
}

TEST_CASE("impact stats: empty history") {
    const auto bars = testing::bars_from_closes(hand_closes);
    const auto g = announcement_impact_stats({}, bars, "distribution", bars.back().date, {});
    for (const auto& s : g) {
        CHECK(s.n == 0);
        const auto j = to_json(s);
        CHECK_FALSE(j.contains("p_up_5"));
    }
}

TEST_CASE("impact stats: two positive announcements each followed by +1% over five days") {
    std::vector<double> c(40, 10.0);
    for (std::size_t i = 8; i < 40; ++i) c[i] = 10.1;   // base 3: 3 -> 8
    for (std::size_t i = 25; i < 40; ++i) c[i] = 10.201; // base 20 (10.1) -> 25
    const auto bars = testing::bars_from_closes(c);
    const std::vector<data::Announcement> h{ann(bars[3].date, Sentiment::positive),
                                            ann(bars[20].date, Sentiment::positive)};
    const auto g = announcement_impact_stats(h, bars, "distribution", bars.back().date, {});
    const auto& pos = g[static_cast<int>(Sentiment::positive)];
    CHECK(pos.n == 2);
    CHECK(*pos.windows[1].p_up == 1.0);
    CHECK(*pos.windows[1].avg_chg == doctest::Approx(0.01).epsilon(1e-12));
}

TEST_CASE("impact stats: six mixed announcements against a hand-computed table") {
    const auto bars = testing::bars_from_closes(hand_closes);
    const Date as_of = bars.back().date;
    std::vector<data::Announcement> h{
        ann(bars[2].date, Sentiment::positive),
        ann(bars[4].date.plus_days(1), Sentiment::positive),  // Saturday: base is Friday's close
        ann(bars[8].date, Sentiment::neutral),
        ann(bars[12].date, Sentiment::negative),
        ann(bars[20].date, Sentiment::negative),
        ann(bars[27].date, Sentiment::positive),
        ann(bars[3].date, Sentiment::positive, "expansion"),  // other type
        ann(as_of, Sentiment::positive),                      // not strictly before as_of
    };
    const auto g = announcement_impact_stats(h, bars, "distribution", as_of, {});
    const auto& pos = g[0];
    const auto& neu = g[1];
    const auto& neg = g[2];
    CHECK(pos.n == 3);
    CHECK(neu.n == 1);
    CHECK(neg.n == 2);

    struct Row {
        const AnnouncementImpactStats* s;
        std::size_t w, n;
        double p_up, avg;
    };
    const Row table[] = {
        {&pos, 0, 3, 1.0 / 3.0, -0.0026069456908977364}, {&pos, 1, 2, 1.0, 0.03956310679611652},
        {&pos, 2, 2, 1.0, 0.12310679611650477},          {&neu, 0, 1, 1.0, 0.03921568627450989},
        {&neu, 1, 1, 1.0, 0.07843137254901977},          {&neu, 2, 1, 1.0, 0.15686274509803932},
        {&neg, 0, 2, 1.0, 0.009011934724364679},         {&neg, 1, 2, 1.0, 0.013599090687667403},
    };
    for (const auto& row : table) {
        const auto& w = row.s->windows[row.w];
        CHECK(w.n == row.n);
        REQUIRE(w.p_up.has_value());
        CHECK(*w.p_up == doctest::Approx(row.p_up).epsilon(1e-12));
        CHECK(*w.avg_chg == doctest::Approx(row.avg).epsilon(1e-12));
        CHECK_FALSE(w.sig_freq.has_value());  // too little history for theta at these dates
    }
    CHECK(neg.windows[2].n == 0);
    CHECK_FALSE(neg.windows[2].p_up.has_value());
}

TEST_CASE("impact stats ignore bars after as_of") {
    const auto bars = testing::random_walk_bars(300, 21);
    std::vector<data::Announcement> h;
    for (std::size_t i = 130; i < 290; i += 9) h.push_back(ann(bars[i].date, static_cast<Sentiment>(i % 3)));
    const Date as_of = bars[200].date;
    const auto a = announcement_impact_stats(h, bars, "distribution", as_of, {});
    const auto b = announcement_impact_stats(h, std::span(bars).first(201), "distribution", as_of, {});
    for (int g = 0; g < 3; ++g) CHECK(to_json(a[g]) == to_json(b[g]));
    bool any_sig = false;
    for (const auto& s : a)
        for (const auto& w : s.windows) {
            if (w.p_up) CHECK(*w.p_up >= 0.0);
            if (w.p_up) CHECK(*w.p_up <= 1.0);
            if (w.sig_freq) {
                any_sig = true;
                CHECK(*w.sig_freq >= 0.0);
                CHECK(*w.sig_freq <= 1.0);
            }
        }
    CHECK(any_sig);
}

TEST_CASE("announcement window is the half-open seven-day interval") {
    const Date as_of(2024, 6, 14);
    const std::vector<data::Announcement> list{
        ann(as_of.plus_days(-8), Sentiment::positive), ann(as_of.plus_days(-7), Sentiment::neutral),
        ann(as_of.plus_days(-1), Sentiment::negative), ann(as_of, Sentiment::positive),
        ann(as_of.plus_days(-2), Sentiment::neutral, "other")};
    const auto r = build_announcement_context("F", as_of, list, {}, {});
    const auto& got = r.payload["announcements"];
    REQUIRE(got.size() == 3);
    CHECK(got[0]["published"] == as_of.plus_days(-7).iso());
    CHECK(got[1]["published"] == as_of.plus_days(-1).iso());
    CHECK(got[2]["key_type"] == false);
    CHECK(r.payload["no_recent_disclosures"] == false);

    const auto empty = build_announcement_context("F", as_of, std::span(list).first(1), {}, {});
    CHECK(empty.payload["no_recent_disclosures"] == true);
}

TEST_CASE("announcement payload attaches stats for key types only") {
    const auto bars = testing::bars_from_closes(hand_closes);
    const Date as_of = bars.back().date;
    const std::vector<data::Announcement> list{ann(as_of.plus_days(-1), Sentiment::positive)};
    std::map<std::string, std::array<AnnouncementImpactStats, 3>> stats;
    stats["distribution"] = announcement_impact_stats({}, bars, "distribution", as_of, {});
    stats["expansion"] = announcement_impact_stats({}, bars, "expansion", as_of, {});
    const auto r = build_announcement_context("F", as_of, list, stats, recent_trend(bars, 0.004));
    CHECK(r.payload["historical_impact"].contains("distribution"));
    CHECK_FALSE(r.payload["historical_impact"].contains("expansion"));
    CHECK(r.payload["recent_trend"]["chg_5d"].get<double>() == doctest::Approx(12.0 / 11.6 - 1.0));
}

TEST_CASE("quarterly warning") {
    const Date as_of(2024, 4, 10);
    const std::vector<Date> cal{Date(2024, 1, 20), Date(2024, 4, 15), Date(2024, 7, 20)};
    auto w = quarterly_warning(as_of, cal, 10);
    CHECK(w.active);
    CHECK(*w.days_until == 5);
    w = quarterly_warning(Date(2024, 3, 31), cal, 10);
    CHECK_FALSE(w.active);
    CHECK(*w.days_until == 15);
    w = quarterly_warning(Date(2024, 4, 15), cal, 10);
    CHECK(w.active);
    CHECK(*w.days_until == 0);
    w = quarterly_warning(Date(2024, 8, 1), cal, 10);
    CHECK_FALSE(w.active);
    CHECK_FALSE(w.next_release.has_value());
}

TEST_CASE("event context filters and weights news") {
    const Date as_of(2024, 6, 14);
    const std::vector<data::NewsItem> news{
        {as_of, data::Impact::high, "today", Sentiment::positive},
        {as_of.plus_days(-7), data::Impact::high, "a week", Sentiment::negative},
        {as_of.plus_days(-3), data::Impact::medium, "medium", Sentiment::neutral},
        {as_of.plus_days(-15), data::Impact::high, "stale", Sentiment::neutral},
        {as_of.plus_days(1), data::Impact::high, "future", Sentiment::neutral},
    };
    const auto r = build_event_context("F", as_of, news, {}, {}, 14);
    const auto& got = r.payload["high_impact_news"];
    REQUIRE(got.size() == 2);
    CHECK(got[0]["weight"] == 1.0);
    CHECK(got[1]["weight"] == 0.125);
    CHECK(r.payload["no_quarterly_report"] == true);
    for (int age = 0; age < 30; ++age) CHECK(recency_weight(age + 1) < recency_weight(age));
}

TEST_CASE("event context keeps the latest quarterly report and later operating data") {
    const Date as_of(2024, 8, 30);
    const std::vector<data::OperationalReport> reports{
        {"F", Date(2024, 3, 31), data::ReportKind::quarterly_report, "q1", Sentiment::neutral, "r", Date(2024, 4, 25)},
        {"F", Date(2024, 6, 30), data::ReportKind::quarterly_report, "q2", Sentiment::positive, "r", Date(2024, 7, 25)},
        {"F", Date(2024, 5, 31), data::ReportKind::operational_data, "may", Sentiment::neutral, "r", Date(2024, 6, 10)},
        {"F", Date(2024, 7, 31), data::ReportKind::operational_data, "jul", Sentiment::neutral, "r", Date(2024, 8, 10)},
        {"F", Date(2024, 8, 31), data::ReportKind::operational_data, "aug", Sentiment::neutral, "r", Date(2024, 9, 10)},
        {"G", Date(2024, 6, 30), data::ReportKind::quarterly_report, "other fund", Sentiment::neutral, "r", Date(2024, 7, 1)},
    };
    const auto r = build_event_context("F", as_of, {}, reports, quarterly_warning(as_of, std::vector<Date>{}), 14);
    CHECK(r.payload["latest_quarterly_report"]["summary"] == "q2");
    REQUIRE(r.payload["operational_reports_since"].size() == 1);
    CHECK(r.payload["operational_reports_since"][0]["summary"] == "jul");
    CHECK(r.payload["quarterly_warning"]["active"] == false);
}

TEST_CASE("market payload") {
    const auto s = hand_snapshot();
    REQUIRE(s.quadrant.value == macro::Quadrant::Q3);
    const auto r = build_market_context("F", s);
    CHECK(r.payload["summary"]["tags"][0] == "allocation window");
    CHECK(r.payload["summary"]["transition"] == false);
    check_golden("market_q3.json", r.payload.dump(2) + "\n");

    auto t = s;
    t.rate_bp_chg_20d = 1.0;
    t.rate_trend = macro::classify_rate_trend(1.0);
    t.quadrant = macro::quadrant(t.rate_trend, t.equity_state);
    const auto tr = build_market_context("F", t);
    CHECK(tr.payload["summary"]["transition"] == true);
    CHECK(tr.payload["summary"]["quadrant"] == "transition");
}

}
