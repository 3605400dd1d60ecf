#include "reits/agent_context.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "reits/stats.hpp"

namespace reits::agents {

using nlohmann::json;

std::string_view to_string(AgentKind k) {
    switch (k) {
        case AgentKind::momentum: return "momentum";
        case AgentKind::announcement: return "announcement";
        case AgentKind::event: return "event";
        case AgentKind::market: return "market";
    }
    return "momentum";
}

AgentKind parse_agent_kind(std::string_view s) {
    for (auto k : agent_order) {
        if (to_string(k) == s) return k;
    }
    throw DataError("unknown agent kind '" + std::string(s) + "'");
}

json to_json(const AgentReport& r) {
    json j = {{"agent", to_string(r.agent)}, {"fund_code", r.fund_code}, {"as_of", r.as_of.iso()},
              {"payload", r.payload}};
    if (r.narrative) j["narrative"] = *r.narrative;
    return j;
}

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::vector<bool> breach_flags(std::span<const data::DailyBar> bars, std::span<const threshold::DatedThreshold> thetas,
                               std::size_t n) {
    std::vector<bool> flags;
    const auto tail = thetas.size() > n ? thetas.last(n) : thetas;
    for (const auto& th : tail) {
        const auto it = std::lower_bound(bars.begin(), bars.end(), th.date,
                                         [](const data::DailyBar& b, Date d) { return b.date < d; });
        if (it == bars.end() || it == bars.begin() || it->date != th.date) {
            throw InvariantError("threshold dated " + th.date.iso() + " has no matching bar");
        }
        const double r = it->close / std::prev(it)->close - 1.0;
        flags.push_back(std::abs(r) > th.value.theta);
    }
    return flags;
}

AgentReport build_momentum_context(std::string_view fund, Date as_of, const indicators::IndicatorSnapshot& s,
                                   std::span<const threshold::DatedThreshold> theta_history,
                                   const std::vector<bool>& breaches) {
    if (s.as_of != as_of) {
        throw DataError("momentum context: snapshot dated " + s.as_of.iso() + " but as_of is " + as_of.iso());
    }
    if (theta_history.empty()) throw DataError("momentum context: missing theta history for " + std::string(fund));
    const auto& latest = theta_history.back();
    if (latest.date != as_of) {
        throw DataError("momentum context: theta history ends " + latest.date.iso() + " but as_of is " + as_of.iso());
    }
    using indicators::to_string;
    json trend = {{"close", s.close},
                  {"ma5", s.ma5},
                  {"ma10", s.ma10},
                  {"ma20", s.ma20},
                  {"ma60", s.ma60},
                  {"ma5_deviation_pct", s.ma5_dev_pct},
                  {"ma10_deviation_pct", s.ma10_dev_pct},
                  {"ma20_deviation_pct", s.ma20_dev_pct},
                  {"ma60_deviation_pct", s.ma60_dev_pct},
                  {"ma_alignment", to_string(s.ma_alignment)},
                  {"chg_1d", s.chg_1d},
                  {"chg_5d", s.chg_5d},
                  {"chg_20d", s.chg_20d},
                  {"chg_60d", s.chg_60d}};
    json momentum = {{"rsi6", s.rsi6},
                     {"rsi12", s.rsi12},
                     {"rsi24", s.rsi24},
                     {"rsi6_state", to_string(s.rsi6_state)},
                     {"rsi12_state", to_string(s.rsi12_state)},
                     {"rsi24_state", to_string(s.rsi24_state)},
                     {"macd_dif", s.macd_dif},
                     {"macd_dea", s.macd_dea},
                     {"macd_hist", s.macd_hist},
                     {"macd_cross", to_string(s.macd_cross)},
                     {"momentum_10d", s.momentum_10d}};
    json bollinger = {{"mid", s.boll_mid},
                      {"upper", s.boll_upper},
                      {"lower", s.boll_lower},
                      {"position", to_string(s.boll_position)}};
    json price_volume = {{"vol_ma5", s.vol_ma5},
                         {"vol_ma10", s.vol_ma10},
                         {"vol_ma20", s.vol_ma20},
                         {"volume_ratio", opt(s.volume_ratio)},
                         {"pv_label", to_string(s.pv_label)}};
    json volatility = {{"vol20", s.vol20},
                       {"atr_simplified", s.atr_simplified},
                       {"avg_amp_20", s.avg_amp_20},
                       {"max_amp_20", s.max_amp_20}};
    json levels = {{"support", s.support}, {"resistance", s.resistance}};
    json structure = {{"consec_streak", s.consec_streak},
                      {"up_days_20", s.up_days_20},
                      {"down_days_20", s.down_days_20},
                      {"last5_chg", s.last5_chg}};

    json history = json::array();
    for (const auto& th : theta_history) history.push_back({{"date", th.date.iso()}, {"theta", th.value.theta}});
    const auto eps = threshold::HorizonThresholds{latest.value.theta, std::sqrt(5.0) * latest.value.theta,
                                                  std::sqrt(20.0) * latest.value.theta};
    json thresholds = {{"theta", latest.value.theta},
                       {"eps5", eps.eps5},
                       {"eps20", eps.eps20},
                       {"multiplier", latest.value.multiplier},
                       {"clamped", threshold::to_string(latest.value.clamped)},
                       {"history", history},
                       {"recent_breaches", std::vector<bool>(breaches.begin(), breaches.end())},
                       {"breach_count", std::count(breaches.begin(), breaches.end(), true)}};

    AgentReport r;
    r.agent = AgentKind::momentum;
    r.fund_code = std::string(fund);
    r.as_of = as_of;
    r.payload = {{"schema_version", "momentum/1"},
                 {"trend", trend},
                 {"momentum", momentum},
                 {"bollinger", bollinger},
                 {"price_volume", price_volume},
                 {"volatility", volatility},
                 {"support_resistance", levels},
                 {"structure", structure},
                 {"threshold", thresholds}};
    return r;
}

std::array<AnnouncementImpactStats, 3> announcement_impact_stats(std::span<const data::Announcement> history,
                                                                 std::span<const data::DailyBar> all_bars,
                                                                 std::string_view ann_type, Date as_of,
                                                                 const threshold::ThresholdParams& params) {
    using data::Sentiment;
    std::array<AnnouncementImpactStats, 3> out;
    const Sentiment groups[] = {Sentiment::positive, Sentiment::neutral, Sentiment::negative};
    for (std::size_t g = 0; g < 3; ++g) {
        out[g].ann_type = std::string(ann_type);
        out[g].sentiment_group = groups[g];
    }
    // Forward windows may only use bars visible at as_of.
    const auto bars = all_bars.first(static_cast<std::size_t>(
        std::upper_bound(all_bars.begin(), all_bars.end(), as_of,
                         [](Date d, const data::DailyBar& b) { return d < b.date; }) -
        all_bars.begin()));
    std::vector<double> closes;
    for (const auto& b : bars) closes.push_back(b.close);
    const auto returns = stats::simple_returns(closes);

    struct Acc {
        std::size_t n = 0, up = 0, sig = 0, sig_n = 0;
        double sum = 0.0;
    };
    std::array<std::array<Acc, 3>, 3> acc{};  // [group][window]

    for (const auto& a : history) {
        if (a.ann_type != ann_type || !(a.published < as_of)) continue;
        const std::size_t g = static_cast<std::size_t>(a.sentiment);
        ++out[g].n;
        const auto it = std::upper_bound(bars.begin(), bars.end(), a.published,
                                         [](Date d, const data::DailyBar& b) { return d < b.date; });
        if (it == bars.begin()) continue;
        const auto base = static_cast<std::size_t>(it - bars.begin()) - 1;
        std::optional<double> theta;
        if (base >= params.history_needed()) {
            theta = threshold::compute_theta(params, std::span<const double>(returns).first(base)).theta;
        }
        for (std::size_t w = 0; w < 3; ++w) {
            const auto k = static_cast<std::size_t>(threshold::horizons[w]);
            if (base + k >= bars.size()) continue;
            const double r = closes[base + k] / closes[base] - 1.0;
            auto& s = acc[g][w];
            ++s.n;
            s.sum += r;
            if (r > 0) ++s.up;
            if (theta) {
                ++s.sig_n;
                if (std::abs(r) > std::sqrt(static_cast<double>(k)) * *theta) ++s.sig;
            }
        }
    }
    for (std::size_t g = 0; g < 3; ++g) {
        for (std::size_t w = 0; w < 3; ++w) {
            const auto& s = acc[g][w];
            auto& ws = out[g].windows[w];
            ws.n = s.n;
            if (s.n > 0) {
                ws.p_up = static_cast<double>(s.up) / static_cast<double>(s.n);
                ws.avg_chg = s.sum / static_cast<double>(s.n);
            }
            if (s.sig_n > 0) ws.sig_freq = static_cast<double>(s.sig) / static_cast<double>(s.sig_n);
        }
    }
    return out;
}

json to_json(const AnnouncementImpactStats& s) {
    json j = {{"ann_type", s.ann_type}, {"sentiment_group", data::to_string(s.sentiment_group)}, {"n", s.n}};
    if (s.n == 0) return j;
    for (std::size_t w = 0; w < 3; ++w) {
        const auto k = std::to_string(threshold::horizons[w]);
        const auto& ws = s.windows[w];
        j["n_" + k] = ws.n;
        j["p_up_" + k] = opt(ws.p_up);
        j["avg_chg_" + k] = opt(ws.avg_chg);
        j["sig_freq_" + k] = opt(ws.sig_freq);
    }
    return j;
}

RecentTrend recent_trend(std::span<const data::DailyBar> bars, double theta) {
    if (bars.size() < 21) throw DataError("recent trend needs 21 bars");
    RecentTrend t;
    const double c = bars.back().close;
    t.chg_5d = c / bars[bars.size() - 6].close - 1.0;
    t.chg_20d = c / bars[bars.size() - 21].close - 1.0;
    t.theta = theta;
    t.eps5 = std::sqrt(5.0) * theta;
    t.eps20 = std::sqrt(20.0) * theta;
    t.sideways_5d = std::abs(t.chg_5d) <= t.eps5;
    t.sideways_20d = std::abs(t.chg_20d) <= t.eps20;
    return t;
}

AgentReport build_announcement_context(std::string_view fund, Date as_of,
                                       std::span<const data::Announcement> announcements,
                                       const std::map<std::string, std::array<AnnouncementImpactStats, 3>>& impact_stats,
                                       const RecentTrend& trend, const AgentConfig& cfg) {
    const Date from = as_of.plus_days(-cfg.announcement_window_days);
    json recent = json::array();
    std::set<std::string> key_types_present;
    for (const auto& a : announcements) {
        if (a.fund_code != fund || a.published < from || !(a.published < as_of)) continue;
        const bool key = std::find(cfg.key_announcement_types.begin(), cfg.key_announcement_types.end(),
                                   a.ann_type) != cfg.key_announcement_types.end();
        if (key) key_types_present.insert(a.ann_type);
        recent.push_back({{"published", a.published.iso()},
                          {"ann_type", a.ann_type},
                          {"summary", a.summary},
                          {"sentiment", data::to_string(a.sentiment)},
                          {"key_type", key}});
    }
    json stats = json::object();
    for (const auto& type : key_types_present) {
        const auto it = impact_stats.find(type);
        if (it == impact_stats.end()) continue;
        json groups = json::array();
        for (const auto& g : it->second) groups.push_back(to_json(g));
        stats[type] = groups;
    }
    AgentReport r;
    r.agent = AgentKind::announcement;
    r.fund_code = std::string(fund);
    r.as_of = as_of;
    r.payload = {{"schema_version", "announcement/1"},
                 {"window", {{"from", from.iso()}, {"to_exclusive", as_of.iso()}}},
                 {"announcements", recent},
                 {"no_recent_disclosures", recent.empty()},
                 {"historical_impact", stats},
                 {"recent_trend",
                  {{"chg_5d", trend.chg_5d},
                   {"chg_20d", trend.chg_20d},
                   {"theta", trend.theta},
                   {"eps5", trend.eps5},
                   {"eps20", trend.eps20},
                   {"sideways_5d", trend.sideways_5d},
                   {"sideways_20d", trend.sideways_20d}}}};
    return r;
}

QuarterlyWarning quarterly_warning(Date as_of, std::span<const Date> release_calendar, int window_days) {
    QuarterlyWarning w;
    const auto it = std::lower_bound(release_calendar.begin(), release_calendar.end(), as_of);
    if (it == release_calendar.end()) return w;
    w.next_release = *it;
    w.days_until = it->days_since(as_of);
    w.active = *w.days_until <= window_days;
    return w;
}

AgentReport build_event_context(std::string_view fund, Date as_of, std::span<const data::NewsItem> news,
                                std::span<const data::OperationalReport> reports, const QuarterlyWarning& warning,
                                int window_days) {
    std::vector<const data::NewsItem*> picked;
    for (const auto& n : news) {
        const int age = as_of.days_since(n.date);
        if (n.impact == data::Impact::high && age >= 0 && age <= window_days) picked.push_back(&n);
    }
    std::stable_sort(picked.begin(), picked.end(),
                     [](const data::NewsItem* a, const data::NewsItem* b) { return a->date > b->date; });
    json news_j = json::array();
    for (const auto* n : picked) {
        const int age = as_of.days_since(n->date);
        news_j.push_back({{"date", n->date.iso()},
                          {"age_days", age},
                          {"weight", recency_weight(age)},
                          {"summary", n->summary},
                          {"sentiment", data::to_string(n->sentiment)}});
    }

    const data::OperationalReport* quarterly = nullptr;
    for (const auto& r : reports) {
        if (r.fund_code != fund || as_of < r.visible_from()) continue;
        if (r.kind == data::ReportKind::quarterly_report &&
            (quarterly == nullptr || quarterly->visible_from() <= r.visible_from())) {
            quarterly = &r;
        }
    }
    auto report_json = [](const data::OperationalReport& r) {
        return json{{"period_end", r.period_end.iso()},
                    {"visible_from", r.visible_from().iso()},
                    {"kind", data::to_string(r.kind)},
                    {"summary", r.summary},
                    {"sentiment", data::to_string(r.sentiment)},
                    {"reasoning", r.reasoning}};
    };
    json operational = json::array();
    for (const auto& r : reports) {
        if (r.fund_code != fund || as_of < r.visible_from() || r.kind != data::ReportKind::operational_data) continue;
        if (quarterly != nullptr && r.visible_from() < quarterly->visible_from()) continue;
        operational.push_back(report_json(r));
    }

    json warning_j = {{"active", warning.active}};
    warning_j["next_release"] = warning.next_release ? json(warning.next_release->iso()) : json(nullptr);
    warning_j["days_until"] = warning.days_until ? json(*warning.days_until) : json(nullptr);

    AgentReport r;
    r.agent = AgentKind::event;
    r.fund_code = std::string(fund);
    r.as_of = as_of;
    r.payload = {{"schema_version", "event/1"},
                 {"news_window_days", window_days},
                 {"high_impact_news", news_j},
                 {"latest_quarterly_report", quarterly ? report_json(*quarterly) : json(nullptr)},
                 {"no_quarterly_report", quarterly == nullptr},
                 {"operational_reports_since", operational},
                 {"quarterly_warning", warning_j}};
    return r;
}

AgentReport build_market_context(std::string_view fund, const macro::MarketSnapshot& snapshot) {
    json layers = macro::to_json(snapshot);
    auto& summary = layers["summary"];
    summary["transition"] = snapshot.quadrant.value == macro::Quadrant::transition;
    json tags = json::array();
    if (snapshot.quadrant.value == macro::Quadrant::Q3) tags.push_back("allocation window");
    if (snapshot.quadrant.value == macro::Quadrant::Q2) tags.push_back("risk suppression");
    if (snapshot.quadrant.value == macro::Quadrant::transition) tags.push_back("transition zone");
    summary["tags"] = tags;

    AgentReport r;
    r.agent = AgentKind::market;
    r.fund_code = std::string(fund);
    r.as_of = snapshot.as_of;
    r.payload = {{"schema_version", "market/1"},
                 {"summary", summary},
                 {"interpretation", layers["interpretation"]},
                 {"raw", layers["raw"]}};
    return r;
}

}  // namespace reits::agents
