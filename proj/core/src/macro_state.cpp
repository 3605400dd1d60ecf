#include "reits/macro_state.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "reits/stats.hpp"

namespace reits::macro {

std::string_view to_string(RateTrend v) {
    switch (v) {
        case RateTrend::clearly_down: return "clearly_down";
        case RateTrend::slowly_down: return "slowly_down";
        case RateTrend::sideways: return "sideways";
        case RateTrend::slowly_up: return "slowly_up";
        case RateTrend::clearly_up: return "clearly_up";
    }
    return "sideways";
}

std::string_view to_string(EquityState v) {
    switch (v) {
        case EquityState::bull: return "bull";
        case EquityState::osc_strong: return "osc_strong";
        case EquityState::oscillation: return "oscillation";
        case EquityState::osc_weak: return "osc_weak";
        case EquityState::bear: return "bear";
        case EquityState::indeterminate: return "indeterminate";
    }
    return "indeterminate";
}

std::string_view to_string(Quadrant v) {
    switch (v) {
        case Quadrant::Q1: return "Q1";
        case Quadrant::Q2: return "Q2";
        case Quadrant::Q3: return "Q3";
        case Quadrant::Q4: return "Q4";
        case Quadrant::transition: return "transition";
    }
    return "transition";
}

RateTrend classify_rate_trend(double bp) {
    if (bp < -20.0) return RateTrend::clearly_down;
    if (bp < -5.0) return RateTrend::slowly_down;
    if (bp <= 5.0) return RateTrend::sideways;
    if (bp <= 20.0) return RateTrend::slowly_up;
    return RateTrend::clearly_up;
}

EquityState classify_equity_state(double chg, double rsi) {
    if (!(rsi >= 0.0 && rsi <= 100.0)) throw DataError("rsi out of range [0,100]: " + std::to_string(rsi));
    if (chg > 5.0 && rsi > 60.0) return EquityState::bull;
    if (chg < -5.0 && rsi < 40.0) return EquityState::bear;
    if (chg >= 0.0 && chg <= 5.0 && rsi >= 50.0 && rsi <= 60.0) return EquityState::osc_strong;
    if (chg >= -5.0 && chg <= 0.0 && rsi >= 40.0 && rsi <= 50.0) return EquityState::osc_weak;
    if (chg >= -2.0 && chg <= 2.0 && rsi >= 40.0 && rsi <= 60.0) return EquityState::oscillation;
    return EquityState::indeterminate;
}

MacroQuadrant quadrant(RateTrend rate, EquityState equity) {
    const bool rate_down = rate == RateTrend::clearly_down || rate == RateTrend::slowly_down;
    const bool rate_up = rate == RateTrend::slowly_up || rate == RateTrend::clearly_up;
    const bool eq_up = equity == EquityState::bull || equity == EquityState::osc_strong;

    if (rate == RateTrend::sideways) return {Quadrant::transition, "transition: rate trend sideways"};
    if (equity == EquityState::indeterminate) return {Quadrant::transition, "transition: equity state indeterminate"};
    if (rate_down && eq_up) {
        return {Quadrant::Q1, "Q1: rates down + equities up; valuation supported but equities divert capital "
                              "(cautiously optimistic)"};
    }
    if (rate_up && eq_up) {
        return {Quadrant::Q2, "Q2: rates up + equities up; double squeeze on REITs (most unfavorable)"};
    }
    if (rate_down) {
        return {Quadrant::Q3, "Q3: rates down + equities oscillating or down; capital returns to stable assets "
                              "(allocation window)"};
    }
    if (equity == EquityState::oscillation) {
        return {Quadrant::transition, "transition: rates up with equities oscillating"};
    }
    return {Quadrant::Q4, "Q4: rates up + equities down; defensive with limited returns"};
}

namespace {

template <class Obs>
std::span<const Obs> last_year(std::span<const Obs> series, Date as_of, std::string_view name) {
    const auto w = data::window(series, as_of, market_history_bars);
    if (w.short_history) {
        throw DataError("insufficient history: " + std::string(name) + " has " + std::to_string(w.obs.size()) +
                        " observations on or before " + as_of.iso() + ", need " +
                        std::to_string(market_history_bars));
    }
    return w.obs;
}

template <class Obs>
std::vector<double> closes_of(std::span<const Obs> s) {
    std::vector<double> c;
    c.reserve(s.size());
    for (const auto& o : s) c.push_back(o.close);
    return c;
}

double pct_change(const std::vector<double>& c, std::size_t k) {
    return (c.back() / c[c.size() - 1 - k] - 1.0) * 100.0;
}

std::string macd_state(const std::vector<double>& closes) {
    const auto e12 = stats::ema(closes, 12);
    const auto e26 = stats::ema(closes, 26);
    std::vector<double> dif(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) dif[i] = e12[i] - e26[i];
    const auto dea = stats::ema(dif, 9);
    const std::size_t t = closes.size() - 1;
    if (dif[t - 1] <= dea[t - 1] && dif[t] > dea[t]) return "golden_cross";
    if (dif[t - 1] >= dea[t - 1] && dif[t] < dea[t]) return "death_cross";
    return dif[t] > dea[t] ? "dif_above_dea" : "dif_below_dea";
}

}  // namespace

MarketSnapshot build_market_snapshot(std::span<const data::DailyBar> reits_all, std::span<const data::IndexBar> sse_all,
                                     std::span<const data::IndexBar> div_all,
                                     std::span<const data::YieldPoint> yields_all, Date as_of,
                                     const LabelThresholds& cuts) {
    const auto reits = last_year(reits_all, as_of, "reits_market");
    const auto sse = last_year(sse_all, as_of, "sse");
    const auto div = last_year(div_all, as_of, "dividend");
    const auto yields = last_year(yields_all, as_of, "yields");

    MarketSnapshot s;
    s.as_of = as_of;

    const auto rc = closes_of(reits);
    s.reits_price_quantile_1y = stats::percentile_rank(rc, rc.back());
    s.reits_chg_5d = pct_change(rc, 5);
    s.reits_chg_20d = pct_change(rc, 20);
    s.reits_chg_60d = pct_change(rc, 60);
    s.reits_rsi = stats::wilder_rsi(rc, 14);
    s.reits_macd_state = macd_state(rc);
    const auto rr = stats::simple_returns(rc);
    std::vector<double> vols;
    for (std::size_t end = 20; end <= rr.size(); ++end) {
        vols.push_back(stats::sample_std(std::span<const double>(rr).subspan(end - 20, 20)));
    }
    s.vol_quantile_1y = stats::percentile_rank(vols, vols.back());
    const auto last20 = std::span<const double>(rr).last(20);
    s.up_day_ratio_20d =
        static_cast<double>(std::count_if(last20.begin(), last20.end(), [](double r) { return r > 0; })) / 20.0;

    std::vector<double> yv;
    for (const auto& y : yields) yv.push_back(y.yield_pct);
    s.rate_level_pct = yv.back();
    s.rate_quantile_1y = stats::percentile_rank(yv, yv.back());
    s.rate_bp_chg_20d = (yv.back() - yv[yv.size() - 21]) * 100.0;
    const double yma20 = stats::mean(std::span<const double>(yv).last(20));
    s.rate_ma_dev_pct = yma20 != 0.0 ? (yv.back() - yma20) / yma20 * 100.0 : 0.0;

    // Correlation of daily yield changes (bp) with daily REITs changes (%) on common dates.
    std::map<Date, double> yield_on;
    for (const auto& y : yields) yield_on[y.date] = y.yield_pct;
    std::vector<std::pair<double, double>> common;  // (yield, reits close)
    for (const auto& b : reits) {
        if (auto it = yield_on.find(b.date); it != yield_on.end()) common.emplace_back(it->second, b.close);
    }
    if (common.size() > 61) common.erase(common.begin(), common.end() - 61);
    if (common.size() >= 3) {
        std::vector<double> dy, dr;
        for (std::size_t i = 1; i < common.size(); ++i) {
            dy.push_back((common[i].first - common[i - 1].first) * 100.0);
            dr.push_back((common[i].second / common[i - 1].second - 1.0) * 100.0);
        }
        s.rate_reits_corr_60d = stats::pearson(dy, dr);
    }

    const auto sc = closes_of(sse);
    s.sse_chg_20d = pct_change(sc, 20);
    s.sse_rsi = stats::wilder_rsi(sc, 14);
    const auto dc = closes_of(div);
    s.div_chg_20d = pct_change(dc, 20);
    s.div_rsi = stats::wilder_rsi(dc, 14);
    s.rel_strength_reits_vs_div_20d = s.reits_chg_20d - s.div_chg_20d;

    s.market_turnover = reits.back().turnover_rate;
    s.market_volume = reits.back().volume;
    double prior_vol = 0.0;
    for (std::size_t i = reits.size() - 6; i < reits.size() - 1; ++i) prior_vol += reits[i].volume / 5.0;
    const double r_t = rr.back();
    if (r_t == 0.0 || prior_vol == 0.0 || s.market_volume == prior_vol) {
        s.pv_label = "flat";
    } else {
        const bool vol_up = s.market_volume > prior_vol;
        s.pv_label = r_t > 0 ? (vol_up ? "price_up_vol_up" : "price_up_vol_down")
                             : (vol_up ? "price_down_vol_up" : "price_down_vol_down");
    }

    auto& labels = s.interpretation_labels;
    if (s.rate_quantile_1y >= cuts.quantile_high) labels.emplace_back("interest rate relatively high");
    else if (s.rate_quantile_1y <= cuts.quantile_low) labels.emplace_back("interest rate relatively low");
    if (s.reits_price_quantile_1y >= cuts.quantile_high) labels.emplace_back("REITs price relatively high");
    else if (s.reits_price_quantile_1y <= cuts.quantile_low) labels.emplace_back("REITs price relatively low");
    if (s.vol_quantile_1y >= cuts.quantile_high) labels.emplace_back("volatility relatively high");
    else if (s.vol_quantile_1y <= cuts.quantile_low) labels.emplace_back("volatility relatively low");
    if (s.up_day_ratio_20d >= cuts.up_ratio_strong) labels.emplace_back("momentum relatively strong");
    else if (s.up_day_ratio_20d <= cuts.up_ratio_weak) labels.emplace_back("momentum relatively weak");
    if (s.rel_strength_reits_vs_div_20d <= -cuts.rel_strength_pp) labels.emplace_back("dividend strong");
    else if (s.rel_strength_reits_vs_div_20d >= cuts.rel_strength_pp) labels.emplace_back("REITs stronger than dividend");
    std::vector<double> turnovers;
    for (const auto& b : reits) turnovers.push_back(b.turnover_rate);
    if (s.market_turnover < stats::quantile_linear(turnovers, cuts.turnover_sluggish_quantile)) {
        labels.emplace_back("turnover rate sluggish");
    }

    s.rate_trend = classify_rate_trend(s.rate_bp_chg_20d);
    s.equity_state = classify_equity_state(s.sse_chg_20d, s.sse_rsi);
    s.quadrant = quadrant(s.rate_trend, s.equity_state);
    return s;
}

nlohmann::json to_json(const MarketSnapshot& s) {
    nlohmann::json raw = {
        {"reits_price_quantile_1y", s.reits_price_quantile_1y},
        {"reits_chg_5d", s.reits_chg_5d},
        {"reits_chg_20d", s.reits_chg_20d},
        {"reits_chg_60d", s.reits_chg_60d},
        {"reits_rsi", s.reits_rsi},
        {"reits_macd_state", s.reits_macd_state},
        {"vol_quantile_1y", s.vol_quantile_1y},
        {"up_day_ratio_20d", s.up_day_ratio_20d},
        {"rate_level_pct", s.rate_level_pct},
        {"rate_quantile_1y", s.rate_quantile_1y},
        {"rate_bp_chg_20d", s.rate_bp_chg_20d},
        {"rate_ma_dev_pct", s.rate_ma_dev_pct},
        {"rate_reits_corr_60d",
         s.rate_reits_corr_60d ? nlohmann::json(*s.rate_reits_corr_60d) : nlohmann::json(nullptr)},
        {"sse_chg_20d", s.sse_chg_20d},
        {"sse_rsi", s.sse_rsi},
        {"div_chg_20d", s.div_chg_20d},
        {"div_rsi", s.div_rsi},
        {"rel_strength_reits_vs_div_20d", s.rel_strength_reits_vs_div_20d},
        {"market_turnover", s.market_turnover},
        {"market_volume", s.market_volume},
        {"pv_label", s.pv_label},
    };
    nlohmann::json summary = {
        {"quadrant", to_string(s.quadrant.value)},
        {"rationale", s.quadrant.rationale},
        {"rate_trend", to_string(s.rate_trend)},
        {"equity_state", to_string(s.equity_state)},
    };
    return {{"as_of", s.as_of.iso()}, {"summary", summary}, {"interpretation", s.interpretation_labels}, {"raw", raw}};
}

}  // namespace reits::macro
