#include "reits/indicators.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "reits/stats.hpp"

namespace reits::indicators {

std::string_view to_string(MaAlignment v) {
    switch (v) {
        case MaAlignment::bullish: return "bullish";
        case MaAlignment::bearish: return "bearish";
        case MaAlignment::chaotic: return "chaotic";
    }
    return "chaotic";
}

std::string_view to_string(RsiState v) {
    switch (v) {
        case RsiState::overbought: return "overbought";
        case RsiState::oversold: return "oversold";
        case RsiState::normal: return "normal";
    }
    return "normal";
}

std::string_view to_string(MacdCross v) {
    switch (v) {
        case MacdCross::golden: return "golden";
        case MacdCross::death: return "death";
        case MacdCross::none: return "none";
    }
    return "none";
}

std::string_view to_string(BollPosition v) {
    switch (v) {
        case BollPosition::break_upper: return "break_upper";
        case BollPosition::break_lower: return "break_lower";
        case BollPosition::biased_up: return "biased_up";
        case BollPosition::biased_down: return "biased_down";
        case BollPosition::middle: return "middle";
    }
    return "middle";
}

std::string_view to_string(PriceVolume v) {
    switch (v) {
        case PriceVolume::price_up_vol_up: return "price_up_vol_up";
        case PriceVolume::price_up_vol_down: return "price_up_vol_down";
        case PriceVolume::price_down_vol_up: return "price_down_vol_up";
        case PriceVolume::price_down_vol_down: return "price_down_vol_down";
        case PriceVolume::flat: return "flat";
    }
    return "flat";
}

namespace {

struct Requirement {
    std::string_view name;
    std::size_t bars;
};

// Bars needed by each indicator, used to report what a short window cannot produce.
constexpr Requirement requirements[] = {
    {"ma5", 5},           {"ma10", 10},          {"ma20", 20},          {"ma60", 60},
    {"chg_1d", 2},        {"chg_5d", 6},         {"chg_20d", 21},       {"chg_60d", 61},
    {"rsi6", 7},          {"rsi12", 13},         {"rsi24", 25},         {"macd", 2},
    {"momentum_10d", 11}, {"bollinger", 20},     {"vol20", 21},         {"atr_simplified", 15},
    {"vol_ma20", 20},     {"volume_ratio", 6},   {"support_resistance", 60},
    {"up_down_days_20", 21}, {"amplitude_20", 21}, {"last5_chg", 6},
};

double tail_mean(std::span<const double> xs, std::size_t n) { return stats::mean(xs.last(n)); }

double pct_change(std::span<const double> closes, std::size_t k) {
    return (closes.back() / closes[closes.size() - 1 - k] - 1.0) * 100.0;
}

RsiState rsi_state(double rsi, const IndicatorConfig& cfg) {
    if (rsi > cfg.rsi_overbought) return RsiState::overbought;
    if (rsi < cfg.rsi_oversold) return RsiState::oversold;
    return RsiState::normal;
}

/// Mean of the cluster that starts at the candidate nearest to `close`, walking away from it
/// while successive candidates sit within `cluster_pct` of close of each other.
double cluster_from(std::vector<double> side, double close, double cluster_pct, bool below) {
    std::sort(side.begin(), side.end());
    if (below) std::reverse(side.begin(), side.end());
    double sum = side.front();
    std::size_t n = 1;
    for (std::size_t i = 1; i < side.size(); ++i) {
        if (std::abs(side[i] - side[i - 1]) / close > cluster_pct) break;
        sum += side[i];
        ++n;
    }
    return sum / static_cast<double>(n);
}

}  // namespace

std::pair<double, double> support_resistance(std::span<const double> closes, std::span<const double> mas,
                                             std::pair<double, double> boll_lower_upper, double close,
                                             double cluster_pct) {
    if (closes.size() < 60) throw DataError("support_resistance needs at least 60 closes");
    std::vector<double> candidates;
    for (std::size_t w : {5u, 10u, 20u, 60u}) {
        const auto tail = closes.last(w);
        candidates.push_back(*std::min_element(tail.begin(), tail.end()));
        candidates.push_back(*std::max_element(tail.begin(), tail.end()));
    }
    candidates.insert(candidates.end(), mas.begin(), mas.end());
    candidates.push_back(boll_lower_upper.first);
    candidates.push_back(boll_lower_upper.second);

    std::vector<double> lower, upper;
    for (double c : candidates) {
        if (c < close) lower.push_back(c);
        else if (c > close) upper.push_back(c);
    }
    const auto last60 = closes.last(60);
    const double support = lower.empty() ? *std::min_element(last60.begin(), last60.end())
                                         : cluster_from(lower, close, cluster_pct, true);
    const double resistance = upper.empty() ? *std::max_element(last60.begin(), last60.end())
                                            : cluster_from(upper, close, cluster_pct, false);
    return {support, resistance};
}

double volume_ratio(std::span<const data::DailyBar> bars) {
    if (bars.size() < 6) throw DataError("volume_ratio needs at least 6 bars");
    double prior = 0.0;
    for (std::size_t i = bars.size() - 6; i < bars.size() - 1; ++i) prior += bars[i].volume;
    prior /= 5.0;
    if (prior == 0.0) throw DataError("volume_ratio undefined: zero mean volume over prior 5 bars");
    return bars.back().volume / prior;
}

IndicatorSnapshot compute_snapshot(std::span<const data::DailyBar> all_bars, Date as_of, const IndicatorConfig& cfg) {
    const auto end = static_cast<std::size_t>(
        std::upper_bound(all_bars.begin(), all_bars.end(), as_of,
                         [](Date d, const data::DailyBar& b) { return d < b.date; }) -
        all_bars.begin());
    const auto bars = all_bars.first(end);
    if (bars.size() < min_snapshot_bars) {
        std::string missing;
        for (const auto& r : requirements) {
            if (bars.size() < r.bars) missing += (missing.empty() ? "" : ", ") + std::string(r.name);
        }
        throw DataError("insufficient history at " + as_of.iso() + " (" + std::to_string(bars.size()) +
                        " bars): missing " + missing);
    }

    std::vector<double> closes, volumes;
    closes.reserve(bars.size());
    volumes.reserve(bars.size());
    for (const auto& b : bars) {
        closes.push_back(b.close);
        volumes.push_back(b.volume);
    }
    const auto returns = stats::simple_returns(closes);
    const std::span<const double> r(returns);

    IndicatorSnapshot s;
    s.as_of = bars.back().date;
    s.close = closes.back();
    const double close = s.close;

    s.ma5 = tail_mean(closes, 5);
    s.ma10 = tail_mean(closes, 10);
    s.ma20 = tail_mean(closes, 20);
    s.ma60 = tail_mean(closes, 60);
    s.ma5_dev_pct = (close - s.ma5) / s.ma5 * 100.0;
    s.ma10_dev_pct = (close - s.ma10) / s.ma10 * 100.0;
    s.ma20_dev_pct = (close - s.ma20) / s.ma20 * 100.0;
    s.ma60_dev_pct = (close - s.ma60) / s.ma60 * 100.0;
    if (s.ma5 > s.ma10 && s.ma10 > s.ma20 && s.ma20 > s.ma60) s.ma_alignment = MaAlignment::bullish;
    else if (s.ma5 < s.ma10 && s.ma10 < s.ma20 && s.ma20 < s.ma60) s.ma_alignment = MaAlignment::bearish;
    else s.ma_alignment = MaAlignment::chaotic;

    s.chg_1d = pct_change(closes, 1);
    s.chg_5d = pct_change(closes, 5);
    s.chg_20d = pct_change(closes, 20);
    s.chg_60d = pct_change(closes, 60);

    s.rsi6 = stats::wilder_rsi(closes, 6);
    s.rsi12 = stats::wilder_rsi(closes, 12);
    s.rsi24 = stats::wilder_rsi(closes, 24);
    s.rsi6_state = rsi_state(s.rsi6, cfg);
    s.rsi12_state = rsi_state(s.rsi12, cfg);
    s.rsi24_state = rsi_state(s.rsi24, cfg);

    const auto ema12 = stats::ema(closes, 12);
    const auto ema26 = stats::ema(closes, 26);
    std::vector<double> dif(closes.size());
    for (std::size_t i = 0; i < closes.size(); ++i) dif[i] = ema12[i] - ema26[i];
    const auto dea = stats::ema(dif, 9);
    const std::size_t t = closes.size() - 1;
    s.macd_dif = dif[t];
    s.macd_dea = dea[t];
    s.macd_hist = dif[t] - dea[t];
    if (dif[t - 1] <= dea[t - 1] && dif[t] > dea[t]) s.macd_cross = MacdCross::golden;
    else if (dif[t - 1] >= dea[t - 1] && dif[t] < dea[t]) s.macd_cross = MacdCross::death;
    s.momentum_10d = pct_change(closes, 10);

    s.boll_mid = s.ma20;
    const double sd20 = stats::sample_std(std::span<const double>(closes).last(20));
    s.boll_upper = s.boll_mid + 2.0 * sd20;
    s.boll_lower = s.boll_mid - 2.0 * sd20;
    if (s.boll_upper > s.boll_lower) {
        const double pct_b = (close - s.boll_lower) / (s.boll_upper - s.boll_lower);
        if (pct_b > 1.0) s.boll_position = BollPosition::break_upper;
        else if (pct_b < 0.0) s.boll_position = BollPosition::break_lower;
        else if (pct_b >= cfg.boll_biased_up) s.boll_position = BollPosition::biased_up;
        else if (pct_b <= cfg.boll_biased_down) s.boll_position = BollPosition::biased_down;
        else s.boll_position = BollPosition::middle;
    }

    s.vol20 = stats::sample_std(r.last(20));
    double abs_sum = 0.0;
    for (double x : r.last(14)) abs_sum += std::abs(x);
    s.atr_simplified = abs_sum / 14.0;

    s.vol_ma5 = tail_mean(volumes, 5);
    s.vol_ma10 = tail_mean(volumes, 10);
    s.vol_ma20 = tail_mean(volumes, 20);
    try {
        s.volume_ratio = volume_ratio(bars);
    } catch (const DataError&) {
        s.volume_ratio.reset();
    }
    const double r_t = r.back();
    if (r_t != 0.0 && s.volume_ratio && *s.volume_ratio != 1.0) {
        const bool vol_up = *s.volume_ratio > 1.0;
        if (r_t > 0) s.pv_label = vol_up ? PriceVolume::price_up_vol_up : PriceVolume::price_up_vol_down;
        else s.pv_label = vol_up ? PriceVolume::price_down_vol_up : PriceVolume::price_down_vol_down;
    }

    const double mas[] = {s.ma5, s.ma10, s.ma20, s.ma60};
    std::tie(s.support, s.resistance) =
        support_resistance(closes, mas, {s.boll_lower, s.boll_upper}, close, cfg.cluster_pct);

    int streak = 0;
    for (auto it = r.rbegin(); it != r.rend(); ++it) {
        if (*it > 0 && streak >= 0) ++streak;
        else if (*it < 0 && streak <= 0) --streak;
        else break;
    }
    s.consec_streak = streak;
    double amp_sum = 0.0;
    for (double x : r.last(20)) {
        if (x > 0) ++s.up_days_20;
        else if (x < 0) ++s.down_days_20;
        amp_sum += std::abs(x) * 100.0;
        s.max_amp_20 = std::max(s.max_amp_20, std::abs(x) * 100.0);
    }
    s.avg_amp_20 = amp_sum / 20.0;
    const auto last5 = r.last(5);
    for (std::size_t i = 0; i < 5; ++i) s.last5_chg[i] = last5[i] * 100.0;
    return s;
}

nlohmann::json to_json(const IndicatorSnapshot& s) {
    nlohmann::json j;
    j["as_of"] = s.as_of.iso();
    j["close"] = s.close;
    j["ma5"] = s.ma5;
    j["ma10"] = s.ma10;
    j["ma20"] = s.ma20;
    j["ma60"] = s.ma60;
    j["ma5_deviation_pct"] = s.ma5_dev_pct;
    j["ma10_deviation_pct"] = s.ma10_dev_pct;
    j["ma20_deviation_pct"] = s.ma20_dev_pct;
    j["ma60_deviation_pct"] = s.ma60_dev_pct;
    j["ma_alignment"] = to_string(s.ma_alignment);
    j["chg_1d"] = s.chg_1d;
    j["chg_5d"] = s.chg_5d;
    j["chg_20d"] = s.chg_20d;
    j["chg_60d"] = s.chg_60d;
    j["rsi6"] = s.rsi6;
    j["rsi12"] = s.rsi12;
    j["rsi24"] = s.rsi24;
    j["rsi6_state"] = to_string(s.rsi6_state);
    j["rsi12_state"] = to_string(s.rsi12_state);
    j["rsi24_state"] = to_string(s.rsi24_state);
    j["macd_dif"] = s.macd_dif;
    j["macd_dea"] = s.macd_dea;
    j["macd_hist"] = s.macd_hist;
    j["macd_cross"] = to_string(s.macd_cross);
    j["momentum_10d"] = s.momentum_10d;
    j["boll_mid"] = s.boll_mid;
    j["boll_upper"] = s.boll_upper;
    j["boll_lower"] = s.boll_lower;
    j["boll_position"] = to_string(s.boll_position);
    j["vol20"] = s.vol20;
    j["atr_simplified"] = s.atr_simplified;
    j["vol_ma5"] = s.vol_ma5;
    j["vol_ma10"] = s.vol_ma10;
    j["vol_ma20"] = s.vol_ma20;
    j["volume_ratio"] = s.volume_ratio ? nlohmann::json(*s.volume_ratio) : nlohmann::json(nullptr);
    j["pv_label"] = to_string(s.pv_label);
    j["support"] = s.support;
    j["resistance"] = s.resistance;
    j["consec_streak"] = s.consec_streak;
    j["up_days_20"] = s.up_days_20;
    j["down_days_20"] = s.down_days_20;
    j["avg_amp_20"] = s.avg_amp_20;
    j["max_amp_20"] = s.max_amp_20;
    j["last5_chg"] = s.last5_chg;
    return j;
}

}  // namespace reits::indicators
