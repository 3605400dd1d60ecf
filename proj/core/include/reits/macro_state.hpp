#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reits/market_data.hpp"

namespace reits::macro {

enum class RateTrend { clearly_down, slowly_down, sideways, slowly_up, clearly_up };
enum class EquityState { bull, osc_strong, oscillation, osc_weak, bear, indeterminate };
enum class Quadrant { Q1, Q2, Q3, Q4, transition };

std::string_view to_string(RateTrend v);
std::string_view to_string(EquityState v);
std::string_view to_string(Quadrant v);

inline constexpr RateTrend all_rate_trends[] = {RateTrend::clearly_down, RateTrend::slowly_down, RateTrend::sideways,
                                                RateTrend::slowly_up, RateTrend::clearly_up};
inline constexpr EquityState all_equity_states[] = {EquityState::bull,     EquityState::osc_strong,
                                                    EquityState::oscillation, EquityState::osc_weak,
                                                    EquityState::bear,     EquityState::indeterminate};

/// Bands on the 20-day yield change in bp, closed on the inner side:
/// < -20 clearly_down, [-20,-5) slowly_down, [-5,5] sideways, (5,20] slowly_up, > 20 clearly_up.
RateTrend classify_rate_trend(double bp_change_20d);

/// Joint band rule on 20-day change (%) and RSI, evaluated in the order
/// bull, bear, osc_strong, osc_weak, oscillation; indeterminate when none match.
EquityState classify_equity_state(double chg_20d_pct, double rsi);

struct MacroQuadrant {
    Quadrant value = Quadrant::transition;
    std::string rationale;
};

MacroQuadrant quadrant(RateTrend rate, EquityState equity);

/// Cut-offs that map raw numbers to interpretation labels.
struct LabelThresholds {
    double quantile_high = 0.8;
    double quantile_low = 0.2;
    double up_ratio_strong = 0.6;
    double up_ratio_weak = 0.4;
    double turnover_sluggish_quantile = 0.3;
    double rel_strength_pp = 2.0;  // |REITs - dividend| 20d gap for a relative-strength label
};

struct MarketSnapshot {
    Date as_of;
    // REITs market's own state
    double reits_price_quantile_1y = 0.0;
    double reits_chg_5d = 0.0;
    double reits_chg_20d = 0.0;
    double reits_chg_60d = 0.0;
    double reits_rsi = 50.0;
    std::string reits_macd_state;
    double vol_quantile_1y = 0.0;
    double up_day_ratio_20d = 0.0;
    // rates
    double rate_level_pct = 0.0;
    double rate_quantile_1y = 0.0;
    double rate_bp_chg_20d = 0.0;
    double rate_ma_dev_pct = 0.0;
    std::optional<double> rate_reits_corr_60d;
    // equities
    double sse_chg_20d = 0.0;
    double sse_rsi = 50.0;
    double div_chg_20d = 0.0;
    double div_rsi = 50.0;
    double rel_strength_reits_vs_div_20d = 0.0;
    // sentiment
    double market_turnover = 0.0;
    double market_volume = 0.0;
    std::string pv_label;

    std::vector<std::string> interpretation_labels;
    RateTrend rate_trend = RateTrend::sideways;
    EquityState equity_state = EquityState::indeterminate;
    MacroQuadrant quadrant;
};

inline constexpr std::size_t market_history_bars = 250;

/// Inputs are full histories; only observations on or before `as_of` are used, and the
/// last 250 of each must exist. Throws DataError naming the short series.
MarketSnapshot build_market_snapshot(std::span<const data::DailyBar> reits_market,
                                     std::span<const data::IndexBar> sse, std::span<const data::IndexBar> dividend,
                                     std::span<const data::YieldPoint> yields, Date as_of,
                                     const LabelThresholds& labels = {});

/// Three layers: `summary` (quadrant and state), `interpretation` (labels), `raw` (numbers).
nlohmann::json to_json(const MarketSnapshot& s);

}  // namespace reits::macro
