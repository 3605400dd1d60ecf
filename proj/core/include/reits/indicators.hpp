#pragma once

#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>

#include <json.hpp>

#include "reits/market_data.hpp"

namespace reits::indicators {

enum class MaAlignment { bullish, bearish, chaotic };
enum class RsiState { overbought, oversold, normal };
enum class MacdCross { golden, death, none };
enum class BollPosition { break_upper, break_lower, biased_up, biased_down, middle };
enum class PriceVolume { price_up_vol_up, price_up_vol_down, price_down_vol_up, price_down_vol_down, flat };

std::string_view to_string(MaAlignment v);
std::string_view to_string(RsiState v);
std::string_view to_string(MacdCross v);
std::string_view to_string(BollPosition v);
std::string_view to_string(PriceVolume v);

struct IndicatorConfig {
    double rsi_overbought = 70.0;
    double rsi_oversold = 30.0;
    double boll_biased_up = 0.8;
    double boll_biased_down = 0.2;
    double cluster_pct = 0.005;
};

/// One fund-date's technical battery. Percent fields are in percent units
/// (1.0 == 1%); vol20 and atr_simplified are daily-return fractions.
struct IndicatorSnapshot {
    Date as_of;
    double close = 0.0;

    double ma5 = 0.0, ma10 = 0.0, ma20 = 0.0, ma60 = 0.0;
    double ma5_dev_pct = 0.0, ma10_dev_pct = 0.0, ma20_dev_pct = 0.0, ma60_dev_pct = 0.0;
    MaAlignment ma_alignment = MaAlignment::chaotic;
    double chg_1d = 0.0, chg_5d = 0.0, chg_20d = 0.0, chg_60d = 0.0;

    double rsi6 = 50.0, rsi12 = 50.0, rsi24 = 50.0;
    RsiState rsi6_state = RsiState::normal, rsi12_state = RsiState::normal, rsi24_state = RsiState::normal;
    double macd_dif = 0.0, macd_dea = 0.0, macd_hist = 0.0;
    MacdCross macd_cross = MacdCross::none;
    double momentum_10d = 0.0;

    double boll_mid = 0.0, boll_upper = 0.0, boll_lower = 0.0;
    BollPosition boll_position = BollPosition::middle;
    double vol20 = 0.0;
    double atr_simplified = 0.0;

    double vol_ma5 = 0.0, vol_ma10 = 0.0, vol_ma20 = 0.0;
    std::optional<double> volume_ratio;  // undefined when the 5 prior volumes are all zero
    PriceVolume pv_label = PriceVolume::flat;

    double support = 0.0;
    double resistance = 0.0;

    int consec_streak = 0;
    int up_days_20 = 0;
    int down_days_20 = 0;
    double avg_amp_20 = 0.0;
    double max_amp_20 = 0.0;
    std::array<double, 5> last5_chg{};
};

/// Minimum bars: MA60 plus the 60-day change.
inline constexpr std::size_t min_snapshot_bars = 61;

/// Computes the full battery over `bars` dated on or before `as_of`. Throws DataError
/// listing every indicator that lacks history when fewer than 61 bars are available.
IndicatorSnapshot compute_snapshot(std::span<const data::DailyBar> bars, Date as_of,
                                   const IndicatorConfig& cfg = {});

/// Nearest clustered candidate below and above `close`; falls back to the
/// 60-bar low/high when no candidate lies on a side.
std::pair<double, double> support_resistance(std::span<const double> closes, std::span<const double> mas,
                                             std::pair<double, double> boll_lower_upper, double close,
                                             double cluster_pct = 0.005);

/// Today's volume over the mean of the five prior volumes. Throws DataError when that mean is zero.
double volume_ratio(std::span<const data::DailyBar> bars);

nlohmann::json to_json(const IndicatorSnapshot& s);

}  // namespace reits::indicators
