#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "reits/market_data.hpp"

namespace reits::threshold {

/// Parameters of the dynamic volatility threshold.
struct ThresholdParams {
    int n_v = 30;       // sigma window
    int n_short = 10;   // short-vol window for the multiplier ratio
    int n_long = 60;    // long-vol window for the multiplier ratio
    int n_b = 120;      // quantile window over |r|
    double q_lo_pct = 0.30;
    double q_hi_pct = 0.70;
    double tau_high = 1.4;
    double tau_low = 0.7;
    double m0 = 0.45;
    double a_high = 1.2;
    double a_low = 0.8;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
    /// Returns needed to compute one threshold.
    [[nodiscard]] std::size_t history_needed() const;
};

enum class Clamp { floor, ceiling, none };
std::string_view to_string(Clamp c);

struct ThresholdValue {
    double theta = 0.0;
    double sigma = 0.0;
    double sigma_short = 0.0;
    double sigma_long = 0.0;
    double multiplier = 0.0;
    double q_lo = 0.0;
    double q_hi = 0.0;
    Clamp clamped = Clamp::none;
    bool ratio_undefined = false;  // sigma_long == 0, multiplier fell back to m0
};

struct HorizonThresholds {
    double eps1 = 0.0;
    double eps5 = 0.0;
    double eps20 = 0.0;
};

enum class DirectionLabel { up, down, side };
std::string_view to_string(DirectionLabel d);
DirectionLabel parse_direction(std::string_view s);

inline constexpr std::array<int, 3> horizons{1, 5, 20};

struct LabeledSample {
    std::string fund_code;
    Date date;
    double theta = 0.0;
    HorizonThresholds eps;
    std::array<std::optional<double>, 3> r_fwd;             // R_1, R_5, R_20
    std::array<std::optional<DirectionLabel>, 3> labels;    // absent without forward bars

    [[nodiscard]] bool complete() const { return labels[0] && labels[1] && labels[2]; }
};

/// Threshold at the last element of `returns`.
ThresholdValue compute_theta(const ThresholdParams& params, std::span<const double> returns);

/// eps_k = sqrt(k) * theta. Throws DataError when theta <= 0.
HorizonThresholds horizon_thresholds(double theta);

/// up iff r_cum >= eps, down iff r_cum <= -eps, side otherwise. With eps == 0 the
/// eps -> 0+ limit applies (strict sign), so a zero move is side.
DirectionLabel classify(double r_cum, double eps);

/// One sample per bar that has enough history for theta.
std::vector<LabeledSample> annotate(std::span<const data::DailyBar> bars, const ThresholdParams& params,
                                    std::string_view fund_code = {});

/// Share of classified days with |r_t| <= theta_t (theta_t includes r_t).
double sideways_fraction(std::span<const data::DailyBar> bars, const ThresholdParams& params);

/// Thresholds for every bar with enough history, aligned to bar dates.
struct DatedThreshold {
    Date date;
    ThresholdValue value;
};
std::vector<DatedThreshold> theta_history(std::span<const data::DailyBar> bars, const ThresholdParams& params);

nlohmann::json to_json(const ThresholdValue& v);
nlohmann::json to_json(const LabeledSample& s);
LabeledSample labeled_sample_from_json(const nlohmann::json& j);

}  // namespace reits::threshold
