#include "reits/threshold.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "reits/stats.hpp"

namespace reits::threshold {

void ThresholdParams::validate() const {
    if (!(0.0 < q_lo_pct && q_lo_pct < q_hi_pct && q_hi_pct < 1.0)) {
        throw ConfigError("threshold: require 0 < q_lo_pct < q_hi_pct < 1");
    }
    if (!(tau_low < 1.0 && 1.0 < tau_high)) throw ConfigError("threshold: require tau_low < 1 < tau_high");
    if (n_v < 2 || n_short < 2 || n_long < 2 || n_b < 2) throw ConfigError("threshold: all windows must be >= 2");
    if (!(m0 > 0 && a_high > 0 && a_low > 0)) throw ConfigError("threshold: m0, a_high, a_low must be > 0");
}

std::size_t ThresholdParams::history_needed() const {
    return static_cast<std::size_t>(std::max({n_v, n_short, n_long, n_b}));
}

std::string_view to_string(Clamp c) {
    switch (c) {
        case Clamp::floor: return "floor";
        case Clamp::ceiling: return "ceiling";
        case Clamp::none: return "none";
    }
    return "none";
}

std::string_view to_string(DirectionLabel d) {
    switch (d) {
        case DirectionLabel::up: return "up";
        case DirectionLabel::down: return "down";
        case DirectionLabel::side: return "side";
    }
    return "side";
}

DirectionLabel parse_direction(std::string_view s) {
    if (s == "up") return DirectionLabel::up;
    if (s == "down") return DirectionLabel::down;
    if (s == "side") return DirectionLabel::side;
    throw DataError("unknown direction label '" + std::string(s) + "'");
}

ThresholdValue compute_theta(const ThresholdParams& p, std::span<const double> returns) {
    if (returns.size() < p.history_needed()) {
        throw DataError("insufficient history for theta: need " + std::to_string(p.history_needed()) +
                        " returns, have " + std::to_string(returns.size()));
    }
    ThresholdValue v;
    v.sigma = stats::sample_std(returns.last(static_cast<std::size_t>(p.n_v)));
    v.sigma_short = stats::sample_std(returns.last(static_cast<std::size_t>(p.n_short)));
    v.sigma_long = stats::sample_std(returns.last(static_cast<std::size_t>(p.n_long)));
    v.multiplier = p.m0;
    if (v.sigma_long == 0.0) {
        v.ratio_undefined = true;
    } else {
        const double ratio = v.sigma_short / v.sigma_long;
        if (ratio > p.tau_high) v.multiplier = p.m0 * p.a_high;
        else if (ratio < p.tau_low) v.multiplier = p.m0 * p.a_low;
    }
    std::vector<double> abs_r;
    abs_r.reserve(static_cast<std::size_t>(p.n_b));
    for (double r : returns.last(static_cast<std::size_t>(p.n_b))) abs_r.push_back(std::abs(r));
    v.q_lo = stats::quantile_linear(abs_r, p.q_lo_pct);
    v.q_hi = stats::quantile_linear(abs_r, p.q_hi_pct);
    const double raw = v.sigma * v.multiplier;
    v.theta = std::max(v.q_lo, std::min(raw, v.q_hi));
    if (raw < v.q_lo) v.clamped = Clamp::floor;
    else if (raw > v.q_hi) v.clamped = Clamp::ceiling;
    return v;
}

HorizonThresholds horizon_thresholds(double theta) {
    if (!(theta > 0.0)) throw DataError("horizon thresholds need theta > 0");
    return {theta, std::sqrt(5.0) * theta, std::sqrt(20.0) * theta};
}

DirectionLabel classify(double r_cum, double eps) {
    if (eps < 0.0) throw InvariantError("classify: negative eps");
    if (eps == 0.0) {
        if (r_cum > 0) return DirectionLabel::up;
        if (r_cum < 0) return DirectionLabel::down;
        return DirectionLabel::side;
    }
    if (r_cum >= eps) return DirectionLabel::up;
    if (r_cum <= -eps) return DirectionLabel::down;
    return DirectionLabel::side;
}

namespace {

std::vector<double> closes_of(std::span<const data::DailyBar> bars) {
    std::vector<double> c;
    c.reserve(bars.size());
    for (const auto& b : bars) c.push_back(b.close);
    return c;
}

}  // namespace

std::vector<DatedThreshold> theta_history(std::span<const data::DailyBar> bars, const ThresholdParams& params) {
    std::vector<DatedThreshold> out;
    const auto closes = closes_of(bars);
    const auto returns = stats::simple_returns(closes);
    const std::size_t need = params.history_needed();
    for (std::size_t n = need; n <= returns.size(); ++n) {
        // returns[n-1] is aligned to bars[n].
        out.push_back({bars[n].date, compute_theta(params, std::span<const double>(returns).first(n))});
    }
    return out;
}

std::vector<LabeledSample> annotate(std::span<const data::DailyBar> bars, const ThresholdParams& params,
                                    std::string_view fund_code) {
    std::vector<LabeledSample> out;
    const auto closes = closes_of(bars);
    const auto returns = stats::simple_returns(closes);
    const std::size_t need = params.history_needed();
    for (std::size_t n = need; n <= returns.size(); ++n) {
        const std::size_t t = n;  // bar index of the sample date
        LabeledSample s;
        s.fund_code = std::string(fund_code);
        s.date = bars[t].date;
        s.theta = compute_theta(params, std::span<const double>(returns).first(n)).theta;
        s.eps = {s.theta, std::sqrt(5.0) * s.theta, std::sqrt(20.0) * s.theta};
        const double eps[] = {s.eps.eps1, s.eps.eps5, s.eps.eps20};
        for (std::size_t h = 0; h < horizons.size(); ++h) {
            const auto k = static_cast<std::size_t>(horizons[h]);
            if (t + k < closes.size()) {
                const double r = (closes[t + k] - closes[t]) / closes[t];
                s.r_fwd[h] = r;
                s.labels[h] = classify(r, eps[h]);
            }
        }
        out.push_back(std::move(s));
    }
    return out;
}

double sideways_fraction(std::span<const data::DailyBar> bars, const ThresholdParams& params) {
    const auto need_bars = static_cast<std::size_t>(params.n_b + params.n_long);
    if (bars.size() < need_bars) {
        throw DataError("sideways_fraction needs at least " + std::to_string(need_bars) + " bars");
    }
    const auto closes = closes_of(bars);
    const auto returns = stats::simple_returns(closes);
    std::size_t sideways = 0, total = 0;
    for (std::size_t n = params.history_needed(); n <= returns.size(); ++n) {
        const auto th = compute_theta(params, std::span<const double>(returns).first(n));
        ++total;
        if (std::abs(returns[n - 1]) <= th.theta) ++sideways;
    }
    return static_cast<double>(sideways) / static_cast<double>(total);
}

nlohmann::json to_json(const ThresholdValue& v) {
    return {{"theta", v.theta},           {"sigma", v.sigma},        {"sigma_short", v.sigma_short},
            {"sigma_long", v.sigma_long}, {"multiplier", v.multiplier}, {"q_lo", v.q_lo},
            {"q_hi", v.q_hi},             {"clamped", to_string(v.clamped)}, {"ratio_undefined", v.ratio_undefined}};
}

nlohmann::json to_json(const LabeledSample& s) {
    nlohmann::json j;
    j["fund_code"] = s.fund_code;
    j["date"] = s.date.iso();
    j["theta"] = s.theta;
    j["eps"] = {{"eps1", s.eps.eps1}, {"eps5", s.eps.eps5}, {"eps20", s.eps.eps20}};
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const auto k = std::to_string(horizons[h]);
        j["r_fwd_" + k] = s.r_fwd[h] ? nlohmann::json(*s.r_fwd[h]) : nlohmann::json(nullptr);
        j["label_" + k] = s.labels[h] ? nlohmann::json(to_string(*s.labels[h])) : nlohmann::json(nullptr);
    }
    return j;
}

LabeledSample labeled_sample_from_json(const nlohmann::json& j) {
    LabeledSample s;
    s.fund_code = j.at("fund_code").get<std::string>();
    s.date = Date::parse(j.at("date").get<std::string>());
    s.theta = j.at("theta").get<double>();
    const auto& e = j.at("eps");
    s.eps = {e.at("eps1").get<double>(), e.at("eps5").get<double>(), e.at("eps20").get<double>()};
    for (std::size_t h = 0; h < horizons.size(); ++h) {
        const auto k = std::to_string(horizons[h]);
        if (const auto& r = j.at("r_fwd_" + k); !r.is_null()) s.r_fwd[h] = r.get<double>();
        if (const auto& l = j.at("label_" + k); !l.is_null()) s.labels[h] = parse_direction(l.get<std::string>());
    }
    return s;
}

}  // namespace reits::threshold
