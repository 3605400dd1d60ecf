#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reits/threshold.hpp"
#include "synthetic.hpp"

using namespace reits;
using namespace reits::threshold;

namespace {

std::vector<double> gaussian(std::size_t n, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sigma);
    std::vector<double> r(n);
    for (auto& x : r) x = d(rng);
    return r;
}

std::vector<data::DailyBar> bars_from_returns(const std::vector<double>& r, double start = 10.0) {
    std::vector<double> c{start};
    for (double x : r) c.push_back(c.back() * (1.0 + x));
    return testing::bars_from_closes(c);
}

}  // namespace

TEST_SUITE("threshold") {

TEST_CASE("parameter validation") {
    ThresholdParams p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.history_needed() == 120);
    p.q_lo_pct = 0.8;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.tau_high = 0.9;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.n_v = 1;
    CHECK_THROWS_AS(p.validate(), ConfigError);
    p = {};
    p.m0 = 0;
    CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("insufficient history") {
    CHECK_THROWS_AS(compute_theta({}, gaussian(119, 0.005, 1)), DataError);
}

TEST_CASE("matches the straight-line reference on a 150-day fixture") {
    const ThresholdParams p;
    const auto r = gaussian(150, 0.006, 42);
    CHECK(std::abs(compute_theta(p, r).theta - oracle::theta(p, r)) <= 1e-12);
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        const auto x = gaussian(120 + seed % 60, 0.002 + 0.0001 * static_cast<double>(seed), seed);
        CHECK(std::abs(compute_theta(p, x).theta - oracle::theta(p, x)) <= 1e-12);
    }
}

TEST_CASE("floor clamp when sigma times multiplier is small") {
    // half of |r| large, the sigma window itself calm
    std::vector<double> r;
    for (int i = 0; i < 90; ++i) r.push_back(i % 2 ? 0.01 : -0.01);
    for (int i = 0; i < 30; ++i) r.push_back(i % 2 ? 0.0005 : -0.0005);
    const auto v = compute_theta({}, r);
    CHECK(v.clamped == Clamp::floor);
    CHECK(v.theta == v.q_lo);
    CHECK(v.sigma * v.multiplier < v.q_lo);
}

TEST_CASE("ceiling clamp") {
    ThresholdParams p;
    p.m0 = 5.0;
    const auto v = compute_theta(p, gaussian(200, 0.005, 3));
    CHECK(v.clamped == Clamp::ceiling);
    CHECK(v.theta == v.q_hi);
}

TEST_CASE("volatility regime switches the multiplier") {
    const ThresholdParams p;
    auto r = gaussian(120, 0.003, 8);
    for (std::size_t i = 110; i < 120; ++i) r[i] *= 4.0;  // short-window burst
    auto v = compute_theta(p, r);
    REQUIRE(v.sigma_short / v.sigma_long > p.tau_high);
    CHECK(v.multiplier == p.m0 * p.a_high);

    r = gaussian(120, 0.003, 9);
    for (std::size_t i = 110; i < 120; ++i) r[i] *= 0.2;
    v = compute_theta(p, r);
    REQUIRE(v.sigma_short / v.sigma_long < p.tau_low);
    CHECK(v.multiplier == p.m0 * p.a_low);
}

TEST_CASE("zero long-window volatility falls back to m0") {
    std::vector<double> r(120, 0.0);
    const auto v = compute_theta({}, r);
    CHECK(v.ratio_undefined);
    CHECK(v.multiplier == ThresholdParams{}.m0);
    CHECK(v.theta == 0.0);
}

TEST_CASE("horizon thresholds") {
    const auto h = horizon_thresholds(0.004);
    CHECK(h.eps1 == 0.004);
    CHECK(h.eps5 == doctest::Approx(0.0089443).epsilon(1e-5));
    CHECK(std::abs(h.eps5 - 0.0089443) < 1e-7);
    CHECK(std::abs(h.eps20 - 0.0178885) < 1e-7);
    CHECK(h.eps20 == 2.0 * h.eps5);
    CHECK_THROWS_AS(horizon_thresholds(0.0), DataError);
    CHECK_THROWS_AS(horizon_thresholds(-1e-3), DataError);
}

TEST_CASE("classification boundaries") {
    CHECK(classify(0.010, 0.0089) == DirectionLabel::up);
    CHECK(classify(-0.0089, 0.0089) == DirectionLabel::down);
    CHECK(classify(0.0089, 0.0089) == DirectionLabel::up);
    CHECK(classify(0.0, 0.0089) == DirectionLabel::side);
    CHECK(classify(0.0, 0.0) == DirectionLabel::side);
}

TEST_CASE("annotate re-derives by brute force") {
    const ThresholdParams p;
    const auto bars = testing::random_walk_bars(200, 17);
    const auto samples = annotate(bars, p, "X");
    REQUIRE(samples.size() == 200 - p.history_needed());
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        const std::size_t t = p.history_needed() + i;
        CHECK(s.date == bars[t].date);
        for (std::size_t h = 0; h < 3; ++h) {
            const auto k = static_cast<std::size_t>(horizons[h]);
            if (t + k >= bars.size()) {
                CHECK_FALSE(s.labels[h].has_value());
                continue;
            }
            const double r = (bars[t + k].close - bars[t].close) / bars[t].close;
            const double eps = std::sqrt(static_cast<double>(k)) * s.theta;
            const auto want = r >= eps ? DirectionLabel::up : r <= -eps ? DirectionLabel::down : DirectionLabel::side;
            REQUIRE(s.labels[h].has_value());
            CHECK(*s.labels[h] == want);
        }
    }
    // the last five samples lack 5- and 20-day labels
    for (std::size_t i = samples.size() - 5; i < samples.size(); ++i) {
        CHECK_FALSE(samples[i].labels[1].has_value());
        CHECK_FALSE(samples[i].labels[2].has_value());
    }
    CHECK(samples[samples.size() - 5].labels[0].has_value());
}

TEST_CASE("flat prices label everything side") {
    const auto bars = testing::bars_from_closes(std::vector<double>(160, 4.0));
    for (const auto& s : annotate(bars, {}))
        for (const auto& l : s.labels)
            if (l) CHECK(*l == DirectionLabel::side);
}

TEST_CASE("labeled sample json round trip") {
    const auto samples = annotate(testing::random_walk_bars(150, 2), {}, "508001.SH");
    for (const auto& s : samples) {
        const auto back = labeled_sample_from_json(to_json(s));
        CHECK(back.fund_code == s.fund_code);
        CHECK(back.date == s.date);
        CHECK(back.theta == s.theta);
        CHECK(back.labels == s.labels);
        CHECK(back.r_fwd == s.r_fwd);
    }
}

TEST_CASE("sideways fraction") {
    const ThresholdParams p;
    CHECK(sideways_fraction(testing::bars_from_closes(std::vector<double>(200, 3.0)), p) == 1.0);
    CHECK_THROWS_AS(sideways_fraction(testing::random_walk_bars(150, 1), p), DataError);

    // Alternating signs with slowly growing magnitude around 3 sigma: every |r_t| is the
    // largest in its window, so it sits above the clamped threshold.
    std::vector<double> r;
    for (int i = 0; i < 500; ++i) r.push_back((i % 2 ? 1.0 : -1.0) * 0.015 * (1.0 + 0.001 * i));
    CHECK(sideways_fraction(bars_from_returns(r), p) <= 0.01);

    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        const double f = sideways_fraction(bars_from_returns(gaussian(500, 0.005, seed)), p);
        CHECK(f >= 0.25);
        CHECK(f <= 0.45);
    }
}

TEST_CASE("properties over fuzzed series") {
    std::mt19937_64 rng(2024);
    const ThresholdParams p;
    for (int trial = 0; trial < 300; ++trial) {
        const double sigma = 0.0005 + 0.03 * std::uniform_real_distribution<double>(0, 1)(rng);
        const auto r = gaussian(120 + rng() % 100, sigma, rng());
        const auto v = compute_theta(p, r);
        CHECK(v.q_lo <= v.theta);
        CHECK(v.theta <= v.q_hi);

        // homogeneity of degree one
        const double c = 0.5 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        std::vector<double> scaled(r);
        for (auto& x : scaled) x *= c;
        CHECK(compute_theta(p, scaled).theta == doctest::Approx(c * v.theta).epsilon(1e-12));

        // inflating every magnitude in the sigma window never lowers sigma
        std::vector<double> louder(r);
        for (std::size_t i = louder.size() - static_cast<std::size_t>(p.n_v); i < louder.size(); ++i) louder[i] *= 1.25;
        CHECK(compute_theta(p, louder).sigma >= v.sigma);

        const auto h = horizon_thresholds(v.theta);
        CHECK(h.eps20 == 2.0 * h.eps5);
        for (double x : {r.back(), 0.7 * h.eps5, h.eps5, -h.eps20, 0.0}) {
            const auto a = classify(x, h.eps5);
            const auto b = classify(-x, h.eps5);
            if (a == DirectionLabel::side) CHECK(b == DirectionLabel::side);
            if (a == DirectionLabel::up) CHECK(b == DirectionLabel::down);
            if (a == DirectionLabel::down) CHECK(b == DirectionLabel::up);
        }
    }
}

TEST_CASE("theta history aligns to bar dates") {
    const auto bars = testing::random_walk_bars(130, 4);
    const auto h = theta_history(bars, {});
    REQUIRE(h.size() == 10);
    CHECK(h.front().date == bars[120].date);
    CHECK(h.back().date == bars.back().date);
}

}
