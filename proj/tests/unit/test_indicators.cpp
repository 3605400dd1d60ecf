#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reits/indicators.hpp"
#include "synthetic.hpp"

using namespace reits;
using namespace reits::indicators;

namespace {

std::vector<data::DailyBar> geometric(std::size_t n, double step, double start = 10.0) {
    std::vector<double> c{start};
    while (c.size() < n) c.push_back(c.back() * (1.0 + step));
    return testing::bars_from_closes(c);
}

void check_against_oracle(std::span<const data::DailyBar> bars) {
    std::vector<double> closes, volumes;
    for (const auto& b : bars) {
        closes.push_back(b.close);
        volumes.push_back(b.volume);
    }
    const auto ref = oracle::indicator_fields(closes, volumes);
    const auto got = to_json(compute_snapshot(bars, bars.back().date));
    for (const auto& [key, want] : ref) {
        double have = 0;
        if (const auto dot = key.find('.'); dot != std::string::npos) {
            have = got.at(key.substr(0, dot)).at(std::stoul(key.substr(dot + 1))).get<double>();
        } else {
            have = got.at(key).get<double>();
        }
        INFO(key);
        CHECK(std::abs(have - want) <= 1e-9 * std::max(1.0, std::abs(want)));
    }
}

}  // namespace

TEST_SUITE("indicators") {

TEST_CASE("constant series is neutral everywhere") {
    const auto bars = testing::bars_from_closes(std::vector<double>(80, 5.0));
    const auto s = compute_snapshot(bars, bars.back().date);
    CHECK(s.ma5 == 5.0);
    CHECK(s.ma60 == 5.0);
    CHECK(s.ma_alignment == MaAlignment::chaotic);
    CHECK(s.macd_dif == 0.0);
    CHECK(s.macd_dea == 0.0);
    CHECK(s.macd_hist == 0.0);
    CHECK(s.chg_1d == 0.0);
    CHECK(s.chg_60d == 0.0);
    CHECK(s.pv_label == PriceVolume::flat);
    CHECK(s.consec_streak == 0);
    CHECK(s.rsi6 == 50.0);
}

TEST_CASE("strictly rising series") {
    const auto bars = geometric(61, 0.005);
    const auto s = compute_snapshot(bars, bars.back().date);
    CHECK(s.ma_alignment == MaAlignment::bullish);
    CHECK(s.rsi6 == 100.0);
    CHECK(s.rsi24 == 100.0);
    CHECK(s.consec_streak == 60);
    CHECK(s.up_days_20 == 20);
    // window highs equal the close, so the upper band is the only level above it
    CHECK(s.boll_upper > s.close);
    CHECK(s.resistance == s.boll_upper);
    CHECK(s.support < s.close);
}

TEST_CASE("strictly falling series") {
    const auto bars = geometric(61, -0.005);
    const auto s = compute_snapshot(bars, bars.back().date);
    CHECK(s.ma_alignment == MaAlignment::bearish);
    CHECK(s.rsi6 == 0.0);
    CHECK(s.rsi6_state == RsiState::oversold);
    CHECK(s.consec_streak == -60);
    CHECK(s.support == s.boll_lower);
}

TEST_CASE("a breakout with nothing above falls back to the 60-bar high") {
    std::vector<double> c(70, 10.0);
    c.back() = 12.0;
    const auto bars = testing::bars_from_closes(c);
    const auto s = compute_snapshot(bars, bars.back().date);
    CHECK(s.boll_upper < 12.0);
    CHECK(s.resistance == 12.0);
    CHECK(s.support == doctest::Approx(s.boll_upper));
}

TEST_CASE("short history names the missing indicators") {
    const auto bars = testing::random_walk_bars(30, 1);
    try {
        compute_snapshot(bars, bars.back().date);
        FAIL("expected insufficient history");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("ma60") != std::string::npos);
        CHECK(msg.find("chg_60d") != std::string::npos);
        CHECK(msg.find("ma20") == std::string::npos);
    }
}

TEST_CASE("fixture matches the reference implementation") {
    const auto s = data::load_series<data::DailyBar>(std::string(REITS_FIXTURE_DIR) + "/ind_case1.csv");
    check_against_oracle(s.all());
    // also on every prefix long enough
    for (std::size_t n = 61; n <= s.size(); n += 13) check_against_oracle(s.all().first(n));
}

TEST_CASE("500 random-walk bars match the reference implementation") {
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const auto bars = testing::random_walk_bars(500, seed);
        check_against_oracle(bars);
    }
}

TEST_CASE("as_of clips the window") {
    const auto bars = testing::random_walk_bars(200, 5);
    const auto a = compute_snapshot(bars, bars[150].date);
    const auto b = compute_snapshot(std::span(bars).first(151), bars[150].date);
    CHECK(to_json(a) == to_json(b));
}

TEST_CASE("volume ratio") {
    auto with_volumes = [](std::vector<double> v) {
        auto bars = testing::bars_from_closes(std::vector<double>(v.size(), 1.0));
        for (std::size_t i = 0; i < v.size(); ++i) bars[i].volume = v[i];
        return bars;
    };
    CHECK(volume_ratio(with_volumes({100, 100, 100, 100, 100, 200})) == 2.0);
    CHECK(volume_ratio(with_volumes({80, 90, 100, 110, 120, 100})) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(volume_ratio(with_volumes({0, 0, 0, 0, 0, 50})), DataError);
}

TEST_CASE("support and resistance candidates") {
    std::vector<double> closes(60, 10.0);
    closes[10] = 8.0;   // 60-bar low
    closes[20] = 12.0;  // 60-bar high
    const double mas[] = {9.5, 9.52, 10.0, 11.0};
    // 9.5 and 9.52 are 0.2% of close apart: they cluster
    const auto [sup, res] = support_resistance(closes, mas, {7.0, 13.0}, 10.0);
    CHECK(sup == doctest::Approx((9.5 + 9.52) / 2));
    CHECK(res == 11.0);

    const double far[] = {5.0, 5.0, 5.0, 5.0};
    const auto [s2, r2] = support_resistance(std::vector<double>(60, 10.0), far, {5.0, 5.0}, 10.0);
    CHECK(s2 == 5.0);
    CHECK(r2 == 10.0);  // nothing above: window-60 high
}

TEST_CASE("properties over random series") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 50; ++trial) {
        const auto bars = testing::random_walk_bars(61 + rng() % 200, rng(), 0.002 + 0.02 * (trial % 5) / 4.0);
        const auto s = compute_snapshot(bars, bars.back().date);
        for (double r : {s.rsi6, s.rsi12, s.rsi24}) {
            CHECK(r >= 0.0);
            CHECK(r <= 100.0);
        }
        CHECK(s.boll_lower <= s.boll_mid);
        CHECK(s.boll_mid <= s.boll_upper);
        CHECK(s.support <= s.close);
        CHECK(s.close <= s.resistance);
        CHECK(s.up_days_20 + s.down_days_20 <= 20);

        // scale invariance
        auto scaled = bars;
        for (auto& b : scaled) b.close *= 3.5;
        const auto t = compute_snapshot(scaled, scaled.back().date);
        CHECK(t.chg_20d == doctest::Approx(s.chg_20d).epsilon(1e-9));
        CHECK(t.rsi12 == doctest::Approx(s.rsi12).epsilon(1e-9));
        CHECK(t.ma20_dev_pct == doctest::Approx(s.ma20_dev_pct).epsilon(1e-9));
        CHECK(t.ma_alignment == s.ma_alignment);
        CHECK(t.boll_position == s.boll_position);
        CHECK(t.macd_cross == s.macd_cross);
        CHECK(t.ma60 == doctest::Approx(3.5 * s.ma60).epsilon(1e-12));
        CHECK(t.support == doctest::Approx(3.5 * s.support).epsilon(1e-12));
    }
}

TEST_CASE("golden cross fires exactly on the crossing bar") {
    std::vector<double> c(70, 10.0);
    for (std::size_t i = 0; i < 40; ++i) c[i] = 12.0 - 0.05 * i;
    for (std::size_t i = 40; i < 70; ++i) c[i] = c[39] + 0.08 * (i - 39);
    const auto bars = testing::bars_from_closes(c);
    int golden = 0;
    for (std::size_t n = 62; n <= bars.size(); ++n) {
        const auto s = compute_snapshot(std::span(bars).first(n), bars[n - 1].date);
        const auto p = compute_snapshot(std::span(bars).first(n - 1), bars[n - 2].date);
        const bool crossed = p.macd_dif <= p.macd_dea && s.macd_dif > s.macd_dea;
        CHECK((s.macd_cross == MacdCross::golden) == crossed);
        golden += s.macd_cross == MacdCross::golden;
    }
    CHECK(golden <= 1);
}

}
