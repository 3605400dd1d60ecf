#include <random>

#include <benchmark/benchmark.h>

#include "reits/backtest.hpp"
#include "reits/indicators.hpp"
#include "reits/threshold.hpp"

using namespace reits;

namespace {

std::vector<data::DailyBar> walk(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 0.006);
    std::vector<data::DailyBar> out;
    Date d(2020, 1, 6);
    double close = 4.0;
    while (out.size() < n) {
        const auto wd = std::chrono::weekday(d.sys()).c_encoding();
        if (wd != 0 && wd != 6) {
            close *= 1.0 + z(rng);
            out.push_back({d, close, 1e6 * (1.0 + 0.2 * z(rng)), 0.01});
        }
        d = d.plus_days(1);
    }
    return out;
}

class Alternate : public backtest::Strategy {
public:
    backtest::Decision decide(const std::string&, Date, const backtest::Account&, bool) override {
        return {++n_ % 5 == 0 ? backtest::ActionSignal::reduce_20 : backtest::ActionSignal::increase_20, {}};
    }

private:
    int n_ = 0;
};

void BM_IndicatorSnapshot(benchmark::State& state) {
    const auto bars = walk(static_cast<std::size_t>(state.range(0)), 1);
    for (auto _ : state) benchmark::DoNotOptimize(indicators::compute_snapshot(bars, bars.back().date));
}
BENCHMARK(BM_IndicatorSnapshot)->Arg(61)->Arg(250)->Arg(1000);

void BM_Theta(benchmark::State& state) {
    const auto bars = walk(400, 2);
    std::vector<double> r;
    for (std::size_t i = 1; i < bars.size(); ++i) r.push_back(bars[i].close / bars[i - 1].close - 1.0);
    const threshold::ThresholdParams p;
    for (auto _ : state) benchmark::DoNotOptimize(threshold::compute_theta(p, r));
}
BENCHMARK(BM_Theta);

void BM_Annotate(benchmark::State& state) {
    const auto bars = walk(static_cast<std::size_t>(state.range(0)), 3);
    const threshold::ThresholdParams p;
    for (auto _ : state) benchmark::DoNotOptimize(threshold::annotate(bars, p));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Annotate)->Arg(500)->Arg(2000);

void BM_SingleFundBacktest(benchmark::State& state) {
    const auto bars = walk(250, 4);
    const backtest::RiskConfig cfg;
    for (auto _ : state) {
        Alternate s;
        benchmark::DoNotOptimize(backtest::run_backtest("X", bars, {bars.front().date, bars.back().date}, s, cfg));
    }
}
BENCHMARK(BM_SingleFundBacktest);

}  // namespace
BENCHMARK_MAIN();
