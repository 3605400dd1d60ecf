#include "reits/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "reits/error.hpp"

namespace reits::stats {

double mean(std::span<const double> xs) {
    if (xs.empty()) throw InvariantError("mean of empty range");
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double sample_std(std::span<const double> xs) {
    if (xs.size() < 2) throw InvariantError("sample_std needs at least two values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

double quantile_linear(std::span<const double> xs, double p) {
    if (xs.empty()) throw InvariantError("quantile of empty range");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    const double h = static_cast<double>(sorted.size() - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

double percentile_rank(std::span<const double> window, double x) {
    if (window.empty()) throw InvariantError("percentile rank of empty window");
    if (window.size() == 1) return 1.0;
    const auto at_or_below = std::count_if(window.begin(), window.end(), [x](double w) { return w <= x; });
    const double rank = static_cast<double>(at_or_below - 1) / static_cast<double>(window.size() - 1);
    return std::clamp(rank, 0.0, 1.0);
}

std::optional<double> pearson(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) throw InvariantError("pearson needs equal-length ranges of size >= 2");
    const double ma = mean(a);
    const double mb = mean(b);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

std::vector<double> ema(std::span<const double> xs, int period) {
    std::vector<double> out;
    if (xs.empty()) return out;
    const double alpha = 2.0 / (period + 1.0);
    out.reserve(xs.size());
    out.push_back(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) out.push_back(alpha * xs[i] + (1.0 - alpha) * out.back());
    return out;
}

double wilder_rsi(std::span<const double> closes, int period) {
    const auto n = static_cast<std::size_t>(period);
    if (closes.size() < n + 1) throw InvariantError("wilder_rsi needs period + 1 closes");
    double gain = 0.0, loss = 0.0;
    for (std::size_t i = 1; i <= n; ++i) {
        const double d = closes[i] - closes[i - 1];
        (d > 0 ? gain : loss) += std::abs(d);
    }
    gain /= period;
    loss /= period;
    for (std::size_t i = n + 1; i < closes.size(); ++i) {
        const double d = closes[i] - closes[i - 1];
        gain = (gain * (period - 1) + (d > 0 ? d : 0.0)) / period;
        loss = (loss * (period - 1) + (d < 0 ? -d : 0.0)) / period;
    }
    if (loss == 0.0) return gain == 0.0 ? 50.0 : 100.0;
    return 100.0 - 100.0 / (1.0 + gain / loss);
}

std::vector<double> simple_returns(std::span<const double> closes) {
    std::vector<double> r;
    if (closes.size() < 2) return r;
    r.reserve(closes.size() - 1);
    for (std::size_t i = 1; i < closes.size(); ++i) r.push_back(closes[i] / closes[i - 1] - 1.0);
    return r;
}

}  // namespace reits::stats
