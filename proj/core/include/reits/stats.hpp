#pragma once

#include <optional>
#include <span>
#include <vector>

// Small numeric kernels shared by the indicator, threshold and macro modules.
namespace reits::stats {

double mean(std::span<const double> xs);

/// Sample standard deviation (n - 1 denominator). Requires xs.size() >= 2.
double sample_std(std::span<const double> xs);

/// Empirical quantile with linear interpolation between order statistics:
/// position h = (n - 1) * p, result = x[floor(h)] + (h - floor(h)) * (x[floor(h)+1] - x[floor(h)]).
double quantile_linear(std::span<const double> xs, double p);

/// Rank of `x` within `window` mapped to [0, 1]: (#{w <= x} - 1) / (n - 1).
/// A window maximum maps to 1 and a unique minimum to 0.
double percentile_rank(std::span<const double> window, double x);

/// Pearson correlation; nullopt when either side has zero variance.
std::optional<double> pearson(std::span<const double> a, std::span<const double> b);

/// Exponential moving average seeded with the first value, alpha = 2 / (period + 1).
std::vector<double> ema(std::span<const double> xs, int period);

/// Wilder RSI over the whole series of closes. Seeds with the simple mean of the first
/// `period` changes then smooths recursively. All-gain windows give 100, all-loss 0,
/// and a window with no movement 50.
double wilder_rsi(std::span<const double> closes, int period);

/// Simple returns r_t = c_t / c_{t-1} - 1, one shorter than the input.
std::vector<double> simple_returns(std::span<const double> closes);

}  // namespace reits::stats
