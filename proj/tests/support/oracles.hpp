#pragma once

// Test-only reference implementations, written directly from the defining
// formulas and kept independent of the library code paths they check.

#include <cstddef>
#include <span>
#include <vector>

namespace sagnac::testing {

/// Non-overlapping two-sample (Allan) variance, straight from the definition:
/// split the series into K = floor(N/m) clusters of m samples, average each,
/// and take half the mean squared successive difference of the averages.
inline double brute_force_allan_variance(std::span<const double> series, std::size_t m) {
    const std::size_t clusters = series.size() / m;
    std::vector<double> averages;
    averages.reserve(clusters);
    for (std::size_t k = 0; k < clusters; ++k) {
        double sum = 0.0;
        for (std::size_t i = k * m; i < (k + 1) * m; ++i) sum += series[i];
        averages.push_back(sum / static_cast<double>(m));
    }
    double accum = 0.0;
    for (std::size_t k = 0; k + 1 < clusters; ++k) {
        const double diff = averages[k + 1] - averages[k];
        accum += diff * diff;
    }
    return accum / (2.0 * static_cast<double>(clusters - 1));
}

/// Least-squares slope of log(y) vs log(x).
inline double loglog_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = x.size();
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double lx = std::log(x[i]);
        const double ly = std::log(y[i]);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    const double denom = static_cast<double>(n) * sxx - sx * sx;
    return (static_cast<double>(n) * sxy - sx * sy) / denom;
}

} // namespace sagnac::testing
