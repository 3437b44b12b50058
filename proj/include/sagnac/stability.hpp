#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sagnac/series.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Reversal combinations
// ---------------------------------------------------------------------------

struct AreaCombination {
    std::vector<double> rotation_like; // (forward - reversed) / 2, keeps area-odd content
    std::vector<double> bias_like;     // (forward + reversed) / 2, keeps area-even content
};

/// Split time-aligned forward/reversed phase series into rotation-like and
/// bias-like parts. Throws data_error on length mismatch.
AreaCombination combine_area(std::span<const double> forward,
                             std::span<const double> reversed);

/// Half-difference of the two beams' rotation-like series: beam-even content
/// (accelerations) cancels, rotation content passes at unit gain.
std::vector<double> combine_beams(std::span<const double> beam1_rotation,
                                  std::span<const double> beam2_rotation);

// ---------------------------------------------------------------------------
// Allan deviation
// ---------------------------------------------------------------------------

struct AllanResult {
    std::vector<double> taus_s;
    std::vector<double> deviations;           // same unit as the input series
    std::vector<std::size_t> cluster_counts;  // floor(N / m) per reported tau
    std::vector<double> confidence_fractions; // fractional 1-sigma, 1/sqrt(clusters)

    struct Skipped {
        double tau_s;
        std::string reason;
    };
    std::vector<Skipped> skipped; // taus omitted instead of reported as NaN
};

/// Two-sample (Allan) deviation over the requested tau grid. Each tau must be
/// a positive integer multiple of sample_period_s (config_error otherwise).
/// Taus too large for the series are recorded in `skipped`, not silently
/// dropped. Overlapping mode uses every start index; cluster_counts and the
/// 1/sqrt(K) confidence rule use the non-overlapping cluster count either way.
AllanResult allan_deviation(std::span<const double> series, double sample_period_s,
                            std::span<const double> taus_s, bool overlapping);

// ---------------------------------------------------------------------------
// Bias stability
// ---------------------------------------------------------------------------

enum class BiasStabilityMethod {
    minimum,            // argmin of the Allan curve
    sqrt_extrapolation, // fit a*tau^(-1/2) over a window, evaluate at target tau
};

struct BiasStabilityOptions {
    BiasStabilityMethod method = BiasStabilityMethod::minimum;
    // Used by sqrt_extrapolation only:
    double fit_tau_lo_s = 0.0;
    double fit_tau_hi_s = 0.0;
    double target_tau_s = 0.0;
};

struct BiasStability {
    double value = 0.0; // same unit as the Allan deviations
    double tau_s = 0.0; // tau at the minimum, or the extrapolation target
};

/// Bias stability from an Allan curve. The extrapolation fits the single
/// amplitude of a tau^(-1/2) law by least squares in log-log space over
/// [fit_tau_lo_s, fit_tau_hi_s]; an empty window is a config_error.
BiasStability bias_stability(const AllanResult& result, const BiasStabilityOptions& options);

// ---------------------------------------------------------------------------
// Spectral estimation
// ---------------------------------------------------------------------------

struct PsdResult {
    std::vector<double> frequencies_hz;
    std::vector<double> psd; // one-sided, (input unit)^2 / Hz
    std::size_t segment_length = 0;
    std::size_t segment_count = 0;
    double overlap_fraction = 0.0;
    std::string window = "hann";
};

/// Welch-averaged one-sided periodogram, Hann window, 50% overlap. The
/// integral of psd over frequency approximates the series variance.
/// segment_length longer than the series is a config_error.
PsdResult psd_welch(std::span<const double> series, double sample_period_s,
                    std::size_t segment_length);

/// Angle random walk from the white floor of a rotation-rate PSD
/// ((rad/s)^2/Hz): sqrt(median over the band / 2), converted to deg/sqrt(hr).
/// The median makes the estimate robust to narrowband spurs.
double arw_from_psd(const PsdResult& rate_psd, double band_lo_hz, double band_hi_hz);

// ---------------------------------------------------------------------------
// Correlation ranking and drift regression
// ---------------------------------------------------------------------------

struct ChannelCorrelation {
    std::string name;
    double correlation = 0.0; // Pearson r against the target
    bool zero_variance = false;
};

/// Channels ordered by |Pearson correlation| with the target, descending,
/// ties broken by name. Zero-variance channels report r = 0 and are flagged.
std::vector<ChannelCorrelation> rank_channels(std::span<const double> target,
                                              std::span<const NamedSeries> channels);

struct RegressionModel {
    std::vector<std::string> channel_names;
    std::vector<double> coefficients;           // rad per channel unit
    std::vector<double> coefficient_std_errors; // 1-sigma, from OLS covariance
    double intercept = 0.0;
    double intercept_std_error = 0.0;
    double residual_rms = 0.0;
};

struct RegressionOutput {
    RegressionModel model;
    std::vector<double> residual; // target - prediction
};

/// Ordinary least squares with intercept, no regularization. A rank-deficient
/// design is a data_error naming the collinear channels (a constant channel
/// is collinear with the intercept).
RegressionOutput detrend_regression(std::span<const double> target,
                                    std::span<const NamedSeries> channels);

// ---------------------------------------------------------------------------
// Unit conversion
// ---------------------------------------------------------------------------

/// phase / scale_factor, converted to deg/hr. scale_factor must be positive.
double phase_to_rate_deg_per_hr(double phase_rad, double scale_factor_rad_per_rad_per_s);

} // namespace sagnac
