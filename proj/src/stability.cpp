#include "sagnac/stability.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <Eigen/Dense>
#include <fftw3.h>

#include "sagnac/errors.hpp"
#include "sagnac/units.hpp"

namespace sagnac {

namespace {

void require_aligned(std::size_t a, std::size_t b, const char* what) {
    if (a != b) {
        std::ostringstream msg;
        msg << what << ": length mismatch (" << a << " vs " << b << ")";
        throw data_error(msg.str());
    }
}

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// FFTW's planner is not reentrant; serialize plan creation/destruction.
std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

} // namespace

// ---------------------------------------------------------------------------
// Reversal combinations
// ---------------------------------------------------------------------------

AreaCombination combine_area(std::span<const double> forward,
                             std::span<const double> reversed) {
    require_aligned(forward.size(), reversed.size(), "combine_area");
    AreaCombination out;
    out.rotation_like.resize(forward.size());
    out.bias_like.resize(forward.size());
    for (std::size_t i = 0; i < forward.size(); ++i) {
        out.rotation_like[i] = 0.5 * (forward[i] - reversed[i]);
        out.bias_like[i] = 0.5 * (forward[i] + reversed[i]);
    }
    return out;
}

std::vector<double> combine_beams(std::span<const double> beam1_rotation,
                                  std::span<const double> beam2_rotation) {
    require_aligned(beam1_rotation.size(), beam2_rotation.size(), "combine_beams");
    std::vector<double> out(beam1_rotation.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = 0.5 * (beam1_rotation[i] - beam2_rotation[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Allan deviation
// ---------------------------------------------------------------------------

AllanResult allan_deviation(std::span<const double> series, double sample_period_s,
                            std::span<const double> taus_s, bool overlapping) {
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s)) {
        throw config_error("allan_deviation: sample_period_s must be positive");
    }
    const std::size_t n = series.size();
    if (n < 2) {
        throw config_error("allan_deviation: series must have at least 2 samples");
    }

    AllanResult result;

    // Prefix sums for the overlapping estimator. The series is offset by its
    // first sample (a mathematical no-op for two-sample variances) so large
    // common offsets do not eat precision in the running sums.
    std::vector<double> prefix;
    if (overlapping) {
        prefix.assign(n + 1, 0.0);
        const double offset = series[0];
        for (std::size_t i = 0; i < n; ++i) {
            prefix[i + 1] = prefix[i] + (series[i] - offset);
        }
    }

    for (double tau : taus_s) {
        if (!(tau > 0.0) || !std::isfinite(tau)) {
            throw config_error("allan_deviation: taus must be positive and finite");
        }
        const double ratio = tau / sample_period_s;
        const auto m = static_cast<std::size_t>(std::llround(ratio));
        if (m < 1 || std::abs(static_cast<double>(m) - ratio) > 1e-9 * ratio) {
            std::ostringstream msg;
            msg << "allan_deviation: tau " << tau
                << " s is not an integer multiple of the sample period " << sample_period_s
                << " s";
            throw config_error(msg.str());
        }

        const std::size_t clusters = n / m;
        if (clusters < 2) {
            result.skipped.push_back({tau, "series too short: fewer than 2 clusters"});
            continue;
        }

        double avar = 0.0;
        if (!overlapping) {
            // Direct per-cluster means, left to right; this exact evaluation
            // order is pinned by the brute-force oracle in the tests.
            std::vector<double> means(clusters);
            for (std::size_t k = 0; k < clusters; ++k) {
                double s = 0.0;
                for (std::size_t i = k * m; i < (k + 1) * m; ++i) s += series[i];
                means[k] = s / static_cast<double>(m);
            }
            double acc = 0.0;
            for (std::size_t k = 0; k + 1 < clusters; ++k) {
                const double d = means[k + 1] - means[k];
                acc += d * d;
            }
            avar = acc / (2.0 * static_cast<double>(clusters - 1));
        } else {
            const std::size_t terms = n - 2 * m + 1;
            double acc = 0.0;
            for (std::size_t j = 0; j < terms; ++j) {
                const double first = prefix[j + m] - prefix[j];
                const double second = prefix[j + 2 * m] - prefix[j + m];
                const double d = (second - first) / static_cast<double>(m);
                acc += d * d;
            }
            avar = acc / (2.0 * static_cast<double>(terms));
        }

        result.taus_s.push_back(tau);
        result.deviations.push_back(std::sqrt(avar));
        result.cluster_counts.push_back(clusters);
        result.confidence_fractions.push_back(1.0 / std::sqrt(static_cast<double>(clusters)));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Bias stability
// ---------------------------------------------------------------------------

BiasStability bias_stability(const AllanResult& result, const BiasStabilityOptions& options) {
    if (result.taus_s.empty()) {
        throw config_error("bias_stability: empty Allan result");
    }

    if (options.method == BiasStabilityMethod::minimum) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < result.deviations.size(); ++i) {
            if (result.deviations[i] < result.deviations[best]) best = i;
        }
        return {result.deviations[best], result.taus_s[best]};
    }

    if (!(options.target_tau_s > 0.0)) {
        throw config_error("bias_stability: extrapolation target tau must be positive");
    }
    // One-parameter fit of sigma(tau) = a * tau^(-1/2): least squares in
    // log-log space reduces to the mean of log(sigma) + log(tau)/2.
    double sum = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < result.taus_s.size(); ++i) {
        const double tau = result.taus_s[i];
        if (tau < options.fit_tau_lo_s || tau > options.fit_tau_hi_s) continue;
        const double dev = result.deviations[i];
        if (!(dev > 0.0)) continue; // log undefined; a zero curve has no noise to fit
        sum += std::log(dev) + 0.5 * std::log(tau);
        ++used;
    }
    if (used == 0) {
        throw config_error("bias_stability: extrapolation fit window contains no usable points");
    }
    const double log_a = sum / static_cast<double>(used);
    const double value = std::exp(log_a - 0.5 * std::log(options.target_tau_s));
    return {value, options.target_tau_s};
}

// ---------------------------------------------------------------------------
// Spectral estimation
// ---------------------------------------------------------------------------

PsdResult psd_welch(std::span<const double> series, double sample_period_s,
                    std::size_t segment_length) {
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s)) {
        throw config_error("psd_welch: sample_period_s must be positive");
    }
    if (segment_length < 2) {
        throw config_error("psd_welch: segment_length must be at least 2");
    }
    if (segment_length > series.size()) {
        throw config_error("psd_welch: segment_length exceeds the series length");
    }

    const std::size_t len = segment_length;
    const std::size_t step = std::max<std::size_t>(1, len / 2); // 50% overlap
    const std::size_t segments = 1 + (series.size() - len) / step;
    const double fs = 1.0 / sample_period_s;

    std::vector<double> window(len);
    double window_power = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
        window[i] = 0.5 * (1.0 - std::cos(2.0 * kPi * static_cast<double>(i) /
                                          static_cast<double>(len - 1)));
        window_power += window[i] * window[i];
    }

    const std::size_t bins = len / 2 + 1;
    std::vector<double> accum(bins, 0.0);

    std::vector<double> in(len);
    std::vector<fftw_complex> out(bins);
    fftw_plan plan = nullptr;
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        plan = fftw_plan_dft_r2c_1d(static_cast<int>(len), in.data(), out.data(),
                                    FFTW_ESTIMATE);
    }
    if (plan == nullptr) {
        throw data_error("psd_welch: FFT plan creation failed");
    }

    for (std::size_t s = 0; s < segments; ++s) {
        const double* seg = series.data() + s * step;
        for (std::size_t i = 0; i < len; ++i) in[i] = seg[i] * window[i];
        fftw_execute(plan);
        for (std::size_t k = 0; k < bins; ++k) {
            accum[k] += out[k][0] * out[k][0] + out[k][1] * out[k][1];
        }
    }
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        fftw_destroy_plan(plan);
    }

    PsdResult result;
    result.segment_length = len;
    result.segment_count = segments;
    result.overlap_fraction = 0.5;
    result.frequencies_hz.resize(bins);
    result.psd.resize(bins);
    const double norm = 1.0 / (fs * window_power * static_cast<double>(segments));
    for (std::size_t k = 0; k < bins; ++k) {
        result.frequencies_hz[k] = static_cast<double>(k) * fs / static_cast<double>(len);
        const bool one_sided_doubling = k != 0 && !(len % 2 == 0 && k == bins - 1);
        result.psd[k] = accum[k] * norm * (one_sided_doubling ? 2.0 : 1.0);
    }
    return result;
}

double arw_from_psd(const PsdResult& rate_psd, double band_lo_hz, double band_hi_hz) {
    if (!(band_lo_hz < band_hi_hz)) {
        throw config_error("arw_from_psd: band_lo_hz must be below band_hi_hz");
    }
    std::vector<double> in_band;
    for (std::size_t i = 0; i < rate_psd.frequencies_hz.size(); ++i) {
        const double f = rate_psd.frequencies_hz[i];
        if (f >= band_lo_hz && f <= band_hi_hz) in_band.push_back(rate_psd.psd[i]);
    }
    if (in_band.empty()) {
        throw config_error("arw_from_psd: no PSD bins inside the requested band");
    }
    const std::size_t mid = in_band.size() / 2;
    std::nth_element(in_band.begin(), in_band.begin() + mid, in_band.end());
    double median = in_band[mid];
    if (in_band.size() % 2 == 0) {
        const double lower = *std::max_element(in_band.begin(), in_band.begin() + mid);
        median = 0.5 * (median + lower);
    }
    return arw_rad_sqrt_s_to_deg_sqrt_hr(std::sqrt(median / 2.0));
}

// ---------------------------------------------------------------------------
// Correlation ranking and drift regression
// ---------------------------------------------------------------------------

std::vector<ChannelCorrelation> rank_channels(std::span<const double> target,
                                              std::span<const NamedSeries> channels) {
    std::vector<ChannelCorrelation> ranked;
    ranked.reserve(channels.size());
    const double target_mean = target.empty() ? 0.0 : mean_of(target);
    double target_ss = 0.0;
    for (double v : target) {
        const double d = v - target_mean;
        target_ss += d * d;
    }

    for (const auto& channel : channels) {
        require_aligned(channel.values.size(), target.size(),
                        ("rank_channels: channel " + channel.name).c_str());
        ChannelCorrelation entry;
        entry.name = channel.name;
        const double ch_mean = mean_of(channel.values);
        double ch_ss = 0.0;
        double cross = 0.0;
        for (std::size_t i = 0; i < target.size(); ++i) {
            const double dc = channel.values[i] - ch_mean;
            ch_ss += dc * dc;
            cross += dc * (target[i] - target_mean);
        }
        if (ch_ss == 0.0 || target_ss == 0.0) {
            entry.correlation = 0.0;
            entry.zero_variance = ch_ss == 0.0;
        } else {
            entry.correlation = cross / std::sqrt(ch_ss * target_ss);
        }
        ranked.push_back(std::move(entry));
    }

    std::sort(ranked.begin(), ranked.end(),
              [](const ChannelCorrelation& a, const ChannelCorrelation& b) {
                  const double ra = std::abs(a.correlation);
                  const double rb = std::abs(b.correlation);
                  if (ra != rb) return ra > rb;
                  return a.name < b.name;
              });
    return ranked;
}

RegressionOutput detrend_regression(std::span<const double> target,
                                    std::span<const NamedSeries> channels) {
    if (channels.empty()) {
        throw config_error("detrend_regression: channel subset must be non-empty");
    }
    const std::size_t n = target.size();
    const std::size_t p = channels.size();
    if (n < p + 2) {
        throw config_error("detrend_regression: series too short for the requested channels");
    }
    for (const auto& channel : channels) {
        require_aligned(channel.values.size(), n,
                        ("detrend_regression: channel " + channel.name).c_str());
    }

    // Centered design: the intercept is recovered from the means afterwards.
    Eigen::MatrixXd design(n, p);
    Eigen::VectorXd rhs(n);
    std::vector<double> channel_means(p);
    const double target_mean = mean_of(target);
    for (std::size_t j = 0; j < p; ++j) {
        channel_means[j] = mean_of(channels[j].values);
        for (std::size_t i = 0; i < n; ++i) {
            design(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                channels[j].values[i] - channel_means[j];
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        rhs(static_cast<Eigen::Index>(i)) = target[i] - target_mean;
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(p)) {
        // Columns outside the leading pivots are the linearly dependent ones.
        const auto& perm = qr.colsPermutation().indices();
        std::ostringstream msg;
        msg << "detrend_regression: rank-deficient design; collinear channels:";
        for (Eigen::Index k = qr.rank(); k < static_cast<Eigen::Index>(p); ++k) {
            msg << ' ' << channels[static_cast<std::size_t>(perm(k))].name;
        }
        msg << " (a constant channel is collinear with the intercept)";
        throw data_error(msg.str());
    }

    const Eigen::VectorXd beta = qr.solve(rhs);

    RegressionOutput out;
    out.model.channel_names.reserve(p);
    out.model.coefficients.reserve(p);
    double intercept = target_mean;
    for (std::size_t j = 0; j < p; ++j) {
        out.model.channel_names.push_back(channels[j].name);
        out.model.coefficients.push_back(beta(static_cast<Eigen::Index>(j)));
        intercept -= beta(static_cast<Eigen::Index>(j)) * channel_means[j];
    }
    out.model.intercept = intercept;

    out.residual.resize(n);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double prediction = intercept;
        for (std::size_t j = 0; j < p; ++j) {
            prediction += out.model.coefficients[j] * channels[j].values[i];
        }
        out.residual[i] = target[i] - prediction;
        rss += out.residual[i] * out.residual[i];
    }
    out.model.residual_rms = std::sqrt(rss / static_cast<double>(n));

    // Standard errors from the unbiased noise estimate and (Xc' Xc)^-1.
    const double dof = static_cast<double>(n) - static_cast<double>(p) - 1.0;
    const double s2 = dof > 0.0 ? rss / dof : 0.0;
    const Eigen::MatrixXd xtx_inv =
        (design.transpose() * design).ldlt().solve(Eigen::MatrixXd::Identity(
            static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p)));
    out.model.coefficient_std_errors.resize(p);
    double mean_term = 1.0 / static_cast<double>(n);
    for (std::size_t j = 0; j < p; ++j) {
        out.model.coefficient_std_errors[j] =
            std::sqrt(std::max(0.0, s2 * xtx_inv(static_cast<Eigen::Index>(j),
                                                 static_cast<Eigen::Index>(j))));
        for (std::size_t k = 0; k < p; ++k) {
            mean_term += channel_means[j] * channel_means[k] *
                         xtx_inv(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
        }
    }
    out.model.intercept_std_error = std::sqrt(std::max(0.0, s2 * mean_term));
    return out;
}

// ---------------------------------------------------------------------------
// Unit conversion
// ---------------------------------------------------------------------------

double phase_to_rate_deg_per_hr(double phase_rad, double scale_factor_rad_per_rad_per_s) {
    if (!(scale_factor_rad_per_rad_per_s > 0.0) ||
        !std::isfinite(scale_factor_rad_per_rad_per_s)) {
        throw std::domain_error("phase_to_rate: scale factor must be positive");
    }
    return rad_per_s_to_deg_per_hr(phase_rad / scale_factor_rad_per_rad_per_s);
}

} // namespace sagnac
