#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include <Eigen/Dense>

#include "sagnac/errors.hpp"
#include "sagnac/numeric_text.hpp"
#include "sagnac/units.hpp"

namespace sagnac::cli {

namespace {

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::filesystem::path sibling(const std::filesystem::path& base, const char* suffix) {
    std::filesystem::path out = base;
    out.replace_filename(base.stem().string() + suffix);
    return out;
}

// Least-squares polynomial fit in a centered/scaled coordinate, mapped back
// to the raw axis; exact inputs stay exact regardless of the axis scale.
struct ScaledPoly {
    double mean = 0.0;
    double scale = 1.0;
    Eigen::VectorXd coeffs; // ascending powers of u = (v - mean) / scale
};

ScaledPoly fit_poly(const std::vector<double>& x, const std::vector<double>& y, int degree) {
    ScaledPoly fit;
    fit.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    double spread = 0.0;
    for (double v : x) spread = std::max(spread, std::abs(v - fit.mean));
    fit.scale = spread > 0.0 ? spread : 1.0;

    Eigen::MatrixXd design(x.size(), degree + 1);
    Eigen::VectorXd rhs(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double u = (x[i] - fit.mean) / fit.scale;
        double power = 1.0;
        for (int d = 0; d <= degree; ++d) {
            design(static_cast<Eigen::Index>(i), d) = power;
            power *= u;
        }
        rhs(static_cast<Eigen::Index>(i)) = y[i];
    }
    fit.coeffs = design.colPivHouseholderQr().solve(rhs);
    return fit;
}

double poly_eval(const ScaledPoly& fit, double v) {
    const double u = (v - fit.mean) / fit.scale;
    double value = 0.0;
    for (Eigen::Index d = fit.coeffs.size() - 1; d >= 0; --d) {
        value = value * u + fit.coeffs(d);
    }
    return value;
}

double poly_rms(const ScaledPoly& fit, const std::vector<double>& x,
                const std::vector<double>& y) {
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - poly_eval(fit, x[i]);
        ss += r * r;
    }
    return std::sqrt(ss / static_cast<double>(x.size()));
}

QuadraticFit quadratic_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const ScaledPoly fit = fit_poly(x, y, 2);
    QuadraticFit out;
    const double c0 = fit.coeffs(0), c1 = fit.coeffs(1), c2 = fit.coeffs(2);
    const double s = fit.scale, m = fit.mean;
    out.a2 = c2 / (s * s);
    out.a1 = c1 / s - 2.0 * c2 * m / (s * s);
    out.a0 = c0 - c1 * m / s + c2 * m * m / (s * s);
    out.apex = c2 != 0.0 ? m - s * c1 / (2.0 * c2) : std::numeric_limits<double>::quiet_NaN();
    out.rms_residual = poly_rms(fit, x, y);
    return out;
}

LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
    const ScaledPoly fit = fit_poly(x, y, 1);
    LinearFit out;
    out.slope = fit.coeffs(1) / fit.scale;
    out.intercept = fit.coeffs(0) - fit.coeffs(1) * fit.mean / fit.scale;
    out.rms_residual = poly_rms(fit, x, y);
    return out;
}

} // namespace

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

void run_simulate(const SimulateOptions& options, std::ostream& log) {
    RunConfig config = load_run_config(options.config_path);
    const std::uint64_t seed = options.seed_override.value_or(config.seed);
    const Dataset dataset =
        simulate(config.instrument, config.schedule, config.aux_channels, config.noise,
                 config.models, config.environment, config.constants, seed);
    write_dataset(dataset, options.out_path);
    log << "simulate: wrote " << options.out_path.string() << " (duration "
        << format_double(config.schedule.duration_s) << " s, " << dataset.rows()
        << " cycles, " << dataset.phases.size() << " phase + " << dataset.aux.size()
        << " aux channels, seed " << seed << ")\n";
}

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

namespace {

std::vector<double> build_tau_grid(const TauGridSpec& spec, double cycle_s) {
    if (!(spec.start_s > 0.0) || !(spec.stop_s > spec.start_s) || spec.points < 2) {
        throw config_error("analyze: tau grid must satisfy 0 < start < stop, points >= 2");
    }
    std::vector<double> taus;
    const double log_lo = std::log(spec.start_s);
    const double log_hi = std::log(spec.stop_s);
    for (int i = 0; i < spec.points; ++i) {
        const double raw = std::exp(
            log_lo + (log_hi - log_lo) * static_cast<double>(i) /
                         static_cast<double>(spec.points - 1));
        const double snapped =
            std::max(1.0, std::round(raw / cycle_s)) * cycle_s; // integer multiples only
        if (taus.empty() || snapped > taus.back()) taus.push_back(snapped);
    }
    return taus;
}

} // namespace

AnalysisResult analyze_dataset(const Dataset& dataset, const AnalyzeOptions& options,
                               const std::string& input_digest) {
    dataset.validate();
    if (dataset.rows() < 4) {
        throw data_error("analyze: dataset has fewer than 4 cycles");
    }
    const double scale =
        dataset.truth_value("scale_factor_rad_per_rad_per_s").value_or(0.0);
    if (!(scale > 0.0)) {
        throw data_error("analyze: dataset truth block lacks a positive "
                         "scale_factor_rad_per_rad_per_s");
    }

    // Reversal and beam combination.
    const auto beam0 = combine_area(dataset.phase(0, +1), dataset.phase(0, -1));
    std::vector<double> combined;
    if (dataset.beam_count() == 2) {
        const auto beam1 = combine_area(dataset.phase(1, +1), dataset.phase(1, -1));
        combined = combine_beams(beam0.rotation_like, beam1.rotation_like);
    } else {
        combined = beam0.rotation_like;
    }

    // Channel subset: requested or all, minus zero-variance channels (those
    // are collinear with the intercept and carry no drift information).
    std::vector<NamedSeries> selected;
    if (options.channels) {
        for (const auto& name : *options.channels) {
            const auto it =
                std::find_if(dataset.aux.begin(), dataset.aux.end(),
                             [&](const NamedSeries& ch) { return ch.name == name; });
            if (it == dataset.aux.end()) {
                std::string available;
                for (const auto& ch : dataset.aux) {
                    if (!available.empty()) available += ", ";
                    available += ch.name;
                }
                throw config_error("analyze: aux channel '" + name +
                                   "' not in dataset (available: " +
                                   (available.empty() ? "none" : available) + ")");
            }
            selected.push_back(*it);
        }
    } else {
        selected.assign(dataset.aux.begin(), dataset.aux.end());
    }
    const auto ranked = rank_channels(combined, selected);
    std::set<std::string> flat;
    for (const auto& entry : ranked) {
        if (entry.zero_variance) flat.insert(entry.name);
    }
    std::erase_if(selected, [&](const NamedSeries& ch) { return flat.contains(ch.name); });

    // Drift regression; with no usable channels the correction is a no-op.
    AnalysisResult result;
    const double combined_mean = mean_of(combined);
    std::vector<double> corrected;
    if (!selected.empty()) {
        auto regression = detrend_regression(combined, selected);
        corrected.resize(combined.size());
        for (std::size_t i = 0; i < combined.size(); ++i) {
            corrected[i] = regression.residual[i] + combined_mean;
        }
        result.report.regression.channels = regression.model.channel_names;
        result.report.regression.coefficients_rad_per_unit = regression.model.coefficients;
        result.report.regression.coefficient_std_errors_rad_per_unit =
            regression.model.coefficient_std_errors;
        result.report.regression.intercept_rad = regression.model.intercept;
        result.report.regression.residual_rms_rad = regression.model.residual_rms;
    } else {
        corrected = combined;
        result.report.regression.intercept_rad = combined_mean;
        double ss = 0.0;
        for (double v : combined) ss += (v - combined_mean) * (v - combined_mean);
        result.report.regression.residual_rms_rad =
            std::sqrt(ss / static_cast<double>(combined.size()));
    }

    // Reduced-channel comparison curve (the strongest |r| channels only).
    const int k = std::min<int>(options.top_k, static_cast<int>(selected.size()));
    std::vector<double> top_corrected = combined;
    if (k > 0) {
        std::vector<NamedSeries> top;
        const auto ranked_used = rank_channels(combined, selected);
        for (int i = 0; i < k; ++i) {
            const auto& name = ranked_used[static_cast<std::size_t>(i)].name;
            top.push_back(*std::find_if(selected.begin(), selected.end(),
                                        [&](const NamedSeries& ch) {
                                            return ch.name == name;
                                        }));
        }
        auto regression = detrend_regression(combined, top);
        for (std::size_t i = 0; i < combined.size(); ++i) {
            top_corrected[i] = regression.residual[i] + combined_mean;
        }
    }
    result.top_k_used = k;

    // Allan deviations on a shared tau grid.
    const double cycle = dataset.cycle_period_s;
    const double duration = static_cast<double>(dataset.rows()) * cycle;
    const TauGridSpec grid_spec =
        options.taus.value_or(TauGridSpec{cycle, std::max(duration / 5.0, 2.0 * cycle), 24});
    const std::vector<double> taus = build_tau_grid(grid_spec, cycle);
    result.allan_raw = allan_deviation(combined, cycle, taus, true);
    result.allan_corrected = allan_deviation(corrected, cycle, taus, true);
    result.allan_top_k = allan_deviation(top_corrected, cycle, taus, true);

    result.report.allan.taus_s = result.allan_corrected.taus_s;
    result.report.allan.deviation_rad = result.allan_corrected.deviations;
    result.report.allan.confidence_fraction = result.allan_corrected.confidence_fractions;
    for (auto count : result.allan_corrected.cluster_counts) {
        result.report.allan.cluster_counts.push_back(count);
    }
    for (const auto& skip : result.allan_corrected.skipped) {
        result.report.allan.skipped_taus_s.push_back(skip.tau_s);
    }

    // Bias stability of the corrected series.
    BiasStabilityOptions stability;
    stability.method = options.method;
    stability.fit_tau_lo_s = 4.0 * cycle;
    stability.fit_tau_hi_s = duration / 10.0;
    stability.target_tau_s = duration;
    const BiasStability bias = bias_stability(result.allan_corrected, stability);
    result.report.bias_stability.value_rad = bias.value;
    result.report.bias_stability.value_deg_per_hr = phase_to_rate_deg_per_hr(bias.value,
                                                                             scale);
    result.report.bias_stability.tau_s = bias.tau_s;
    result.report.bias_stability.method =
        options.method == BiasStabilityMethod::minimum ? "minimum" : "sqrt_extrapolation";

    // Rotation-rate PSD of the mean-removed rotation series, and the ARW floor.
    std::vector<double> rate(combined.size());
    for (std::size_t i = 0; i < rate.size(); ++i) {
        rate[i] = (combined[i] - combined_mean) / scale; // rad/s
    }
    const std::size_t segment =
        std::min<std::size_t>(std::max<std::size_t>(options.psd_segment_length, 2),
                              rate.size());
    result.rate_psd = psd_welch(rate, cycle, segment);
    const double nyquist = 0.5 / cycle;
    const auto band = options.arw_band_hz.value_or(
        std::make_pair(0.2 * nyquist, 0.8 * nyquist));
    result.report.arw.value_deg_per_sqrt_hr =
        arw_from_psd(result.rate_psd, band.first, band.second);
    result.report.arw.band_lo_hz = band.first;
    result.report.arw.band_hi_hz = band.second;

    // Phase-vs-time plot data.
    result.time_s = dataset.time_s;
    result.phase_raw_rad = combined;
    result.phase_corrected_rad = corrected;
    result.phase_predicted_drift_rad.resize(combined.size());
    for (std::size_t i = 0; i < combined.size(); ++i) {
        result.phase_predicted_drift_rad[i] = combined[i] - corrected[i] + combined_mean;
    }

    result.report.scale_factor_rad_per_rad_per_s = scale;
    result.report.provenance.input_digest_fnv1a64 = input_digest;
    result.report.provenance.tool_version = std::string(kToolVersion);
    {
        std::ostringstream params;
        params << "channels=";
        if (options.channels) {
            for (std::size_t i = 0; i < options.channels->size(); ++i) {
                if (i) params << '+';
                params << (*options.channels)[i];
            }
        } else {
            params << "all";
        }
        params << ";taus=" << format_double(grid_spec.start_s) << ':'
               << format_double(grid_spec.stop_s) << ':' << grid_spec.points;
        params << ";method=" << result.report.bias_stability.method;
        params << ";psd_segment=" << segment;
        params << ";arw_band_hz=" << format_double(band.first) << ':'
               << format_double(band.second);
        params << ";top_k=" << k;
        result.report.provenance.parameters = params.str();
    }

    result.report.validate();
    return result;
}

namespace {

void write_phase_plot(const AnalysisResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "# " << kFormatVersion << " phase-vs-time\n";
    out << "time_s,raw_rad,predicted_drift_rad,corrected_rad\n";
    for (std::size_t i = 0; i < result.time_s.size(); ++i) {
        out << format_double(result.time_s[i]) << ','
            << format_double(result.phase_raw_rad[i]) << ','
            << format_double(result.phase_predicted_drift_rad[i]) << ','
            << format_double(result.phase_corrected_rad[i]) << '\n';
    }
}

void write_allan_plot(const AnalysisResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "# " << kFormatVersion << " allan-deviation\n";
    out << "# top_k=" << result.top_k_used << '\n';
    out << "tau_s,raw_rad,corrected_rad,top_k_rad,cluster_counts,confidence_fraction\n";
    for (std::size_t i = 0; i < result.allan_raw.taus_s.size(); ++i) {
        out << format_double(result.allan_raw.taus_s[i]) << ','
            << format_double(result.allan_raw.deviations[i]) << ','
            << format_double(result.allan_corrected.deviations[i]) << ','
            << format_double(result.allan_top_k.deviations[i]) << ','
            << result.allan_raw.cluster_counts[i] << ','
            << format_double(result.allan_raw.confidence_fractions[i]) << '\n';
    }
}

void write_psd_plot(const AnalysisResult& result, const std::filesystem::path& path) {
    auto out = open_out(path);
    out << "# " << kFormatVersion << " rotation-rate-psd\n";
    out << "frequency_hz,psd_rad2_per_s2_per_hz\n";
    for (std::size_t i = 0; i < result.rate_psd.frequencies_hz.size(); ++i) {
        out << format_double(result.rate_psd.frequencies_hz[i]) << ','
            << format_double(result.rate_psd.psd[i]) << '\n';
    }
}

} // namespace

AnalysisResult run_analyze(const std::filesystem::path& dataset_path,
                           const std::filesystem::path& report_path,
                           const AnalyzeOptions& options, std::ostream& log) {
    const Dataset dataset = read_dataset(dataset_path);
    const std::string digest = file_digest_fnv1a64(dataset_path);
    AnalysisResult result = analyze_dataset(dataset, options, digest);

    write_report(result.report, report_path);
    const auto phase_path = sibling(report_path, "_phase.csv");
    const auto allan_path = sibling(report_path, "_allan.csv");
    const auto psd_path = sibling(report_path, "_psd.csv");
    write_phase_plot(result, phase_path);
    write_allan_plot(result, allan_path);
    write_psd_plot(result, psd_path);

    log << "analyze: wrote " << report_path.string() << ", " << phase_path.string() << ", "
        << allan_path.string() << ", " << psd_path.string() << '\n';
    log << "analyze: bias stability "
        << format_double(result.report.bias_stability.value_rad) << " rad ("
        << format_double(result.report.bias_stability.value_deg_per_hr) << " deg/hr, "
        << result.report.bias_stability.method << "), arw "
        << format_double(result.report.arw.value_deg_per_sqrt_hr) << " deg/sqrt(hr)\n";
    if (!result.allan_corrected.skipped.empty()) {
        log << "analyze: warning: " << result.allan_corrected.skipped.size()
            << " tau value(s) skipped (series too short); see skipped_taus_s\n";
    }
    return result;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

SweepResult compute_sweep(const RunConfig& config, SweepParameter parameter, double lo,
                          double hi, int steps) {
    if (steps < 3) {
        throw config_error("sweep: steps must be at least 3");
    }
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
        throw config_error("sweep: range must be finite with lo < hi");
    }

    // Validate the whole range against module invariants before computing.
    double mismatch_ratio = 1.0;
    if (parameter == SweepParameter::pulse_offset_delta) {
        const double limit = config.instrument.pulse_spacing_l_m;
        if (std::max(std::abs(lo), std::abs(hi)) >= limit) {
            throw config_error("sweep: |delta| must stay below the pulse spacing");
        }
    } else {
        const double total1 =
            config.environment.bias_field_half1_t + config.environment.stray_field_t;
        const double total2 =
            config.environment.bias_field_half2_t + config.environment.stray_field_t;
        if (!(total1 > 0.0)) {
            throw config_error("sweep: bias_field sweep needs a positive configured "
                               "half-1 total field to define the half-to-half ratio");
        }
        // The half-to-half mismatch scales the total field (applied + stray),
        // so the parabola apex sits exactly at -stray_field.
        mismatch_ratio = total2 / total1;
    }

    SweepResult result;
    result.parameter = parameter;
    result.rows.reserve(static_cast<std::size_t>(steps));

    for (int i = 0; i < steps; ++i) {
        const double value =
            lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(steps - 1);
        InstrumentConfig instrument = config.instrument;
        EnvironmentState env = config.environment;
        if (parameter == SweepParameter::pulse_offset_delta) {
            instrument.center_pulse_offset_delta_m = value;
        } else {
            env.bias_field_half1_t = value;
            env.bias_field_half2_t =
                mismatch_ratio * (value + env.stray_field_t) - env.stray_field_t;
        }

        SweepRow row;
        row.value = value;
        instrument.area_sign = +1;
        row.phase_forward_rad =
            total_phase(instrument, env, config.models, config.constants).total_rad;
        instrument.area_sign = -1;
        row.phase_reversed_rad =
            total_phase(instrument, env, config.models, config.constants).total_rad;
        row.rotation_like_rad = 0.5 * (row.phase_forward_rad - row.phase_reversed_rad);
        row.bias_like_rad = 0.5 * (row.phase_forward_rad + row.phase_reversed_rad);
        result.rows.push_back(row);
    }

    std::vector<double> x, fwd, rev, rot, bias;
    for (const auto& row : result.rows) {
        x.push_back(row.value);
        fwd.push_back(row.phase_forward_rad);
        rev.push_back(row.phase_reversed_rad);
        rot.push_back(row.rotation_like_rad);
        bias.push_back(row.bias_like_rad);
    }
    if (parameter == SweepParameter::bias_field) {
        for (const auto* column : {&fwd, &rev, &rot, &bias}) {
            result.quadratic_fits.push_back(quadratic_fit(x, *column));
        }
    } else {
        for (const auto* column : {&fwd, &rev, &rot, &bias}) {
            result.linear_fits.push_back(linear_fit(x, *column));
        }
    }
    return result;
}

SweepResult run_sweep(const SweepOptions& options, std::ostream& log) {
    SweepParameter parameter;
    if (options.parameter == "bias_field") {
        parameter = SweepParameter::bias_field;
    } else if (options.parameter == "delta") {
        parameter = SweepParameter::pulse_offset_delta;
    } else {
        throw config_error("sweep: --param must be bias_field or delta (got '" +
                           options.parameter + "')");
    }

    const RunConfig config = load_run_config(options.config_path);
    SweepResult result = compute_sweep(config, parameter, options.lo, options.hi,
                                       options.steps);

    const char* value_column =
        parameter == SweepParameter::bias_field ? "applied_field_t" : "delta_m";
    static constexpr const char* kColumns[] = {"phase_fwd_rad", "phase_rev_rad",
                                               "rotation_like_rad", "bias_like_rad"};

    auto out = open_out(options.out_path);
    out << "# " << kFormatVersion << " sweep\n";
    out << "# parameter=" << options.parameter << '\n';
    out << "# range=" << format_double(options.lo) << ':' << format_double(options.hi)
        << '\n';
    out << "# steps=" << options.steps << '\n';
    for (std::size_t c = 0; c < 4; ++c) {
        if (parameter == SweepParameter::bias_field) {
            const auto& fit = result.quadratic_fits[c];
            out << "# fit." << kColumns[c] << ".a2=" << format_double(fit.a2) << '\n';
            out << "# fit." << kColumns[c] << ".a1=" << format_double(fit.a1) << '\n';
            out << "# fit." << kColumns[c] << ".a0=" << format_double(fit.a0) << '\n';
            out << "# fit." << kColumns[c] << ".apex=" << format_double(fit.apex) << '\n';
            out << "# fit." << kColumns[c] << ".rms=" << format_double(fit.rms_residual)
                << '\n';
        } else {
            const auto& fit = result.linear_fits[c];
            out << "# fit." << kColumns[c] << ".slope=" << format_double(fit.slope) << '\n';
            out << "# fit." << kColumns[c]
                << ".intercept=" << format_double(fit.intercept) << '\n';
            out << "# fit." << kColumns[c] << ".rms=" << format_double(fit.rms_residual)
                << '\n';
        }
    }
    out << value_column << ",phase_fwd_rad,phase_rev_rad,rotation_like_rad,bias_like_rad\n";
    for (const auto& row : result.rows) {
        out << format_double(row.value) << ',' << format_double(row.phase_forward_rad)
            << ',' << format_double(row.phase_reversed_rad) << ','
            << format_double(row.rotation_like_rad) << ','
            << format_double(row.bias_like_rad) << '\n';
    }

    log << "sweep: wrote " << options.out_path.string() << " (" << options.parameter
        << ", " << options.steps << " steps)\n";
    return result;
}

} // namespace sagnac::cli
