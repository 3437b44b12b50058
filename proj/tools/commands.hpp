#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "run_config.hpp"
#include "sagnac/dataset_io.hpp"
#include "sagnac/stability.hpp"

namespace sagnac::cli {

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

struct SimulateOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_path;
    std::optional<std::uint64_t> seed_override;
};

/// Run the simulator from a config file and write the dataset. Prints a
/// one-line summary (duration, cycles, channels) to `log`.
void run_simulate(const SimulateOptions& options, std::ostream& log);

// ---------------------------------------------------------------------------
// analyze
// ---------------------------------------------------------------------------

struct TauGridSpec {
    double start_s = 0.0;
    double stop_s = 0.0;
    int points = 0; // log-spaced, snapped to multiples of the cycle period
};

struct AnalyzeOptions {
    std::optional<std::vector<std::string>> channels; // default: every aux channel
    std::optional<TauGridSpec> taus;
    BiasStabilityMethod method = BiasStabilityMethod::sqrt_extrapolation;
    std::size_t psd_segment_length = 256; // clipped to the series length
    std::optional<std::pair<double, double>> arw_band_hz;
    int top_k = 3; // size of the reduced-channel comparison curve
};

struct AnalysisResult {
    Report report;

    // Plot tables (also written next to the report as *_phase.csv,
    // *_allan.csv, *_psd.csv).
    std::vector<double> time_s;
    std::vector<double> phase_raw_rad;
    std::vector<double> phase_predicted_drift_rad;
    std::vector<double> phase_corrected_rad;

    AllanResult allan_raw;
    AllanResult allan_corrected;
    AllanResult allan_top_k;
    int top_k_used = 0;

    PsdResult rate_psd; // (rad/s)^2 / Hz of the mean-removed rotation series
};

/// The full analysis pipeline on an in-memory dataset. `input_digest` goes
/// into the report provenance verbatim.
AnalysisResult analyze_dataset(const Dataset& dataset, const AnalyzeOptions& options,
                               const std::string& input_digest);

/// File-level wrapper: read dataset, analyze, write the report and the three
/// plot CSVs next to it.
AnalysisResult run_analyze(const std::filesystem::path& dataset_path,
                           const std::filesystem::path& report_path,
                           const AnalyzeOptions& options, std::ostream& log);

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

enum class SweepParameter { bias_field, pulse_offset_delta };

struct SweepRow {
    double value = 0.0; // applied field (T) or pulse offset (m)
    double phase_forward_rad = 0.0;
    double phase_reversed_rad = 0.0;
    double rotation_like_rad = 0.0;
    double bias_like_rad = 0.0;
};

struct QuadraticFit {
    double a2 = 0.0, a1 = 0.0, a0 = 0.0; // y = a2 v^2 + a1 v + a0
    double apex = 0.0;                   // -a1 / (2 a2)
    double rms_residual = 0.0;
};

struct LinearFit {
    double slope = 0.0, intercept = 0.0;
    double rms_residual = 0.0;
};

struct SweepResult {
    SweepParameter parameter = SweepParameter::bias_field;
    std::vector<SweepRow> rows; // sorted ascending by value
    // bias_field sweeps carry quadratic fits, delta sweeps linear fits,
    // indexed [forward, reversed, rotation_like, bias_like].
    std::vector<QuadraticFit> quadratic_fits;
    std::vector<LinearFit> linear_fits;
};

/// Noiseless phase sweep over one parameter; both area configurations plus
/// their combinations per step, with least-squares fits of every column.
SweepResult compute_sweep(const RunConfig& config, SweepParameter parameter, double lo,
                          double hi, int steps);

struct SweepOptions {
    std::filesystem::path config_path;
    std::filesystem::path out_path;
    std::string parameter; // "bias_field" | "delta"
    double lo = 0.0;
    double hi = 0.0;
    int steps = 0;
};

SweepResult run_sweep(const SweepOptions& options, std::ostream& log);

} // namespace sagnac::cli
