#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "sagnac/simulator.hpp"

namespace sagnac {

inline constexpr std::string_view kFormatVersion = "sagnac-lab/1";
inline constexpr std::string_view kToolVersion = "sagnac-lab 1.0.0";

// ---------------------------------------------------------------------------
// Dataset files: '#'-prefixed header (version, seed, truth key-values), then a
// comma-separated column table. Columns are matched by name, so column order
// is free. All numbers are written with 17 significant digits and round-trip
// binary64 exactly; serialization is byte-deterministic.
// ---------------------------------------------------------------------------

void write_dataset(const Dataset& dataset, std::ostream& out);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path);

Dataset read_dataset(std::istream& in);
Dataset read_dataset(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Analysis reports: sectioned key-value text with stable ordering. Numeric
// keys carry their unit as a suffix.
// ---------------------------------------------------------------------------

struct ReportAllan {
    std::vector<double> taus_s;
    std::vector<double> deviation_rad;
    std::vector<double> confidence_fraction;
    std::vector<std::uint64_t> cluster_counts;
    std::vector<double> skipped_taus_s;

    friend bool operator==(const ReportAllan&, const ReportAllan&) = default;
};

struct ReportBiasStability {
    double value_rad = 0.0;
    double value_deg_per_hr = 0.0;
    double tau_s = 0.0;
    std::string method; // "minimum" | "sqrt_extrapolation"

    friend bool operator==(const ReportBiasStability&, const ReportBiasStability&) = default;
};

struct ReportArw {
    double value_deg_per_sqrt_hr = 0.0;
    double band_lo_hz = 0.0;
    double band_hi_hz = 0.0;

    friend bool operator==(const ReportArw&, const ReportArw&) = default;
};

struct ReportRegression {
    std::vector<std::string> channels;
    std::vector<double> coefficients_rad_per_unit;
    std::vector<double> coefficient_std_errors_rad_per_unit;
    double intercept_rad = 0.0;
    double residual_rms_rad = 0.0;

    friend bool operator==(const ReportRegression&, const ReportRegression&) = default;
};

struct ReportProvenance {
    std::string input_digest_fnv1a64; // hex digest of the analyzed dataset file
    std::string tool_version;
    std::string parameters; // flattened analysis options, stable format

    friend bool operator==(const ReportProvenance&, const ReportProvenance&) = default;
};

struct Report {
    double scale_factor_rad_per_rad_per_s = 0.0;
    ReportAllan allan;
    ReportBiasStability bias_stability;
    ReportArw arw;
    ReportRegression regression;
    ReportProvenance provenance;

    void validate() const; // throws config_error when a section is missing/inconsistent

    friend bool operator==(const Report&, const Report&) = default;
};

void write_report(const Report& report, std::ostream& out);
void write_report(const Report& report, const std::filesystem::path& path);

Report read_report(std::istream& in);
Report read_report(const std::filesystem::path& path);

// FNV-1a 64-bit digest, hex-encoded; used for report provenance.
std::uint64_t fnv1a64(std::string_view bytes);
std::string file_digest_fnv1a64(const std::filesystem::path& path);

} // namespace sagnac
