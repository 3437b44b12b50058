#include "sagnac/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "sagnac/errors.hpp"
#include "sagnac/numeric_text.hpp"

namespace sagnac {

namespace {

std::string phase_column_name(int beam, int area_sign) {
    return "phase_b" + std::to_string(beam) + (area_sign > 0 ? "_fwd" : "_rev") + "_rad";
}

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return cells;
}

std::string join_csv(const std::vector<std::string>& cells) {
    std::string out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) out += ',';
        out += cells[i];
    }
    return out;
}

std::vector<std::string> doubles_to_cells(const std::vector<double>& values) {
    std::vector<std::string> cells;
    cells.reserve(values.size());
    for (double v : values) cells.push_back(format_double(v));
    return cells;
}

std::vector<double> cells_to_doubles(std::string_view line, const char* what) {
    std::vector<double> out;
    if (line.empty()) return out;
    for (std::string_view cell : split_csv(line)) {
        double v = 0.0;
        if (!parse_double(cell, v)) {
            throw config_error(std::string("report: malformed number in ") + what);
        }
        out.push_back(v);
    }
    return out;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw data_error("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw data_error("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

} // namespace

// ---------------------------------------------------------------------------
// Dataset serialization
// ---------------------------------------------------------------------------

void write_dataset(const Dataset& dataset, std::ostream& out) {
    dataset.validate();

    out << "# " << kFormatVersion << '\n';
    out << "# seed=" << dataset.seed << '\n';
    out << "# cycle_period_s=" << format_double(dataset.cycle_period_s) << '\n';
    for (const auto& [key, value] : dataset.truth) {
        if (key.empty() || key.find('=') != std::string::npos ||
            key.find('\n') != std::string::npos || value.find('\n') != std::string::npos) {
            throw data_error("truth entry '" + key + "' is not serializable");
        }
        out << "# truth." << key << '=' << value << '\n';
    }

    std::vector<std::string> header{"time_s"};
    for (const auto& channel : dataset.phases) {
        header.push_back(phase_column_name(channel.beam, channel.area_sign));
    }
    for (const auto& channel : dataset.aux) {
        header.push_back("aux_" + channel.name);
    }
    out << join_csv(header) << '\n';

    for (std::size_t row = 0; row < dataset.rows(); ++row) {
        std::vector<std::string> cells;
        cells.reserve(header.size());
        cells.push_back(format_double(dataset.time_s[row]));
        for (const auto& channel : dataset.phases) {
            cells.push_back(format_double(channel.values_rad[row]));
        }
        for (const auto& channel : dataset.aux) {
            cells.push_back(format_double(channel.values[row]));
        }
        out << join_csv(cells) << '\n';
    }
    if (!out) {
        throw data_error("write failed while serializing dataset");
    }
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_dataset(dataset, out);
    out.close();
    if (!out) {
        throw data_error("write failed for '" + path.string() + "'");
    }
}

Dataset read_dataset(std::istream& in) {
    Dataset dataset;
    std::string line;
    long line_no = 0;

    if (!std::getline(in, line)) {
        throw parse_error("empty dataset file", 1);
    }
    ++line_no;
    if (line != "# " + std::string(kFormatVersion)) {
        throw parse_error("format version mismatch: expected '# " +
                              std::string(kFormatVersion) + "', got '" + line + "'",
                          line_no);
    }

    bool have_seed = false;
    bool have_cycle_period = false;
    std::string header_line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.starts_with('#')) {
            header_line = line;
            break;
        }
        std::string_view body(line);
        body.remove_prefix(1);
        if (body.starts_with(' ')) body.remove_prefix(1);
        const std::size_t eq = body.find('=');
        if (eq == std::string_view::npos) {
            throw parse_error("malformed header line (expected key=value)", line_no);
        }
        const std::string_view key = body.substr(0, eq);
        const std::string_view value = body.substr(eq + 1);
        if (key == "seed") {
            if (!parse_u64(value, dataset.seed)) {
                throw parse_error("malformed seed", line_no);
            }
            have_seed = true;
        } else if (key == "cycle_period_s") {
            if (!parse_double(value, dataset.cycle_period_s)) {
                throw parse_error("malformed cycle_period_s", line_no);
            }
            have_cycle_period = true;
        } else if (key.starts_with("truth.")) {
            dataset.truth.emplace_back(std::string(key.substr(6)), std::string(value));
        } else {
            throw parse_error("unknown header key '" + std::string(key) + "'", line_no);
        }
    }
    if (header_line.empty()) {
        throw parse_error("missing column header", line_no);
    }
    if (!have_seed || !have_cycle_period) {
        throw parse_error("header is missing seed or cycle_period_s", line_no);
    }

    // Columns are identified by name; order in the file is free.
    const auto names = split_csv(header_line);
    struct Column {
        enum class Kind { time, phase, aux } kind;
        std::size_t index = 0; // into dataset.phases / dataset.aux
    };
    std::vector<Column> columns(names.size());
    std::map<std::string, std::size_t, std::less<>> seen;
    for (std::size_t c = 0; c < names.size(); ++c) {
        const std::string name(names[c]);
        if (!seen.emplace(name, c).second) {
            throw parse_error("duplicate column '" + name + "'", line_no);
        }
        if (name == "time_s") {
            columns[c].kind = Column::Kind::time;
        } else if (name.starts_with("phase_b")) {
            // phase_b<digit>_{fwd|rev}_rad
            PhaseChannel channel;
            bool ok = name.size() > 8 && name[7] >= '0' && name[7] <= '9';
            if (ok) {
                channel.beam = name[7] - '0';
                const std::string_view rest = std::string_view(name).substr(8);
                if (rest == "_fwd_rad") {
                    channel.area_sign = +1;
                } else if (rest == "_rev_rad") {
                    channel.area_sign = -1;
                } else {
                    ok = false;
                }
            }
            if (!ok) {
                throw parse_error("unrecognized phase column '" + name + "'", line_no);
            }
            columns[c].kind = Column::Kind::phase;
            columns[c].index = dataset.phases.size();
            dataset.phases.push_back(std::move(channel));
        } else if (name.starts_with("aux_")) {
            columns[c].kind = Column::Kind::aux;
            columns[c].index = dataset.aux.size();
            dataset.aux.push_back(NamedSeries{name.substr(4), {}});
        } else {
            throw parse_error("unrecognized column '" + name + "'", line_no);
        }
    }
    bool have_time = false;
    for (const auto& column : columns) {
        have_time = have_time || column.kind == Column::Kind::time;
    }
    if (!have_time) {
        throw parse_error("missing time_s column", line_no);
    }

    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        if (cells.size() != columns.size()) {
            throw parse_error("row has " + std::to_string(cells.size()) +
                                  " cells, expected " + std::to_string(columns.size()),
                              line_no);
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            double value = 0.0;
            if (!parse_double(cells[c], value) || !std::isfinite(value)) {
                throw parse_error("cell '" + std::string(cells[c]) +
                                      "' is not a finite number",
                                  line_no);
            }
            switch (columns[c].kind) {
                case Column::Kind::time: dataset.time_s.push_back(value); break;
                case Column::Kind::phase:
                    dataset.phases[columns[c].index].values_rad.push_back(value);
                    break;
                case Column::Kind::aux:
                    dataset.aux[columns[c].index].values.push_back(value);
                    break;
            }
        }
    }

    // Canonical channel ordering so a column permutation reads back into the
    // same Dataset value.
    std::sort(dataset.phases.begin(), dataset.phases.end(),
              [](const PhaseChannel& a, const PhaseChannel& b) {
                  if (a.beam != b.beam) return a.beam < b.beam;
                  return a.area_sign > b.area_sign;
              });
    std::sort(dataset.aux.begin(), dataset.aux.end(),
              [](const NamedSeries& a, const NamedSeries& b) { return a.name < b.name; });

    try {
        dataset.validate();
    } catch (const data_error& e) {
        throw parse_error(std::string("invalid dataset: ") + e.what(), line_no);
    }
    return dataset;
}

Dataset read_dataset(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return read_dataset(in);
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

void Report::validate() const {
    if (!(scale_factor_rad_per_rad_per_s > 0.0) ||
        !std::isfinite(scale_factor_rad_per_rad_per_s)) {
        throw config_error("report: scale_factor section missing or non-positive");
    }
    const std::size_t n = allan.taus_s.size();
    if (n == 0) {
        throw config_error("report: allan section is empty");
    }
    if (allan.deviation_rad.size() != n || allan.confidence_fraction.size() != n ||
        allan.cluster_counts.size() != n) {
        throw config_error("report: allan arrays have inconsistent lengths");
    }
    if (bias_stability.method != "minimum" && bias_stability.method != "sqrt_extrapolation") {
        throw config_error("report: bias_stability.method must be 'minimum' or "
                           "'sqrt_extrapolation'");
    }
    if (!(bias_stability.tau_s > 0.0) || !std::isfinite(bias_stability.value_rad)) {
        throw config_error("report: bias_stability section incomplete");
    }
    if (!(arw.value_deg_per_sqrt_hr >= 0.0) || !(arw.band_lo_hz < arw.band_hi_hz)) {
        throw config_error("report: arw section incomplete");
    }
    if (regression.coefficients_rad_per_unit.size() != regression.channels.size() ||
        regression.coefficient_std_errors_rad_per_unit.size() != regression.channels.size()) {
        throw config_error("report: regression arrays have inconsistent lengths");
    }
    if (provenance.input_digest_fnv1a64.empty() || provenance.tool_version.empty()) {
        throw config_error("report: provenance section incomplete");
    }
}

void write_report(const Report& report, std::ostream& out) {
    report.validate();

    auto number_list = [](const std::vector<double>& values) {
        return join_csv(doubles_to_cells(values));
    };
    auto count_list = [](const std::vector<std::uint64_t>& values) {
        std::vector<std::string> cells;
        cells.reserve(values.size());
        for (auto v : values) cells.push_back(std::to_string(v));
        return join_csv(cells);
    };

    out << "# " << kFormatVersion << " report\n";
    out << "[scale_factor]\n";
    out << "value_rad_per_rad_per_s=" << format_double(report.scale_factor_rad_per_rad_per_s)
        << '\n';
    out << "[allan]\n";
    out << "taus_s=" << number_list(report.allan.taus_s) << '\n';
    out << "deviation_rad=" << number_list(report.allan.deviation_rad) << '\n';
    out << "confidence_fraction=" << number_list(report.allan.confidence_fraction) << '\n';
    out << "cluster_counts=" << count_list(report.allan.cluster_counts) << '\n';
    out << "skipped_taus_s=" << number_list(report.allan.skipped_taus_s) << '\n';
    out << "[bias_stability]\n";
    out << "value_rad=" << format_double(report.bias_stability.value_rad) << '\n';
    out << "value_deg_per_hr=" << format_double(report.bias_stability.value_deg_per_hr)
        << '\n';
    out << "tau_s=" << format_double(report.bias_stability.tau_s) << '\n';
    out << "method=" << report.bias_stability.method << '\n';
    out << "[arw]\n";
    out << "value_deg_per_sqrt_hr=" << format_double(report.arw.value_deg_per_sqrt_hr)
        << '\n';
    out << "band_lo_hz=" << format_double(report.arw.band_lo_hz) << '\n';
    out << "band_hi_hz=" << format_double(report.arw.band_hi_hz) << '\n';
    out << "[regression]\n";
    {
        std::vector<std::string> names(report.regression.channels.begin(),
                                       report.regression.channels.end());
        out << "channels=" << join_csv(names) << '\n';
    }
    out << "coefficients_rad_per_unit="
        << number_list(report.regression.coefficients_rad_per_unit) << '\n';
    out << "coefficient_std_errors_rad_per_unit="
        << number_list(report.regression.coefficient_std_errors_rad_per_unit) << '\n';
    out << "intercept_rad=" << format_double(report.regression.intercept_rad) << '\n';
    out << "residual_rms_rad=" << format_double(report.regression.residual_rms_rad) << '\n';
    out << "[provenance]\n";
    out << "input_digest_fnv1a64=" << report.provenance.input_digest_fnv1a64 << '\n';
    out << "tool_version=" << report.provenance.tool_version << '\n';
    out << "parameters=" << report.provenance.parameters << '\n';
    if (!out) {
        throw data_error("write failed while serializing report");
    }
}

void write_report(const Report& report, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    write_report(report, out);
    out.close();
    if (!out) {
        throw data_error("write failed for '" + path.string() + "'");
    }
}

Report read_report(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || line != "# " + std::string(kFormatVersion) + " report") {
        throw data_error("report: format version mismatch");
    }

    // section -> key -> value
    std::map<std::string, std::map<std::string, std::string>> sections;
    std::string current;
    long line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        if (line.front() == '[' && line.back() == ']') {
            current = line.substr(1, line.size() - 2);
            sections[current];
            continue;
        }
        const std::size_t eq = line.find('=');
        if (current.empty() || eq == std::string::npos) {
            throw parse_error("report: malformed line", line_no);
        }
        sections[current][line.substr(0, eq)] = line.substr(eq + 1);
    }

    auto section = [&](const char* name) -> std::map<std::string, std::string>& {
        auto it = sections.find(name);
        if (it == sections.end()) {
            throw config_error(std::string("report: missing section [") + name + "]");
        }
        return it->second;
    };
    auto field = [&](std::map<std::string, std::string>& sec, const char* name,
                     const char* where) -> const std::string& {
        auto it = sec.find(name);
        if (it == sec.end()) {
            throw config_error(std::string("report: missing key '") + name + "' in [" +
                               where + "]");
        }
        return it->second;
    };
    auto number = [&](std::map<std::string, std::string>& sec, const char* name,
                      const char* where) {
        double v = 0.0;
        if (!parse_double(field(sec, name, where), v)) {
            throw config_error(std::string("report: malformed number for '") + name + "'");
        }
        return v;
    };

    Report report;
    auto& sf = section("scale_factor");
    report.scale_factor_rad_per_rad_per_s = number(sf, "value_rad_per_rad_per_s",
                                                   "scale_factor");
    auto& allan = section("allan");
    report.allan.taus_s = cells_to_doubles(field(allan, "taus_s", "allan"), "taus_s");
    report.allan.deviation_rad =
        cells_to_doubles(field(allan, "deviation_rad", "allan"), "deviation_rad");
    report.allan.confidence_fraction = cells_to_doubles(
        field(allan, "confidence_fraction", "allan"), "confidence_fraction");
    for (const auto& raw :
         cells_to_doubles(field(allan, "cluster_counts", "allan"), "cluster_counts")) {
        report.allan.cluster_counts.push_back(static_cast<std::uint64_t>(raw));
    }
    report.allan.skipped_taus_s =
        cells_to_doubles(field(allan, "skipped_taus_s", "allan"), "skipped_taus_s");
    auto& bias = section("bias_stability");
    report.bias_stability.value_rad = number(bias, "value_rad", "bias_stability");
    report.bias_stability.value_deg_per_hr = number(bias, "value_deg_per_hr",
                                                    "bias_stability");
    report.bias_stability.tau_s = number(bias, "tau_s", "bias_stability");
    report.bias_stability.method = field(bias, "method", "bias_stability");
    auto& arw = section("arw");
    report.arw.value_deg_per_sqrt_hr = number(arw, "value_deg_per_sqrt_hr", "arw");
    report.arw.band_lo_hz = number(arw, "band_lo_hz", "arw");
    report.arw.band_hi_hz = number(arw, "band_hi_hz", "arw");
    auto& regression = section("regression");
    {
        const std::string& joined = field(regression, "channels", "regression");
        if (!joined.empty()) {
            for (auto cell : split_csv(joined)) {
                report.regression.channels.emplace_back(cell);
            }
        }
    }
    report.regression.coefficients_rad_per_unit = cells_to_doubles(
        field(regression, "coefficients_rad_per_unit", "regression"), "coefficients");
    report.regression.coefficient_std_errors_rad_per_unit =
        cells_to_doubles(field(regression, "coefficient_std_errors_rad_per_unit",
                               "regression"),
                         "coefficient_std_errors");
    report.regression.intercept_rad = number(regression, "intercept_rad", "regression");
    report.regression.residual_rms_rad = number(regression, "residual_rms_rad",
                                                "regression");
    auto& provenance = section("provenance");
    report.provenance.input_digest_fnv1a64 =
        field(provenance, "input_digest_fnv1a64", "provenance");
    report.provenance.tool_version = field(provenance, "tool_version", "provenance");
    report.provenance.parameters = field(provenance, "parameters", "provenance");

    report.validate();
    return report;
}

Report read_report(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    return read_report(in);
}

// ---------------------------------------------------------------------------
// Digest
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::string file_digest_fnv1a64(const std::filesystem::path& path) {
    auto in = open_for_read(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::uint64_t digest = fnv1a64(buffer.str());
    std::ostringstream hex;
    hex << std::hex;
    hex.width(16);
    hex.fill('0');
    hex << digest;
    return hex.str();
}

} // namespace sagnac
