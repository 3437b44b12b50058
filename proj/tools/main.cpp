// sagnac-lab: simulate, analyze and sweep an area-reversible Sagnac
// gyroscope at desk scale. Exit codes: 0 success, 1 usage/config error,
// 2 data error.

#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "sagnac/errors.hpp"

namespace {

using namespace sagnac;
using namespace sagnac::cli;

std::pair<double, double> parse_range(const std::string& text) {
    const std::size_t colon = text.find(':');
    if (colon == std::string::npos) {
        throw config_error("--range expects lo:hi (got '" + text + "')");
    }
    try {
        return {std::stod(text.substr(0, colon)), std::stod(text.substr(colon + 1))};
    } catch (const std::exception&) {
        throw config_error("--range expects numeric lo:hi (got '" + text + "')");
    }
}

TauGridSpec parse_taus(const std::string& text) {
    const std::size_t first = text.find(':');
    const std::size_t second = text.find(':', first + 1);
    if (first == std::string::npos || second == std::string::npos) {
        throw config_error("--taus expects start:stop:points (got '" + text + "')");
    }
    try {
        TauGridSpec spec;
        spec.start_s = std::stod(text.substr(0, first));
        spec.stop_s = std::stod(text.substr(first + 1, second - first - 1));
        spec.points = std::stoi(text.substr(second + 1));
        return spec;
    } catch (const std::exception&) {
        throw config_error("--taus expects numeric start:stop:points (got '" + text + "')");
    }
}

std::vector<std::string> parse_channel_list(const std::string& text) {
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string name = text.substr(
            start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!name.empty()) names.push_back(name);
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (names.empty()) {
        throw config_error("--channels expects a comma-separated list of names");
    }
    return names;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"area-reversible Sagnac gyroscope simulator and stability toolkit"};
    app.require_subcommand(1);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    simulate->add_option("--config", sim_config, "run configuration (JSON)")->required();
    simulate->add_option("--out", sim_out, "output dataset path")->required();
    simulate->add_option("--seed", sim_seed, "seed override");

    // analyze
    auto* analyze = app.add_subcommand("analyze", "run the stability pipeline");
    std::string ana_dataset, ana_out, ana_channels, ana_taus, ana_method = "extrapolate";
    analyze->add_option("dataset", ana_dataset, "dataset file to analyze")->required();
    analyze->add_option("--out", ana_out, "report path (plot CSVs written beside it)")
        ->required();
    analyze->add_option("--channels", ana_channels,
                        "comma-separated aux channels (default: all)");
    analyze->add_option("--taus", ana_taus, "log tau grid start:stop:points");
    analyze->add_option("--method", ana_method, "bias stability method: min|extrapolate")
        ->check(CLI::IsMember({"min", "extrapolate"}));

    // sweep
    auto* sweep = app.add_subcommand("sweep", "noiseless systematic parameter sweep");
    std::string swp_config, swp_out, swp_param, swp_range;
    int swp_steps = 0;
    sweep->add_option("--config", swp_config, "run configuration (JSON)")->required();
    sweep->add_option("--out", swp_out, "output sweep table path")->required();
    sweep->add_option("--param", swp_param, "bias_field|delta")->required();
    sweep->add_option("--range", swp_range, "lo:hi")->required();
    sweep->add_option("--steps", swp_steps, "number of sweep points (>= 3)")->required();

    try {
        app.parse(argc, argv);

        if (simulate->parsed()) {
            SimulateOptions options;
            options.config_path = sim_config;
            options.out_path = sim_out;
            options.seed_override = sim_seed;
            run_simulate(options, std::cout);
        } else if (analyze->parsed()) {
            AnalyzeOptions options;
            if (!ana_channels.empty()) options.channels = parse_channel_list(ana_channels);
            if (!ana_taus.empty()) options.taus = parse_taus(ana_taus);
            options.method = ana_method == "min" ? BiasStabilityMethod::minimum
                                                 : BiasStabilityMethod::sqrt_extrapolation;
            run_analyze(ana_dataset, ana_out, options, std::cout);
        } else if (sweep->parsed()) {
            SweepOptions options;
            options.config_path = swp_config;
            options.out_path = swp_out;
            options.parameter = swp_param;
            const auto range = parse_range(swp_range);
            options.lo = range.first;
            options.hi = range.second;
            options.steps = swp_steps;
            run_sweep(options, std::cout);
        }
        return 0;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const data_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
