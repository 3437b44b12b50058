#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sagnac/phase_model.hpp"
#include "sagnac/series.hpp"

namespace sagnac {

// ---------------------------------------------------------------------------
// Run specification
// ---------------------------------------------------------------------------

enum class AuxProcessKind { random_walk, sinusoid, ornstein_uhlenbeck, constant };
enum class CouplingParity { both_areas_even, both_areas_odd };

/// One auxiliary environmental channel: a stochastic or deterministic process
/// plus the coupling with which it leaks into the interferometer phase.
/// Area-odd couplings transform like a rotation (they also flip with beam
/// direction), so they survive both area and beam combination.
struct AuxChannelSpec {
    std::string name;
    AuxProcessKind process = AuxProcessKind::constant;

    double step_sigma_per_sqrt_s = 0.0; // random_walk
    double amplitude = 0.0;             // sinusoid
    double period_s = 0.0;              // sinusoid
    double sigma = 0.0;                 // ornstein_uhlenbeck (stationary std)
    double correlation_time_s = 0.0;    // ornstein_uhlenbeck
    double value = 0.0;                 // constant

    double coupling_rad_per_unit = 0.0;
    CouplingParity couples_to = CouplingParity::both_areas_even;

    void validate() const; // throws config_error
};

struct StartupTransient {
    double amplitude_rad = 0.0;
    double decay_time_s = 0.0;
};

struct NoiseSpec {
    double white_phase_noise_sigma_rad = 0.0;           // per channel sample
    double rotation_noise_arw_deg_per_sqrt_hr = 0.0;    // white rate noise floor
    double rate_random_walk_deg_per_hr_per_sqrt_hr = 0.0;
    StartupTransient startup_transient;                 // area-even early drift

    void validate() const;
};

enum class BeamMode { single, dual };

struct Schedule {
    double sample_period_s = 1.0;
    double chop_period_s = 20.0; // one full area-reversal cycle
    double duration_s = 4.0 * 3600.0;
    BeamMode beams = BeamMode::dual;

    void validate() const;
    std::size_t cycles() const;            // floor(duration / chop_period)
    std::size_t samples_per_cycle() const; // chop_period / sample_period, even
};

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

struct PhaseChannel {
    int beam = 0;       // 0 or 1
    int area_sign = +1; // +1 forward, -1 reversed
    std::vector<double> values_rad;

    friend bool operator==(const PhaseChannel&, const PhaseChannel&) = default;
};

/// One row per chop cycle: the mean phase of each (beam, area) configuration
/// over its half-cycle, plus cycle-averaged auxiliary channels and the exact
/// ground-truth parameters the run was generated with.
struct Dataset {
    std::vector<double> time_s; // cycle start times, uniform spacing
    double cycle_period_s = 0.0;
    std::vector<PhaseChannel> phases;
    std::vector<NamedSeries> aux;
    std::vector<std::pair<std::string, std::string>> truth; // ordered key/value
    std::uint64_t seed = 0;

    std::size_t rows() const { return time_s.size(); }
    int beam_count() const;
    const std::vector<double>& phase(int beam, int area_sign) const; // throws data_error
    std::optional<double> truth_value(std::string_view key) const;
    void set_truth(std::string_view key, double value);
    void set_truth(std::string_view key, std::string value);

    void validate() const; // throws data_error

    friend bool operator==(const Dataset&, const Dataset&) = default;
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Generate a chopped area-reversal dataset. Deterministic for a fixed seed:
/// one RNG stream, consumed in time order (per raw sample: aux processes in
/// declared order, then rotation white noise, then rate random walk; per
/// cycle end: one white-phase draw per (area, beam) channel sample).
Dataset simulate(const InstrumentConfig& config, const Schedule& schedule,
                 const std::vector<AuxChannelSpec>& aux_specs, const NoiseSpec& noise,
                 const SystematicsModels& models, const EnvironmentState& env,
                 const PhysicalConstants& consts, std::uint64_t seed);

/// Subtract a known electro-optic rotation bias: forward channels shift by
/// -bias, reversed channels by +bias. The accumulated bias is recorded under
/// the truth key "bias.applied_rad".
Dataset apply_rotation_bias(const Dataset& dataset, double bias_rad);

// ---------------------------------------------------------------------------
// Deterministic RNG (portable across standard libraries)
// ---------------------------------------------------------------------------

/// mt19937_64 (output fully specified by the standard) with a hand-rolled
/// Marsaglia polar transform, so Gaussian draws do not depend on the standard
/// library's unspecified normal_distribution implementation.
class GaussianRng {
public:
    explicit GaussianRng(std::uint64_t seed) : engine_(seed) {}

    double uniform01(); // [0, 1)
    double gaussian();  // standard normal

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

} // namespace sagnac
