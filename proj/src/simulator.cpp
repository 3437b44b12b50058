#include "sagnac/simulator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>
#include <sstream>

#include "sagnac/errors.hpp"
#include "sagnac/numeric_text.hpp"
#include "sagnac/units.hpp"

namespace sagnac {

namespace {

bool valid_channel_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_')) return false;
    }
    return true;
}

const char* process_name(AuxProcessKind kind) {
    switch (kind) {
        case AuxProcessKind::random_walk: return "random_walk";
        case AuxProcessKind::sinusoid: return "sinusoid";
        case AuxProcessKind::ornstein_uhlenbeck: return "ornstein_uhlenbeck";
        case AuxProcessKind::constant: return "constant";
    }
    return "?";
}

/// Evolving state of one auxiliary process, stepped at sample resolution.
struct AuxState {
    double state = 0.0;

    double step(const AuxChannelSpec& spec, double t_s, double dt_s, GaussianRng& rng,
                bool first_sample) {
        switch (spec.process) {
            case AuxProcessKind::constant:
                state = spec.value;
                break;
            case AuxProcessKind::sinusoid:
                state = spec.amplitude * std::sin(2.0 * kPi * t_s / spec.period_s);
                break;
            case AuxProcessKind::random_walk:
                if (!first_sample) {
                    state += spec.step_sigma_per_sqrt_s * std::sqrt(dt_s) * rng.gaussian();
                }
                break;
            case AuxProcessKind::ornstein_uhlenbeck:
                if (!first_sample) {
                    // Exact discretization of the OU update over dt.
                    const double decay = std::exp(-dt_s / spec.correlation_time_s);
                    state = state * decay +
                            spec.sigma * std::sqrt(1.0 - decay * decay) * rng.gaussian();
                }
                break;
        }
        return state;
    }
};

} // namespace

// ---------------------------------------------------------------------------
// RNG
// ---------------------------------------------------------------------------

double GaussianRng::uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double GaussianRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform01() - 1.0;
        v = 2.0 * uniform01() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
}

// ---------------------------------------------------------------------------
// Spec validation
// ---------------------------------------------------------------------------

void AuxChannelSpec::validate() const {
    if (!valid_channel_name(name)) {
        throw config_error("aux channel name '" + name +
                           "' must be non-empty and use [A-Za-z0-9_] only");
    }
    auto positive = [&](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw config_error("aux channel '" + name + "': " + what + " must be positive");
        }
    };
    auto non_negative = [&](double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw config_error("aux channel '" + name + "': " + what +
                               " must be non-negative");
        }
    };
    switch (process) {
        case AuxProcessKind::random_walk:
            non_negative(step_sigma_per_sqrt_s, "step_sigma_per_sqrt_s");
            break;
        case AuxProcessKind::sinusoid:
            non_negative(amplitude, "amplitude");
            positive(period_s, "period_s");
            break;
        case AuxProcessKind::ornstein_uhlenbeck:
            non_negative(sigma, "sigma");
            positive(correlation_time_s, "correlation_time_s");
            break;
        case AuxProcessKind::constant:
            if (!std::isfinite(value)) {
                throw config_error("aux channel '" + name + "': value must be finite");
            }
            break;
    }
    if (!std::isfinite(coupling_rad_per_unit)) {
        throw config_error("aux channel '" + name + "': coupling must be finite");
    }
}

void NoiseSpec::validate() const {
    auto non_negative = [](double v, const char* what) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw config_error(std::string("noise spec: ") + what + " must be non-negative");
        }
    };
    non_negative(white_phase_noise_sigma_rad, "white_phase_noise_sigma_rad");
    non_negative(rotation_noise_arw_deg_per_sqrt_hr, "rotation_noise_arw_deg_per_sqrt_hr");
    non_negative(rate_random_walk_deg_per_hr_per_sqrt_hr,
                 "rate_random_walk_deg_per_hr_per_sqrt_hr");
    non_negative(startup_transient.amplitude_rad, "startup_transient.amplitude_rad");
    non_negative(startup_transient.decay_time_s, "startup_transient.decay_time_s");
    if (startup_transient.amplitude_rad > 0.0 && !(startup_transient.decay_time_s > 0.0)) {
        throw config_error("noise spec: startup transient with amplitude needs a positive "
                           "decay time");
    }
}

void Schedule::validate() const {
    if (!(sample_period_s > 0.0) || !std::isfinite(sample_period_s)) {
        throw config_error("schedule: sample_period_s must be positive");
    }
    if (!(chop_period_s >= 2.0 * sample_period_s)) {
        throw config_error("schedule: chop_period_s must be at least 2 * sample_period_s");
    }
    if (!(duration_s >= chop_period_s)) {
        throw config_error("schedule: duration_s must be at least one chop period");
    }
    const double ratio = chop_period_s / sample_period_s;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    if (std::abs(static_cast<double>(n) - ratio) > 1e-9 * ratio || n % 2 != 0) {
        throw config_error("schedule: chop_period_s must be an even integer multiple of "
                           "sample_period_s (equal half-cycles)");
    }
}

std::size_t Schedule::cycles() const {
    return static_cast<std::size_t>(std::floor(duration_s / chop_period_s));
}

std::size_t Schedule::samples_per_cycle() const {
    return static_cast<std::size_t>(std::llround(chop_period_s / sample_period_s));
}

// ---------------------------------------------------------------------------
// Dataset accessors
// ---------------------------------------------------------------------------

int Dataset::beam_count() const {
    int beams = 0;
    for (const auto& channel : phases) beams = std::max(beams, channel.beam + 1);
    return beams;
}

const std::vector<double>& Dataset::phase(int beam, int area_sign) const {
    for (const auto& channel : phases) {
        if (channel.beam == beam && channel.area_sign == area_sign) {
            return channel.values_rad;
        }
    }
    std::ostringstream msg;
    msg << "dataset has no phase channel for beam " << beam << ", area "
        << (area_sign > 0 ? "+1" : "-1");
    throw data_error(msg.str());
}

std::optional<double> Dataset::truth_value(std::string_view key) const {
    for (const auto& [k, v] : truth) {
        if (k == key) {
            double parsed = 0.0;
            if (parse_double(v, parsed)) return parsed;
            return std::nullopt;
        }
    }
    return std::nullopt;
}

void Dataset::set_truth(std::string_view key, double value) {
    set_truth(key, format_double(value));
}

void Dataset::set_truth(std::string_view key, std::string value) {
    for (auto& [k, v] : truth) {
        if (k == key) {
            v = std::move(value);
            return;
        }
    }
    truth.emplace_back(std::string(key), std::move(value));
}

void Dataset::validate() const {
    if (time_s.empty()) {
        throw data_error("dataset is empty");
    }
    if (!(cycle_period_s > 0.0) || !std::isfinite(cycle_period_s)) {
        throw data_error("dataset cycle_period_s must be positive");
    }
    for (std::size_t i = 1; i < time_s.size(); ++i) {
        const double spacing = time_s[i] - time_s[i - 1];
        if (!(spacing > 0.0)) {
            throw data_error("dataset time axis must be strictly increasing");
        }
        if (std::abs(spacing - cycle_period_s) > 1e-6 * cycle_period_s) {
            throw data_error("dataset time axis must be uniform at the cycle period");
        }
    }
    if (phases.empty()) {
        throw data_error("dataset has no phase channels");
    }
    const int beams = beam_count();
    if (beams < 1 || beams > 2) {
        throw data_error("dataset must cover one or two beams");
    }
    for (int beam = 0; beam < beams; ++beam) {
        for (int area : {+1, -1}) {
            phase(beam, area); // throws if the (beam, area) key is missing
        }
    }
    if (phases.size() != static_cast<std::size_t>(2 * beams)) {
        throw data_error("dataset has unexpected extra phase channels");
    }
    for (const auto& channel : phases) {
        if (channel.values_rad.size() != time_s.size()) {
            throw data_error("phase channel length does not match the time axis");
        }
    }
    std::set<std::string> names;
    for (const auto& channel : aux) {
        if (channel.values.size() != time_s.size()) {
            throw data_error("aux channel '" + channel.name +
                             "' length does not match the time axis");
        }
        if (!valid_channel_name(channel.name) || !names.insert(channel.name).second) {
            throw data_error("aux channel '" + channel.name + "' has an invalid or "
                             "duplicate name");
        }
    }
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

Dataset simulate(const InstrumentConfig& config, const Schedule& schedule,
                 const std::vector<AuxChannelSpec>& aux_specs, const NoiseSpec& noise,
                 const SystematicsModels& models, const EnvironmentState& env,
                 const PhysicalConstants& consts, std::uint64_t seed) {
    // Fail on any invariant violation before drawing a single sample.
    config.validate();
    schedule.validate();
    noise.validate();
    models.zeeman.validate();
    models.intensity.validate();
    env.validate();
    consts.validate();
    {
        std::set<std::string> names;
        for (const auto& spec : aux_specs) {
            spec.validate();
            if (!names.insert(spec.name).second) {
                throw config_error("duplicate aux channel name '" + spec.name + "'");
            }
        }
    }
    if (env.bias_field_half1_t + env.stray_field_t < 0.0 ||
        env.bias_field_half2_t + env.stray_field_t < 0.0) {
        throw config_error("nominal operation requires non-negative total bias fields");
    }

    const std::size_t cycles = schedule.cycles();
    const std::size_t per_cycle = schedule.samples_per_cycle();
    const std::size_t half = per_cycle / 2;
    const double dt = schedule.sample_period_s;
    const int beams = schedule.beams == BeamMode::dual ? 2 : 1;

    const double arw_rad_sqrt_s =
        arw_deg_sqrt_hr_to_rad_sqrt_s(noise.rotation_noise_arw_deg_per_sqrt_hr);
    const double white_rate_sigma = arw_rad_sqrt_s / std::sqrt(dt);
    const double rrw_step_sigma =
        rrw_deg_hr_sqrt_hr_to_rad_s_sqrt_s(noise.rate_random_walk_deg_per_hr_per_sqrt_hr) *
        std::sqrt(dt);

    Dataset out;
    out.seed = seed;
    out.cycle_period_s = schedule.chop_period_s;
    out.time_s.reserve(cycles);
    for (int beam = 0; beam < beams; ++beam) {
        for (int area : {+1, -1}) {
            PhaseChannel channel;
            channel.beam = beam;
            channel.area_sign = area;
            channel.values_rad.reserve(cycles);
            out.phases.push_back(std::move(channel));
        }
    }
    out.aux.reserve(aux_specs.size());
    for (const auto& spec : aux_specs) {
        out.aux.push_back(NamedSeries{spec.name, {}});
        out.aux.back().values.reserve(cycles);
    }

    GaussianRng rng(seed);
    std::vector<AuxState> aux_states(aux_specs.size());
    double rate_walk = 0.0; // integrated rate random walk, rad/s
    InstrumentConfig shot = config;

    std::vector<double> aux_values(aux_specs.size());
    std::vector<double> aux_cycle_sum(aux_specs.size());
    // Phase accumulators indexed like out.phases.
    std::vector<double> phase_sum(out.phases.size());

    for (std::size_t cycle = 0; cycle < cycles; ++cycle) {
        std::fill(aux_cycle_sum.begin(), aux_cycle_sum.end(), 0.0);
        std::fill(phase_sum.begin(), phase_sum.end(), 0.0);

        for (std::size_t s = 0; s < per_cycle; ++s) {
            const std::size_t global = cycle * per_cycle + s;
            const double t = static_cast<double>(global) * dt;
            const bool first = global == 0;
            const int area = s < half ? +1 : -1;

            for (std::size_t j = 0; j < aux_specs.size(); ++j) {
                aux_values[j] = aux_states[j].step(aux_specs[j], t, dt, rng, first);
                aux_cycle_sum[j] += aux_values[j];
            }

            EnvironmentState sample_env = env;
            if (white_rate_sigma > 0.0) {
                sample_env.rotation_rate_rad_per_s.z += white_rate_sigma * rng.gaussian();
            }
            if (rrw_step_sigma > 0.0) {
                if (!first) rate_walk += rrw_step_sigma * rng.gaussian();
                sample_env.rotation_rate_rad_per_s.z += rate_walk;
            }

            double common = 0.0; // area- and beam-even additions
            if (noise.startup_transient.amplitude_rad > 0.0) {
                common += noise.startup_transient.amplitude_rad *
                          std::exp(-t / noise.startup_transient.decay_time_s);
            }

            for (int beam = 0; beam < beams; ++beam) {
                shot.beam_direction = beam == 0 ? +1 : -1;
                shot.area_sign = area;
                double phi = total_phase(shot, sample_env, models, consts).total_rad + common;
                for (std::size_t j = 0; j < aux_specs.size(); ++j) {
                    const double parity =
                        aux_specs[j].couples_to == CouplingParity::both_areas_odd
                            ? static_cast<double>(area * shot.beam_direction)
                            : 1.0;
                    phi += aux_specs[j].coupling_rad_per_unit * aux_values[j] * parity;
                }
                const std::size_t slot =
                    static_cast<std::size_t>(beam) * 2 + (area > 0 ? 0 : 1);
                phase_sum[slot] += phi;
            }
        }

        out.time_s.push_back(static_cast<double>(cycle) * schedule.chop_period_s);
        for (std::size_t slot = 0; slot < out.phases.size(); ++slot) {
            double value = phase_sum[slot] / static_cast<double>(half);
            if (noise.white_phase_noise_sigma_rad > 0.0) {
                value += noise.white_phase_noise_sigma_rad * rng.gaussian();
            }
            out.phases[slot].values_rad.push_back(value);
        }
        for (std::size_t j = 0; j < aux_specs.size(); ++j) {
            out.aux[j].values.push_back(aux_cycle_sum[j] / static_cast<double>(per_cycle));
        }
    }

    // Exact record of every input parameter, in a stable order.
    out.set_truth("scale_factor_rad_per_rad_per_s", scale_factor(config, consts));
    out.set_truth("instrument.pulse_spacing_l_m", config.pulse_spacing_l_m);
    out.set_truth("instrument.atom_speed_v_m_per_s", config.atom_speed_v_m_per_s);
    out.set_truth("instrument.transverse_velocity_h_m_per_s",
                  config.transverse_velocity_h_m_per_s);
    out.set_truth("instrument.transverse_velocity_v_m_per_s",
                  config.transverse_velocity_v_m_per_s);
    out.set_truth("instrument.center_pulse_offset_delta_m",
                  config.center_pulse_offset_delta_m);
    out.set_truth("instrument.vertical_misalignment_angle_rad",
                  config.vertical_misalignment_angle_rad);
    out.set_truth("constants.hbar_j_s", consts.hbar_j_s);
    out.set_truth("constants.atom_mass_kg", consts.atom_mass_kg);
    out.set_truth("constants.keff_rad_per_m", consts.keff_rad_per_m);
    out.set_truth("constants.omega_earth_rad_per_s", consts.omega_earth_rad_per_s);
    out.set_truth("constants.g_m_per_s2", consts.g_m_per_s2);
    out.set_truth("environment.rotation_rate_x_rad_per_s", env.rotation_rate_rad_per_s.x);
    out.set_truth("environment.rotation_rate_y_rad_per_s", env.rotation_rate_rad_per_s.y);
    out.set_truth("environment.rotation_rate_z_rad_per_s", env.rotation_rate_rad_per_s.z);
    out.set_truth("environment.acceleration_x_m_per_s2", env.acceleration_m_per_s2.x);
    out.set_truth("environment.acceleration_y_m_per_s2", env.acceleration_m_per_s2.y);
    out.set_truth("environment.acceleration_z_m_per_s2", env.acceleration_m_per_s2.z);
    out.set_truth("environment.bias_field_half1_t", env.bias_field_half1_t);
    out.set_truth("environment.bias_field_half2_t", env.bias_field_half2_t);
    out.set_truth("environment.stray_field_t", env.stray_field_t);
    out.set_truth("environment.intensity_deviation_1", env.intensity_deviation[0]);
    out.set_truth("environment.intensity_deviation_2", env.intensity_deviation[1]);
    out.set_truth("environment.applied_rotation_bias_phase_rad",
                  env.applied_rotation_bias_phase_rad);
    out.set_truth("schedule.sample_period_s", schedule.sample_period_s);
    out.set_truth("schedule.chop_period_s", schedule.chop_period_s);
    out.set_truth("schedule.duration_s", schedule.duration_s);
    out.set_truth("schedule.beams",
                  std::string(schedule.beams == BeamMode::dual ? "dual" : "single"));
    out.set_truth("noise.white_phase_noise_sigma_rad", noise.white_phase_noise_sigma_rad);
    out.set_truth("noise.rotation_noise_arw_deg_per_sqrt_hr",
                  noise.rotation_noise_arw_deg_per_sqrt_hr);
    out.set_truth("noise.rate_random_walk_deg_per_hr_per_sqrt_hr",
                  noise.rate_random_walk_deg_per_hr_per_sqrt_hr);
    out.set_truth("noise.startup_amplitude_rad", noise.startup_transient.amplitude_rad);
    out.set_truth("noise.startup_decay_time_s", noise.startup_transient.decay_time_s);
    out.set_truth("models.zeeman.kz_hz_per_t2",
                  models.zeeman.quadratic_coefficient_kz_hz_per_t2);
    out.set_truth("models.zeeman.half_transit_time_s", models.zeeman.half_transit_time_s);
    out.set_truth("models.zeeman.reversal_imperfection",
                  models.zeeman.reversal_imperfection);
    out.set_truth("models.intensity.coeff_laser1_forward_rad",
                  models.intensity.coefficients_forward_rad[0]);
    out.set_truth("models.intensity.coeff_laser2_forward_rad",
                  models.intensity.coefficients_forward_rad[1]);
    out.set_truth("models.intensity.coeff_laser1_reversed_rad",
                  models.intensity.coefficients_reversed_rad[0]);
    out.set_truth("models.intensity.coeff_laser2_reversed_rad",
                  models.intensity.coefficients_reversed_rad[1]);
    out.set_truth("models.intensity.reversal_imbalance", models.intensity.reversal_imbalance);
    for (const auto& spec : aux_specs) {
        const std::string prefix = "aux." + spec.name + ".";
        out.set_truth(prefix + "process", std::string(process_name(spec.process)));
        out.set_truth(prefix + "coupling_rad_per_unit", spec.coupling_rad_per_unit);
        out.set_truth(prefix + "parity",
                      std::string(spec.couples_to == CouplingParity::both_areas_odd
                                      ? "both_areas_odd"
                                      : "both_areas_even"));
        switch (spec.process) {
            case AuxProcessKind::random_walk:
                out.set_truth(prefix + "step_sigma_per_sqrt_s", spec.step_sigma_per_sqrt_s);
                break;
            case AuxProcessKind::sinusoid:
                out.set_truth(prefix + "amplitude", spec.amplitude);
                out.set_truth(prefix + "period_s", spec.period_s);
                break;
            case AuxProcessKind::ornstein_uhlenbeck:
                out.set_truth(prefix + "sigma", spec.sigma);
                out.set_truth(prefix + "correlation_time_s", spec.correlation_time_s);
                break;
            case AuxProcessKind::constant:
                out.set_truth(prefix + "value", spec.value);
                break;
        }
    }

    // Canonical alphabetical aux order, matching what read_dataset returns.
    std::sort(out.aux.begin(), out.aux.end(),
              [](const NamedSeries& a, const NamedSeries& b) { return a.name < b.name; });

    out.validate();
    return out;
}

Dataset apply_rotation_bias(const Dataset& dataset, double bias_rad) {
    dataset.validate();
    if (!std::isfinite(bias_rad)) {
        throw config_error("apply_rotation_bias: bias must be finite");
    }
    Dataset out = dataset;
    for (auto& channel : out.phases) {
        const double shift = -static_cast<double>(channel.area_sign) * bias_rad;
        for (double& value : channel.values_rad) value += shift;
    }
    const double previous = out.truth_value("bias.applied_rad").value_or(0.0);
    out.set_truth("bias.applied_rad", previous + bias_rad);
    return out;
}

} // namespace sagnac
