#include "run_config.hpp"

#include <fstream>
#include <set>

#include "sagnac/errors.hpp"

namespace sagnac::cli {

namespace {

using nlohmann::json;

/// Wraps a JSON object; every accessor marks its key as consumed and
/// finish() rejects whatever was not consumed, naming the offending key.
class StrictObject {
public:
    StrictObject(const json& node, std::string path) : node_(node), path_(std::move(path)) {
        if (!node_.is_object()) {
            throw config_error("config: '" + path_ + "' must be an object");
        }
    }

    bool has(const char* key) const { return node_.contains(key); }

    double number(const char* key, double fallback) {
        if (!mark(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number()) {
            throw config_error("config: '" + join(key) + "' must be a number");
        }
        return v.get<double>();
    }

    std::uint64_t unsigned_integer(const char* key, std::uint64_t fallback) {
        if (!mark(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_number_unsigned()) {
            throw config_error("config: '" + join(key) + "' must be a non-negative integer");
        }
        return v.get<std::uint64_t>();
    }

    std::string text(const char* key, std::string fallback) {
        if (!mark(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_string()) {
            throw config_error("config: '" + join(key) + "' must be a string");
        }
        return v.get<std::string>();
    }

    std::string required_text(const char* key) {
        if (!has(key)) {
            throw config_error("config: missing required key '" + join(key) + "'");
        }
        return text(key, {});
    }

    template <std::size_t N>
    std::array<double, N> number_array(const char* key, std::array<double, N> fallback) {
        if (!mark(key)) return fallback;
        const json& v = node_.at(key);
        if (!v.is_array() || v.size() != N) {
            throw config_error("config: '" + join(key) + "' must be an array of " +
                               std::to_string(N) + " numbers");
        }
        std::array<double, N> out{};
        for (std::size_t i = 0; i < N; ++i) {
            if (!v[i].is_number()) {
                throw config_error("config: '" + join(key) + "' must contain numbers only");
            }
            out[i] = v[i].get<double>();
        }
        return out;
    }

    StrictObject object(const char* key) {
        mark(key);
        return StrictObject(node_.at(key), join(key));
    }

    const json& array(const char* key) {
        mark(key);
        const json& v = node_.at(key);
        if (!v.is_array()) {
            throw config_error("config: '" + join(key) + "' must be an array");
        }
        return v;
    }

    void finish() const {
        for (const auto& item : node_.items()) {
            if (!consumed_.contains(item.key())) {
                throw config_error("config: unknown key '" + join(item.key().c_str()) + "'");
            }
        }
    }

    std::string join(const char* key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

private:
    bool mark(const char* key) {
        if (!node_.contains(key)) return false;
        consumed_.insert(key);
        return true;
    }

    const json& node_;
    std::string path_;
    std::set<std::string> consumed_;
};

Vec3 vec3(StrictObject& section, const char* key, const Vec3& fallback) {
    const auto raw =
        section.number_array<3>(key, {fallback.x, fallback.y, fallback.z});
    return {raw[0], raw[1], raw[2]};
}

AuxChannelSpec parse_aux_channel(const json& node, const std::string& path) {
    StrictObject obj(node, path);
    AuxChannelSpec spec;
    spec.name = obj.required_text("name");

    const std::string process = obj.required_text("process");
    if (process == "random_walk") {
        spec.process = AuxProcessKind::random_walk;
        spec.step_sigma_per_sqrt_s = obj.number("step_sigma_per_sqrt_s", 0.0);
    } else if (process == "sinusoid") {
        spec.process = AuxProcessKind::sinusoid;
        spec.amplitude = obj.number("amplitude", 0.0);
        spec.period_s = obj.number("period_s", 0.0);
    } else if (process == "ornstein_uhlenbeck") {
        spec.process = AuxProcessKind::ornstein_uhlenbeck;
        spec.sigma = obj.number("sigma", 0.0);
        spec.correlation_time_s = obj.number("correlation_time_s", 0.0);
    } else if (process == "constant") {
        spec.process = AuxProcessKind::constant;
        spec.value = obj.number("value", 0.0);
    } else {
        throw config_error("config: '" + path + ".process' must be one of random_walk, "
                           "sinusoid, ornstein_uhlenbeck, constant (got '" + process + "')");
    }

    spec.coupling_rad_per_unit = obj.number("coupling_rad_per_unit", 0.0);
    const std::string parity = obj.text("couples_to", "both_areas_even");
    if (parity == "both_areas_even") {
        spec.couples_to = CouplingParity::both_areas_even;
    } else if (parity == "both_areas_odd") {
        spec.couples_to = CouplingParity::both_areas_odd;
    } else {
        throw config_error("config: '" + path + ".couples_to' must be both_areas_even or "
                           "both_areas_odd (got '" + parity + "')");
    }
    obj.finish();
    spec.validate();
    return spec;
}

} // namespace

RunConfig parse_run_config(const json& root) {
    StrictObject top(root, "");
    RunConfig config;

    config.seed = top.unsigned_integer("seed", 0);

    if (top.has("instrument")) {
        StrictObject section = top.object("instrument");
        auto& inst = config.instrument;
        inst.pulse_spacing_l_m = section.number("pulse_spacing_l_m", inst.pulse_spacing_l_m);
        inst.atom_speed_v_m_per_s =
            section.number("atom_speed_v_m_per_s", inst.atom_speed_v_m_per_s);
        const auto tv = section.number_array<2>(
            "transverse_velocity_m_per_s",
            {inst.transverse_velocity_h_m_per_s, inst.transverse_velocity_v_m_per_s});
        inst.transverse_velocity_h_m_per_s = tv[0];
        inst.transverse_velocity_v_m_per_s = tv[1];
        inst.center_pulse_offset_delta_m =
            section.number("center_pulse_offset_delta_m", inst.center_pulse_offset_delta_m);
        inst.vertical_misalignment_angle_rad = section.number(
            "vertical_misalignment_angle_rad", inst.vertical_misalignment_angle_rad);
        section.finish();
    }

    if (top.has("constants")) {
        StrictObject section = top.object("constants");
        auto& c = config.constants;
        c.hbar_j_s = section.number("hbar_j_s", c.hbar_j_s);
        c.atom_mass_kg = section.number("atom_mass_kg", c.atom_mass_kg);
        c.keff_rad_per_m = section.number("keff_rad_per_m", c.keff_rad_per_m);
        c.omega_earth_rad_per_s =
            section.number("omega_earth_rad_per_s", c.omega_earth_rad_per_s);
        c.g_m_per_s2 = section.number("g_m_per_s2", c.g_m_per_s2);
        section.finish();
    }

    if (top.has("environment")) {
        StrictObject section = top.object("environment");
        auto& env = config.environment;
        env.rotation_rate_rad_per_s =
            vec3(section, "rotation_rate_rad_per_s", env.rotation_rate_rad_per_s);
        env.acceleration_m_per_s2 =
            vec3(section, "acceleration_m_per_s2", env.acceleration_m_per_s2);
        env.bias_field_half1_t = section.number("bias_field_half1_t", env.bias_field_half1_t);
        env.bias_field_half2_t = section.number("bias_field_half2_t", env.bias_field_half2_t);
        env.stray_field_t = section.number("stray_field_t", env.stray_field_t);
        env.intensity_deviation =
            section.number_array<2>("intensity_deviation", env.intensity_deviation);
        env.applied_rotation_bias_phase_rad = section.number(
            "applied_rotation_bias_phase_rad", env.applied_rotation_bias_phase_rad);
        section.finish();
    }

    if (top.has("schedule")) {
        StrictObject section = top.object("schedule");
        auto& sched = config.schedule;
        sched.sample_period_s = section.number("sample_period_s", sched.sample_period_s);
        sched.chop_period_s = section.number("chop_period_s", sched.chop_period_s);
        sched.duration_s = section.number("duration_s", sched.duration_s);
        const std::string beams =
            section.text("beams", sched.beams == BeamMode::dual ? "dual" : "single");
        if (beams == "dual") {
            sched.beams = BeamMode::dual;
        } else if (beams == "single") {
            sched.beams = BeamMode::single;
        } else {
            throw config_error("config: 'schedule.beams' must be single or dual (got '" +
                               beams + "')");
        }
        section.finish();
    }

    if (top.has("noise")) {
        StrictObject section = top.object("noise");
        auto& noise = config.noise;
        noise.white_phase_noise_sigma_rad =
            section.number("white_phase_noise_sigma_rad", noise.white_phase_noise_sigma_rad);
        noise.rotation_noise_arw_deg_per_sqrt_hr = section.number(
            "rotation_noise_arw_deg_per_sqrt_hr", noise.rotation_noise_arw_deg_per_sqrt_hr);
        noise.rate_random_walk_deg_per_hr_per_sqrt_hr =
            section.number("rate_random_walk_deg_per_hr_per_sqrt_hr",
                           noise.rate_random_walk_deg_per_hr_per_sqrt_hr);
        if (section.has("startup_transient")) {
            StrictObject transient = section.object("startup_transient");
            noise.startup_transient.amplitude_rad = transient.number(
                "amplitude_rad", noise.startup_transient.amplitude_rad);
            noise.startup_transient.decay_time_s =
                transient.number("decay_time_s", noise.startup_transient.decay_time_s);
            transient.finish();
        }
        section.finish();
    }

    // Zeeman half transit defaults to L/v of the configured instrument.
    config.models.zeeman = ZeemanModel::for_instrument(config.instrument);
    if (top.has("models")) {
        StrictObject section = top.object("models");
        if (section.has("zeeman")) {
            StrictObject zeeman = section.object("zeeman");
            auto& z = config.models.zeeman;
            z.quadratic_coefficient_kz_hz_per_t2 =
                zeeman.number("quadratic_coefficient_kz_hz_per_t2",
                              z.quadratic_coefficient_kz_hz_per_t2);
            z.half_transit_time_s = zeeman.number("half_transit_time_s",
                                                  z.half_transit_time_s);
            z.reversal_imperfection =
                zeeman.number("reversal_imperfection", z.reversal_imperfection);
            zeeman.finish();
        }
        if (section.has("intensity")) {
            StrictObject intensity = section.object("intensity");
            auto& m = config.models.intensity;
            m.coefficients_forward_rad = intensity.number_array<2>(
                "coefficients_forward_rad", m.coefficients_forward_rad);
            m.coefficients_reversed_rad = intensity.number_array<2>(
                "coefficients_reversed_rad", m.coefficients_reversed_rad);
            m.reversal_imbalance =
                intensity.number("reversal_imbalance", m.reversal_imbalance);
            intensity.finish();
        }
        section.finish();
    }

    if (top.has("aux_channels")) {
        const json& channels = top.array("aux_channels");
        for (std::size_t i = 0; i < channels.size(); ++i) {
            config.aux_channels.push_back(parse_aux_channel(
                channels[i], "aux_channels[" + std::to_string(i) + "]"));
        }
    }

    top.finish();

    // Module invariants, all checked before any command runs.
    config.instrument.validate();
    config.constants.validate();
    config.environment.validate();
    config.schedule.validate();
    config.noise.validate();
    config.models.zeeman.validate();
    config.models.intensity.validate();
    return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw config_error("cannot open config '" + path.string() + "'");
    }
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw config_error("config '" + path.string() + "' is not valid JSON: " + e.what());
    }
    try {
        return parse_run_config(root);
    } catch (const std::domain_error& e) {
        throw config_error("config '" + path.string() + "': " + e.what());
    }
}

} // namespace sagnac::cli
