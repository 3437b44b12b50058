#include "sagnac/phase_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "sagnac/errors.hpp"

namespace sagnac {

namespace {

void require_finite(double v, const char* name) {
    if (!std::isfinite(v)) {
        throw std::domain_error(std::string(name) + " must be finite");
    }
}

void require_finite(const Vec3& v, const char* name) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z)) {
        throw std::domain_error(std::string(name) + " must be finite");
    }
}

} // namespace

void PhysicalConstants::validate() const {
    require_finite(hbar_j_s, "hbar_j_s");
    require_finite(atom_mass_kg, "atom_mass_kg");
    require_finite(keff_rad_per_m, "keff_rad_per_m");
    require_finite(omega_earth_rad_per_s, "omega_earth_rad_per_s");
    require_finite(g_m_per_s2, "g_m_per_s2");
    if (hbar_j_s <= 0.0 || atom_mass_kg <= 0.0 || keff_rad_per_m <= 0.0 ||
        omega_earth_rad_per_s <= 0.0 || g_m_per_s2 <= 0.0) {
        throw std::domain_error("physical constants must be strictly positive");
    }
}

void InstrumentConfig::validate() const {
    require_finite(pulse_spacing_l_m, "pulse_spacing_l_m");
    require_finite(atom_speed_v_m_per_s, "atom_speed_v_m_per_s");
    require_finite(transverse_velocity_h_m_per_s, "transverse_velocity_h_m_per_s");
    require_finite(transverse_velocity_v_m_per_s, "transverse_velocity_v_m_per_s");
    require_finite(center_pulse_offset_delta_m, "center_pulse_offset_delta_m");
    require_finite(vertical_misalignment_angle_rad, "vertical_misalignment_angle_rad");
    if (pulse_spacing_l_m <= 0.0) {
        throw std::domain_error("pulse_spacing_l_m must be > 0");
    }
    if (atom_speed_v_m_per_s <= 0.0) {
        throw std::domain_error("atom_speed_v_m_per_s must be > 0");
    }
    if (area_sign != 1 && area_sign != -1) {
        throw std::domain_error("area_sign must be +1 or -1");
    }
    if (beam_direction != 1 && beam_direction != -1) {
        throw std::domain_error("beam_direction must be +1 or -1");
    }
    if (std::abs(center_pulse_offset_delta_m) >= pulse_spacing_l_m) {
        throw std::domain_error("|center_pulse_offset_delta_m| must be < pulse_spacing_l_m");
    }
}

void EnvironmentState::validate() const {
    require_finite(rotation_rate_rad_per_s, "rotation_rate_rad_per_s");
    require_finite(acceleration_m_per_s2, "acceleration_m_per_s2");
    require_finite(bias_field_half1_t, "bias_field_half1_t");
    require_finite(bias_field_half2_t, "bias_field_half2_t");
    require_finite(stray_field_t, "stray_field_t");
    require_finite(intensity_deviation[0], "intensity_deviation[0]");
    require_finite(intensity_deviation[1], "intensity_deviation[1]");
    require_finite(applied_rotation_bias_phase_rad, "applied_rotation_bias_phase_rad");
}

ZeemanModel ZeemanModel::for_instrument(const InstrumentConfig& config) {
    config.validate();
    ZeemanModel model;
    model.half_transit_time_s = config.pulse_spacing_l_m / config.atom_speed_v_m_per_s;
    return model;
}

void ZeemanModel::validate() const {
    require_finite(quadratic_coefficient_kz_hz_per_t2, "quadratic_coefficient_kz_hz_per_t2");
    require_finite(half_transit_time_s, "half_transit_time_s");
    require_finite(reversal_imperfection, "reversal_imperfection");
    if (quadratic_coefficient_kz_hz_per_t2 <= 0.0) {
        throw std::domain_error("quadratic_coefficient_kz_hz_per_t2 must be > 0");
    }
    if (half_transit_time_s <= 0.0) {
        throw std::domain_error("half_transit_time_s must be > 0");
    }
    if (reversal_imperfection < 0.0 || reversal_imperfection >= 1.0) {
        throw std::domain_error("reversal_imperfection must lie in [0, 1)");
    }
}

void IntensityCouplingModel::validate() const {
    for (double c : coefficients_forward_rad) require_finite(c, "coefficients_forward_rad");
    for (double c : coefficients_reversed_rad) require_finite(c, "coefficients_reversed_rad");
    require_finite(reversal_imbalance, "reversal_imbalance");
    if (reversal_imbalance < 0.0 || reversal_imbalance > 1.0) {
        throw std::domain_error("reversal_imbalance must lie in [0, 1]");
    }
}

double scale_factor(const InstrumentConfig& config, const PhysicalConstants& consts) {
    config.validate();
    consts.validate();
    const double l = config.pulse_spacing_l_m;
    return 2.0 * consts.keff_rad_per_m * l * l / config.atom_speed_v_m_per_s;
}

double sagnac_phase(const InstrumentConfig& config, const EnvironmentState& env,
                    const PhysicalConstants& consts) {
    env.validate();
    return config.area_sign * config.beam_direction * scale_factor(config, consts) *
           env.rotation_rate_rad_per_s.z;
}

std::array<double, 4> center_pulse_phase(const InstrumentConfig& config,
                                         const EnvironmentState& env,
                                         const PhysicalConstants& consts) {
    config.validate();
    env.validate();
    consts.validate();

    const double v = config.atom_speed_v_m_per_s;
    const double l = config.pulse_spacing_l_m;
    const double delta = config.center_pulse_offset_delta_m;
    const double kmag = consts.keff_rad_per_m;

    // Area reversal flips the recoil direction, i.e. the k vector, not the
    // formula; the per-term parities then emerge from the dot products.
    const Vec3 k{0.0, config.area_sign * kmag, 0.0};
    const Vec3 vel{config.beam_direction * v, config.transverse_velocity_h_m_per_s,
                   config.transverse_velocity_v_m_per_s};

    std::array<double, 4> terms{};
    terms[0] = consts.hbar_j_s * kmag * kmag / (consts.atom_mass_kg * v) * delta;
    terms[1] = 2.0 * dot(k, vel) / v * delta;
    terms[2] = 4.0 * l * dot(k, cross(env.rotation_rate_rad_per_s, vel)) / (v * v) * delta;
    terms[3] = 2.0 * l * dot(k, env.acceleration_m_per_s2) / (v * v) * delta;
    return terms;
}

double zeeman_phase(const ZeemanModel& model, const EnvironmentState& env) {
    model.validate();
    env.validate();
    const double b1 = env.bias_field_half1_t + env.stray_field_t;
    const double b2 = env.bias_field_half2_t + env.stray_field_t;
    return 2.0 * kPi * model.quadratic_coefficient_kz_hz_per_t2 * (b2 * b2 - b1 * b1) *
           model.half_transit_time_s;
}

double intensity_phase(const IntensityCouplingModel& model, const EnvironmentState& env,
                       int area_sign) {
    model.validate();
    env.validate();
    if (area_sign != 1 && area_sign != -1) {
        throw std::domain_error("area_sign must be +1 or -1");
    }
    const auto& coeff =
        (area_sign > 0) ? model.coefficients_forward_rad : model.coefficients_reversed_rad;
    const double coupling = coeff[0] * env.intensity_deviation[0] +
                            coeff[1] * env.intensity_deviation[1];
    const double even_part = model.reversal_imbalance * coupling;
    const double odd_part = area_sign * (1.0 - model.reversal_imbalance) * coupling;
    return even_part + odd_part;
}

double misalignment_phase(const InstrumentConfig& config, const EnvironmentState& env,
                          const PhysicalConstants& consts) {
    config.validate();
    env.validate();
    consts.validate();
    const double theta = config.vertical_misalignment_angle_rad;
    if (std::abs(theta) >= 0.1) {
        throw std::domain_error("small-angle misalignment model requires |theta| < 0.1 rad");
    }
    const double v = config.atom_speed_v_m_per_s;
    const double l = config.pulse_spacing_l_m;
    // Out-of-plane k component k*sin(theta) picks up gravity over the full
    // baseline plus a Doppler-like vertical-velocity piece; survives both
    // area reversal and beam subtraction.
    return config.area_sign * config.beam_direction * 2.0 * l * consts.keff_rad_per_m *
           std::sin(theta) *
           (env.acceleration_m_per_s2.z * l / (v * v) +
            config.transverse_velocity_v_m_per_s / v);
}

PhaseBudget total_phase(const InstrumentConfig& config, const EnvironmentState& env,
                        const SystematicsModels& models, const PhysicalConstants& consts) {
    PhaseBudget budget;
    budget.sagnac_rad = sagnac_phase(config, env, consts);
    budget.center_pulse_terms_rad = center_pulse_phase(config, env, consts);
    // Imperfect reversal leaves a configurable area-odd fraction of the
    // otherwise area-even Zeeman shift.
    budget.zeeman_rad = zeeman_phase(models.zeeman, env) *
                        (1.0 + config.area_sign * models.zeeman.reversal_imperfection);
    budget.intensity_rad = intensity_phase(models.intensity, env, config.area_sign);
    budget.misalignment_gravity_rad = misalignment_phase(config, env, consts);
    budget.applied_bias_rad = -config.area_sign * env.applied_rotation_bias_phase_rad;
    budget.total_rad = budget.field_sum();
    return budget;
}

double detection_signal(double phase_rad, double contrast, double offset) {
    if (!std::isfinite(phase_rad) || !std::isfinite(contrast) || !std::isfinite(offset)) {
        throw std::domain_error("detection_signal arguments must be finite");
    }
    if (contrast <= 0.0 || contrast > 1.0) {
        throw std::domain_error("contrast must lie in (0, 1]");
    }
    if (offset < contrast / 2.0 || offset > 1.0 - contrast / 2.0) {
        throw std::domain_error("offset must lie in [contrast/2, 1 - contrast/2]");
    }
    return offset - 0.5 * contrast * std::cos(phase_rad);
}

double phase_from_signal(double population, double contrast, double offset,
                         double branch_hint_rad) {
    if (!std::isfinite(population) || !std::isfinite(branch_hint_rad)) {
        throw std::domain_error("phase_from_signal arguments must be finite");
    }
    if (contrast <= 0.0 || contrast > 1.0) {
        throw std::domain_error("contrast must lie in (0, 1]");
    }
    if (offset < contrast / 2.0 || offset > 1.0 - contrast / 2.0) {
        throw std::domain_error("offset must lie in [contrast/2, 1 - contrast/2]");
    }
    const double arg = 2.0 * (offset - population) / contrast;
    if (std::abs(arg) > 1.0) {
        throw saturation_error("population outside fringe range: lost fringe lock");
    }
    const double principal = std::acos(arg); // in [0, pi]
    // cos is even and 2*pi periodic: candidates are +-principal + 2*pi*n.
    const double two_pi = 2.0 * kPi;
    const double n = std::round((branch_hint_rad - principal) / two_pi);
    const double m = std::round((branch_hint_rad + principal) / two_pi);
    const double up = principal + two_pi * n;
    const double down = -principal + two_pi * m;
    return std::abs(up - branch_hint_rad) <= std::abs(down - branch_hint_rad) ? up : down;
}

} // namespace sagnac
