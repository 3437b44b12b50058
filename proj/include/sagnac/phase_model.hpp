#pragma once

#include <array>
#include <cmath>

#include "sagnac/units.hpp"

namespace sagnac {

// Geometry convention used throughout:
//   x — atomic-beam axis (longitudinal; beam_direction flips the atom velocity)
//   y — Raman beam axis (the effective wave vector k_eff lies along ±y;
//       area_sign flips it)
//   z — vertical, normal to the interferometer plane (the rotation signal is
//       the z component; gravity is nominally -z)

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

inline double dot(const Vec3& a, const Vec3& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

inline Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

/// Fundamental constants for the cesium instrument. k_eff is the two-photon
/// effective wave number, 4*pi/lambda for counter-propagating Raman beams.
struct PhysicalConstants {
    double hbar_j_s = 1.054571817e-34;
    double atom_mass_kg = 2.20694695e-25;                       // cesium-133
    double keff_rad_per_m = 4.0 * kPi / 852.347e-9;             // ~1.4743e7
    double omega_earth_rad_per_s = deg_per_hr_to_rad_per_s(15.0);
    double g_m_per_s2 = 9.80665;

    void validate() const; // throws std::domain_error
};

/// Static geometry and per-shot configuration of the interferometer.
struct InstrumentConfig {
    double pulse_spacing_l_m = 0.968;
    double atom_speed_v_m_per_s = 220.0; // effective longitudinal speed
    double transverse_velocity_h_m_per_s = 0.0; // along the Raman axis (y)
    double transverse_velocity_v_m_per_s = 0.0; // vertical (z)
    double center_pulse_offset_delta_m = 0.0;   // pi-pulse displacement
    int area_sign = +1;                         // +1 nominal, -1 reversed
    int beam_direction = +1;                    // which counter-propagating beam
    double vertical_misalignment_angle_rad = 0.0;

    void validate() const; // throws std::domain_error
};

/// Environment seen by the atoms during one evaluation of the phase model.
struct EnvironmentState {
    Vec3 rotation_rate_rad_per_s{0.0, 0.0, 0.0};
    Vec3 acceleration_m_per_s2{0.0, 0.0, -9.80665}; // gravity + platform
    double bias_field_half1_t = 0.0;
    double bias_field_half2_t = 0.0;
    double stray_field_t = 0.0; // adds to both halves
    std::array<double, 2> intensity_deviation{0.0, 0.0}; // fractional, per laser
    double applied_rotation_bias_phase_rad = 0.0;        // electro-optic bias

    void validate() const; // throws std::domain_error
};

/// Quadratic Zeeman shift of the clock transition, piecewise-constant field
/// per interferometer half. reversal_imperfection is the area-odd fraction of
/// the shift that survives area reversal (0 = perfect reversal).
struct ZeemanModel {
    double quadratic_coefficient_kz_hz_per_t2 = 4.2745e10; // cesium clock value
    double half_transit_time_s = 0.968 / 220.0;            // L / v
    double reversal_imperfection = 0.0;

    static ZeemanModel for_instrument(const InstrumentConfig& config);
    void validate() const;
};

/// Empirical affine leak of fractional Raman-intensity deviations into phase.
/// Coefficients are rad per unit deviation, per laser and per area
/// configuration; reversal_imbalance is the fraction of the coupling that does
/// not flip with area_sign (the area-even part).
struct IntensityCouplingModel {
    std::array<double, 2> coefficients_forward_rad{0.0, 0.0};
    std::array<double, 2> coefficients_reversed_rad{0.0, 0.0};
    double reversal_imbalance = 0.1;

    void validate() const;
};

struct SystematicsModels {
    ZeemanModel zeeman;
    IntensityCouplingModel intensity;
};

/// Per-mechanism decomposition of the interferometer phase. total is the sum
/// of every other field.
struct PhaseBudget {
    double sagnac_rad = 0.0;
    std::array<double, 4> center_pulse_terms_rad{0.0, 0.0, 0.0, 0.0};
    double zeeman_rad = 0.0;
    double intensity_rad = 0.0;
    double misalignment_gravity_rad = 0.0;
    double applied_bias_rad = 0.0;
    double total_rad = 0.0;

    double field_sum() const {
        double s = sagnac_rad;
        for (double t : center_pulse_terms_rad) s += t;
        return s + zeeman_rad + intensity_rad + misalignment_gravity_rad + applied_bias_rad;
    }
};

/// Radians of phase per unit rotation rate (rad/s): 2 k_eff L^2 / v.
double scale_factor(const InstrumentConfig& config, const PhysicalConstants& consts);

/// Rotation-induced phase: area_sign * beam_direction * 2 k L^2 Omega_z / v.
double sagnac_phase(const InstrumentConfig& config, const EnvironmentState& env,
                    const PhysicalConstants& consts);

/// The four center-pulse displacement terms, each linear in delta. Term 0 is
/// even in area_sign (it goes as k^2); terms 1-3 flip with k.
std::array<double, 4> center_pulse_phase(const InstrumentConfig& config,
                                         const EnvironmentState& env,
                                         const PhysicalConstants& consts);

/// Quadratic Zeeman phase between the two halves, even in area_sign.
double zeeman_phase(const ZeemanModel& model, const EnvironmentState& env);

/// Intensity-deviation phase for the given area configuration.
double intensity_phase(const IntensityCouplingModel& model, const EnvironmentState& env,
                       int area_sign);

/// Out-of-plane Raman misalignment shift, small-angle model, valid for
/// |theta| < 0.1 rad. Odd in theta, area_sign and beam_direction.
double misalignment_phase(const InstrumentConfig& config, const EnvironmentState& env,
                          const PhysicalConstants& consts);

/// All mechanisms plus the applied rotation bias (entered area-odd so a
/// positive bias nulls a positive rotation in both configurations).
PhaseBudget total_phase(const InstrumentConfig& config, const EnvironmentState& env,
                        const SystematicsModels& models, const PhysicalConstants& consts);

/// Fringe read-out: P = offset - (contrast/2) cos(phase).
double detection_signal(double phase_rad, double contrast, double offset);

/// Mid-fringe inversion of detection_signal. Returns the solution closest to
/// branch_hint_rad (default pi/2, the (0, pi) branch). Throws saturation_error
/// when the population lies outside the fringe range.
double phase_from_signal(double population, double contrast, double offset,
                         double branch_hint_rad = kPi / 2.0);

} // namespace sagnac
