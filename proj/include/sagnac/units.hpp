#pragma once

#include <numbers>

namespace sagnac {

// Rotation-rate and angle unit conversions. Everything internal is rad and
// rad/s; deg/hr and deg/sqrt(hr) appear only at I/O boundaries.

inline constexpr double kPi = std::numbers::pi_v<double>;

inline constexpr double deg_per_hr_to_rad_per_s(double deg_per_hr) {
    return deg_per_hr * kPi / (180.0 * 3600.0);
}

inline constexpr double rad_per_s_to_deg_per_hr(double rad_per_s) {
    return rad_per_s * (180.0 * 3600.0) / kPi;
}

// ARW: rad/sqrt(s) <-> deg/sqrt(hr). One deg/sqrt(hr) = (pi/180)/60 rad/sqrt(s).
inline constexpr double arw_deg_sqrt_hr_to_rad_sqrt_s(double arw) {
    return arw * (kPi / 180.0) / 60.0;
}

inline constexpr double arw_rad_sqrt_s_to_deg_sqrt_hr(double arw) {
    return arw * (180.0 / kPi) * 60.0;
}

// Rate random walk: (deg/hr)/sqrt(hr) -> (rad/s)/sqrt(s).
inline constexpr double rrw_deg_hr_sqrt_hr_to_rad_s_sqrt_s(double rrw) {
    return deg_per_hr_to_rad_per_s(rrw) / 60.0;
}

} // namespace sagnac
