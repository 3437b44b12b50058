#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <stdexcept>

#include "sagnac/errors.hpp"
#include "sagnac/phase_model.hpp"
#include "sagnac/simulator.hpp" // GaussianRng for randomized property checks
#include "sagnac/units.hpp"

using namespace sagnac;

namespace {

EnvironmentState quiet_env() {
    EnvironmentState env;
    env.acceleration_m_per_s2 = {0.0, 0.0, 0.0};
    return env;
}

EnvironmentState random_env(GaussianRng& rng) {
    EnvironmentState env;
    env.rotation_rate_rad_per_s = {1e-5 * rng.gaussian(), 1e-5 * rng.gaussian(),
                                   1e-4 * rng.gaussian()};
    env.acceleration_m_per_s2 = {0.1 * rng.gaussian(), 0.1 * rng.gaussian(),
                                 -9.80665 + 0.1 * rng.gaussian()};
    env.bias_field_half1_t = 2e-5 * rng.uniform01();
    env.bias_field_half2_t = 2e-5 * rng.uniform01();
    env.stray_field_t = 1e-6 * rng.uniform01();
    env.intensity_deviation = {0.02 * rng.gaussian(), 0.02 * rng.gaussian()};
    env.applied_rotation_bias_phase_rad = rng.gaussian();
    return env;
}

InstrumentConfig random_config(GaussianRng& rng) {
    InstrumentConfig config;
    config.transverse_velocity_h_m_per_s = 0.5 * rng.gaussian();
    config.transverse_velocity_v_m_per_s = 0.5 * rng.gaussian();
    config.center_pulse_offset_delta_m = 2e-3 * rng.gaussian();
    config.vertical_misalignment_angle_rad = 1e-4 * rng.gaussian();
    return config;
}

SystematicsModels symmetric_models() {
    SystematicsModels models;
    models.intensity.coefficients_forward_rad = {0.7, -0.4};
    models.intensity.coefficients_reversed_rad = {0.7, -0.4};
    return models;
}

} // namespace

TEST_CASE("default constants reproduce the instrument scale") {
    PhysicalConstants consts;
    CHECK(std::abs(consts.keff_rad_per_m / 1.474e7 - 1.0) < 0.01);

    InstrumentConfig config;
    EnvironmentState env = quiet_env();
    env.rotation_rate_rad_per_s.z = consts.omega_earth_rad_per_s;
    const double phi = sagnac_phase(config, env, consts);
    CHECK(std::abs(phi / 9.1 - 1.0) < 0.02); // 9.1 rad at Earth rate, within 2%
}

TEST_CASE("sagnac phase sign and linearity") {
    PhysicalConstants consts;
    InstrumentConfig config;
    EnvironmentState env = quiet_env();

    SUBCASE("zero rotation gives zero phase") {
        CHECK(sagnac_phase(config, env, consts) == 0.0);
    }

    env.rotation_rate_rad_per_s.z = consts.omega_earth_rad_per_s;
    const double reference = sagnac_phase(config, env, consts);

    SUBCASE("odd in area sign") {
        config.area_sign = -1;
        CHECK(sagnac_phase(config, env, consts) == -reference);
    }
    SUBCASE("odd in beam direction") {
        config.beam_direction = -1;
        CHECK(sagnac_phase(config, env, consts) == -reference);
    }
    SUBCASE("linear in rotation rate") {
        env.rotation_rate_rad_per_s.z *= 2.0;
        const double doubled = sagnac_phase(config, env, consts);
        CHECK(doubled == doctest::Approx(2.0 * reference).epsilon(1e-12));
    }
    SUBCASE("non-finite rotation rejected") {
        env.rotation_rate_rad_per_s.z = std::numeric_limits<double>::infinity();
        CHECK_THROWS_AS(sagnac_phase(config, env, consts), std::domain_error);
    }
}

TEST_CASE("center pulse displacement terms") {
    PhysicalConstants consts;
    InstrumentConfig config;

    SUBCASE("zero displacement zeroes every term") {
        GaussianRng rng(7);
        EnvironmentState env = random_env(rng);
        const auto terms = center_pulse_phase(config, env, consts);
        for (double t : terms) CHECK(t == 0.0);
    }

    SUBCASE("recoil term against an independent hand evaluation") {
        // Oracle arithmetic from raw constants, kept separate from the
        // library's defaults.
        const double hbar = 1.0546e-34;
        const double mass = 2.207e-25;
        const double keff = 4.0 * kPi / 852.347e-9;
        const double expected = hbar * keff * keff * 1e-3 / (mass * 220.0);
        CHECK(expected == doctest::Approx(0.47).epsilon(0.02)); // frozen magnitude

        config.center_pulse_offset_delta_m = 1e-3;
        EnvironmentState env = quiet_env();
        const auto terms = center_pulse_phase(config, env, consts);
        CHECK(terms[0] == doctest::Approx(expected).epsilon(1e-3));
        CHECK(terms[1] == 0.0);
        CHECK(terms[2] == 0.0);
        CHECK(terms[3] == 0.0);
    }

    SUBCASE("gravity term with g fully along k") {
        const double expected = 2.0 * 0.968 * (4.0 * kPi / 852.347e-9) * 9.80665 * 1e-6 /
                                (220.0 * 220.0);
        CHECK(expected == doctest::Approx(5.8e-3).epsilon(0.02)); // frozen magnitude

        config.center_pulse_offset_delta_m = 1e-6;
        EnvironmentState env = quiet_env();
        env.acceleration_m_per_s2 = {0.0, consts.g_m_per_s2, 0.0}; // pathological tilt
        const auto terms = center_pulse_phase(config, env, consts);
        CHECK(terms[3] == doctest::Approx(expected).epsilon(1e-6));
    }

    SUBCASE("linearity in displacement") {
        GaussianRng rng(11);
        EnvironmentState env = random_env(rng);
        config = random_config(rng);
        config.center_pulse_offset_delta_m = 5e-4;
        const auto base = center_pulse_phase(config, env, consts);
        config.center_pulse_offset_delta_m *= 2.0;
        const auto doubled = center_pulse_phase(config, env, consts);
        for (int i = 0; i < 4; ++i) {
            CHECK(doubled[i] == doctest::Approx(2.0 * base[i]).epsilon(1e-12));
        }
    }

    SUBCASE("zero atom speed is singular") {
        config.atom_speed_v_m_per_s = 0.0;
        EnvironmentState env = quiet_env();
        CHECK_THROWS_AS(center_pulse_phase(config, env, consts), std::domain_error);
    }
}

TEST_CASE("zeeman phase") {
    ZeemanModel model;
    EnvironmentState env = quiet_env();

    SUBCASE("symmetric halves cancel") {
        env.bias_field_half1_t = 3e-5;
        env.bias_field_half2_t = 3e-5;
        CHECK(zeeman_phase(model, env) == 0.0);
    }

    SUBCASE("stated arithmetic example") {
        model.quadratic_coefficient_kz_hz_per_t2 = 1.0;
        model.half_transit_time_s = 1.0;
        env.bias_field_half1_t = 1.0;
        env.bias_field_half2_t = 2.0;
        CHECK(zeeman_phase(model, env) ==
              doctest::Approx(2.0 * kPi * 3.0).epsilon(1e-14));
    }

    SUBCASE("parabolic in the applied field with a 0.5% mismatch") {
        // phi(B) = 2 pi Kz T ((2 eps + eps^2) B^2 + 2 eps s B) is exactly
        // quadratic; check curvature via second differences.
        env.stray_field_t = 1e-6;
        auto phi = [&](double b) {
            env.bias_field_half1_t = b;
            env.bias_field_half2_t = 1.005 * b;
            return zeeman_phase(model, env);
        };
        const double h = 1e-5;
        const double second_difference = phi(2 * h) - 2.0 * phi(h) + phi(0.0);
        // phi(B) = 2 pi Kz T (1.005^2 - 1) B^2 + linear; second difference of
        // a B^2 is 2 a h^2.
        const double quad_coeff = 2.0 * kPi * model.quadratic_coefficient_kz_hz_per_t2 *
                                  model.half_transit_time_s * (1.005 * 1.005 - 1.0);
        CHECK(second_difference ==
              doctest::Approx(2.0 * quad_coeff * h * h).epsilon(1e-9));
        // Third difference of a quadratic vanishes.
        const double third = phi(3 * h) - 3.0 * phi(2 * h) + 3.0 * phi(h) - phi(0.0);
        CHECK(std::abs(third) < 1e-12 * std::abs(phi(3 * h)));
    }
}

TEST_CASE("intensity phase") {
    IntensityCouplingModel model;
    EnvironmentState env = quiet_env();

    SUBCASE("nominal intensity gives zero") {
        model.coefficients_forward_rad = {1.0, 1.0};
        model.coefficients_reversed_rad = {1.0, 1.0};
        CHECK(intensity_phase(model, env, +1) == 0.0);
        CHECK(intensity_phase(model, env, -1) == 0.0);
    }

    SUBCASE("perfect reversal flips the coupling exactly") {
        model.reversal_imbalance = 0.0;
        model.coefficients_forward_rad = {0.3, -0.8};
        model.coefficients_reversed_rad = {0.3, -0.8};
        env.intensity_deviation = {0.013, -0.004};
        CHECK(intensity_phase(model, env, +1) == -intensity_phase(model, env, -1));
    }

    SUBCASE("area-even part equals the imbalance fraction") {
        model.coefficients_forward_rad = {1.0, 1.0};
        model.coefficients_reversed_rad = {1.0, 1.0};
        model.reversal_imbalance = 0.1;
        env.intensity_deviation = {0.01, 0.0};
        const double even =
            0.5 * (intensity_phase(model, env, +1) + intensity_phase(model, env, -1));
        CHECK(even == doctest::Approx(0.001).epsilon(1e-12));
    }

    SUBCASE("affine in the deviation") {
        model.coefficients_forward_rad = {0.5, 0.2};
        model.coefficients_reversed_rad = {0.4, 0.3};
        env.intensity_deviation = {0.01, 0.02};
        const double base = intensity_phase(model, env, +1);
        env.intensity_deviation = {0.02, 0.04};
        CHECK(intensity_phase(model, env, +1) ==
              doctest::Approx(2.0 * base).epsilon(1e-12));
    }
}

TEST_CASE("misalignment phase") {
    PhysicalConstants consts;
    InstrumentConfig config;
    EnvironmentState env; // gravity on

    SUBCASE("zero angle gives zero") {
        CHECK(misalignment_phase(config, env, consts) == 0.0);
    }

    SUBCASE("odd in the angle") {
        config.vertical_misalignment_angle_rad = 3.1e-5;
        const double plus = misalignment_phase(config, env, consts);
        config.vertical_misalignment_angle_rad = -3.1e-5;
        const double minus = misalignment_phase(config, env, consts);
        CHECK(plus == doctest::Approx(-minus).epsilon(1e-14));
        CHECK(plus != 0.0);
    }

    SUBCASE("angle solved for the 2% bound stays inside the small-angle domain") {
        // Bisection oracle: find theta with |phi(theta)| = 0.02 * 9.1 rad.
        const double target = 0.02 * 9.1;
        auto magnitude = [&](double theta) {
            config.vertical_misalignment_angle_rad = theta;
            return std::abs(misalignment_phase(config, env, consts));
        };
        double lo = 0.0, hi = 0.05;
        REQUIRE(magnitude(hi) > target);
        for (int i = 0; i < 200; ++i) {
            const double mid = 0.5 * (lo + hi);
            (magnitude(mid) < target ? lo : hi) = mid;
        }
        const double theta = 0.5 * (lo + hi);
        CHECK(theta < 0.1);
        CHECK(magnitude(theta) == doctest::Approx(target).epsilon(1e-9));
        CHECK(theta == doctest::Approx(3.25e-5).epsilon(0.05)); // frozen magnitude
    }

    SUBCASE("model refuses large angles") {
        config.vertical_misalignment_angle_rad = 0.1;
        CHECK_THROWS_AS(misalignment_phase(config, env, consts), std::domain_error);
    }
}

TEST_CASE("total phase budget") {
    PhysicalConstants consts;
    SystematicsModels models = symmetric_models();

    SUBCASE("all mechanisms off gives zero") {
        InstrumentConfig config;
        EnvironmentState env = quiet_env();
        const PhaseBudget budget = total_phase(config, env, models, consts);
        CHECK(budget.total_rad == 0.0);
    }

    SUBCASE("single mechanism: rotation only") {
        InstrumentConfig config;
        EnvironmentState env = quiet_env();
        env.rotation_rate_rad_per_s.z = consts.omega_earth_rad_per_s;
        const PhaseBudget budget = total_phase(config, env, models, consts);
        CHECK(budget.total_rad == budget.sagnac_rad);
        CHECK(budget.zeeman_rad == 0.0);
        CHECK(budget.intensity_rad == 0.0);
        CHECK(budget.misalignment_gravity_rad == 0.0);
        for (double t : budget.center_pulse_terms_rad) CHECK(t == 0.0);
    }

    SUBCASE("budget closure over randomized states") {
        GaussianRng rng(2024);
        for (int trial = 0; trial < 1000; ++trial) {
            InstrumentConfig config = random_config(rng);
            config.area_sign = rng.uniform01() < 0.5 ? +1 : -1;
            config.beam_direction = rng.uniform01() < 0.5 ? +1 : -1;
            EnvironmentState env = random_env(rng);
            const PhaseBudget budget = total_phase(config, env, models, consts);
            const double recomputed = budget.sagnac_rad + budget.center_pulse_terms_rad[0] +
                                      budget.center_pulse_terms_rad[1] +
                                      budget.center_pulse_terms_rad[2] +
                                      budget.center_pulse_terms_rad[3] + budget.zeeman_rad +
                                      budget.intensity_rad +
                                      budget.misalignment_gravity_rad +
                                      budget.applied_bias_rad;
            const double scale = std::max(1.0, std::abs(budget.total_rad));
            CHECK(std::abs(budget.total_rad - recomputed) <= 1e-12 * scale);
        }
    }

    SUBCASE("area antisymmetry is exact") {
        GaussianRng rng(99);
        for (int trial = 0; trial < 200; ++trial) {
            InstrumentConfig config = random_config(rng);
            EnvironmentState env = random_env(rng);
            config.area_sign = +1;
            const PhaseBudget fwd = total_phase(config, env, models, consts);
            config.area_sign = -1;
            const PhaseBudget rev = total_phase(config, env, models, consts);

            CHECK(fwd.sagnac_rad == -rev.sagnac_rad);
            CHECK(fwd.center_pulse_terms_rad[0] == rev.center_pulse_terms_rad[0]);
            for (int i = 1; i < 4; ++i) {
                CHECK(fwd.center_pulse_terms_rad[i] == -rev.center_pulse_terms_rad[i]);
            }
            CHECK(fwd.misalignment_gravity_rad == -rev.misalignment_gravity_rad);
            CHECK(fwd.zeeman_rad == rev.zeeman_rad); // imperfection defaulted to 0
            CHECK(fwd.applied_bias_rad == -rev.applied_bias_rad);
            // The imbalance fraction of the intensity coupling is invariant.
            const double even = 0.5 * (fwd.intensity_rad + rev.intensity_rad);
            const double coupling =
                models.intensity.coefficients_forward_rad[0] * env.intensity_deviation[0] +
                models.intensity.coefficients_forward_rad[1] * env.intensity_deviation[1];
            CHECK(even ==
                  doctest::Approx(models.intensity.reversal_imbalance * coupling)
                      .epsilon(1e-12));
        }
    }

    SUBCASE("beam antisymmetry: sagnac flips, acceleration term does not") {
        GaussianRng rng(123);
        InstrumentConfig config = random_config(rng);
        EnvironmentState env = random_env(rng);
        env.rotation_rate_rad_per_s = {0.0, 0.0, 1e-4}; // keep term 2 beam-clean
        config.beam_direction = +1;
        const PhaseBudget b1 = total_phase(config, env, models, consts);
        config.beam_direction = -1;
        const PhaseBudget b2 = total_phase(config, env, models, consts);
        CHECK(b1.sagnac_rad == -b2.sagnac_rad);
        CHECK(b1.center_pulse_terms_rad[3] == b2.center_pulse_terms_rad[3]);
        CHECK(b1.center_pulse_terms_rad[0] == b2.center_pulse_terms_rad[0]);
        CHECK(b1.center_pulse_terms_rad[1] == b2.center_pulse_terms_rad[1]);
    }

    SUBCASE("zeeman reversal imperfection leaves an area-odd residual") {
        SystematicsModels imperfect = models;
        imperfect.zeeman.reversal_imperfection = 1e-3;
        InstrumentConfig config;
        EnvironmentState env = quiet_env();
        env.bias_field_half1_t = 2e-5;
        env.bias_field_half2_t = 2.2e-5;
        const double base = zeeman_phase(imperfect.zeeman, env);
        config.area_sign = +1;
        const PhaseBudget fwd = total_phase(config, env, imperfect, consts);
        config.area_sign = -1;
        const PhaseBudget rev = total_phase(config, env, imperfect, consts);
        CHECK(0.5 * (fwd.zeeman_rad - rev.zeeman_rad) ==
              doctest::Approx(1e-3 * base).epsilon(1e-12));
        CHECK(0.5 * (fwd.zeeman_rad + rev.zeeman_rad) ==
              doctest::Approx(base).epsilon(1e-12));
    }

    SUBCASE("applied bias nulls the rotation phase in both configurations") {
        InstrumentConfig config;
        EnvironmentState env = quiet_env();
        env.rotation_rate_rad_per_s.z = consts.omega_earth_rad_per_s;
        env.applied_rotation_bias_phase_rad = sagnac_phase(config, env, consts);
        for (int area : {+1, -1}) {
            config.area_sign = area;
            const PhaseBudget budget = total_phase(config, env, models, consts);
            CHECK(std::abs(budget.total_rad) < 1e-12);
        }
    }
}

TEST_CASE("detection signal and inversion") {
    SUBCASE("fringe extrema") {
        CHECK(detection_signal(0.0, 1.0, 0.5) == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(detection_signal(kPi, 1.0, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(detection_signal(kPi / 2.0, 1.0, 0.5) == doctest::Approx(0.5).epsilon(1e-15));
    }

    SUBCASE("stated example near mid-fringe") {
        const double p = detection_signal(kPi / 2.0 + 0.1, 0.4, 0.5);
        CHECK(p == doctest::Approx(0.5 + 0.2 * std::sin(0.1)).epsilon(1e-12));
        CHECK(p == doctest::Approx(0.51997).epsilon(1e-4));
    }

    SUBCASE("population stays within [0, 1]") {
        for (double phase = -10.0; phase <= 10.0; phase += 0.37) {
            const double p = detection_signal(phase, 0.8, 0.5);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
    }

    SUBCASE("contract violations") {
        CHECK_THROWS_AS(detection_signal(0.0, 0.0, 0.5), std::domain_error);
        CHECK_THROWS_AS(detection_signal(0.0, 1.2, 0.5), std::domain_error);
        CHECK_THROWS_AS(detection_signal(0.0, 0.8, 0.1), std::domain_error);
    }

    SUBCASE("mid-fringe inversion") {
        CHECK(phase_from_signal(0.5, 0.4, 0.5) == doctest::Approx(kPi / 2.0).epsilon(1e-14));
    }

    SUBCASE("round trip across the open branch") {
        const double contrast = 0.4;
        const double offset = 0.5;
        for (double phase = 0.05; phase <= kPi - 0.05; phase += 0.0137) {
            const double p = detection_signal(phase, contrast, offset);
            CHECK(std::abs(phase_from_signal(p, contrast, offset) - phase) < 1e-10);
        }
        // Stated example value.
        const double p = detection_signal(1.2, contrast, offset);
        CHECK(phase_from_signal(p, contrast, offset) ==
              doctest::Approx(1.2).epsilon(1e-12));
    }

    SUBCASE("saturation flags loss of fringe lock") {
        CHECK_THROWS_AS(phase_from_signal(0.95, 0.4, 0.5), saturation_error);
        CHECK_THROWS_AS(phase_from_signal(0.05, 0.4, 0.5), saturation_error);
    }

    SUBCASE("branch hint selects the mirrored solution") {
        const double p = detection_signal(1.2, 0.4, 0.5);
        CHECK(phase_from_signal(p, 0.4, 0.5, -kPi / 2.0) ==
              doctest::Approx(-1.2).epsilon(1e-12));
        CHECK(phase_from_signal(p, 0.4, 0.5, 2.0 * kPi + 1.0) ==
              doctest::Approx(2.0 * kPi + 1.2).epsilon(1e-12));
    }
}

TEST_CASE("configuration invariants") {
    InstrumentConfig config;
    SUBCASE("pulse offset must stay inside the baseline") {
        config.center_pulse_offset_delta_m = 1.0;
        CHECK_THROWS_AS(config.validate(), std::domain_error);
    }
    SUBCASE("signs must be unit") {
        config.area_sign = 2;
        CHECK_THROWS_AS(config.validate(), std::domain_error);
    }
    SUBCASE("constants must be positive") {
        PhysicalConstants consts;
        consts.atom_mass_kg = -1.0;
        CHECK_THROWS_AS(consts.validate(), std::domain_error);
    }
}
