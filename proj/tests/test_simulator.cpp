#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sagnac/dataset_io.hpp"
#include "sagnac/errors.hpp"
#include "sagnac/simulator.hpp"
#include "sagnac/stability.hpp"

using namespace sagnac;

namespace {

struct Rig {
    InstrumentConfig config;
    Schedule schedule;
    std::vector<AuxChannelSpec> aux;
    NoiseSpec noise;
    SystematicsModels models;
    EnvironmentState env;
    PhysicalConstants consts;

    Rig() {
        env.acceleration_m_per_s2 = {0.0, 0.0, -consts.g_m_per_s2};
        schedule.sample_period_s = 1.0;
        schedule.chop_period_s = 10.0;
        schedule.duration_s = 200.0;
        schedule.beams = BeamMode::single;
    }

    Dataset run(std::uint64_t seed = 1) const {
        return simulate(config, schedule, aux, noise, models, env, consts, seed);
    }
};

AuxChannelSpec walk_channel(const std::string& name, double sigma, double coupling,
                            CouplingParity parity) {
    AuxChannelSpec spec;
    spec.name = name;
    spec.process = AuxProcessKind::random_walk;
    spec.step_sigma_per_sqrt_s = sigma;
    spec.coupling_rad_per_unit = coupling;
    spec.couples_to = parity;
    return spec;
}

AuxChannelSpec ou_channel(const std::string& name, double sigma, double tau,
                          double coupling, CouplingParity parity) {
    AuxChannelSpec spec;
    spec.name = name;
    spec.process = AuxProcessKind::ornstein_uhlenbeck;
    spec.sigma = sigma;
    spec.correlation_time_s = tau;
    spec.coupling_rad_per_unit = coupling;
    spec.couples_to = parity;
    return spec;
}

AuxChannelSpec sine_channel(const std::string& name, double amplitude, double period,
                            double coupling, CouplingParity parity) {
    AuxChannelSpec spec;
    spec.name = name;
    spec.process = AuxProcessKind::sinusoid;
    spec.amplitude = amplitude;
    spec.period_s = period;
    spec.coupling_rad_per_unit = coupling;
    spec.couples_to = parity;
    return spec;
}

} // namespace

TEST_CASE("noiseless quiet instrument produces identically zero channels") {
    Rig rig;
    rig.env.acceleration_m_per_s2 = {0.0, 0.0, 0.0};
    AuxChannelSpec idle;
    idle.name = "reference";
    idle.process = AuxProcessKind::constant;
    idle.value = 1.0;
    idle.coupling_rad_per_unit = 0.0;
    rig.aux.push_back(idle);
    const Dataset data = rig.run();
    REQUIRE(data.rows() == 20);
    for (const auto& channel : data.phases) {
        for (double v : channel.values_rad) CHECK(v == 0.0);
    }
    for (double v : data.aux[0].values) CHECK(v == 1.0);
}

TEST_CASE("earth rotation appears at +-9.1 rad across the chop") {
    Rig rig;
    rig.env.rotation_rate_rad_per_s.z = rig.consts.omega_earth_rad_per_s;
    const Dataset data = rig.run();
    for (double v : data.phase(0, +1)) CHECK(std::abs(v / 9.1 - 1.0) < 0.02);
    for (double v : data.phase(0, -1)) CHECK(std::abs(v / -9.1 - 1.0) < 0.02);
}

TEST_CASE("identical seeds give identical datasets, different seeds differ") {
    Rig rig;
    rig.noise.white_phase_noise_sigma_rad = 1e-3;
    rig.noise.rotation_noise_arw_deg_per_sqrt_hr = 1e-5;
    rig.aux.push_back(walk_channel("temp", 1e-3, 0.02, CouplingParity::both_areas_odd));
    rig.schedule.beams = BeamMode::dual;

    const Dataset a = rig.run(42);
    const Dataset b = rig.run(42);
    CHECK(a == b);

    std::ostringstream bytes_a, bytes_b;
    write_dataset(a, bytes_a);
    write_dataset(b, bytes_b);
    CHECK(bytes_a.str() == bytes_b.str());

    const Dataset c = rig.run(43);
    CHECK(a.phase(0, +1) != c.phase(0, +1));
}

TEST_CASE("schedule integrity") {
    Rig rig;
    rig.schedule.duration_s = 197.0; // not a multiple of the chop period
    const Dataset data = rig.run();
    CHECK(data.rows() == 19); // floor(197 / 10)
    CHECK(data.phases.size() == 2);
    for (const auto& channel : data.phases) {
        CHECK(channel.values_rad.size() == data.rows());
    }
    CHECK(data.time_s.front() == 0.0);
    CHECK(data.time_s[1] - data.time_s[0] == doctest::Approx(10.0));

    rig.schedule.beams = BeamMode::dual;
    const Dataset dual = rig.run();
    CHECK(dual.phases.size() == 4);
}

TEST_CASE("invalid run specifications fail before sampling") {
    Rig rig;
    SUBCASE("chop shorter than two samples") {
        rig.schedule.chop_period_s = 1.0;
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("duration shorter than one cycle") {
        rig.schedule.duration_s = 5.0;
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("chop must be an even multiple of the sample period") {
        rig.schedule.chop_period_s = 15.0;
        rig.schedule.sample_period_s = 2.0;
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("duplicate aux names") {
        rig.aux.push_back(walk_channel("temp", 1e-3, 0.0, CouplingParity::both_areas_even));
        rig.aux.push_back(walk_channel("temp", 1e-3, 0.0, CouplingParity::both_areas_even));
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("aux names must be column-safe") {
        rig.aux.push_back(walk_channel("bad name", 1e-3, 0.0,
                                       CouplingParity::both_areas_even));
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("negative noise rejected") {
        rig.noise.white_phase_noise_sigma_rad = -1.0;
        CHECK_THROWS_AS(rig.run(), config_error);
    }
    SUBCASE("negative total bias field rejected in nominal operation") {
        rig.env.bias_field_half1_t = 1e-6;
        rig.env.stray_field_t = -2e-6;
        CHECK_THROWS_AS(rig.run(), config_error);
    }
}

TEST_CASE("truth fidelity: noiseless couplings are recovered by regression") {
    Rig rig;
    rig.schedule.beams = BeamMode::dual;
    rig.schedule.duration_s = 2000.0;
    rig.env.rotation_rate_rad_per_s.z = 1e-5;
    rig.aux.push_back(walk_channel("temp_rack", 5e-3, 0.021, CouplingParity::both_areas_odd));
    rig.aux.push_back(
        ou_channel("laser1_power", 0.01, 120.0, -0.63, CouplingParity::both_areas_odd));
    rig.aux.push_back(
        sine_channel("bench_tilt", 0.4, 700.0, 0.0105, CouplingParity::both_areas_even));
    const Dataset data = rig.run(7);

    const auto beam0 = combine_area(data.phase(0, +1), data.phase(0, -1));
    const auto beam1 = combine_area(data.phase(1, +1), data.phase(1, -1));
    const auto combined = combine_beams(beam0.rotation_like, beam1.rotation_like);

    // Rotation channel: odd couplings at full strength, even coupling absent.
    // Dataset aux channels are in canonical alphabetical order.
    const auto rot = detrend_regression(combined, data.aux);
    REQUIRE(rot.model.channel_names ==
            std::vector<std::string>{"bench_tilt", "laser1_power", "temp_rack"});
    CHECK(rot.model.coefficients[2] == doctest::Approx(0.021).epsilon(1e-9));
    CHECK(rot.model.coefficients[1] == doctest::Approx(-0.63).epsilon(1e-9));
    CHECK(std::abs(rot.model.coefficients[0]) < 1e-9);
    CHECK(rot.model.residual_rms < 1e-9);

    // Bias channel: even coupling at full strength. Odd couplings leak their
    // half-cycle difference into each beam's bias series with opposite signs,
    // so the beam-averaged bias channel recovers the even coupling exactly.
    std::vector<double> bias_avg(data.rows());
    for (std::size_t i = 0; i < bias_avg.size(); ++i) {
        bias_avg[i] = 0.5 * (beam0.bias_like[i] + beam1.bias_like[i]);
    }
    const auto bias = detrend_regression(bias_avg, data.aux);
    CHECK(bias.model.coefficients[0] == doctest::Approx(0.0105).epsilon(1e-9));
    CHECK(std::abs(bias.model.coefficients[2]) < 1e-9);

    // The truth block records exactly what was configured.
    CHECK(data.truth_value("aux.temp_rack.coupling_rad_per_unit") ==
          doctest::Approx(0.021));
    CHECK(*data.truth_value("schedule.chop_period_s") == 10.0);
    CHECK(*data.truth_value("scale_factor_rad_per_rad_per_s") ==
          doctest::Approx(scale_factor(rig.config, rig.consts)).epsilon(1e-15));
}

TEST_CASE("white phase noise calibration at the channel level") {
    Rig rig;
    rig.schedule.sample_period_s = 1.0;
    rig.schedule.chop_period_s = 2.0;
    rig.schedule.duration_s = 2.0e5; // 1e5 cycles
    rig.noise.white_phase_noise_sigma_rad = 2.5e-3;
    const Dataset data = rig.run(3);
    REQUIRE(data.rows() == 100000);
    for (int area : {+1, -1}) {
        const auto& values = data.phase(0, area);
        double mean = 0.0;
        for (double v : values) mean += v;
        mean /= static_cast<double>(values.size());
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        const double sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        CHECK(sd == doctest::Approx(2.5e-3).epsilon(0.03));
    }
}

TEST_CASE("startup transient is area-even and cancels in the rotation channel") {
    Rig rig;
    rig.noise.startup_transient = {0.5, 60.0};
    const Dataset data = rig.run();
    const auto combo = combine_area(data.phase(0, +1), data.phase(0, -1));
    // The transient lands in the bias-like channel and decays.
    CHECK(combo.bias_like.front() > 10.0 * std::abs(combo.bias_like.back()));
    for (double v : combo.rotation_like) CHECK(std::abs(v) < 0.02); // chop-rate leakage only
    CHECK(combo.bias_like.front() > 0.2);
}

TEST_CASE("apply_rotation_bias") {
    Rig rig;
    rig.env.rotation_rate_rad_per_s.z = rig.consts.omega_earth_rad_per_s;
    const Dataset data = rig.run();

    SUBCASE("zero bias is the identity") {
        const Dataset same = apply_rotation_bias(data, 0.0);
        CHECK(same.phase(0, +1) == data.phase(0, +1));
        CHECK(same.phase(0, -1) == data.phase(0, -1));
    }

    SUBCASE("biasing at 9.1 rad nulls the earth-rate dataset") {
        const Dataset nulled = apply_rotation_bias(data, 9.1);
        for (double v : nulled.phase(0, +1)) CHECK(std::abs(v) < 0.05);
        for (double v : nulled.phase(0, -1)) CHECK(std::abs(v) < 0.05);
        CHECK(*nulled.truth_value("bias.applied_rad") == 9.1);
    }

    SUBCASE("bias then anti-bias restores the original") {
        const Dataset back = apply_rotation_bias(apply_rotation_bias(data, 1.7), -1.7);
        const auto& original = data.phase(0, +1);
        const auto& restored = back.phase(0, +1);
        for (std::size_t i = 0; i < original.size(); ++i) {
            CHECK(std::abs(restored[i] - original[i]) <= 1e-12);
        }
        CHECK(std::abs(*back.truth_value("bias.applied_rad")) < 1e-15);
    }
}

TEST_CASE("sample-level rotation noise averages like white noise") {
    // With only ARW configured, the rotation-like series is the cycle mean of
    // white rate noise scaled by the instrument: variance ARW_rad^2 / T_c.
    Rig rig;
    rig.schedule.sample_period_s = 1.0;
    rig.schedule.chop_period_s = 4.0;
    rig.schedule.duration_s = 4.0e4;
    rig.noise.rotation_noise_arw_deg_per_sqrt_hr = 5e-6;
    const Dataset data = rig.run(9);
    const auto combo = combine_area(data.phase(0, +1), data.phase(0, -1));
    const double sf = *data.truth_value("scale_factor_rad_per_rad_per_s");
    double ss = 0.0;
    for (double v : combo.rotation_like) ss += v * v;
    const double var = ss / static_cast<double>(combo.rotation_like.size());
    const double arw_rad = arw_deg_sqrt_hr_to_rad_sqrt_s(5e-6);
    const double expected = sf * sf * arw_rad * arw_rad / 4.0;
    CHECK(var == doctest::Approx(expected).epsilon(0.05));
}
