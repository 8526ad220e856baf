#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "angles.hpp"
#include "error.hpp"
#include "powerflow.hpp"
#include "simulator.hpp"
#include "transformer.hpp"

using namespace tabsim;

namespace {

constexpr double kOmegaL = kTwoPi * 1e4 * 1e-4;  // omega * 100 uH at 10 kHz

// Two-port phase-shift rig: port 1 drives, port 3 rectifies synchronously at
// a phase delay phi, port 2 idles with its links opened so only L31 couples.
// The load is chosen so the steady output settles at the 100 V the analytic
// coefficient assumes.
ConverterSpec two_port_spec(double phi, double r_load) {
    ConverterSpec s;
    s.topology = BridgeTopology::full_bridge;
    s.v1_v = 100.0;
    s.v2_v = 100.0;
    s.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e3, 1e-4, 1e3});
    s.fs_hz = 1e4;
    s.drive[0] = {DriveMode::square, 1.0, 0.0};
    s.drive[1] = {DriveMode::off, 0.0, 0.0};
    s.drive[2] = {DriveMode::square, 1.0, phi};
    s.filter_capacitance_f = 5e-4;
    s.load_resistance_ohm = r_load;
    s.switch_on_resistance_ohm = 1e-3;
    return s;
}

double load_for_unit_output(double phi) {
    return kOmegaL / (phi * (1.0 - phi / kPi));
}

// Full three-port rig at the charging operating point: both sources in
// phase, consuming bridge delayed by phi, load sized so v_out settles at
// 100 V and each source link carries the analytic link power.
ConverterSpec three_port_spec(double phi) {
    ConverterSpec s;
    s.topology = BridgeTopology::full_bridge;
    s.v1_v = 100.0;
    s.v2_v = 100.0;
    s.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e-4, 1e-4, 1e-4});
    s.fs_hz = 1e4;
    s.drive[0] = {DriveMode::square, 1.0, 0.0};
    s.drive[1] = {DriveMode::square, 1.0, 0.0};
    s.drive[2] = {DriveMode::square, 1.0, phi};
    s.filter_capacitance_f = 5e-4;
    s.load_resistance_ohm = load_for_unit_output(phi) / 2.0;  // two feeding links
    s.switch_on_resistance_ohm = 1e-3;
    return s;
}

SimConfig fast_sim(int steps = 2000) {
    SimConfig c;
    c.steps_per_period = steps;
    c.max_periods = 1500;
    c.steady_tolerance = 1e-5;
    c.capture_periods = 2;
    return c;
}

}  // namespace

TEST_CASE("two-port phase shift matches the analytic link power") {
    const double s_coeff = 100.0 * 100.0 / kOmegaL;
    for (double phi : {kPi / 4.0, kPi / 2.0}) {
        const ConverterSpec spec = two_port_spec(phi, load_for_unit_output(phi));
        const WaveformTrace trace = simulate(spec, fast_sim(2400));
        REQUIRE_FALSE(trace.non_steady);
        const double expected = s_coeff * phi * (1.0 - phi / kPi);
        const double delivered = port_power_measure(trace, 1);
        const double absorbed = -port_power_measure(trace, 3);
        CHECK(absorbed == doctest::Approx(expected).epsilon(0.02));
        CHECK(delivered == doctest::Approx(expected).epsilon(0.02));
        // Port 2 idles: its diodes stay blocked.
        CHECK(std::abs(port_power_measure(trace, 2)) < 0.01 * expected);
    }
}

TEST_CASE("blocked idle port still couples through its link pair") {
    // With all links at 100 uH, the open node 2 passes current through
    // L21 + L23 in series, so ports 1-3 see L31 || (L21 + L23) = 66.7 uH.
    const double phi = kPi / 4.0;
    const double l_eff = 1.0 / (1.0 / 1e-4 + 1.0 / 2e-4);
    const double s_eff = 100.0 * 100.0 / (kTwoPi * 1e4 * l_eff);
    ConverterSpec spec = two_port_spec(phi, 0.0);
    spec.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e-4, 1e-4, 1e-4});
    spec.load_resistance_ohm =
        kTwoPi * 1e4 * l_eff / (phi * (1.0 - phi / kPi));
    const WaveformTrace trace = simulate(spec, fast_sim(2400));
    REQUIRE_FALSE(trace.non_steady);
    const double expected = s_eff * phi * (1.0 - phi / kPi);
    CHECK(-port_power_measure(trace, 3) == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("unexcited converter stays at rest") {
    ConverterSpec spec = two_port_spec(0.0, 40.0);
    spec.drive[0] = {DriveMode::off, 0.0, 0.0};
    spec.drive[2] = {DriveMode::off, 0.0, 0.0};
    SimConfig sim = fast_sim(400);
    sim.max_periods = 50;
    const WaveformTrace trace = simulate(spec, sim);
    for (const char* ch : {"i_l21", "i_l31", "i_l23", "v_out", "p1", "p2", "p3"}) {
        for (double v : trace.channel(ch)) CHECK(v == 0.0);
    }
}

TEST_CASE("three-port charging point splits power per the analytic model") {
    const double phi = kPi / 4.0;
    const WaveformTrace trace = simulate(three_port_spec(phi), fast_sim(2400));
    REQUIRE_FALSE(trace.non_steady);
    CHECK(port_power_measure(trace, 1) == doctest::Approx(937.5).epsilon(0.02));
    CHECK(port_power_measure(trace, 2) == doctest::Approx(937.5).epsilon(0.02));
    CHECK(port_power_measure(trace, 3) == doctest::Approx(-1875.0).epsilon(0.02));
    CHECK(steady_state_output(trace).volts == doctest::Approx(100.0).epsilon(0.02));
}

TEST_CASE("lossless three-port run conserves power") {
    ConverterSpec spec = three_port_spec(kPi / 4.0);
    spec.switch_on_resistance_ohm = 1e-9;
    const WaveformTrace trace = simulate(spec, fast_sim(2400));
    REQUIRE_FALSE(trace.non_steady);
    const double p1 = port_power_measure(trace, 1);
    const double p2 = port_power_measure(trace, 2);
    const double p3 = port_power_measure(trace, 3);
    const double pmax = std::max({std::abs(p1), std::abs(p2), std::abs(p3)});
    CHECK(std::abs(p1 + p2 + p3) < 1e-3 * pmax);
}

TEST_CASE("receiving-port duty does not move the steady output") {
    double outputs[3] = {};
    const double duties[3] = {0.2, 0.35, 0.5};
    for (int i = 0; i < 3; ++i) {
        ConverterSpec spec = three_port_spec(kPi / 4.0);
        spec.drive[2].duty = duties[i];
        const WaveformTrace trace = simulate(spec, fast_sim());
        REQUIRE_FALSE(trace.non_steady);
        outputs[i] = steady_state_output(trace).volts;
    }
    const double mid = outputs[2];
    CHECK(std::abs(outputs[0] - mid) / mid < 0.02);
    CHECK(std::abs(outputs[1] - mid) / mid < 0.02);
}

TEST_CASE("step-up turns ratio follows the referred coefficient") {
    // 1:1:2 transformer, so the output settles near twice the source rail
    // and S31 = V3*V1/(n3*n1*omega*L31) keeps the same value as the 1:1 rig.
    const double phi = kPi / 4.0;
    const double g = phi * (1.0 - phi / kPi);
    ConverterSpec spec = two_port_spec(phi, 0.0);
    spec.transformer = TransformerSpec::make({1.0, 1.0, 2.0}, {1e3, 1e-4, 1e3});
    spec.load_resistance_ohm = 4.0 * kOmegaL / g;  // equilibrium at 200 V
    const WaveformTrace trace = simulate(spec, fast_sim(2400));
    REQUIRE_FALSE(trace.non_steady);
    const double s31 = 200.0 * 100.0 / (2.0 * 1.0 * kOmegaL);
    CHECK(-port_power_measure(trace, 3) == doctest::Approx(s31 * g).epsilon(0.02));
    CHECK(steady_state_output(trace).volts == doctest::Approx(200.0).epsilon(0.02));
}

TEST_CASE("dead time leaves the phase-shift transfer in place") {
    const double phi = kPi / 4.0;
    ConverterSpec spec = two_port_spec(phi, load_for_unit_output(phi));
    spec.dead_time_s = 5e-7;  // 1% of the period
    const WaveformTrace trace = simulate(spec, fast_sim(2400));
    REQUIRE_FALSE(trace.non_steady);
    CHECK(-port_power_measure(trace, 3) == doctest::Approx(937.5).epsilon(0.03));
}

TEST_CASE("halving the delivering duty halves the rectified output") {
    const auto run = [](double duty) {
        ConverterSpec spec;
        spec.topology = BridgeTopology::full_bridge;
        spec.v1_v = spec.v2_v = 100.0;
        spec.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e-4, 1e-4, 1e-4});
        spec.fs_hz = 1e4;
        spec.drive[0] = {DriveMode::square, duty, 0.0};
        spec.drive[1] = {DriveMode::square, duty, 0.0};
        spec.drive[2] = {DriveMode::off, 0.0, 0.0};
        spec.filter_capacitance_f = 4.7e-4;
        spec.load_resistance_ohm = 8.0;
        spec.switch_on_resistance_ohm = 1e-3;
        SimConfig sim = fast_sim();
        sim.steady_tolerance = 1e-4;
        sim.max_periods = 3000;
        return steady_state_output(simulate(spec, sim)).volts;
    };
    const double ratio = run(0.25) / run(0.5);
    CHECK(ratio == doctest::Approx(0.5).epsilon(0.10));
}

TEST_CASE("half-bridge phase shift follows the half-rail coefficient") {
    // Winding amplitudes are half the rails, so S = (V1/2)(V3/2)/(omega L).
    const double phi = kPi / 4.0;
    const double g = phi * (1.0 - phi / kPi);
    ConverterSpec s;
    s.topology = BridgeTopology::half_bridge;
    s.v1_v = 100.0;
    s.v2_v = 100.0;
    s.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e3, 1e-4, 1e3});
    s.fs_hz = 1e4;
    s.drive[0] = {DriveMode::square, 0.5, 0.0};
    s.drive[1] = {DriveMode::off, 0.0, 0.0};
    s.drive[2] = {DriveMode::square, 0.5, phi};
    s.filter_capacitance_f = 5e-4;
    s.load_resistance_ohm = 4.0 * kOmegaL / g;  // settles v_out at 100 V
    // Realistic switch resistance damps the slow ring between the link
    // inductances and the divider capacitors.
    s.switch_on_resistance_ohm = 0.02;
    SimConfig sim = fast_sim(2400);
    sim.steady_tolerance = 1e-4;
    sim.max_periods = 3000;
    const WaveformTrace trace = simulate(s, sim);
    REQUIRE_FALSE(trace.non_steady);
    const double s_eff = 50.0 * 50.0 / kOmegaL;
    CHECK(-port_power_measure(trace, 3) ==
          doctest::Approx(s_eff * g).epsilon(0.03));
    CHECK(steady_state_output(trace).volts == doctest::Approx(100.0).epsilon(0.03));
}

TEST_CASE("half_bridge_duty_response rejects full-bridge specs") {
    const ConverterSpec spec = three_port_spec(kPi / 4.0);
    CHECK_THROWS_AS(half_bridge_duty_response(spec, fast_sim(), std::array{0.5}),
                    Error);
}

TEST_CASE("half_bridge_duty_response single point") {
    ConverterSpec s;
    s.topology = BridgeTopology::half_bridge;
    s.v1_v = 100.0;
    s.v2_v = 100.0;
    s.transformer = TransformerSpec::make({1.0, 1.0, 1.0}, {1e-4, 1e-4, 1e-4});
    s.fs_hz = 1e4;
    s.drive[0] = {DriveMode::square, 0.5, 0.0};
    s.drive[1] = {DriveMode::square, 0.5, 0.0};
    s.drive[2] = {DriveMode::off, 0.0, 0.0};
    s.filter_capacitance_f = 4.7e-4;
    s.load_resistance_ohm = 20.0;
    s.switch_on_resistance_ohm = 0.02;
    SimConfig sim = fast_sim(2000);
    sim.steady_tolerance = 1e-4;
    sim.max_periods = 4000;
    const auto points = half_bridge_duty_response(s, sim, std::array{0.4});
    REQUIRE(points.size() == 1);
    CHECK(points[0].first == 0.4);
    CHECK(points[0].second > 0.0);
}

TEST_CASE("timestep halving leaves the steady output in place") {
    ConverterSpec spec = three_port_spec(0.7);  // off-grid phase
    const double coarse = steady_state_output(simulate(spec, fast_sim(2000))).volts;
    const double fine = steady_state_output(simulate(spec, fast_sim(4000))).volts;
    CHECK(std::abs(fine - coarse) / std::abs(fine) < 0.002);
}

TEST_CASE("identical runs are bit identical") {
    const ConverterSpec spec = three_port_spec(kPi / 3.0);
    SimConfig sim = fast_sim();
    sim.max_periods = 120;
    const WaveformTrace a = simulate(spec, sim);
    const WaveformTrace b = simulate(spec, sim);
    REQUIRE(a.length() == b.length());
    for (size_t c = 0; c < a.channels.size(); ++c) {
        for (size_t i = 0; i < a.channels[c].size(); ++i)
            REQUIRE(a.channels[c][i] == b.channels[c][i]);
    }
}

TEST_CASE("non-steady runs are flagged and still usable") {
    ConverterSpec spec = three_port_spec(kPi / 4.0);
    SimConfig sim = fast_sim();
    sim.max_periods = 6;  // far too short for the RC settle
    const WaveformTrace trace = simulate(spec, sim);
    CHECK(trace.non_steady);
    const SteadyOutput so = steady_state_output(trace);
    CHECK_FALSE(so.steady);
    CHECK(so.volts > 0.0);
}

TEST_CASE("steady_state_output averages the final period") {
    WaveformTrace trace;
    trace.dt_s = 1e-6;
    trace.steps_per_period = 100;
    trace.channel_names = {"v_out"};
    trace.channels.resize(1);
    SUBCASE("constant channel") {
        trace.channels[0].assign(200, 8.1);
        CHECK(steady_state_output(trace).volts == doctest::Approx(8.1));
    }
    SUBCASE("symmetric ripple averages to the midpoint") {
        for (int i = 0; i < 200; ++i)
            trace.channels[0].push_back(i % 2 == 0 ? 7.9 : 8.3);
        CHECK(steady_state_output(trace).volts == doctest::Approx(8.1));
    }
    SUBCASE("too-short trace is rejected") {
        trace.channels[0].assign(50, 8.1);
        CHECK_THROWS_AS(steady_state_output(trace), Error);
    }
}

TEST_CASE("port_power_measure validates its port argument") {
    WaveformTrace trace;
    trace.steps_per_period = 10;
    trace.channel_names = {"p1"};
    trace.channels = {std::vector<double>(10, 1.0)};
    CHECK(port_power_measure(trace, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(port_power_measure(trace, 0), Error);
    CHECK_THROWS_AS(port_power_measure(trace, 4), Error);
}

TEST_CASE("converter spec validation catches bad parameters") {
    ConverterSpec spec = three_port_spec(kPi / 4.0);
    spec.load_resistance_ohm = 0.0;
    CHECK_THROWS_AS(ConverterSpec::validated(spec), Error);
    spec = three_port_spec(kPi / 4.0);
    spec.dead_time_s = 2e-5;
    CHECK_THROWS_AS(ConverterSpec::validated(spec), Error);
    spec = three_port_spec(kPi / 4.0);
    spec.drive[0].duty = 1.2;
    CHECK_THROWS_AS(ConverterSpec::validated(spec), Error);
    SimConfig sim;
    sim.steps_per_period = 100;
    CHECK_THROWS_AS(SimConfig::validated(sim), Error);
}
