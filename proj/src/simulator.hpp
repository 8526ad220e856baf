#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "modulation.hpp"
#include "transformer.hpp"

namespace tabsim {

enum class DriveMode { square, spwm, off };

struct BridgeDrive {
    DriveMode mode = DriveMode::off;
    double duty = 0.5;
    double phase_rad = 0.0;  // positive delays the gating pattern
};

struct SpwmSettings {
    double carrier_hz = 0.0;
    double reference_hz = 0.0;
    double sine_amplitude_v = 0.0;
    double triangle_amplitude_v = 0.0;
};

// One TAB converter instance. Ports 1 and 2 are the delivering ports with
// stiff DC rails; port 3 feeds the filter capacitor and resistive load.
struct ConverterSpec {
    BridgeTopology topology = BridgeTopology::full_bridge;
    double v1_v = 0.0;
    double v2_v = 0.0;
    TransformerSpec transformer;
    double fs_hz = 0.0;
    double dead_time_s = 0.0;
    std::array<BridgeDrive, 3> drive{};
    std::optional<SpwmSettings> spwm;
    double filter_capacitance_f = 0.0;
    double load_resistance_ohm = 0.0;
    double switch_on_resistance_ohm = 1e-3;
    // Per divider capacitor (half bridge). Zero means size automatically for
    // under 1% midpoint ripple at the link-limited current.
    double divider_capacitance_f = 0.0;

    // Validates invariants and fills the divider default; throws on bad input.
    static ConverterSpec validated(ConverterSpec raw);
};

struct SimConfig {
    int steps_per_period = 2000;
    int max_periods = 2000;
    double steady_tolerance = 1e-4;  // relative change of cycle-averaged v_out
    int capture_periods = 2;

    static SimConfig validated(SimConfig raw);
};

struct WaveformTrace {
    double dt_s = 0.0;
    std::vector<std::string> channel_names;
    std::vector<std::vector<double>> channels;
    bool non_steady = false;
    int periods_run = 0;
    int steps_per_period = 0;
    std::vector<double> per_period_vout_avg;
    // Trapezoid-accurate per-port average powers over the final period,
    // consistent with the integrator; empty for hand-built traces.
    std::array<double, 3> final_period_port_w{};
    bool has_port_power = false;

    std::span<const double> channel(const std::string& name) const;
    size_t length() const { return channels.empty() ? 0 : channels[0].size(); }
};

struct SteadyOutput {
    double volts = 0.0;
    bool steady = true;  // false mirrors the trace's NonSteady warning
};

// Fixed-step trapezoidal integration of the piecewise-linear switched
// network. Gate events are snapped to the step grid; diode conduction is
// resolved per step from the known inductor currents, preferring blocking
// on ties. Throws Error(diverged) on numerical blow-up; a run that never
// meets the steady tolerance returns its trace flagged non_steady.
WaveformTrace simulate(const ConverterSpec& spec, const SimConfig& sim);

// Cycle average of the output voltage over the final captured period.
SteadyOutput steady_state_output(const WaveformTrace& trace);

// Average winding-side power of one port over the final period; positive
// means the port delivers power into the converter.
double port_power_measure(const WaveformTrace& trace, int port);

// Runs the delivering-port duty sweep on a half-bridge converter and returns
// (duty, steady output volts) per point. Errors from individual runs
// propagate. Rejects full-bridge specs.
std::vector<std::pair<double, double>> half_bridge_duty_response(
    const ConverterSpec& spec, const SimConfig& sim, std::span<const double> duties);

}  // namespace tabsim
