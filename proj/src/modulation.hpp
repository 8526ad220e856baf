#pragma once

#include <vector>

namespace tabsim {

// Ids for the switches of one bridge. A full bridge has two legs (A carries
// the winding start, B the winding return); a half bridge only leg A, with
// the winding returning into the capacitive divider.
enum SwitchId : int {
    kLegAHigh = 0,
    kLegALow = 1,
    kLegBHigh = 2,
    kLegBLow = 3,
};

enum class BridgeTopology { full_bridge, half_bridge };

struct SquarePwmConfig {
    double frequency_hz = 0.0;
    double duty = 0.0;          // conducted fraction, [0, 1]
    double phase_rad = 0.0;     // positive phase delays the waveform
    double amplitude_v = 0.0;   // DC rail magnitude

    // Normalizes phase into (-pi, pi] and checks the remaining invariants.
    static SquarePwmConfig make(double frequency_hz, double duty,
                                double phase_rad, double amplitude_v);
};

struct SpwmConfig {
    double carrier_hz = 0.0;        // triangle
    double reference_hz = 0.0;      // sine
    double sine_amplitude_v = 0.0;  // V_m_sin
    double triangle_amplitude_v = 0.0;  // V_m_tri
    double dc_rail_v = 0.0;

    static SpwmConfig make(double carrier_hz, double reference_hz,
                           double sine_amplitude_v, double triangle_amplitude_v,
                           double dc_rail_v);

    double carrier_ratio() const { return carrier_hz / reference_hz; }
};

struct ModulationIndex {
    double value = 0.0;
    bool overmodulated = false;  // true when value > 1; linearity no longer holds
};

struct GateTransition {
    double time_s = 0.0;  // within [0, period)
    int switch_id = 0;
    bool on = false;
};

// Per-switch on/off timing over one switching period. Cyclic: the state
// before the first transition equals the state after the last one.
struct GateSchedule {
    double period_s = 0.0;
    double dead_time_s = 0.0;
    int num_switches = 0;
    std::vector<GateTransition> transitions;  // sorted by (time, switch)

    std::vector<bool> states_at(double t_s) const;
};

// Bipolar square bridge voltage: +amplitude for the first duty*(T/2) of each
// half period, -amplitude for the mirrored span, 0 in the freewheel gaps.
double square_pwm(const SquarePwmConfig& config, double t_s);

// Carrier-comparison SPWM. Follows the comparator convention +Vdc when
// sine < triangle (ties resolve to +Vdc), so the fundamental is inverted
// relative to the usual sign but has the same amplitude.
double spwm(const SpwmConfig& config, double t_s);

// Symmetric triangle at carrier frequency, starting at +amplitude at t = 0.
double triangle_wave(double t_s, double frequency_hz, double amplitude_v);

ModulationIndex modulation_index(double sine_amplitude_v,
                                 double triangle_amplitude_v);

GateSchedule bridge_gates(BridgeTopology topology, const SquarePwmConfig& pwm,
                          double dead_time_s);
GateSchedule bridge_gates(BridgeTopology topology, const SpwmConfig& pwm,
                          double dead_time_s);

// All switches permanently off; the bridge acts through its diodes only.
GateSchedule bridge_gates_off(BridgeTopology topology, double period_s);

}  // namespace tabsim
