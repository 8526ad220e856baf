#include "modulation.hpp"

#include <algorithm>
#include <cmath>

#include "angles.hpp"
#include "error.hpp"

namespace tabsim {

namespace {

double positive_mod(double x, double period) {
    double r = x - std::floor(x / period) * period;
    if (r >= period) r -= period;  // guard against floor rounding
    return r < 0.0 ? r + period : r;
}

void check_finite(double v, const char* name) {
    if (!std::isfinite(v)) throw_config(std::string(name) + " must be finite");
}

}  // namespace

SquarePwmConfig SquarePwmConfig::make(double frequency_hz, double duty,
                                      double phase_rad, double amplitude_v) {
    check_finite(frequency_hz, "frequency_hz");
    check_finite(duty, "duty");
    check_finite(phase_rad, "phase_rad");
    check_finite(amplitude_v, "amplitude_v");
    if (frequency_hz <= 0.0) throw_config("square PWM frequency must be > 0");
    if (duty < 0.0 || duty > 1.0) throw_config("duty must be within [0, 1]");
    if (amplitude_v < 0.0) throw_config("amplitude must be >= 0");
    return SquarePwmConfig{frequency_hz, duty, wrap_to_pi(phase_rad), amplitude_v};
}

SpwmConfig SpwmConfig::make(double carrier_hz, double reference_hz,
                            double sine_amplitude_v, double triangle_amplitude_v,
                            double dc_rail_v) {
    check_finite(carrier_hz, "carrier_hz");
    check_finite(reference_hz, "reference_hz");
    if (reference_hz <= 0.0) throw_config("SPWM reference frequency must be > 0");
    if (carrier_hz < reference_hz)
        throw_config("SPWM carrier frequency must be >= reference frequency");
    if (sine_amplitude_v <= 0.0 || triangle_amplitude_v <= 0.0)
        throw_config("SPWM amplitudes must be > 0");
    if (dc_rail_v <= 0.0) throw_config("SPWM dc rail must be > 0");
    return SpwmConfig{carrier_hz, reference_hz, sine_amplitude_v,
                      triangle_amplitude_v, dc_rail_v};
}

double square_pwm(const SquarePwmConfig& config, double t_s) {
    const double period = 1.0 / config.frequency_hz;
    const double span = config.duty * period / 2.0;  // conduction per half period
    const double shifted = t_s - config.phase_rad / kTwoPi * period;
    const double x = positive_mod(shifted, period);
    if (x < span) return config.amplitude_v;
    if (x >= period / 2.0 && x < period / 2.0 + span) return -config.amplitude_v;
    return 0.0;
}

double triangle_wave(double t_s, double frequency_hz, double amplitude_v) {
    const double period = 1.0 / frequency_hz;
    const double x = positive_mod(t_s, period) / period;  // [0, 1)
    return x < 0.5 ? amplitude_v * (1.0 - 4.0 * x) : amplitude_v * (4.0 * x - 3.0);
}

double spwm(const SpwmConfig& config, double t_s) {
    const double sine = config.sine_amplitude_v *
                        std::sin(kTwoPi * config.reference_hz * t_s);
    const double tri = triangle_wave(t_s, config.carrier_hz,
                                     config.triangle_amplitude_v);
    return sine <= tri ? config.dc_rail_v : -config.dc_rail_v;
}

ModulationIndex modulation_index(double sine_amplitude_v,
                                 double triangle_amplitude_v) {
    if (!(triangle_amplitude_v > 0.0))
        throw_config("triangle amplitude must be > 0 for a modulation index");
    const double ma = sine_amplitude_v / triangle_amplitude_v;
    return ModulationIndex{ma, ma > 1.0};
}

std::vector<bool> GateSchedule::states_at(double t_s) const {
    std::vector<bool> state(static_cast<size_t>(num_switches), false);
    if (transitions.empty()) return state;
    const double x = positive_mod(t_s, period_s);
    // Seed with the end-of-period state (schedule is cyclic), then replay
    // transitions up to and including time x.
    for (const auto& tr : transitions) state[static_cast<size_t>(tr.switch_id)] = tr.on;
    for (const auto& tr : transitions) {
        if (tr.time_s <= x) state[static_cast<size_t>(tr.switch_id)] = tr.on;
    }
    return state;
}

namespace {

void append_switch_interval(std::vector<GateTransition>& out, double period,
                            int sw, double t_on, double t_off, double dead_time) {
    // Turn-on edges are delayed by the dead time; turn-off edges act at once.
    double on = positive_mod(t_on + dead_time, period);
    double off = positive_mod(t_off, period);
    if (on == off) return;  // interval swallowed by dead time
    out.push_back({on, sw, true});
    out.push_back({off, sw, false});
}

void finish_schedule(GateSchedule& sched) {
    std::sort(sched.transitions.begin(), sched.transitions.end(),
              [](const GateTransition& a, const GateTransition& b) {
                  if (a.time_s != b.time_s) return a.time_s < b.time_s;
                  if (a.switch_id != b.switch_id) return a.switch_id < b.switch_id;
                  return a.on < b.on;
              });
}

void check_dead_time(double dead_time_s, double period_s) {
    if (dead_time_s < 0.0 || dead_time_s >= period_s / 10.0)
        throw_config("dead time must satisfy 0 <= dead_time < period/10");
}

// Comparator state: true selects +Vdc (sine at or below the triangle).
bool spwm_high(const SpwmConfig& cfg, double t) {
    return cfg.sine_amplitude_v * std::sin(kTwoPi * cfg.reference_hz * t) <=
           triangle_wave(t, cfg.carrier_hz, cfg.triangle_amplitude_v);
}

// All sine/triangle crossing times within one reference period. The triangle
// is piecewise linear, so each half-carrier segment is scanned on a subgrid
// and sign changes are pinned down by bisection.
std::vector<double> spwm_crossings(const SpwmConfig& cfg) {
    const double period = 1.0 / cfg.reference_hz;
    const double half_seg = 0.5 / cfg.carrier_hz;
    const auto diff = [&](double t) {
        return cfg.sine_amplitude_v * std::sin(kTwoPi * cfg.reference_hz * t) -
               triangle_wave(t, cfg.carrier_hz, cfg.triangle_amplitude_v);
    };
    std::vector<double> crossings;
    const long segments = std::lround(period / half_seg);
    const int sub = 16;
    for (long s = 0; s < segments; ++s) {
        const double a = static_cast<double>(s) * half_seg;
        for (int k = 0; k < sub; ++k) {
            double lo = a + half_seg * k / sub;
            double hi = a + half_seg * (k + 1) / sub;
            double flo = diff(lo), fhi = diff(hi);
            if ((flo <= 0.0) == (fhi <= 0.0)) continue;
            for (int it = 0; it < 60; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = diff(mid);
                if ((fm <= 0.0) == (flo <= 0.0)) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            crossings.push_back(0.5 * (lo + hi));
        }
    }
    std::sort(crossings.begin(), crossings.end());
    const double min_gap = 1e-12 * period;
    std::vector<double> dedup;
    for (double c : crossings) {
        if (dedup.empty() || c - dedup.back() > min_gap) dedup.push_back(c);
    }
    return dedup;
}

}  // namespace

GateSchedule bridge_gates(BridgeTopology topology, const SquarePwmConfig& pwm,
                          double dead_time_s) {
    const double period = 1.0 / pwm.frequency_hz;
    check_dead_time(dead_time_s, period);
    GateSchedule sched;
    sched.period_s = period;
    sched.dead_time_s = dead_time_s;
    const double shift = pwm.phase_rad / kTwoPi * period;

    if (topology == BridgeTopology::full_bridge) {
        sched.num_switches = 4;
        const double span = pwm.duty * period / 2.0;
        if (span > 0.0) {
            // Diagonal pair A-high/B-low conducts +V, A-low/B-high conducts -V.
            append_switch_interval(sched.transitions, period, kLegAHigh,
                                   shift, shift + span, dead_time_s);
            append_switch_interval(sched.transitions, period, kLegBLow,
                                   shift, shift + span, dead_time_s);
            append_switch_interval(sched.transitions, period, kLegALow,
                                   shift + period / 2.0, shift + period / 2.0 + span,
                                   dead_time_s);
            append_switch_interval(sched.transitions, period, kLegBHigh,
                                   shift + period / 2.0, shift + period / 2.0 + span,
                                   dead_time_s);
        }
    } else {
        sched.num_switches = 2;
        // Half-bridge duty is the high-side fraction of the full period.
        const double span = pwm.duty * period;
        if (span > 0.0 && span < period) {
            append_switch_interval(sched.transitions, period, kLegAHigh,
                                   shift, shift + span, dead_time_s);
            append_switch_interval(sched.transitions, period, kLegALow,
                                   shift + span, shift + period, dead_time_s);
        } else if (span >= period) {
            sched.transitions.push_back({0.0, kLegAHigh, true});
        } else {
            sched.transitions.push_back({0.0, kLegALow, true});
        }
    }
    finish_schedule(sched);
    return sched;
}

GateSchedule bridge_gates(BridgeTopology topology, const SpwmConfig& pwm,
                          double dead_time_s) {
    const double ratio = pwm.carrier_ratio();
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
        throw_config("SPWM gating needs an integer carrier ratio");
    const double period = 1.0 / pwm.reference_hz;
    check_dead_time(dead_time_s, period);

    GateSchedule sched;
    sched.period_s = period;
    sched.dead_time_s = dead_time_s;
    sched.num_switches = topology == BridgeTopology::full_bridge ? 4 : 2;

    std::vector<double> edges = spwm_crossings(pwm);
    if (edges.empty()) {
        // Comparator never toggles; hold the +Vdc state.
        if (topology == BridgeTopology::full_bridge) {
            sched.transitions.push_back({0.0, kLegAHigh, true});
            sched.transitions.push_back({0.0, kLegBLow, true});
        } else {
            sched.transitions.push_back({0.0, kLegAHigh, true});
        }
        finish_schedule(sched);
        return sched;
    }

    // Each interval between crossings takes the comparator state sampled at
    // its midpoint, so a missed or tangential crossing cannot flip the rest
    // of the schedule.
    double start = 0.0;
    for (size_t i = 0; i <= edges.size(); ++i) {
        const double stop = i < edges.size() ? edges[i] : period;
        if (stop > start) {
            const bool high = spwm_high(pwm, 0.5 * (start + stop));
            if (topology == BridgeTopology::full_bridge) {
                append_switch_interval(sched.transitions, period,
                                       high ? kLegAHigh : kLegALow, start, stop,
                                       dead_time_s);
                append_switch_interval(sched.transitions, period,
                                       high ? kLegBLow : kLegBHigh, start, stop,
                                       dead_time_s);
            } else {
                append_switch_interval(sched.transitions, period,
                                       high ? kLegAHigh : kLegALow, start, stop,
                                       dead_time_s);
            }
        }
        start = stop;
    }
    finish_schedule(sched);
    return sched;
}

GateSchedule bridge_gates_off(BridgeTopology topology, double period_s) {
    if (period_s <= 0.0) throw_config("gate schedule period must be > 0");
    GateSchedule sched;
    sched.period_s = period_s;
    sched.num_switches = topology == BridgeTopology::full_bridge ? 4 : 2;
    return sched;
}

}  // namespace tabsim
