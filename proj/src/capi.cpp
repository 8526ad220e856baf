#include "tabsim.h"

#include <cstring>
#include <new>
#include <string>

#include "analysis.hpp"
#include "angles.hpp"
#include "config.hpp"
#include "error.hpp"
#include "experiments.hpp"
#include "powerflow.hpp"
#include "textio.hpp"

struct tab_config {
    tabsim::Config cfg;
};

struct tab_trace {
    tabsim::WaveformTrace trace;
};

namespace {

thread_local std::string g_last_error;

tab_status status_from(const tabsim::Error& e) {
    using tabsim::ErrorCode;
    switch (e.code()) {
        case ErrorCode::invalid_config:
        case ErrorCode::precondition:
            return TAB_ERR_CONFIG;
        case ErrorCode::infeasible:
            return TAB_ERR_INFEASIBLE;
        case ErrorCode::non_convergent:
        case ErrorCode::diverged:
            return TAB_ERR_NUMERIC;
        case ErrorCode::io:
            return TAB_ERR_IO;
    }
    return TAB_ERR_INTERNAL;
}

template <typename Fn>
tab_status guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const tabsim::Error& e) {
        g_last_error = e.what();
        return status_from(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TAB_ERR_CONFIG;
    } catch (...) {
        g_last_error = "unknown failure";
        return TAB_ERR_INTERNAL;
    }
}

char* dup_text(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

tab_status require(bool cond, const char* message) {
    if (cond) return TAB_OK;
    g_last_error = message;
    return TAB_ERR_CONFIG;
}

}  // namespace

extern "C" {

const char* tab_version(void) { return TABSIM_VERSION; }

const char* tab_last_error(void) { return g_last_error.c_str(); }

tab_status tab_config_preset(const char* name, tab_config** out) {
    if (require(name && out, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out = new tab_config{tabsim::Config::preset(name)};
        return TAB_OK;
    });
}

tab_status tab_config_from_file(const char* path, tab_config** out) {
    if (require(path && out, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out = new tab_config{tabsim::Config::from_file(path)};
        return TAB_OK;
    });
}

tab_status tab_config_from_json(const char* json_text, tab_config** out) {
    if (require(json_text && out, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out = new tab_config{tabsim::Config::from_json_text(json_text)};
        return TAB_OK;
    });
}

void tab_config_free(tab_config* cfg) { delete cfg; }

tab_status tab_config_resolved_json(const tab_config* cfg, char** out_text) {
    if (require(cfg && out_text, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_text = dup_text(cfg->cfg.text());
        return TAB_OK;
    });
}

tab_status tab_config_set_number(tab_config* cfg, const char* dotted_key,
                                 double value) {
    if (require(cfg && dotted_key, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        cfg->cfg.set_number(dotted_key, value);
        return TAB_OK;
    });
}

void tab_text_free(char* text) { delete[] text; }

tab_status tab_link_power(double s_w_per_rad, double phi_rad, double* out_w) {
    if (require(out_w != nullptr, "null output") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_w = tabsim::link_power(s_w_per_rad, phi_rad);
        return TAB_OK;
    });
}

tab_status tab_invert_link_power(double s_w_per_rad, double target_w,
                                 double* out_phi_rad, double* out_limit_w) {
    if (require(out_phi_rad != nullptr, "null output") != TAB_OK)
        return TAB_ERR_CONFIG;
    try {
        *out_phi_rad = tabsim::invert_link_power(s_w_per_rad, target_w);
        if (out_limit_w) *out_limit_w = s_w_per_rad * tabsim::kPi / 4.0;
        return TAB_OK;
    } catch (const tabsim::Error& e) {
        g_last_error = e.what();
        if (out_limit_w && e.limit_watts()) *out_limit_w = *e.limit_watts();
        return status_from(e);
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return TAB_ERR_CONFIG;
    }
}

tab_status tab_duty_voltage(double duty, double v_in_v, double n_in, double n_out,
                            double* out_v) {
    if (require(out_v != nullptr, "null output") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_v = tabsim::duty_voltage(duty, v_in_v, n_in, n_out);
        return TAB_OK;
    });
}

tab_status tab_link_coefficients(const tab_config* cfg, double out_s_w_per_rad[3]) {
    if (require(cfg && out_s_w_per_rad, "null argument") != TAB_OK)
        return TAB_ERR_CONFIG;
    return guarded([&] {
        const auto s = cfg->cfg.link_coefficients_w_per_rad();
        for (int i = 0; i < 3; ++i) out_s_w_per_rad[i] = s[static_cast<size_t>(i)];
        return TAB_OK;
    });
}

tab_status tab_port_powers(const double s_w_per_rad[3], double phi21_rad,
                           double phi31_rad, double phi23_rad, int direct_aggregation,
                           double out_link_w[3], double out_port_w[3]) {
    if (require(s_w_per_rad && out_link_w && out_port_w, "null argument") != TAB_OK)
        return TAB_ERR_CONFIG;
    return guarded([&] {
        const tabsim::PhaseSet phases =
            tabsim::PhaseSet::make(phi21_rad, phi31_rad, phi23_rad);
        const tabsim::PowerSolution sol = tabsim::port_powers(
            {s_w_per_rad[0], s_w_per_rad[1], s_w_per_rad[2]}, phases,
            direct_aggregation ? tabsim::Aggregation::direct
                               : tabsim::Aggregation::conservation_consistent);
        for (int i = 0; i < 3; ++i) {
            out_link_w[i] = sol.link_w[static_cast<size_t>(i)];
            out_port_w[i] = sol.port_w[static_cast<size_t>(i)];
        }
        return TAB_OK;
    });
}

tab_status tab_dispatch_solve(const tab_config* cfg, double grid_w, double load_w,
                              double out_delta_rad[3], double out_link_w[3],
                              double out_port_w[3]) {
    if (require(cfg && out_delta_rad, "null argument") != TAB_OK)
        return TAB_ERR_CONFIG;
    return guarded([&] {
        const tabsim::DispatchResult r =
            tabsim::dispatch_solve(cfg->cfg.link_coefficients_w_per_rad(), grid_w,
                                   load_w);
        for (int i = 0; i < 3; ++i) {
            out_delta_rad[i] = r.delta_rad[static_cast<size_t>(i)];
            if (out_link_w) out_link_w[i] = r.powers.link_w[static_cast<size_t>(i)];
            if (out_port_w) out_port_w[i] = r.powers.port_w[static_cast<size_t>(i)];
        }
        return TAB_OK;
    });
}

tab_status tab_square_pwm(double frequency_hz, double duty, double phase_rad,
                          double amplitude_v, double t_s, double* out_v) {
    if (require(out_v != nullptr, "null output") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_v = tabsim::square_pwm(
            tabsim::SquarePwmConfig::make(frequency_hz, duty, phase_rad, amplitude_v),
            t_s);
        return TAB_OK;
    });
}

tab_status tab_spwm(double carrier_hz, double reference_hz, double sine_amplitude_v,
                    double triangle_amplitude_v, double dc_rail_v, double t_s,
                    double* out_v) {
    if (require(out_v != nullptr, "null output") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_v = tabsim::spwm(
            tabsim::SpwmConfig::make(carrier_hz, reference_hz, sine_amplitude_v,
                                     triangle_amplitude_v, dc_rail_v),
            t_s);
        return TAB_OK;
    });
}

tab_status tab_modulation_index(double sine_amplitude_v, double triangle_amplitude_v,
                                double* out_ma, int* out_overmodulated) {
    if (require(out_ma != nullptr, "null output") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        const tabsim::ModulationIndex mi =
            tabsim::modulation_index(sine_amplitude_v, triangle_amplitude_v);
        *out_ma = mi.value;
        if (out_overmodulated) *out_overmodulated = mi.overmodulated ? 1 : 0;
        return TAB_OK;
    });
}

tab_status tab_simulate(const tab_config* cfg, tab_trace** out) {
    if (require(cfg && out, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&]() -> tab_status {
        tabsim::WaveformTrace trace =
            tabsim::simulate(cfg->cfg.converter(), cfg->cfg.sim());
        const bool nonsteady = trace.non_steady;
        *out = new tab_trace{std::move(trace)};
        if (nonsteady) {
            g_last_error = "simulation did not reach steady state";
            return TAB_ERR_NONSTEADY;
        }
        return TAB_OK;
    });
}

void tab_trace_free(tab_trace* trace) { delete trace; }

double tab_trace_dt_s(const tab_trace* trace) { return trace ? trace->trace.dt_s : 0.0; }

int tab_trace_nonsteady(const tab_trace* trace) {
    return trace && trace->trace.non_steady ? 1 : 0;
}

size_t tab_trace_length(const tab_trace* trace) {
    return trace ? trace->trace.length() : 0;
}

size_t tab_trace_channel_count(const tab_trace* trace) {
    return trace ? trace->trace.channel_names.size() : 0;
}

const char* tab_trace_channel_name(const tab_trace* trace, size_t index) {
    if (!trace || index >= trace->trace.channel_names.size()) return nullptr;
    return trace->trace.channel_names[index].c_str();
}

tab_status tab_trace_channel(const tab_trace* trace, const char* name,
                             const double** out_data, size_t* out_len) {
    if (require(trace && name && out_data && out_len, "null argument") != TAB_OK)
        return TAB_ERR_CONFIG;
    return guarded([&] {
        const auto span = trace->trace.channel(name);
        *out_data = span.data();
        *out_len = span.size();
        return TAB_OK;
    });
}

tab_status tab_trace_steady_output(const tab_trace* trace, double* out_v) {
    if (require(trace && out_v, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&]() -> tab_status {
        const tabsim::SteadyOutput so = tabsim::steady_state_output(trace->trace);
        *out_v = so.volts;
        if (!so.steady) {
            g_last_error = "value taken from a non-steady trace";
            return TAB_ERR_NONSTEADY;
        }
        return TAB_OK;
    });
}

tab_status tab_trace_port_power(const tab_trace* trace, int port, double* out_w) {
    if (require(trace && out_w, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_w = tabsim::port_power_measure(trace->trace, port);
        return TAB_OK;
    });
}

tab_status tab_trace_write_csv(const tab_trace* trace, const char* path) {
    if (require(trace && path, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        tabsim::write_text_file(path, tabsim::trace_to_csv(trace->trace));
        return TAB_OK;
    });
}

tab_status tab_cmd_simulate(const tab_config* cfg, const char* out_csv) {
    if (require(cfg && out_csv, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&]() -> tab_status {
        const tabsim::CommandOutcome oc = tabsim::run_simulate(cfg->cfg, out_csv);
        if (oc.numeric_trouble) {
            g_last_error = oc.message;
            return TAB_ERR_NONSTEADY;
        }
        return TAB_OK;
    });
}

tab_status tab_cmd_sweep(const tab_config* cfg, const char* kind, double from,
                         double to, int steps, int parallel, const char* out_csv) {
    if (require(cfg && kind && out_csv, "null argument") != TAB_OK)
        return TAB_ERR_CONFIG;
    return guarded([&]() -> tab_status {
        const tabsim::CommandOutcome oc =
            tabsim::run_sweep(cfg->cfg, kind, from, to, steps, parallel != 0, out_csv);
        if (oc.numeric_trouble) {
            g_last_error = oc.message;
            return TAB_ERR_NUMERIC;
        }
        return TAB_OK;
    });
}

tab_status tab_cmd_solve_dispatch(const tab_config* cfg, double grid_w,
                                  double load_w, char** out_json) {
    if (require(cfg && out_json, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        *out_json = dup_text(tabsim::run_solve_dispatch(cfg->cfg, grid_w, load_w));
        return TAB_OK;
    });
}

tab_status tab_cmd_thd_compare(const tab_config* cfg, const char* out_json) {
    if (require(cfg && out_json, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&] {
        tabsim::run_thd_compare(cfg->cfg, out_json);
        return TAB_OK;
    });
}

tab_status tab_cmd_combined_mode(const tab_config* cfg, const char* out_json) {
    if (require(cfg && out_json, "null argument") != TAB_OK) return TAB_ERR_CONFIG;
    return guarded([&]() -> tab_status {
        const tabsim::CommandOutcome oc =
            tabsim::run_combined_mode(cfg->cfg, out_json);
        if (oc.numeric_trouble) {
            g_last_error = oc.message;
            return TAB_ERR_NUMERIC;
        }
        return TAB_OK;
    });
}

}  // extern "C"
