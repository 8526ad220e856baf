/* tabsim — triple-active-bridge converter simulation and analysis toolkit.
 *
 * C API of the shared library. All entry points return a tab_status; on
 * failure tab_last_error() gives a human-readable message for the calling
 * thread. Handles are opaque and freed with their matching *_free call.
 *
 * Suggested process exit codes for tools built on this API:
 *   TAB_OK -> 0, config/io/argument errors -> 1, TAB_ERR_INFEASIBLE -> 2,
 *   numeric failures (including non-steady runs) -> 3.
 */
#ifndef TABSIM_H
#define TABSIM_H

#include <stddef.h>

#if defined(_WIN32)
#define TAB_API __declspec(dllexport)
#else
#define TAB_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tab_status {
    TAB_OK = 0,
    TAB_ERR_CONFIG = 1,     /* invalid configuration or precondition */
    TAB_ERR_INFEASIBLE = 2, /* requested operating point unreachable */
    TAB_ERR_NUMERIC = 3,    /* solver non-convergence or divergence */
    TAB_ERR_IO = 4,         /* file could not be read or written */
    TAB_ERR_NONSTEADY = 5,  /* simulation finished without steady state */
    TAB_ERR_INTERNAL = 6
} tab_status;

typedef struct tab_config tab_config;
typedef struct tab_trace tab_trace;

TAB_API const char* tab_version(void);

/* Message for the most recent failure on this thread. */
TAB_API const char* tab_last_error(void);

/* --- configuration ------------------------------------------------------ */

TAB_API tab_status tab_config_preset(const char* name, tab_config** out);
TAB_API tab_status tab_config_from_file(const char* path, tab_config** out);
TAB_API tab_status tab_config_from_json(const char* json_text, tab_config** out);
TAB_API void tab_config_free(tab_config* cfg);

/* Full resolved configuration as JSON text; free with tab_text_free. */
TAB_API tab_status tab_config_resolved_json(const tab_config* cfg, char** out_text);
TAB_API tab_status tab_config_set_number(tab_config* cfg, const char* dotted_key,
                                         double value);
TAB_API void tab_text_free(char* text);

/* --- analytic phase-shift power flow ------------------------------------ */

TAB_API tab_status tab_link_power(double s_w_per_rad, double phi_rad, double* out_w);

/* On TAB_ERR_INFEASIBLE, *out_limit_w still receives the maximum
 * transferable power S*pi/4. */
TAB_API tab_status tab_invert_link_power(double s_w_per_rad, double target_w,
                                         double* out_phi_rad, double* out_limit_w);
TAB_API tab_status tab_duty_voltage(double duty, double v_in_v, double n_in,
                                    double n_out, double* out_v);

/* S21, S31, S23 from the config's transformer and nominal port voltages. */
TAB_API tab_status tab_link_coefficients(const tab_config* cfg,
                                         double out_s_w_per_rad[3]);

/* direct_aggregation != 0 selects the direct link sums; otherwise the
 * conservation-consistent aggregation (ports sum to zero exactly). */
TAB_API tab_status tab_port_powers(const double s_w_per_rad[3], double phi21_rad,
                                   double phi31_rad, double phi23_rad,
                                   int direct_aggregation, double out_link_w[3],
                                   double out_port_w[3]);

TAB_API tab_status tab_dispatch_solve(const tab_config* cfg, double grid_w,
                                      double load_w, double out_delta_rad[3],
                                      double out_link_w[3], double out_port_w[3]);

/* --- modulation waveforms ------------------------------------------------ */

TAB_API tab_status tab_square_pwm(double frequency_hz, double duty,
                                  double phase_rad, double amplitude_v,
                                  double t_s, double* out_v);
TAB_API tab_status tab_spwm(double carrier_hz, double reference_hz,
                            double sine_amplitude_v, double triangle_amplitude_v,
                            double dc_rail_v, double t_s, double* out_v);
TAB_API tab_status tab_modulation_index(double sine_amplitude_v,
                                        double triangle_amplitude_v,
                                        double* out_ma, int* out_overmodulated);

/* --- time-domain simulation ---------------------------------------------- */

/* TAB_ERR_NONSTEADY still produces a trace. */
TAB_API tab_status tab_simulate(const tab_config* cfg, tab_trace** out);
TAB_API void tab_trace_free(tab_trace* trace);

TAB_API double tab_trace_dt_s(const tab_trace* trace);
TAB_API int tab_trace_nonsteady(const tab_trace* trace);
TAB_API size_t tab_trace_length(const tab_trace* trace);
TAB_API size_t tab_trace_channel_count(const tab_trace* trace);
TAB_API const char* tab_trace_channel_name(const tab_trace* trace, size_t index);
TAB_API tab_status tab_trace_channel(const tab_trace* trace, const char* name,
                                     const double** out_data, size_t* out_len);

/* Cycle average of v_out over the final period; TAB_ERR_NONSTEADY flags a
 * value taken from a non-steady trace. */
TAB_API tab_status tab_trace_steady_output(const tab_trace* trace, double* out_v);

/* Mean winding-side power of port 1..3 over the final period, positive when
 * the port delivers power. */
TAB_API tab_status tab_trace_port_power(const tab_trace* trace, int port,
                                        double* out_w);
TAB_API tab_status tab_trace_write_csv(const tab_trace* trace, const char* path);

/* --- command-level experiment runners ------------------------------------ */

TAB_API tab_status tab_cmd_simulate(const tab_config* cfg, const char* out_csv);
TAB_API tab_status tab_cmd_sweep(const tab_config* cfg, const char* kind,
                                 double from, double to, int steps, int parallel,
                                 const char* out_csv);

/* Report JSON through *out_json (free with tab_text_free). */
TAB_API tab_status tab_cmd_solve_dispatch(const tab_config* cfg, double grid_w,
                                          double load_w, char** out_json);
TAB_API tab_status tab_cmd_thd_compare(const tab_config* cfg, const char* out_json);
TAB_API tab_status tab_cmd_combined_mode(const tab_config* cfg, const char* out_json);

#ifdef __cplusplus
}
#endif

#endif /* TABSIM_H */
