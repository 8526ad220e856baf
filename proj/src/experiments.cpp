#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <thread>

#include "analysis.hpp"
#include "angles.hpp"
#include "error.hpp"
#include "powerflow.hpp"
#include "textio.hpp"

namespace tabsim {

using nlohmann::json;

namespace {

json provenance(const Config& cfg) {
    return json{{"toolkit", "tabsim"},
                {"version", TABSIM_VERSION},
                {"config_hash", cfg.hash()}};
}

Config with_updates(const Config& cfg, const std::function<void(json&)>& edit) {
    json j = cfg.resolved();
    edit(j);
    return Config::from_json_text(j.dump());
}

std::span<const double> final_period(const WaveformTrace& trace,
                                     const std::string& channel) {
    const auto full = trace.channel(channel);
    const size_t n = static_cast<size_t>(trace.steps_per_period);
    return full.subspan(full.size() - n, n);
}

bool strictly_monotone(std::span<const double> values, bool increasing) {
    if (values.size() < 2) return false;
    for (size_t i = 1; i < values.size(); ++i) {
        if (increasing ? values[i] <= values[i - 1] : values[i] >= values[i - 1])
            return false;
    }
    return true;
}

std::string spectrum_to_csv(const Spectrum& spec) {
    std::string out = "order,magnitude_v,phase_rad\n";
    for (size_t k = 0; k < spec.magnitudes_v.size(); ++k) {
        out += std::to_string(k + 1);
        out += ',';
        out += format_double(spec.magnitudes_v[k]);
        out += ',';
        out += format_double(spec.phases_rad[k]);
        out += '\n';
    }
    return out;
}

}  // namespace

std::string sidecar_path(std::string out, const std::string& suffix) {
    if (out.ends_with(".csv"))
        out.resize(out.size() - 4);
    else if (out.ends_with(".json"))
        out.resize(out.size() - 5);
    return out + suffix;
}

std::string trace_to_csv(const WaveformTrace& trace) {
    std::string out = "t_s";
    for (const auto& name : trace.channel_names) {
        out += ',';
        out += name;
    }
    out += '\n';
    const size_t len = trace.length();
    for (size_t m = 0; m < len; ++m) {
        out += format_double(static_cast<double>(m) * trace.dt_s);
        for (const auto& ch : trace.channels) {
            out += ',';
            out += format_double(ch[m]);
        }
        out += '\n';
    }
    return out;
}

CommandOutcome run_simulate(const Config& cfg, const std::string& out_csv) {
    json sidecar;
    sidecar["experiment_id"] = "simulate";
    sidecar["inputs"] = {{"config", cfg.resolved()}};
    sidecar["provenance"] = provenance(cfg);
    const std::string meta = sidecar_path(out_csv, ".meta.json");
    WaveformTrace trace;
    try {
        trace = simulate(cfg.converter(), cfg.sim());
    } catch (const Error& e) {
        sidecar["flags"] = {{"failed", e.what()}, {"steady", false}};
        write_text_file(meta, sidecar.dump(2) + "\n");
        throw;
    }
    write_text_file(out_csv, trace_to_csv(trace));
    const SteadyOutput steady = steady_state_output(trace);
    sidecar["flags"] = {{"steady", steady.steady},
                        {"periods_run", trace.periods_run},
                        {"steady_v_out_v", steady.volts},
                        {"per_period_v_out_avg", trace.per_period_vout_avg}};
    write_text_file(meta, sidecar.dump(2) + "\n");
    CommandOutcome outcome;
    outcome.numeric_trouble = trace.non_steady;
    if (trace.non_steady)
        outcome.message = "simulation did not reach steady state within max_periods";
    return outcome;
}

namespace {

struct SweepPoint {
    double param = 0.0;
    bool ok = false;
    double v_out = 0.0;
    std::array<double, 3> port_w{};
    std::string error;
};

std::vector<std::string> sweep_keys(const Config& cfg, const std::string& kind) {
    if (kind == "duty") return {"switching.port1.duty", "switching.port2.duty"};
    if (kind == "phase") return {"switching.port3.phase_rad"};
    if (kind == "ma") return {"switching.spwm.sine_amplitude_v"};
    if (kind == "halfbridge_duty") {
        if (cfg.converter().topology != BridgeTopology::half_bridge)
            throw_precondition("halfbridge_duty sweep needs a half_bridge topology");
        return {"switching.port1.duty", "switching.port2.duty"};
    }
    throw_config("unknown sweep kind '" + kind +
                 "' (have: duty, phase, ma, halfbridge_duty)");
}

}  // namespace

CommandOutcome run_sweep(const Config& cfg, const std::string& kind, double from,
                         double to, int steps, bool parallel,
                         const std::string& out_csv) {
    if (steps < 1) throw_config("sweep needs at least one step");
    const std::vector<std::string> keys = sweep_keys(cfg, kind);
    // The ma sweep scales the sine amplitude against the configured triangle.
    const double ma_scale =
        kind == "ma"
            ? cfg.resolved().at("switching").at("spwm").at("triangle_amplitude_v").get<double>()
            : 1.0;

    std::vector<SweepPoint> points(static_cast<size_t>(steps));
    for (int i = 0; i < steps; ++i) {
        points[static_cast<size_t>(i)].param =
            steps == 1 ? from : from + (to - from) * i / (steps - 1);
    }

    auto run_point = [&](SweepPoint& pt) {
        try {
            Config point_cfg = cfg;
            for (const auto& key : keys) point_cfg.set_number(key, pt.param * ma_scale);
            const WaveformTrace trace = simulate(point_cfg.converter(), point_cfg.sim());
            if (trace.non_steady) {
                pt.error = "did not reach steady state";
                return;
            }
            pt.v_out = steady_state_output(trace).volts;
            for (int p = 1; p <= 3; ++p)
                pt.port_w[static_cast<size_t>(p - 1)] = port_power_measure(trace, p);
            pt.ok = true;
        } catch (const std::exception& e) {
            pt.error = e.what();
        }
    };

    if (parallel && steps > 1) {
        std::atomic<size_t> next{0};
        const unsigned workers =
            std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                               static_cast<unsigned>(steps));
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < points.size();
                     i = next.fetch_add(1))
                    run_point(points[i]);
            });
        }
        for (auto& t : pool) t.join();
    } else {
        for (auto& pt : points) run_point(pt);
    }

    std::string csv = "param,v_out_v,p1_w,p2_w,p3_w\n";
    std::vector<std::pair<double, double>> fit_points;
    std::vector<double> vouts;
    size_t succeeded = 0;
    json rows = json::array();
    for (const auto& pt : points) {
        json row{{"param", pt.param}, {"ok", pt.ok}};
        if (pt.ok) {
            ++succeeded;
            const double fields[5] = {pt.param, pt.v_out, pt.port_w[0],
                                      pt.port_w[1], pt.port_w[2]};
            csv += csv_row(fields);
            csv += '\n';
            row["v_out_v"] = pt.v_out;
            row["p1_w"] = pt.port_w[0];
            row["p2_w"] = pt.port_w[1];
            row["p3_w"] = pt.port_w[2];
            fit_points.emplace_back(pt.param, pt.v_out);
            vouts.push_back(pt.v_out);
        } else {
            row["error"] = pt.error;
        }
        rows.push_back(row);
    }

    json flags;
    flags["monotone_increasing"] = strictly_monotone(vouts, true);
    flags["monotone_decreasing"] = strictly_monotone(vouts, false);
    if (fit_points.size() >= 2) {
        const LineFit fit = linear_fit(fit_points);
        const LineFit origin = fit_through_origin(fit_points);
        double full_scale = 0.0;
        for (double v : vouts) full_scale = std::max(full_scale, std::abs(v));
        flags["linear_fit"] = {{"slope", fit.slope},
                               {"intercept", fit.intercept},
                               {"max_residual", fit.max_residual},
                               {"max_residual_fraction", full_scale > 0.0
                                                             ? fit.max_residual / full_scale
                                                             : 0.0}};
        flags["origin_fit"] = {{"slope", origin.slope},
                               {"max_residual", origin.max_residual},
                               {"max_residual_fraction", full_scale > 0.0
                                                             ? origin.max_residual / full_scale
                                                             : 0.0}};
    }
    flags["points"] = steps;
    flags["succeeded"] = succeeded;

    json report;
    report["experiment_id"] = "sweep-" + kind;
    report["inputs"] = {{"config", cfg.resolved()},
                        {"kind", kind},
                        {"from", from},
                        {"to", to},
                        {"steps", steps}};
    report["rows"] = rows;
    report["flags"] = flags;
    report["provenance"] = provenance(cfg);

    write_text_file(out_csv, csv);
    write_text_file(sidecar_path(out_csv, ".report.json"), report.dump(2) + "\n");

    CommandOutcome outcome;
    const size_t needed =
        static_cast<size_t>(std::ceil(0.9 * static_cast<double>(steps)));
    outcome.numeric_trouble = succeeded < needed;
    if (outcome.numeric_trouble)
        outcome.message = "only " + std::to_string(succeeded) + " of " +
                          std::to_string(steps) + " sweep points succeeded";
    return outcome;
}

std::string run_solve_dispatch(const Config& cfg, double grid_w, double load_w) {
    const std::array<double, 3> s = cfg.link_coefficients_w_per_rad();
    const DispatchResult result = dispatch_solve(s, grid_w, load_w);
    json out;
    out["experiment_id"] = "solve-dispatch";
    out["inputs"] = {{"config", cfg.resolved()},
                     {"grid_watts", grid_w},
                     {"load_watts", load_w}};
    out["rows"] = json::array({{{"delta2_rad", result.delta_rad[1]},
                                {"delta3_rad", result.delta_rad[2]},
                                {"p1_w", result.powers.port_w[0]},
                                {"p2_w", result.powers.port_w[1]},
                                {"p3_w", result.powers.port_w[2]}}});
    out["solution"] = {
        {"delta_rad",
         {{"delta1", result.delta_rad[0]},
          {"delta2", result.delta_rad[1]},
          {"delta3", result.delta_rad[2]}}},
        {"phase_set",
         {{"phi21_rad", result.phases.phi21_rad},
          {"phi31_rad", result.phases.phi31_rad},
          {"phi23_rad", result.phases.phi23_rad}}},
        {"link_powers_w",
         {{"p21", result.powers.link_w[0]},
          {"p31", result.powers.link_w[1]},
          {"p23", result.powers.link_w[2]}}},
        {"port_powers_w",
         {{"p1", result.powers.port_w[0]},
          {"p2", result.powers.port_w[1]},
          {"p3", result.powers.port_w[2]}}},
        {"aggregation", "conservation_consistent"},
        {"s_w_per_rad", {{"s21", s[0]}, {"s31", s[1]}, {"s23", s[2]}}},
        {"iterations", result.iterations},
        {"residual_w", result.residual_w}};
    out["provenance"] = provenance(cfg);
    return out.dump(2) + "\n";
}

CommandOutcome run_thd_compare(const Config& cfg, const std::string& out_json) {
    const ConverterSpec spec = cfg.converter();
    if (!spec.spwm) throw_config("thd-compare needs the spwm settings block");
    const SpwmSettings& sp = *spec.spwm;
    const double ratio = sp.carrier_hz / sp.reference_hz;
    const bool ratio_warning = ratio < 20.0;

    const double rail = spec.v1_v;
    const double base_hz = sp.reference_hz;
    const size_t n = 32768;
    const double dt = 1.0 / base_hz / static_cast<double>(n);

    const SquarePwmConfig square_cfg =
        SquarePwmConfig::make(base_hz, 0.5, 0.0, rail);
    const SpwmConfig spwm_cfg = SpwmConfig::make(
        sp.carrier_hz, sp.reference_hz, sp.sine_amplitude_v,
        sp.triangle_amplitude_v, rail);

    std::vector<double> square_wave(n), spwm_wave(n);
    for (size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) * dt;
        square_wave[i] = square_pwm(square_cfg, t);
        spwm_wave[i] = spwm(spwm_cfg, t);
    }

    const int max_order = 199;
    const Spectrum square_spec = spectrum(square_wave, dt, base_hz, max_order);
    const Spectrum spwm_spec = spectrum(spwm_wave, dt, base_hz, max_order);

    const double square_lo = thd(square_spec, 9);
    const double spwm_lo = thd(spwm_spec, 9);
    const double square_full = thd(square_spec, max_order);

    const std::string square_csv = sidecar_path(out_json, "_square_spectrum.csv");
    const std::string spwm_csv = sidecar_path(out_json, "_spwm_spectrum.csv");
    write_text_file(square_csv, spectrum_to_csv(square_spec));
    write_text_file(spwm_csv, spectrum_to_csv(spwm_spec));

    json report;
    report["experiment_id"] = "thd-compare";
    report["inputs"] = {{"config", cfg.resolved()}};
    report["rows"] = json::array(
        {{{"waveform", "square"}, {"thd_orders_2_9", square_lo},
          {"thd_orders_2_199", square_full},
          {"fundamental_v", square_spec.magnitudes_v[0]},
          {"spectrum_csv", square_csv}},
         {{"waveform", "spwm"}, {"thd_orders_2_9", spwm_lo},
          {"thd_orders_2_199", thd(spwm_spec, max_order)},
          {"fundamental_v", spwm_spec.magnitudes_v[0]},
          {"spectrum_csv", spwm_csv}}});
    report["flags"] = {{"low_order_thd_ratio", spwm_lo / square_lo},
                       {"spwm_less_distorted", spwm_lo < square_lo},
                       {"carrier_ratio", ratio},
                       {"carrier_ratio_below_20", ratio_warning}};
    report["provenance"] = provenance(cfg);
    write_text_file(out_json, report.dump(2) + "\n");

    CommandOutcome outcome;
    if (ratio_warning)
        outcome.message = "carrier ratio below 20; SPWM linearity claims may not hold";
    return outcome;
}

CommandOutcome run_combined_mode(const Config& cfg, const std::string& out_json) {
    const ConverterSpec spec = cfg.converter();
    if (spec.drive[0].mode != DriveMode::spwm || spec.drive[1].mode != DriveMode::spwm)
        throw_precondition("combined-mode needs SPWM on both delivering bridges");
    if (spec.drive[2].mode != DriveMode::square)
        throw_precondition("combined-mode needs a square-driven consuming bridge");

    // The comparator convention puts the SPWM fundamental at 180 degrees, so
    // the rectifier transfers nothing at phase pi; the sweep offsets run from
    // that alignment point.
    const double align = kPi;
    const std::array<double, 4> offsets = {0.0, kPi / 12.0, kPi / 6.0, kPi / 4.0};
    json rows = json::array();
    std::vector<double> vouts;
    double ref_v_out = 0.0, ref_ripple = 0.0;
    bool all_steady = true;
    for (double off : offsets) {
        Config point = cfg;
        point.set_number("switching.port3.phase_rad", align + off);
        const WaveformTrace trace = simulate(point.converter(), point.sim());
        const SteadyOutput so = steady_state_output(trace);
        const RippleStats rs = ripple(final_period(trace, "v_out"));
        all_steady = all_steady && so.steady;
        vouts.push_back(so.volts);
        if (off == kPi / 12.0) {
            ref_v_out = so.volts;
            ref_ripple = rs.peak_to_peak;
        }
        rows.push_back(json{{"phase_offset_rad", off},
                            {"v_out_v", so.volts},
                            {"ripple_pp_v", rs.peak_to_peak},
                            {"steady", so.steady}});
    }

    // Pure square drive on the same circuit and filter, with the consuming
    // phase solved so both modes are compared at a matched output voltage.
    const std::array<double, 3> s_at_ref = link_coefficients(
        spec.transformer, {spec.v1_v, spec.v2_v, std::abs(ref_v_out)}, spec.fs_hz);
    const double p_link = ref_v_out * ref_v_out / spec.load_resistance_ohm / 2.0;
    double square_phase = kPi / 2.0;
    bool square_point_clamped = true;
    if (std::abs(p_link) <= s_at_ref[1] * kPi / 4.0) {
        square_phase = invert_link_power(s_at_ref[1], p_link);
        square_point_clamped = false;
    }
    Config square_cfg = with_updates(cfg, [&](json& j) {
        for (const char* port : {"port1", "port2"}) {
            j["switching"][port]["mode"] = "square";
            j["switching"][port]["duty"] = 1.0;
            j["switching"][port]["phase_rad"] = 0.0;
        }
        j["switching"]["port3"]["phase_rad"] = square_phase;
    });
    const WaveformTrace square_trace =
        simulate(square_cfg.converter(), square_cfg.sim());
    const RippleStats square_ripple = ripple(final_period(square_trace, "v_out"));
    const double square_v_out = steady_state_output(square_trace).volts;

    const bool monotone = strictly_monotone(vouts, true) ||
                          strictly_monotone(vouts, false);
    json report;
    report["experiment_id"] = "combined-mode";
    report["inputs"] = {{"config", cfg.resolved()},
                        {"alignment_phase_rad", align},
                        {"consuming_phase_offsets_rad", offsets}};
    report["rows"] = rows;
    report["flags"] = {
        {"phase_monotone", monotone},
        {"combined_ripple_pp_v", ref_ripple},
        {"combined_v_out_v", ref_v_out},
        {"square_ripple_pp_v", square_ripple.peak_to_peak},
        {"square_v_out_v", square_v_out},
        {"square_phase_rad", square_phase},
        {"square_point_clamped", square_point_clamped},
        {"ripple_vs_square",
         ref_ripple > square_ripple.peak_to_peak ? "larger" : "smaller"},
        {"all_points_steady", all_steady}};
    report["provenance"] = provenance(cfg);
    write_text_file(out_json, report.dump(2) + "\n");

    CommandOutcome outcome;
    outcome.numeric_trouble = !all_steady;
    if (!all_steady) outcome.message = "at least one combined-mode point was non-steady";
    return outcome;
}

}  // namespace tabsim
