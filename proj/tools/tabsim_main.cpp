// Command line front end for the tabsim shared library. Everything of
// substance lives behind the C API in tabsim.h; this file only parses
// arguments, forwards them, and maps statuses to the documented exit codes:
// 0 ok, 1 configuration/usage error, 2 infeasible request, 3 numerical
// failure (divergence, non-convergence, non-steady runs).

#include <tabsim.h>

#include <CLI11.hpp>

#include <cstdio>
#include <memory>
#include <string>

namespace {

int to_exit(tab_status status) {
    switch (status) {
        case TAB_OK:
            return 0;
        case TAB_ERR_CONFIG:
        case TAB_ERR_IO:
            return 1;
        case TAB_ERR_INFEASIBLE:
            return 2;
        default:
            return 3;
    }
}

int fail(tab_status status) {
    std::fprintf(stderr, "tabsim: %s\n", tab_last_error());
    return to_exit(status);
}

using ConfigHandle = std::unique_ptr<tab_config, decltype(&tab_config_free)>;

struct ConfigArgs {
    std::string path;
    std::string preset;
};

void add_config_options(CLI::App* cmd, ConfigArgs& args) {
    auto* file_opt = cmd->add_option("--config", args.path, "configuration JSON file");
    auto* preset_opt =
        cmd->add_option("--preset", args.preset, "built-in preset (ref_a, combined_a)");
    file_opt->excludes(preset_opt);
}

ConfigHandle load_config(const ConfigArgs& args, tab_status& status) {
    tab_config* raw = nullptr;
    if (!args.path.empty())
        status = tab_config_from_file(args.path.c_str(), &raw);
    else if (!args.preset.empty())
        status = tab_config_preset(args.preset.c_str(), &raw);
    else
        status = tab_config_preset("ref_a", &raw);
    return ConfigHandle(raw, &tab_config_free);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"triple-active-bridge converter simulation toolkit"};
    app.set_version_flag("--version", std::string(tab_version()));
    app.require_subcommand(1);

    // simulate
    auto* sim_cmd = app.add_subcommand("simulate", "run one simulation, write the trace CSV");
    ConfigArgs sim_cfg;
    std::string sim_out;
    add_config_options(sim_cmd, sim_cfg);
    sim_cmd->add_option("--out", sim_out, "trace CSV path")->required();

    // sweep
    auto* sweep_cmd = app.add_subcommand("sweep", "run a parameter sweep");
    ConfigArgs sweep_cfg;
    std::string sweep_kind, sweep_out;
    double sweep_from = 0.0, sweep_to = 0.0;
    int sweep_steps = 0;
    bool sweep_parallel = false;
    add_config_options(sweep_cmd, sweep_cfg);
    sweep_cmd->add_option("--kind", sweep_kind, "duty | phase | ma | halfbridge_duty")
        ->required();
    sweep_cmd->add_option("--from", sweep_from, "first parameter value")->required();
    sweep_cmd->add_option("--to", sweep_to, "last parameter value")->required();
    sweep_cmd->add_option("--steps", sweep_steps, "number of points")->required();
    sweep_cmd->add_flag("--parallel", sweep_parallel, "run points concurrently");
    sweep_cmd->add_option("--out", sweep_out, "row CSV path")->required();

    // solve-dispatch
    auto* disp_cmd =
        app.add_subcommand("solve-dispatch", "invert the power-flow equations");
    ConfigArgs disp_cfg;
    double grid_w = 0.0, load_w = 0.0;
    add_config_options(disp_cmd, disp_cfg);
    disp_cmd->add_option("--grid-watts", grid_w, "target grid (port 1) power")->required();
    disp_cmd->add_option("--load-watts", load_w, "target load (port 3) power")->required();

    // thd-compare
    auto* thd_cmd =
        app.add_subcommand("thd-compare", "square vs SPWM spectra and low-order THD");
    ConfigArgs thd_cfg;
    std::string thd_out;
    add_config_options(thd_cmd, thd_cfg);
    thd_cmd->add_option("--out", thd_out, "report JSON path")->required();

    // combined-mode
    auto* comb_cmd = app.add_subcommand(
        "combined-mode", "SPWM delivering bridges with a square rectifier");
    ConfigArgs comb_cfg;
    std::string comb_out;
    add_config_options(comb_cmd, comb_cfg);
    comb_cmd->add_option("--out", comb_out, "report JSON path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    tab_status status = TAB_OK;
    if (*sim_cmd) {
        ConfigHandle cfg = load_config(sim_cfg, status);
        if (status != TAB_OK) return fail(status);
        status = tab_cmd_simulate(cfg.get(), sim_out.c_str());
        return status == TAB_OK ? 0 : fail(status);
    }
    if (*sweep_cmd) {
        ConfigHandle cfg = load_config(sweep_cfg, status);
        if (status != TAB_OK) return fail(status);
        status = tab_cmd_sweep(cfg.get(), sweep_kind.c_str(), sweep_from, sweep_to,
                               sweep_steps, sweep_parallel ? 1 : 0, sweep_out.c_str());
        return status == TAB_OK ? 0 : fail(status);
    }
    if (*disp_cmd) {
        ConfigHandle cfg = load_config(disp_cfg, status);
        if (status != TAB_OK) return fail(status);
        char* json = nullptr;
        status = tab_cmd_solve_dispatch(cfg.get(), grid_w, load_w, &json);
        if (status != TAB_OK) return fail(status);
        std::fputs(json, stdout);
        tab_text_free(json);
        return 0;
    }
    if (*thd_cmd) {
        ConfigHandle cfg = load_config(thd_cfg, status);
        if (status != TAB_OK) return fail(status);
        status = tab_cmd_thd_compare(cfg.get(), thd_out.c_str());
        return status == TAB_OK ? 0 : fail(status);
    }
    if (*comb_cmd) {
        ConfigHandle cfg = load_config(comb_cfg, status);
        if (status != TAB_OK) return fail(status);
        status = tab_cmd_combined_mode(cfg.get(), comb_out.c_str());
        return status == TAB_OK ? 0 : fail(status);
    }
    return 1;
}
