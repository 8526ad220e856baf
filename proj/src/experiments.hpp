#pragma once

#include <string>

#include "config.hpp"

namespace tabsim {

struct CommandOutcome {
    bool numeric_trouble = false;  // non-steady run or too many failed points
    std::string message;
};

// Runs one simulation, writes the trace CSV at out_csv and a resolved-config
// sidecar next to it (<out>.meta.json). A non-steady run still writes both
// and reports numeric_trouble. Divergence writes the sidecar, then rethrows.
CommandOutcome run_simulate(const Config& cfg, const std::string& out_csv);

// Parameter sweep: kind is duty | phase | ma | halfbridge_duty. Writes the
// row CSV at out_csv and an ExperimentReport JSON sidecar (<out>.report.json).
// numeric_trouble is set when fewer than 90% of the points succeed.
CommandOutcome run_sweep(const Config& cfg, const std::string& kind, double from,
                         double to, int steps, bool parallel,
                         const std::string& out_csv);

// Analytic dispatch solve; returns the report JSON text. Infeasible and
// non-convergent requests propagate as errors.
std::string run_solve_dispatch(const Config& cfg, double grid_w, double load_w);

// Matched square vs SPWM spectra and the low-order THD comparison. Writes the
// report at out_json plus two spectrum CSVs next to it.
CommandOutcome run_thd_compare(const Config& cfg, const std::string& out_json);

// The combined-method experiment: consuming-port phase sweep with ripple
// comparison against the pure square drive. Writes the report at out_json.
CommandOutcome run_combined_mode(const Config& cfg, const std::string& out_json);

// Fixed trace schema used by run_simulate.
std::string trace_to_csv(const WaveformTrace& trace);

// "<base>.suffix" with any .csv/.json extension stripped from out first.
std::string sidecar_path(std::string out, const std::string& suffix);

}  // namespace tabsim
