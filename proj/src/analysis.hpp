#pragma once

#include <span>
#include <vector>

namespace tabsim {

// Harmonic content at integer multiples of a base frequency. Entry k of the
// vectors holds order k+1, so index 0 is the fundamental.
struct Spectrum {
    double base_frequency_hz = 0.0;
    std::vector<double> magnitudes_v;
    std::vector<double> phases_rad;
};

struct Fundamental {
    double amplitude_v = 0.0;
    double phase_rad = 0.0;  // x(t) ~ amplitude * sin(2*pi*f*t + phase)
};

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double max_residual = 0.0;
};

struct RippleStats {
    double peak_to_peak = 0.0;
    double mean = 0.0;
};

// Single-bin correlation at the base frequency. The samples must cover an
// integer number (>= 1) of base periods with at least 64 samples per period,
// which makes leakage exactly zero; otherwise a precondition error is thrown.
Fundamental dft_fundamental(std::span<const double> samples, double dt_s,
                            double base_frequency_hz);

// Correlation spectrum for orders 1..max_order (same window preconditions).
Spectrum spectrum(std::span<const double> samples, double dt_s,
                  double base_frequency_hz, int max_order);

// sqrt(sum of squared magnitudes, orders 2..max_order) / fundamental.
double thd(const Spectrum& spec, int max_order);

// Ordinary least squares line plus the worst absolute residual.
LineFit linear_fit(std::span<const std::pair<double, double>> points);

// Least squares through the origin; intercept is fixed at zero.
LineFit fit_through_origin(std::span<const std::pair<double, double>> points);

RippleStats ripple(std::span<const double> samples);

}  // namespace tabsim
