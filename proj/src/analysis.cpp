#include "analysis.hpp"

#include <algorithm>
#include <cmath>

#include "angles.hpp"
#include "error.hpp"

namespace tabsim {

namespace {

// Checks the integer-period window and returns the number of base periods.
long check_window(std::span<const double> samples, double dt_s,
                  double base_frequency_hz) {
    if (samples.empty()) throw_precondition("empty sample series");
    if (!(dt_s > 0.0) || !(base_frequency_hz > 0.0))
        throw_precondition("dt and base frequency must be > 0");
    const double periods =
        static_cast<double>(samples.size()) * dt_s * base_frequency_hz;
    const double rounded = std::round(periods);
    if (rounded < 1.0 || std::abs(periods - rounded) > 1e-6 * std::max(1.0, rounded))
        throw_precondition("series must span an integer number of base periods");
    if (static_cast<double>(samples.size()) / rounded < 64.0)
        throw_precondition("need at least 64 samples per base period");
    return std::lround(rounded);
}

}  // namespace

Fundamental dft_fundamental(std::span<const double> samples, double dt_s,
                            double base_frequency_hz) {
    check_window(samples, dt_s, base_frequency_hz);
    const double w = kTwoPi * base_frequency_hz * dt_s;
    double sin_acc = 0.0, cos_acc = 0.0;
    for (size_t n = 0; n < samples.size(); ++n) {
        sin_acc += samples[n] * std::sin(w * static_cast<double>(n));
        cos_acc += samples[n] * std::cos(w * static_cast<double>(n));
    }
    const double scale = 2.0 / static_cast<double>(samples.size());
    const double bs = sin_acc * scale;  // coefficient of sin
    const double bc = cos_acc * scale;  // coefficient of cos
    return Fundamental{std::hypot(bs, bc), std::atan2(bc, bs)};
}

Spectrum spectrum(std::span<const double> samples, double dt_s,
                  double base_frequency_hz, int max_order) {
    check_window(samples, dt_s, base_frequency_hz);
    if (max_order < 1) throw_precondition("max_order must be >= 1");
    Spectrum spec;
    spec.base_frequency_hz = base_frequency_hz;
    spec.magnitudes_v.reserve(static_cast<size_t>(max_order));
    spec.phases_rad.reserve(static_cast<size_t>(max_order));
    double mean_square = 0.0;
    for (double v : samples) mean_square += v * v;
    mean_square /= static_cast<double>(samples.size());
    // Bins whose correlation is pure rounding noise read as exact zeros.
    const double floor_v = 1e-12 * std::sqrt(mean_square);
    for (int k = 1; k <= max_order; ++k) {
        const double w = kTwoPi * base_frequency_hz * dt_s * k;
        double sin_acc = 0.0, cos_acc = 0.0;
        for (size_t n = 0; n < samples.size(); ++n) {
            sin_acc += samples[n] * std::sin(w * static_cast<double>(n));
            cos_acc += samples[n] * std::cos(w * static_cast<double>(n));
        }
        const double scale = 2.0 / static_cast<double>(samples.size());
        double mag = std::hypot(sin_acc * scale, cos_acc * scale);
        double phase = std::atan2(cos_acc * scale, sin_acc * scale);
        if (mag < floor_v) {
            mag = 0.0;
            phase = 0.0;
        }
        spec.magnitudes_v.push_back(mag);
        spec.phases_rad.push_back(phase);
    }
    return spec;
}

double thd(const Spectrum& spec, int max_order) {
    if (max_order < 2) throw_precondition("THD needs max_order >= 2");
    if (static_cast<size_t>(max_order) > spec.magnitudes_v.size())
        throw_precondition("spectrum does not cover the requested order");
    const double fundamental = spec.magnitudes_v[0];
    if (!(fundamental > 0.0))
        throw Error(ErrorCode::precondition, "THD undefined: zero fundamental");
    double acc = 0.0;
    for (int k = 2; k <= max_order; ++k) {
        const double m = spec.magnitudes_v[static_cast<size_t>(k - 1)];
        acc += m * m;
    }
    return std::sqrt(acc) / fundamental;
}

LineFit linear_fit(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw_precondition("linear fit needs >= 2 points");
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double n = static_cast<double>(points.size());
    const double denom = n * sxx - sx * sx;
    if (std::abs(denom) < 1e-300 * std::max(1.0, sxx))
        throw_precondition("linear fit needs at least two distinct x values");
    LineFit fit;
    fit.slope = (n * sxy - sx * sy) / denom;
    fit.intercept = (sy - fit.slope * sx) / n;
    for (const auto& [x, y] : points)
        fit.max_residual = std::max(fit.max_residual,
                                    std::abs(y - fit.slope * x - fit.intercept));
    return fit;
}

LineFit fit_through_origin(std::span<const std::pair<double, double>> points) {
    if (points.empty()) throw_precondition("fit needs >= 1 point");
    double sxx = 0.0, sxy = 0.0;
    for (const auto& [x, y] : points) {
        sxx += x * x;
        sxy += x * y;
    }
    if (!(sxx > 0.0)) throw_precondition("fit needs a nonzero x value");
    LineFit fit;
    fit.slope = sxy / sxx;
    for (const auto& [x, y] : points)
        fit.max_residual = std::max(fit.max_residual, std::abs(y - fit.slope * x));
    return fit;
}

RippleStats ripple(std::span<const double> samples) {
    if (samples.empty()) throw_precondition("empty sample series");
    double lo = samples[0], hi = samples[0], sum = 0.0;
    for (double v : samples) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    return RippleStats{hi - lo, sum / static_cast<double>(samples.size())};
}

}  // namespace tabsim
