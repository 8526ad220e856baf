#include "transformer.hpp"

#include <cmath>

#include "angles.hpp"
#include "error.hpp"

namespace tabsim {

TransformerSpec TransformerSpec::make(std::array<double, 3> turns,
                                      std::array<double, 3> links_h) {
    for (double n : turns)
        if (!(n > 0.0) || !std::isfinite(n))
            throw_config("transformer turns must be > 0");
    for (double l : links_h)
        if (!(l > 0.0) || !std::isfinite(l))
            throw_config("link inductances must be > 0");
    return TransformerSpec{turns, links_h};
}

double refer_voltage(double v, double from_turns, double to_turns) {
    if (!(from_turns > 0.0) || !(to_turns > 0.0))
        throw_config("turn counts must be > 0");
    return v * (to_turns / from_turns);
}

std::array<double, 3> delta_from_star(const std::array<double, 3>& star_h) {
    for (double l : star_h)
        if (!(l > 0.0) || !std::isfinite(l))
            throw_config("star branches must be > 0");
    const double cross = star_h[0] * star_h[1] + star_h[1] * star_h[2] +
                         star_h[2] * star_h[0];
    return {cross / star_h[2],   // L21, opposite branch is port 3
            cross / star_h[1],   // L31
            cross / star_h[0]};  // L23
}

std::array<double, 3> link_coefficients(const TransformerSpec& spec,
                                        const std::array<double, 3>& port_voltages_v,
                                        double fs_hz) {
    if (!(fs_hz > 0.0)) throw_config("switching frequency must be > 0");
    for (double v : port_voltages_v)
        if (v < 0.0) throw_config("port voltages must be >= 0");
    const double omega = kTwoPi * fs_hz;
    const auto& n = spec.turns;
    const auto& l = spec.links_h;
    return {port_voltages_v[1] * port_voltages_v[0] / (n[1] * n[0] * omega * l[0]),
            port_voltages_v[2] * port_voltages_v[0] / (n[2] * n[0] * omega * l[1]),
            port_voltages_v[2] * port_voltages_v[1] / (n[2] * n[1] * omega * l[2])};
}

}  // namespace tabsim
