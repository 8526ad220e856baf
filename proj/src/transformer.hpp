#pragma once

#include <array>

namespace tabsim {

// Three-winding transformer reduced to the delta of link inductances between
// port pairs. All link values are referred to winding 1; the magnetizing
// branch is taken as infinite.
struct TransformerSpec {
    std::array<double, 3> turns{1.0, 1.0, 1.0};        // n1, n2, n3
    std::array<double, 3> links_h{0.0, 0.0, 0.0};      // L21, L31, L23

    static TransformerSpec make(std::array<double, 3> turns,
                                std::array<double, 3> links_h);
};

// Ideal-transformer voltage referral: v * to_turns / from_turns.
double refer_voltage(double v, double from_turns, double to_turns);

// Star (per-winding leakage, ports 1..3) to delta link inductances.
// Returns (L21, L31, L23); the link between two ports divides by the third
// star branch.
std::array<double, 3> delta_from_star(const std::array<double, 3>& star_h);

// Phase-shift power coefficients (S21, S31, S23) in watts per radian:
// S_ij = Vi*Vj / (ni*nj*omega*L_ij) with omega = 2*pi*f_s.
std::array<double, 3> link_coefficients(const TransformerSpec& spec,
                                        const std::array<double, 3>& port_voltages_v,
                                        double fs_hz);

}  // namespace tabsim
