#pragma once

#include <array>

namespace tabsim {

// Inter-port phase shift angles, each wrapped into (-pi, pi].
// phi_ij is positive when bridge i leads bridge j.
struct PhaseSet {
    double phi21_rad = 0.0;
    double phi31_rad = 0.0;
    double phi23_rad = 0.0;

    // From absolute bridge phase advances (delta1, delta2, delta3).
    static PhaseSet from_absolute(double delta1_rad, double delta2_rad,
                                  double delta3_rad);
    // Direct construction; rejects triples where phi23 != wrap(phi21 - phi31).
    static PhaseSet make(double phi21_rad, double phi31_rad, double phi23_rad);
};

enum class Aggregation {
    // Direct sums P1 = P21 + P31, P2 = P21 + P23, P3 = P23 - P31, which do
    // not balance to zero in general.
    direct,
    // Signed sum of outgoing link powers with P_ij = -P_ji; the third port is
    // constructed as -(P1 + P2) so the balance is exact in floating point.
    conservation_consistent,
};

struct PowerSolution {
    std::array<double, 3> link_w{};  // P21, P31, P23
    std::array<double, 3> port_w{};  // P1, P2, P3, positive delivers
    Aggregation mode = Aggregation::conservation_consistent;
};

struct DispatchResult {
    std::array<double, 3> delta_rad{};  // absolute phases, delta1 pinned at 0
    PhaseSet phases;
    PowerSolution powers;
    int iterations = 0;
    double residual_w = 0.0;
};

// P = S * phi * (1 - |phi|/pi), extended oddly for reverse transfer.
double link_power(double s_w_per_rad, double phi_rad);

// d(link_power)/d(phi).
double link_power_slope(double s_w_per_rad, double phi_rad);

// The |phi| <= pi/2 root of link_power(S, phi) = target. Throws an
// infeasible Error carrying S*pi/4 when the target exceeds it.
double invert_link_power(double s_w_per_rad, double target_w);

PowerSolution port_powers(const std::array<double, 3>& s_w_per_rad,
                          const PhaseSet& phases,
                          Aggregation mode = Aggregation::conservation_consistent);

// Finds bridge phases (delta2, delta3) with delta1 = 0 such that port 1
// delivers target_grid_w and port 3 absorbs target_load_w, by damped Newton
// on the two-port residual. Storage power follows from conservation.
DispatchResult dispatch_solve(const std::array<double, 3>& s_w_per_rad,
                              double target_grid_w, double target_load_w);

// Duty-cycle output relation V_out = D * V_in * n_out / n_in.
double duty_voltage(double duty, double v_in, double n_in, double n_out);

}  // namespace tabsim
