#include "powerflow.hpp"

#include <cmath>
#include <string>

#include "angles.hpp"
#include "error.hpp"

namespace tabsim {

PhaseSet PhaseSet::from_absolute(double delta1_rad, double delta2_rad,
                                 double delta3_rad) {
    PhaseSet p;
    p.phi21_rad = wrap_to_pi(delta2_rad - delta1_rad);
    p.phi31_rad = wrap_to_pi(delta3_rad - delta1_rad);
    p.phi23_rad = wrap_to_pi(delta2_rad - delta3_rad);
    return p;
}

PhaseSet PhaseSet::make(double phi21_rad, double phi31_rad, double phi23_rad) {
    PhaseSet p{wrap_to_pi(phi21_rad), wrap_to_pi(phi31_rad), wrap_to_pi(phi23_rad)};
    const double mismatch = wrap_to_pi(p.phi21_rad - p.phi31_rad - p.phi23_rad);
    if (std::abs(mismatch) > 1e-9)
        throw_precondition("phase set inconsistent: phi23 must equal wrap(phi21 - phi31)");
    return p;
}

double link_power(double s_w_per_rad, double phi_rad) {
    if (s_w_per_rad < 0.0) throw_precondition("link coefficient must be >= 0");
    const double phi = wrap_to_pi(phi_rad);
    return s_w_per_rad * phi * (1.0 - std::abs(phi) / kPi);
}

double link_power_slope(double s_w_per_rad, double phi_rad) {
    const double phi = wrap_to_pi(phi_rad);
    return s_w_per_rad * (1.0 - 2.0 * std::abs(phi) / kPi);
}

double invert_link_power(double s_w_per_rad, double target_w) {
    if (s_w_per_rad < 0.0) throw_precondition("link coefficient must be >= 0");
    const double limit = s_w_per_rad * kPi / 4.0;
    const double mag = std::abs(target_w);
    if (mag > limit * (1.0 + 1e-12) || (s_w_per_rad == 0.0 && mag > 0.0)) {
        throw Error(ErrorCode::infeasible,
                    "requested link power " + std::to_string(target_w) +
                        " W exceeds the maximum transferable " +
                        std::to_string(limit) + " W",
                    limit);
    }
    if (target_w == 0.0) return 0.0;
    double disc = 1.0 - 4.0 * mag / (kPi * s_w_per_rad);
    if (disc < 0.0) disc = 0.0;  // boundary targets within rounding of the max
    const double phi = kPi / 2.0 * (1.0 - std::sqrt(disc));
    return std::copysign(phi, target_w);
}

PowerSolution port_powers(const std::array<double, 3>& s_w_per_rad,
                          const PhaseSet& phases, Aggregation mode) {
    PowerSolution out;
    out.mode = mode;
    const double p21 = link_power(s_w_per_rad[0], phases.phi21_rad);
    const double p31 = link_power(s_w_per_rad[1], phases.phi31_rad);
    const double p23 = link_power(s_w_per_rad[2], phases.phi23_rad);
    out.link_w = {p21, p31, p23};
    if (mode == Aggregation::direct) {
        out.port_w = {p21 + p31, p21 + p23, p23 - p31};
    } else {
        const double p1 = -(p21 + p31);
        const double p2 = p21 + p23;
        out.port_w = {p1, p2, -(p1 + p2)};  // port 3 closes the balance exactly
    }
    return out;
}

namespace {

struct Residual {
    double f1, f2;
    double norm() const { return std::max(std::abs(f1), std::abs(f2)); }
};

Residual dispatch_residual(const std::array<double, 3>& s, double d2, double d3,
                           double target_grid_w, double target_load_w) {
    const PowerSolution sol =
        port_powers(s, PhaseSet::from_absolute(0.0, d2, d3),
                    Aggregation::conservation_consistent);
    return {sol.port_w[0] - target_grid_w, sol.port_w[2] + target_load_w};
}

}  // namespace

DispatchResult dispatch_solve(const std::array<double, 3>& s_w_per_rad,
                              double target_grid_w, double target_load_w) {
    const auto& s = s_w_per_rad;
    const double tg = target_grid_w;
    const double tl = target_load_w;

    // Decoupled ansatz: the load splits evenly across its two links and the
    // grid feeds its own target, which fixes link 2-1 by conservation.
    struct Implied {
        const char* name;
        double power_w;
        double coeff;
    };
    const Implied implied[3] = {{"2-1", tl / 2.0 - tg, s[0]},
                                {"3-1", -tl / 2.0, s[1]},
                                {"2-3", tl / 2.0, s[2]}};
    double load_limit = (s[1] + s[2]) * kPi / 4.0;
    for (const auto& im : implied) {
        const double cap = 0.999 * im.coeff * kPi / 4.0;
        if (std::abs(im.power_w) > cap) {
            throw Error(ErrorCode::infeasible,
                        "dispatch infeasible: link " + std::string(im.name) +
                            " would need " + std::to_string(im.power_w) +
                            " W, above its " + std::to_string(cap) +
                            " W bound; at most " + std::to_string(load_limit) +
                            " W can reach the load",
                        load_limit);
        }
    }

    double d2 = invert_link_power(s[0], tl / 2.0 - tg);
    double d3 = invert_link_power(s[1], -tl / 2.0);

    Residual res = dispatch_residual(s, d2, d3, tg, tl);
    const double tol_w = 1e-9;
    const int max_iterations = 60;
    int iter = 0;
    while (res.norm() >= tol_w && iter < max_iterations) {
        ++iter;
        // Analytic Jacobian of (P1 - tg, P3 + tl) wrt (d2, d3).
        const double g21p = link_power_slope(s[0], d2);
        const double g31p = link_power_slope(s[1], d3);
        const double g23p = link_power_slope(s[2], d2 - d3);
        const double j11 = -g21p;
        const double j12 = -g31p;
        const double j21 = -g23p;
        const double j22 = g31p + g23p;
        const double det = j11 * j22 - j12 * j21;
        if (std::abs(det) < 1e-12 * (s[0] + s[1] + s[2] + 1.0)) {
            throw Error(ErrorCode::non_convergent,
                        "dispatch Jacobian is singular near the iterate");
        }
        const double step2 = (-res.f1 * j22 + res.f2 * j12) / det;
        const double step3 = (res.f1 * j21 - res.f2 * j11) / det;

        double lambda = 1.0;
        Residual next = res;
        for (int halve = 0; halve <= 10; ++halve) {
            next = dispatch_residual(s, d2 + lambda * step2, d3 + lambda * step3,
                                     tg, tl);
            if (next.norm() < res.norm() || halve == 10) break;
            lambda *= 0.5;
        }
        d2 += lambda * step2;
        d3 += lambda * step3;
        res = next;
    }
    if (res.norm() >= tol_w) {
        throw Error(ErrorCode::non_convergent,
                    "dispatch did not reach the residual tolerance after " +
                        std::to_string(max_iterations) + " iterations");
    }

    DispatchResult out;
    out.delta_rad = {0.0, wrap_to_pi(d2), wrap_to_pi(d3)};
    out.phases = PhaseSet::from_absolute(0.0, d2, d3);
    out.powers = port_powers(s, out.phases, Aggregation::conservation_consistent);
    out.iterations = iter;
    out.residual_w = res.norm();
    return out;
}

double duty_voltage(double duty, double v_in, double n_in, double n_out) {
    if (duty < 0.0 || duty > 1.0) throw_precondition("duty must be within [0, 1]");
    if (!(n_in > 0.0) || !(n_out > 0.0)) throw_precondition("turns must be > 0");
    return duty * v_in * n_out / n_in;
}

}  // namespace tabsim
