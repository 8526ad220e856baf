#include "simulator.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>

#include "angles.hpp"
#include "error.hpp"

namespace tabsim {

namespace {

// State layout. Full bridge uses the first four entries; half bridge adds
// the three divider midpoint voltages.
constexpr int kI21 = 0, kI31 = 1, kI23 = 2, kVc = 3;
constexpr int kD1 = 4, kD2 = 5, kD3 = 6;

enum LegGate : std::uint8_t { kGateOff = 0, kGateHigh = 1, kGateLow = 2 };

// Gradients of the injected port currents j1..j3 over the link currents:
// j1 = -(i21 + i31), j2 = i21 + i23, j3 = i31 - i23.
constexpr double kJGrad[3][3] = {{-1.0, -1.0, 0.0}, {1.0, 0.0, 1.0}, {0.0, 1.0, -1.0}};

// Affine function of the state vector: value = v[0] + sum v[1+i] * x[i].
struct Affine {
    std::array<double, 8> v{};

    void add(const Affine& o, double scale = 1.0) {
        for (size_t i = 0; i < v.size(); ++i) v[i] += scale * o.v[i];
    }
    void add_const(double c) { v[0] += c; }
    void add_state(int idx, double coeff) { v[1 + static_cast<size_t>(idx)] += coeff; }
    void scale(double s) {
        for (double& e : v) e *= s;
    }
    double eval(const Eigen::VectorXd& x) const {
        double acc = v[0];
        for (int i = 0; i < x.size(); ++i) acc += v[1 + static_cast<size_t>(i)] * x[i];
        return acc;
    }
};

struct PortConn {
    bool blocked = false;
    int code = 0;  // full bridge: s + 1; half bridge: sigma (1 = high side)
};

struct StepResolution {
    std::array<PortConn, 3> port{};
    std::array<double, 3> u{};  // referred node voltages at the current state
    std::array<double, 3> j{};  // referred injected currents
    int key = 0;
};

struct StepOp {
    Eigen::MatrixXd s2;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;  // of (M - dt/2 A)
    Eigen::VectorXd bdt;
    std::array<Affine, 3> u;  // node voltages under this mode
};

constexpr int kChannels = 10;
const char* const kChannelNames[kChannels] = {
    "v_bridge1", "v_bridge2", "v_bridge3", "i_l21", "i_l31",
    "i_l23",     "v_out",     "p1",        "p2",    "p3"};

class Engine {
public:
    Engine(const ConverterSpec& spec, const SimConfig& sim)
        : spec_(spec), sim_(sim) {
        full_ = spec_.topology == BridgeTopology::full_bridge;
        n_ = full_ ? 4 : 7;
        period_ = 1.0 / spec_.fs_hz;
        steps_ = sim_.steps_per_period;
        dt_ = period_ / steps_;
        for (int i = 0; i < 3; ++i) eta_[i] = spec_.transformer.turns[0] / spec_.transformer.turns[i];
        l_ = spec_.transformer.links_h;
        lmin_ = std::min({l_[0], l_[1], l_[2]});
        rbr_ = (full_ ? 2.0 : 1.0) * spec_.switch_on_resistance_ohm;
        vmax_ = std::max(spec_.v1_v, spec_.v2_v);
        const double umax = std::max(eta_[0] * spec_.v1_v, eta_[1] * spec_.v2_v);
        itol_ = 1.5 * dt_ * umax / lmin_;
        vtol_ = 1e-9 * vmax_;
        rasterize_gates();
    }

    WaveformTrace run() {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(n_);
        if (!full_) {
            x[kD1] = spec_.v1_v / 2.0;
            x[kD2] = spec_.v2_v / 2.0;
        }

        const size_t capture_len =
            static_cast<size_t>(sim_.capture_periods) * static_cast<size_t>(steps_);
        std::vector<std::array<double, kChannels>> ring(capture_len);
        std::vector<double> period_avgs;
        long total_steps = 0;
        int consecutive_ok = 0;
        bool steady = false;
        int periods_run = 0;

        std::array<double, 3> period_energy{};
        for (int p = 0; p < sim_.max_periods && !steady; ++p) {
            double vout_sum = 0.0;
            period_energy = {0.0, 0.0, 0.0};
            for (int k = 0; k < steps_; ++k) {
                StepResolution res = resolve(x, k);
                record(ring[static_cast<size_t>(total_steps % static_cast<long>(capture_len))],
                       x, res);
                vout_sum += x[kVc];
                const StepOp& op = step_op(res.key, res);
                std::array<double, 3> p_begin;
                for (int i = 0; i < 3; ++i)
                    p_begin[static_cast<size_t>(i)] =
                        res.u[static_cast<size_t>(i)] * res.j[static_cast<size_t>(i)];
                x = op.lu.solve(op.s2 * x + op.bdt);
                // Trapezoidal port energy for the step, both ends evaluated
                // under the step's mode so power accounting matches the
                // integrator.
                const std::array<double, 3> j_end = {-(x[kI21] + x[kI31]),
                                                     x[kI21] + x[kI23],
                                                     x[kI31] - x[kI23]};
                for (int i = 0; i < 3; ++i) {
                    const double p_end = op.u[static_cast<size_t>(i)].eval(x) *
                                         j_end[static_cast<size_t>(i)];
                    period_energy[static_cast<size_t>(i)] +=
                        0.5 * dt_ * (p_begin[static_cast<size_t>(i)] + p_end);
                }
                ++total_steps;
            }
            periods_run = p + 1;
            const double avg = vout_sum / steps_;
            if (!period_avgs.empty()) {
                const double prev = period_avgs.back();
                const double scale = std::max(std::abs(avg), 1e-6 * vmax_);
                if (std::abs(avg - prev) < sim_.steady_tolerance * scale)
                    ++consecutive_ok;
                else
                    consecutive_ok = 0;
                if (consecutive_ok >= 3 && periods_run >= sim_.capture_periods)
                    steady = true;
            }
            period_avgs.push_back(avg);
            check_divergence(x);
        }

        WaveformTrace trace;
        trace.dt_s = dt_;
        trace.steps_per_period = steps_;
        trace.periods_run = periods_run;
        trace.non_steady = !steady;
        trace.per_period_vout_avg = std::move(period_avgs);
        for (int i = 0; i < 3; ++i)
            trace.final_period_port_w[static_cast<size_t>(i)] =
                period_energy[static_cast<size_t>(i)] / period_;
        trace.has_port_power = true;
        trace.channel_names.assign(kChannelNames, kChannelNames + kChannels);
        const size_t count = std::min<size_t>(capture_len, static_cast<size_t>(total_steps));
        trace.channels.assign(kChannels, std::vector<double>(count));
        const size_t first =
            static_cast<size_t>(total_steps % static_cast<long>(capture_len));
        for (size_t m = 0; m < count; ++m) {
            const auto& row = ring[(first + m) % capture_len];
            for (int c = 0; c < kChannels; ++c) trace.channels[static_cast<size_t>(c)][m] = row[static_cast<size_t>(c)];
        }
        return trace;
    }

private:
    void rasterize_gates() {
        for (int i = 0; i < 3; ++i) {
            const BridgeDrive& d = spec_.drive[static_cast<size_t>(i)];
            GateSchedule sched;
            double shift = 0.0;
            switch (d.mode) {
                case DriveMode::off:
                    sched = bridge_gates_off(spec_.topology, period_);
                    break;
                case DriveMode::square:
                    sched = bridge_gates(
                        spec_.topology,
                        SquarePwmConfig::make(spec_.fs_hz, d.duty, d.phase_rad, 1.0),
                        spec_.dead_time_s);
                    break;
                case DriveMode::spwm: {
                    const SpwmSettings& s = *spec_.spwm;
                    sched = bridge_gates(spec_.topology,
                                         SpwmConfig::make(s.carrier_hz, s.reference_hz,
                                                          s.sine_amplitude_v,
                                                          s.triangle_amplitude_v, 1.0),
                                         spec_.dead_time_s);
                    shift = d.phase_rad / kTwoPi * period_;
                    break;
                }
            }
            gate_a_[static_cast<size_t>(i)].resize(static_cast<size_t>(steps_));
            if (full_) gate_b_[static_cast<size_t>(i)].resize(static_cast<size_t>(steps_));
            for (int k = 0; k < steps_; ++k) {
                // Leg states sampled mid step, which snaps gate edges to the
                // nearest grid point.
                const double t = (k + 0.5) * dt_ - shift;
                const auto states = sched.states_at(t);
                gate_a_[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                    states[kLegAHigh] ? kGateHigh : (states[kLegALow] ? kGateLow : kGateOff);
                if (full_)
                    gate_b_[static_cast<size_t>(i)][static_cast<size_t>(k)] =
                        states[kLegBHigh] ? kGateHigh
                                          : (states[kLegBLow] ? kGateLow : kGateOff);
            }
        }
    }

    double rail(int port, const Eigen::VectorXd& x) const {
        return port == 0 ? spec_.v1_v : port == 1 ? spec_.v2_v : x[kVc];
    }

    double link_weight(int a, int b) const {
        if (a > b) std::swap(a, b);
        if (a == 0 && b == 1) return 1.0 / l_[0];
        if (a == 0 && b == 2) return 1.0 / l_[1];
        return 1.0 / l_[2];
    }

    // Referred node voltages for a given connection assignment, as affine
    // functions of the state. Blocked nodes float to the values that keep
    // their injected current constant (weighted Laplacian).
    std::array<Affine, 3> port_voltages(const std::array<PortConn, 3>& conn) const {
        std::array<Affine, 3> u{};
        std::vector<int> floating;
        for (int i = 0; i < 3; ++i) {
            const PortConn& pc = conn[static_cast<size_t>(i)];
            if (pc.blocked) {
                floating.push_back(i);
                continue;
            }
            Affine rail_term;  // bridge output before the winding, referred
            if (full_) {
                const double s = pc.code - 1;
                if (i < 2)
                    rail_term.add_const(s * (i == 0 ? spec_.v1_v : spec_.v2_v));
                else
                    rail_term.add_state(kVc, s);
            } else {
                const double sigma = pc.code;
                if (i < 2)
                    rail_term.add_const(sigma * (i == 0 ? spec_.v1_v : spec_.v2_v));
                else
                    rail_term.add_state(kVc, sigma);
                rail_term.add_state(kD1 + i, -1.0);
            }
            rail_term.scale(eta_[static_cast<size_t>(i)]);
            // Series drop across the conducting devices.
            const double rr = eta_[static_cast<size_t>(i)] * eta_[static_cast<size_t>(i)] * rbr_;
            for (int s = 0; s < 3; ++s)
                rail_term.add_state(s, -rr * kJGrad[i][s]);
            u[static_cast<size_t>(i)] = rail_term;
        }

        if (floating.size() == 3) return u;  // fully idle network, all zero
        if (floating.size() == 1) {
            const int k = floating[0];
            double wsum = 0.0;
            Affine acc;
            for (int j = 0; j < 3; ++j) {
                if (j == k) continue;
                const double w = link_weight(k, j);
                wsum += w;
                acc.add(u[static_cast<size_t>(j)], w);
            }
            acc.scale(1.0 / wsum);
            u[static_cast<size_t>(k)] = acc;
        } else if (floating.size() == 2) {
            const int k = floating[0], l = floating[1];
            const int m = 3 - k - l;
            const double wkl = link_weight(k, l);
            const double wkm = link_weight(k, m);
            const double wlm = link_weight(l, m);
            const double ak = wkl + wkm;
            const double al = wkl + wlm;
            const double det = ak * al - wkl * wkl;
            Affine uk, ul;
            uk.add(u[static_cast<size_t>(m)], (al * wkm + wkl * wlm) / det);
            ul.add(u[static_cast<size_t>(m)], (wkl * wkm + ak * wlm) / det);
            u[static_cast<size_t>(k)] = uk;
            u[static_cast<size_t>(l)] = ul;
        }
        return u;
    }

    StepResolution resolve(Eigen::VectorXd& x, int k) {
        StepResolution res;
        std::array<double, 3> j = {-(x[kI21] + x[kI31]), x[kI21] + x[kI23],
                                   x[kI31] - x[kI23]};

        // First pass: pin legs by gates, then by diode conduction where the
        // winding current is clearly nonzero.
        for (int i = 0; i < 3; ++i) {
            const double iw = eta_[static_cast<size_t>(i)] * j[static_cast<size_t>(i)];
            const std::uint8_t ga = gate_a_[static_cast<size_t>(i)][static_cast<size_t>(k)];
            int ha = -1;  // 1 = midpoint at rail, 0 = midpoint at return
            if (ga == kGateHigh)
                ha = 1;
            else if (ga == kGateLow)
                ha = 0;
            else if (std::abs(iw) > itol_)
                ha = iw > 0.0 ? 0 : 1;  // leg A sources the winding current

            if (full_) {
                const std::uint8_t gb = gate_b_[static_cast<size_t>(i)][static_cast<size_t>(k)];
                int hb = -1;
                if (gb == kGateHigh)
                    hb = 1;
                else if (gb == kGateLow)
                    hb = 0;
                else if (std::abs(iw) > itol_)
                    hb = iw > 0.0 ? 1 : 0;  // leg B sinks the winding current
                if (ha >= 0 && hb >= 0)
                    res.port[static_cast<size_t>(i)] = {false, ha - hb + 1};
                else
                    res.port[static_cast<size_t>(i)].blocked = true;
            } else {
                if (ha >= 0)
                    res.port[static_cast<size_t>(i)] = {false, ha};
                else
                    res.port[static_cast<size_t>(i)].blocked = true;
            }
        }

        // Clamp blocked bridges whose open-circuit winding voltage forward
        // biases a diode pair; ties stay blocked.
        for (int pass = 0; pass < 3; ++pass) {
            const auto u = port_voltages(res.port);
            bool clamped = false;
            for (int i = 0; i < 3; ++i) {
                PortConn& pc = res.port[static_cast<size_t>(i)];
                if (!pc.blocked) continue;
                const double vopen = u[static_cast<size_t>(i)].eval(x) / eta_[static_cast<size_t>(i)];
                const double vr = rail(i, x);
                if (full_) {
                    const std::uint8_t ga = gate_a_[static_cast<size_t>(i)][static_cast<size_t>(k)];
                    const std::uint8_t gb = gate_b_[static_cast<size_t>(i)][static_cast<size_t>(k)];
                    if (ga == kGateOff && gb == kGateOff) {
                        if (vopen > vr + vtol_) {
                            pc = {false, 2};
                            clamped = true;
                        } else if (vopen < -vr - vtol_) {
                            pc = {false, 0};
                            clamped = true;
                        }
                    } else if (ga != kGateOff) {
                        // Leg A pinned by its gate; leg B's diodes see the
                        // open-circuit midpoint voltage.
                        const int ha = ga == kGateHigh ? 1 : 0;
                        const double mb_open = (ha ? vr : 0.0) - vopen;
                        if (mb_open > vr + vtol_) {
                            pc = {false, ha - 1 + 1};
                            clamped = true;
                        } else if (mb_open < -vtol_) {
                            pc = {false, ha - 0 + 1};
                            clamped = true;
                        }
                    } else {
                        const int hb = gb == kGateHigh ? 1 : 0;
                        const double ma_open = vopen + (hb ? vr : 0.0);
                        if (ma_open > vr + vtol_) {
                            pc = {false, 1 - hb + 1};
                            clamped = true;
                        } else if (ma_open < -vtol_) {
                            pc = {false, 0 - hb + 1};
                            clamped = true;
                        }
                    }
                } else {
                    const double mid_open = x[kD1 + i] + vopen;
                    if (mid_open > vr + vtol_) {
                        pc = {false, 1};
                        clamped = true;
                    } else if (mid_open < -vtol_) {
                        pc = {false, 0};
                        clamped = true;
                    }
                }
            }
            if (!clamped) break;
        }

        project_blocked(x, res.port);

        res.j = {-(x[kI21] + x[kI31]), x[kI21] + x[kI23], x[kI31] - x[kI23]};
        const auto u = port_voltages(res.port);
        for (int i = 0; i < 3; ++i) res.u[static_cast<size_t>(i)] = u[static_cast<size_t>(i)].eval(x);
        res.key = 0;
        for (int i = 0; i < 3; ++i) {
            const PortConn& pc = res.port[static_cast<size_t>(i)];
            res.key = res.key * 8 + (pc.blocked ? 7 : pc.code);
        }
        return res;
    }

    // Interrupting an ideal diode leaves the residual winding current with
    // nowhere to go; redistribute it over the adjacent links conserving the
    // loop flux. Residuals are below itol_, so the adjustment is tiny.
    void project_blocked(Eigen::VectorXd& x, const std::array<PortConn, 3>& conn) const {
        const int nb = conn[0].blocked + conn[1].blocked + conn[2].blocked;
        if (nb == 0) return;
        if (nb >= 2) {
            const double c = (l_[0] * x[kI21] - l_[1] * x[kI31] - l_[2] * x[kI23]) /
                             (l_[0] + l_[1] + l_[2]);
            x[kI21] = c;
            x[kI31] = -c;
            x[kI23] = -c;
            return;
        }
        if (conn[0].blocked) {
            const double j1 = -(x[kI21] + x[kI31]);
            x[kI21] += j1 * l_[1] / (l_[0] + l_[1]);
            x[kI31] += j1 * l_[0] / (l_[0] + l_[1]);
        } else if (conn[1].blocked) {
            const double j2 = x[kI21] + x[kI23];
            x[kI21] -= j2 * l_[2] / (l_[0] + l_[2]);
            x[kI23] -= j2 * l_[0] / (l_[0] + l_[2]);
        } else {
            const double j3 = x[kI31] - x[kI23];
            x[kI31] -= j3 * l_[2] / (l_[1] + l_[2]);
            x[kI23] += j3 * l_[1] / (l_[1] + l_[2]);
        }
    }

    const StepOp& step_op(int key, const StepResolution& res) {
        auto it = ops_.find(key);
        if (it != ops_.end()) return it->second;

        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n_, n_);
        Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n_, n_);
        Eigen::VectorXd b = Eigen::VectorXd::Zero(n_);
        const auto u = port_voltages(res.port);

        auto add_affine_row = [&](int row, const Affine& f, double scale) {
            b[row] += scale * f.v[0];
            for (int s = 0; s < n_; ++s) a(row, s) += scale * f.v[1 + static_cast<size_t>(s)];
        };

        // Link rows: L * di/dt = u_from - u_to.
        add_affine_row(kI21, u[1], 1.0);
        add_affine_row(kI21, u[0], -1.0);
        m(kI21, kI21) = l_[0];
        add_affine_row(kI31, u[2], 1.0);
        add_affine_row(kI31, u[0], -1.0);
        m(kI31, kI31) = l_[1];
        add_affine_row(kI23, u[1], 1.0);
        add_affine_row(kI23, u[2], -1.0);
        m(kI23, kI23) = l_[2];

        const PortConn& p3 = res.port[2];
        if (full_) {
            m(kVc, kVc) = spec_.filter_capacitance_f;
            a(kVc, kVc) -= 1.0 / spec_.load_resistance_ohm;
            if (!p3.blocked) {
                const double s3 = p3.code - 1;
                for (int s = 0; s < 3; ++s)
                    a(kVc, s) += -s3 * eta_[2] * kJGrad[2][s];
            }
        } else {
            const double cd = spec_.divider_capacitance_f;
            // Output bus node.
            m(kVc, kVc) = spec_.filter_capacitance_f + cd;
            m(kVc, kD3) = -cd;
            a(kVc, kVc) -= 1.0 / spec_.load_resistance_ohm;
            if (!p3.blocked && p3.code == 1) {
                for (int s = 0; s < 3; ++s)
                    a(kVc, s) += -eta_[2] * kJGrad[2][s];
            }
            // Divider midpoint nodes.
            m(kD3, kVc) = cd;
            m(kD3, kD3) = -2.0 * cd;
            for (int s = 0; s < 3; ++s) a(kD3, s) += -eta_[2] * kJGrad[2][s];
            m(kD1, kD1) = 2.0 * cd;
            for (int s = 0; s < 3; ++s) a(kD1, s) += eta_[0] * kJGrad[0][s];
            m(kD2, kD2) = 2.0 * cd;
            for (int s = 0; s < 3; ++s) a(kD2, s) += eta_[1] * kJGrad[1][s];
        }

        StepOp op;
        op.s2 = m + (dt_ / 2.0) * a;
        op.lu = Eigen::PartialPivLU<Eigen::MatrixXd>(m - (dt_ / 2.0) * a);
        op.bdt = dt_ * b;
        op.u = u;
        return ops_.emplace(key, std::move(op)).first->second;
    }

    void record(std::array<double, kChannels>& row, const Eigen::VectorXd& x,
                const StepResolution& res) const {
        for (int i = 0; i < 3; ++i)
            row[static_cast<size_t>(i)] = res.u[static_cast<size_t>(i)] / eta_[static_cast<size_t>(i)];
        row[3] = x[kI21];
        row[4] = x[kI31];
        row[5] = x[kI23];
        row[6] = x[kVc];
        for (int i = 0; i < 3; ++i)
            row[static_cast<size_t>(7 + i)] =
                res.u[static_cast<size_t>(i)] * res.j[static_cast<size_t>(i)];
    }

    void check_divergence(const Eigen::VectorXd& x) const {
        const double limit = 1e6 * std::max(vmax_, 1.0);
        for (int i = 0; i < n_; ++i) {
            if (!std::isfinite(x[i]) || std::abs(x[i]) > limit)
                throw Error(ErrorCode::diverged,
                            "simulation diverged: state exceeded 1e6 x rail");
        }
    }

    const ConverterSpec& spec_;
    const SimConfig& sim_;
    bool full_ = true;
    int n_ = 4;
    double period_ = 0.0, dt_ = 0.0;
    int steps_ = 0;
    std::array<double, 3> eta_{};
    std::array<double, 3> l_{};
    double lmin_ = 0.0, rbr_ = 0.0, vmax_ = 0.0, itol_ = 0.0, vtol_ = 0.0;
    std::array<std::vector<std::uint8_t>, 3> gate_a_;
    std::array<std::vector<std::uint8_t>, 3> gate_b_;
    std::map<int, StepOp> ops_;
};

}  // namespace

ConverterSpec ConverterSpec::validated(ConverterSpec raw) {
    if (!(raw.v1_v > 0.0) || !(raw.v2_v > 0.0))
        throw_config("port DC voltages must be > 0");
    if (!(raw.fs_hz > 0.0)) throw_config("switching frequency must be > 0");
    raw.transformer = TransformerSpec::make(raw.transformer.turns, raw.transformer.links_h);
    const double period = 1.0 / raw.fs_hz;
    if (raw.dead_time_s < 0.0 || raw.dead_time_s >= period / 10.0)
        throw_config("dead time must satisfy 0 <= dead_time < period/10");
    bool any_spwm = false;
    for (const BridgeDrive& d : raw.drive) {
        if (d.duty < 0.0 || d.duty > 1.0) throw_config("duty must be within [0, 1]");
        if (!std::isfinite(d.phase_rad)) throw_config("phase must be finite");
        if (d.mode == DriveMode::spwm) any_spwm = true;
    }
    if (any_spwm) {
        if (!raw.spwm) throw_config("an SPWM drive needs the spwm settings block");
        const SpwmSettings& s = *raw.spwm;
        SpwmConfig::make(s.carrier_hz, s.reference_hz, s.sine_amplitude_v,
                         s.triangle_amplitude_v, 1.0);
        if (std::abs(s.reference_hz - raw.fs_hz) > 1e-9 * raw.fs_hz)
            throw_config("SPWM reference frequency must equal fs_hz");
        const double ratio = s.carrier_hz / s.reference_hz;
        if (std::abs(ratio - std::round(ratio)) > 1e-9)
            throw_config("SPWM carrier ratio must be an integer for gating");
    }
    if (!(raw.filter_capacitance_f > 0.0)) throw_config("filter capacitance must be > 0");
    if (!(raw.load_resistance_ohm > 0.0)) throw_config("load resistance must be > 0");
    if (raw.switch_on_resistance_ohm < 0.0)
        throw_config("switch on-resistance must be >= 0");
    if (raw.topology == BridgeTopology::half_bridge) {
        if (raw.divider_capacitance_f == 0.0) {
            // Sized so the midpoint ripple stays below 1% of the rail at the
            // current the weakest link can drive.
            const double omega = kTwoPi * raw.fs_hz;
            double lref = std::min({raw.transformer.links_h[0],
                                    raw.transformer.links_h[1],
                                    raw.transformer.links_h[2]});
            double worst = 0.0;
            for (double n : raw.transformer.turns) {
                const double scaled = lref * (n / raw.transformer.turns[0]) *
                                      (n / raw.transformer.turns[0]);
                worst = std::max(worst, 25.0 * period / (omega * scaled));
            }
            raw.divider_capacitance_f = worst;
        }
        if (!(raw.divider_capacitance_f > 0.0))
            throw_config("divider capacitance must be > 0");
    }
    return raw;
}

SimConfig SimConfig::validated(SimConfig raw) {
    if (raw.steps_per_period < 200)
        throw_config("steps_per_period must be >= 200");
    if (raw.max_periods < 1) throw_config("max_periods must be >= 1");
    if (!(raw.steady_tolerance > 0.0)) throw_config("steady_tolerance must be > 0");
    if (raw.capture_periods < 1 || raw.capture_periods > raw.max_periods)
        throw_config("capture_periods must be within [1, max_periods]");
    return raw;
}

std::span<const double> WaveformTrace::channel(const std::string& name) const {
    for (size_t i = 0; i < channel_names.size(); ++i)
        if (channel_names[i] == name) return channels[i];
    throw_precondition("unknown trace channel: " + name);
}

WaveformTrace simulate(const ConverterSpec& spec, const SimConfig& sim) {
    const ConverterSpec checked = ConverterSpec::validated(spec);
    const SimConfig simc = SimConfig::validated(sim);
    Engine engine(checked, simc);
    return engine.run();
}

SteadyOutput steady_state_output(const WaveformTrace& trace) {
    const size_t n = static_cast<size_t>(trace.steps_per_period);
    if (n == 0 || trace.length() < n)
        throw_precondition("trace does not span a full switching period");
    const auto vout = trace.channel("v_out");
    double sum = 0.0;
    for (size_t i = vout.size() - n; i < vout.size(); ++i) sum += vout[i];
    return SteadyOutput{sum / static_cast<double>(n), !trace.non_steady};
}

double port_power_measure(const WaveformTrace& trace, int port) {
    if (port < 1 || port > 3) throw_precondition("port must be 1, 2 or 3");
    if (trace.has_port_power)
        return trace.final_period_port_w[static_cast<size_t>(port - 1)];
    const size_t n = static_cast<size_t>(trace.steps_per_period);
    if (n == 0 || trace.length() < n)
        throw_precondition("trace does not span a full switching period");
    const auto p = trace.channel("p" + std::to_string(port));
    double sum = 0.0;
    for (size_t i = p.size() - n; i < p.size(); ++i) sum += p[i];
    return sum / static_cast<double>(n);
}

std::vector<std::pair<double, double>> half_bridge_duty_response(
    const ConverterSpec& spec, const SimConfig& sim, std::span<const double> duties) {
    if (spec.topology != BridgeTopology::half_bridge)
        throw_precondition("half-bridge duty response needs a half-bridge spec");
    if (spec.drive[0].mode != DriveMode::square && spec.drive[1].mode != DriveMode::square)
        throw_precondition("no square-driven delivering bridge to sweep");
    std::vector<std::pair<double, double>> out;
    out.reserve(duties.size());
    for (double d : duties) {
        ConverterSpec point = spec;
        for (int i = 0; i < 2; ++i)
            if (point.drive[static_cast<size_t>(i)].mode == DriveMode::square)
                point.drive[static_cast<size_t>(i)].duty = d;
        const WaveformTrace trace = simulate(point, sim);
        out.emplace_back(d, steady_state_output(trace).volts);
    }
    return out;
}

}  // namespace tabsim
