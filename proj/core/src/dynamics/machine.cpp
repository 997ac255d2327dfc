#include "tdsim/dynamics/machine.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdsim/error.hpp"

namespace tdsim::dynamics {

namespace {

// Network frame to the rotor d-q frame (d real, q imaginary).
Phasor to_dq(Phasor x, double delta) { return x * std::polar(1.0, -(delta - std::numbers::pi / 2.0)); }
Phasor from_dq(Phasor x, double delta) { return x * std::polar(1.0, delta - std::numbers::pi / 2.0); }

// q-axis share of the saturation increment.
double q_saturation_weight(const GenrouParameters& p) { return (p.xq - p.xl) / (p.xd - p.xl); }

}  // namespace

Saturation Saturation::fit(double s10, double s12) {
    Saturation s;
    if (s10 <= 0.0 || s12 <= 0.0) return s;
    const double r = std::sqrt(1.2 * s12 / s10);
    s.a = (1.2 - r) / (1.0 - r);
    s.b = s10 / ((1.0 - s.a) * (1.0 - s.a));
    return s;
}

double Saturation::operator()(double flux) const {
    if (b == 0.0 || flux <= a) return 0.0;
    return b * (flux - a) * (flux - a) / flux;
}

std::pair<double, double> subtransient_flux(const GenrouParameters& p, const MachineState& s) {
    const double psi_d = (p.x_pp - p.xl) / (p.xd_p - p.xl) * s.eq_p + (p.xd_p - p.x_pp) / (p.xd_p - p.xl) * s.psi_kd;
    const double psi_q = -(p.x_pp - p.xl) / (p.xq_p - p.xl) * s.ed_p + (p.xq_p - p.x_pp) / (p.xq_p - p.xl) * s.psi_kq;
    return {psi_d, psi_q};
}

Phasor subtransient_emf(const GenrouParameters& p, const MachineState& s) {
    const auto [psi_d, psi_q] = subtransient_flux(p, s);
    return from_dq({-psi_q, psi_d}, s.delta);
}

GenrouDerivatives genrou_derivatives(const GenrouParameters& p, const MachineState& s, double efd, double tm,
                                     Phasor /*v1*/, Phasor i1, double omega_base) {
    const auto [psi_d, psi_q] = subtransient_flux(p, s);
    const Phasor i = to_dq(i1, s.delta);
    const double id = i.real(), iq = i.imag();
    const double se = Saturation::fit(p.s10, p.s12)(std::hypot(psi_d, psi_q));
    const double cd = (p.xd_p - p.x_pp) / ((p.xd_p - p.xl) * (p.xd_p - p.xl));
    const double cq = (p.xq_p - p.x_pp) / ((p.xq_p - p.xl) * (p.xq_p - p.xl));

    GenrouDerivatives d;
    d.eq_p = (efd - s.eq_p - (p.xd - p.xd_p) * (id - cd * (s.psi_kd + (p.xd_p - p.xl) * id - s.eq_p)) - psi_d * se) /
             p.tdo_p;
    d.psi_kd = (-s.psi_kd + s.eq_p - (p.xd_p - p.xl) * id) / p.tdo_pp;
    d.ed_p = (-s.ed_p + (p.xq - p.xq_p) * (iq - cq * (s.psi_kq + (p.xq_p - p.xl) * iq + s.ed_p)) +
              psi_q * se * q_saturation_weight(p)) /
             p.tqo_p;
    d.psi_kq = (-s.psi_kq - s.ed_p - (p.xq_p - p.xl) * iq) / p.tqo_pp;
    d.te = psi_d * iq - psi_q * id;
    d.delta = omega_base * s.speed;
    d.speed = (tm - d.te - p.d * s.speed) / (2.0 * p.h);
    return d;
}

ExciterOutput st1a_output(const St1aParameters& p, const MachineState& s, double vref, double vt) {
    ExciterOutput out;
    double sensed = vt;
    if (p.tr > 0.0) {
        sensed = s.v_sensed;
        out.v_sensed = (vt - s.v_sensed) / p.tr;
    }
    const double u = vref - sensed;
    double y = u;
    if (p.tb > 0.0) {
        out.lead_lag = (u - s.lead_lag) / p.tb;
        y = s.lead_lag + p.tc / p.tb * (u - s.lead_lag);
    }
    out.efd = std::clamp(p.ka * y, p.vrmin * vt, p.vrmax * vt);
    return out;
}

MachineEquilibrium machine_equilibrium(const netmodel::SynchronousMachine& m, Phasor v1, Phasor i1) {
    const GenrouParameters& p = m.genrou;
    const Phasor e = v1 + Phasor(p.ra, p.x_pp) * i1;
    const double se = Saturation::fit(p.s10, p.s12)(std::abs(e));
    const Phasor axis = e * (1.0 + se * q_saturation_weight(p)) + Phasor(0.0, p.xq - p.x_pp) * i1;

    MachineEquilibrium eq;
    MachineState& s = eq.state;
    s.delta = std::arg(axis);
    const Phasor e_dq = to_dq(e, s.delta);
    const Phasor i_dq = to_dq(i1, s.delta);
    const double psi_d = e_dq.imag(), psi_q = -e_dq.real();
    const double id = i_dq.real(), iq = i_dq.imag();
    s.eq_p = psi_d + (p.xd_p - p.x_pp) * id;
    s.psi_kd = s.eq_p - (p.xd_p - p.xl) * id;
    s.ed_p = -psi_q - (p.xq_p - p.x_pp) * iq;
    s.psi_kq = -s.ed_p - (p.xq_p - p.xl) * iq;
    s.efd = s.eq_p + (p.xd - p.xd_p) * id + psi_d * se;
    eq.tm = psi_d * iq - psi_q * id;

    const double vt = std::abs(v1);
    const St1aParameters& x = m.st1a;
    if (!std::isfinite(s.efd) || !std::isfinite(s.delta) || vt <= 0.0) {
        throw Error(ErrorCode::InfeasibleInit, "no finite equilibrium for the dispatched point", m.id);
    }
    if (s.efd > x.vrmax * vt || s.efd < x.vrmin * vt) {
        throw Error(ErrorCode::InfeasibleInit,
                    "field voltage " + std::to_string(s.efd) + " pu outside the exciter limits", m.id);
    }
    s.v_sensed = vt;
    s.lead_lag = s.efd / x.ka;
    eq.vref = vt + s.efd / x.ka;
    return eq;
}

}  // namespace tdsim::dynamics
