#pragma once

#include "tdsim/netmodel/network.hpp"

namespace tdsim::dynamics {

using netmodel::GenrouParameters;
using netmodel::St1aParameters;
using numerics::Phasor;

// GENROU and ST1A states in per unit on the machine base. The field
// voltage is the exciter's algebraic output and is kept for reporting.
struct MachineState {
    double delta = 0.0;     // rotor angle, rad
    double speed = 0.0;     // speed deviation, pu
    double eq_p = 0.0;      // E'q
    double ed_p = 0.0;      // E'd
    double psi_kd = 0.0;    // d-axis damper flux
    double psi_kq = 0.0;    // q-axis damper flux
    double v_sensed = 0.0;  // transducer output
    double lead_lag = 0.0;  // lead-lag state
    double efd = 0.0;
};

struct GenrouDerivatives {
    double delta = 0.0;
    double speed = 0.0;
    double eq_p = 0.0;
    double ed_p = 0.0;
    double psi_kd = 0.0;
    double psi_kq = 0.0;
    double te = 0.0;  // air-gap torque
};

struct ExciterOutput {
    double efd = 0.0;
    double v_sensed = 0.0;  // derivative
    double lead_lag = 0.0;  // derivative
};

// Quadratic open-circuit saturation Se(x) = B (x - A)^2 / x for x > A, fitted
// through x Se(x) at 1.0 and 1.2. Zero when both factors are zero.
struct Saturation {
    double a = 0.0;
    double b = 0.0;
    static Saturation fit(double s10, double s12);
    double operator()(double flux) const;
};

// Subtransient flux linkages (psi''d, psi''q).
std::pair<double, double> subtransient_flux(const GenrouParameters& p, const MachineState& s);

// Internal subtransient voltage in the network frame: (-psi''q + j psi''d)
// rotated by delta - pi/2.
Phasor subtransient_emf(const GenrouParameters& p, const MachineState& s);

// Round-rotor equations with stator transients and speed voltages
// neglected. `v1` and `i1` are the positive-sequence terminal voltage and the
// current delivered, in the network frame on the machine base.
GenrouDerivatives genrou_derivatives(const GenrouParameters& p, const MachineState& s, double efd, double tm,
                                     Phasor v1, Phasor i1, double omega_base);

// Transducer lag, lead-lag (TC/TB), gain KA; output clamped to
// [VRmin |Vt|, VRmax |Vt|].
ExciterOutput st1a_output(const St1aParameters& p, const MachineState& s, double vref, double vt);

struct MachineEquilibrium {
    MachineState state;
    double tm = 0.0;
    double vref = 0.0;
};

// Steady state for terminal voltage v1 and delivered current i1 (machine
// base, network frame). Error: InfeasibleInit.
MachineEquilibrium machine_equilibrium(const netmodel::SynchronousMachine& m, Phasor v1, Phasor i1);

}  // namespace tdsim::dynamics
