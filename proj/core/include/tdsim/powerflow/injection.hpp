#pragma once

#include <vector>

#include "tdsim/powerflow/compiled.hpp"

namespace tdsim::powerflow {

// Element current drawn at voltage v, with its linearization
// dI = a dV + b conj(dV). Power is per unit at the rated voltage v_rated.
struct ElementCurrent {
    Phasor i;
    Phasor a;
    Phasor b;
};

ElementCurrent load_current(Phasor s, const netmodel::LoadComposition& model, double v_rated, Phasor v);

inline constexpr double kDgCutoutPu = 0.2;

struct DgInjection {
    PhaseTriple current{};  // per unit, injected, indexed by phase
    bool cutout = false;    // some DG phase below kDgCutoutPu
};

// I_p = conj(S_p / V_p) with the setpoint split equally over the DG phases;
// phases below the cutout inject nothing. `base_kva` is the per-phase power base.
DgInjection dg_injection(const netmodel::DistributedGenerator& dg, const PhaseTriple& v, double base_kva);

// Linearization entry of node current injections: d inj[row] = a dV[col] + b conj(dV[col]).
struct InjectionTerm {
    std::size_t row;
    std::size_t col;
    Phasor a;
    Phasor b;
};

// Adds load and DG current injections (positive into the node) for node
// voltages v; appends their linearization when `terms` is given.
void add_element_injections(const CompiledNetwork& net, const std::vector<Phasor>& v, std::vector<Phasor>& inj,
                            std::vector<InjectionTerm>* terms = nullptr);

}  // namespace tdsim::powerflow
