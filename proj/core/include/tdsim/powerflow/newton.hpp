#pragma once

#include <map>
#include <string>

#include "tdsim/powerflow/solution.hpp"

namespace tdsim::powerflow {

// Per-phase constant-power load placed on a boundary bus, kVA by phase.
using BoundaryLoads = std::map<std::string, PhaseTriple>;

// Three-phase Newton-Raphson in current-injection form with rectangular
// node voltages. Generators are balanced internal EMFs behind their
// subtransient reactance; the slack holds V1 at its setpoint, PV units hold
// total three-phase P and |V1|. Sources are fixed voltages. `initial`
// supplies a warm start. Errors: NoConvergence, SingularJacobian.
PowerFlowSolution solve_transmission_nr(const Network& net, const BoundaryLoads& boundary_loads = {},
                                        const PowerFlowOptions& options = {},
                                        const PowerFlowSolution* initial = nullptr);

// Whole T&D model as one Newton system; regulators in an outer control loop
// (auto mode). A boundary-paired model is joined first.
PowerFlowSolution solve_unified(const Network& net, const PowerFlowOptions& options = {});

}  // namespace tdsim::powerflow
