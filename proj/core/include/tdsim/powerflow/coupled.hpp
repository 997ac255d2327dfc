#pragma once

#include "tdsim/powerflow/newton.hpp"

namespace tdsim::powerflow {

// Boundary-exchange loop on a boundary-paired model: every distribution
// circuit is swept at the last boundary voltages (model source voltages in
// the first round), its per-phase source power becomes load on the paired
// boundary bus, the transmission side is solved by Newton, and the new
// boundary voltages go back to the sources. Stops when the largest per-phase
// boundary voltage change is within options.boundary_tolerance. Circuits of
// one round run on up to options.jobs threads. Inner failures are rethrown
// with the circuit's source id as subject. Errors: NoConvergence.
PowerFlowSolution solve_iterative_coupled(const Network& net, const PowerFlowOptions& options = {});

// Dispatches on options.mode; a model without paired sources always goes
// through the unified solver.
PowerFlowSolution solve(const Network& net, const PowerFlowOptions& options = {});

}  // namespace tdsim::powerflow
