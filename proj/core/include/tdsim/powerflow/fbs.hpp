#pragma once

#include <optional>

#include "tdsim/powerflow/solution.hpp"

namespace tdsim::powerflow {

inline constexpr double kCollapseVoltagePu = 0.2;

// Forward-backward sweep on a radial circuit with exactly one source. The
// source voltages (pu, indexed by phase) override the model's when given.
// Iterates until the largest node voltage change is below
// options.tolerance. Errors: NotRadial, NoConvergence, VoltageCollapse.
PowerFlowSolution solve_distribution_fbs(const Network& circuit,
                                         const std::optional<PhaseTriple>& source_voltages = std::nullopt,
                                         const PowerFlowOptions& options = {});

}  // namespace tdsim::powerflow
