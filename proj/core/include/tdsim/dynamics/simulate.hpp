#pragma once

#include <memory>
#include <string>
#include <vector>

#include "tdsim/dynamics/machine.hpp"
#include "tdsim/dynamics/network.hpp"
#include "tdsim/dynamics/scenario.hpp"

namespace tdsim::dynamics {

// One generator of the dynamic run. Generators without a machine record
// hold their power-flow internal EMF.
struct MachineModel {
    std::string generator;
    bool dynamic = false;
    netmodel::SynchronousMachine machine;
    double current_to_machine = 1.0;  // system per unit current -> machine base
    double tm = 0.0;
    double vref = 0.0;
    Phasor fixed_emf;
};

// Terminal quantities and state rates of one machine at one instant.
struct MachineRates {
    Phasor v1;  // positive-sequence terminal voltage, pu
    Phasor i1;  // positive-sequence current delivered, machine base
    GenrouDerivatives genrou;
    ExciterOutput exciter;
};

class DynamicSystem {
public:
    const netmodel::Network& network() const noexcept { return grid_.network(); }
    DynamicNetwork& grid() noexcept { return grid_; }
    const DynamicNetwork& grid() const noexcept { return grid_; }
    const std::vector<MachineModel>& machines() const noexcept { return machines_; }
    const std::vector<MachineState>& initial_states() const noexcept { return initial_; }
    double omega_base() const noexcept { return omega_base_; }

    // Phase-A internal EMF per generator for the given states.
    std::vector<Phasor> emfs(const std::vector<MachineState>& states) const;
    std::vector<Phasor> solve_network(const std::vector<MachineState>& states) const;
    std::vector<MachineRates> rates(const std::vector<MachineState>& states, const std::vector<Phasor>& v) const;
    // Largest state derivative magnitude over all machines.
    double max_rate(const std::vector<MachineState>& states) const;

private:
    friend DynamicSystem init_dynamics(const netmodel::Network& net, const PowerFlowSolution& pf);
    DynamicSystem(DynamicNetwork grid, std::vector<MachineModel> machines, std::vector<MachineState> initial,
                  double omega_base);

    DynamicNetwork grid_;
    std::vector<MachineModel> machines_;
    std::vector<MachineState> initial_;
    double omega_base_;
};

// Machine states back-solved so that every derivative vanishes, exciter
// references held at the initial field voltage, loads frozen as admittances.
// A boundary-paired model is joined first. Errors: NotConverged,
// InfeasibleInit.
DynamicSystem init_dynamics(const netmodel::Network& net, const PowerFlowSolution& pf);

// Fixed-step run: events at a step are applied before its network solve,
// machines advance by RK4 with the network re-solved at every stage.
// Errors: UnknownTarget, InvalidTransition, NonFiniteState, SingularMatrix.
TimeSeries simulate(DynamicSystem system, const DynamicScenario& scenario);
TimeSeries simulate(const netmodel::Network& net, const PowerFlowSolution& pf, const DynamicScenario& scenario);

}  // namespace tdsim::dynamics
