#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tdsim/dynamics/scenario.hpp"
#include "tdsim/powerflow/compiled.hpp"
#include "tdsim/powerflow/solution.hpp"

namespace tdsim::dynamics {

using powerflow::CompiledNetwork;
using powerflow::PowerFlowSolution;
using numerics::Phasor;
using numerics::PhaseTriple;

// Phasor network of a dynamic run: branch admittances, loads and DGs frozen
// as constant admittances at their solved voltages, machine Norton
// admittances per phase and active fault stamps. Sources stay fixed
// voltages. Regulator taps are frozen at the power-flow values.
class DynamicNetwork {
public:
    // `norton` holds the per-phase Norton admittance of every generator of
    // `net` (model order, system per unit).
    DynamicNetwork(const netmodel::Network& net, const PowerFlowSolution& pf, std::vector<Phasor> norton);
    // Copies rebuild their own compiled network and factorization.
    DynamicNetwork(const DynamicNetwork& other);
    DynamicNetwork& operator=(const DynamicNetwork& other);
    DynamicNetwork(DynamicNetwork&&) noexcept;
    DynamicNetwork& operator=(DynamicNetwork&&) noexcept;
    ~DynamicNetwork();

    const netmodel::Network& network() const noexcept { return *net_; }
    const CompiledNetwork& compiled() const noexcept { return *compiled_; }

    // Errors: UnknownTarget, InvalidTransition.
    void apply(const Event& event);
    bool fault_active(const std::string& bus) const;
    bool branch_open(const std::string& branch) const;

    // Node-level admittance with every stamp, system per unit.
    numerics::SparseComplexMatrix admittance() const;
    // Siemens per unit of admittance on a bus.
    double admittance_base_siemens(std::size_t bus) const;
    std::size_t energized_nodes() const;

    // Node voltages for phase-A internal EMFs of every generator (model
    // order); dead nodes read zero. Error: SingularMatrix.
    std::vector<Phasor> solve(const std::vector<Phasor>& emf) const;

private:
    void recompile();
    void refactor();

    std::unique_ptr<netmodel::Network> net_;
    std::vector<PhaseTriple> pf_voltage_;  // by bus
    std::vector<Phasor> norton_;
    std::map<std::string, std::vector<int>> taps_;
    std::set<std::string> opened_;
    std::vector<Event> faults_;
    std::unique_ptr<CompiledNetwork> compiled_;
    struct Factor;
    std::unique_ptr<Factor> factor_;
};

}  // namespace tdsim::dynamics
