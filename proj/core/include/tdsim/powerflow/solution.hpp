#pragma once

#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "tdsim/powerflow/compiled.hpp"

namespace tdsim::powerflow {

enum class CouplingMode { Unified, Coupled };
enum class RegulatorControl { Locked, Auto };

struct PowerFlowOptions {
    CouplingMode mode = CouplingMode::Unified;
    double tolerance = 1e-6;           // per-unit power mismatch (FBS: voltage change)
    double boundary_tolerance = 1e-6;  // per-unit boundary voltage change
    int max_inner = 50;
    int max_outer = 100;
    bool flat_start = true;
    RegulatorControl regulators = RegulatorControl::Locked;
    int max_control_rounds = 20;
    int jobs = 0;  // 0: hardware concurrency
};

struct OuterRound {
    int round = 0;
    double max_dv = 0.0;        // boundary voltage change, pu
    double max_mismatch = 0.0;  // transmission solve, pu
    double wall_ms = 0.0;
    int inner_iterations = 0;
};

struct GeneratorResult {
    std::string id;
    Phasor emf;          // phase A internal voltage, pu
    PhaseTriple power{}; // delivered per phase, kVA
};

struct PowerFlowSolution {
    std::vector<std::string> bus_ids;
    std::vector<netmodel::PhaseSet> bus_phases;
    std::vector<PhaseTriple> voltage;   // pu of bus nominal; zero on absent or dead phases
    std::vector<PhaseTriple> mismatch;  // scheduled minus computed injection, kVA
    std::vector<PhaseTriple> demand;    // loads net of DG at the solved voltage, kVA

    std::vector<std::string> branch_ids;
    std::vector<PhaseTriple> current_from;  // A entering at the from end
    std::vector<PhaseTriple> current_to;    // A leaving at the to end

    std::vector<std::pair<std::string, PhaseTriple>> source_power;  // kVA delivered
    std::vector<GeneratorResult> generators;
    std::map<std::string, std::vector<int>> regulator_taps;

    int inner_iterations = 0;
    std::vector<OuterRound> rounds;  // coupled: boundary rounds; otherwise one per regulator control round
    bool converged = false;
    double max_mismatch = 0.0;  // pu
    double wall_seconds = 0.0;

    std::optional<std::size_t> bus(const std::string& id) const;
    PhaseTriple voltage_at(const std::string& id) const;
    void reindex();

private:
    std::unordered_map<std::string, std::size_t> lookup_;
};

// Solution fields from node voltages and generator EMFs (phase A per
// generator). Mismatch is reported at constraint masters.
PowerFlowSolution make_solution(const CompiledNetwork& net, const std::vector<Phasor>& v,
                                const std::vector<Phasor>& emf);

// Scheduled minus computed injection (kVA) per bus and phase for candidate
// voltages indexed like net.buses. Buses holding sources or generators
// report zero: their injection is not scheduled.
std::vector<PhaseTriple> mismatch(const Network& net, const std::vector<PhaseTriple>& voltages);

// One regulator control pass on a solved case: line-drop compensated relay
// voltage per phase (120 V base) against the band; out-of-band phases move
// toward the band center. Returns true when any tap changed.
bool regulator_control_step(const Network& net, const PowerFlowSolution& sol,
                            std::map<std::string, std::vector<int>>& taps);

// Power balance totals in kVA per phase: generation (sources + generators),
// load (loads, DG counted negative), losses (branch from + to power, shunts).
struct PowerBalance {
    PhaseTriple generation{};
    PhaseTriple load{};
    PhaseTriple losses{};
};
PowerBalance power_balance(const Network& net, const PowerFlowSolution& sol);

}  // namespace tdsim::powerflow
