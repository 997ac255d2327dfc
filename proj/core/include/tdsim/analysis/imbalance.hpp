#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tdsim/powerflow/solution.hpp"

namespace tdsim::analysis {

using numerics::PhaseTriple;

// 100 max_i |V_i - mean| / mean. Error: DegenerateInput (a zero magnitude).
double voltage_imbalance_phase(const std::array<double, 3>& magnitudes);
// 100 |V2| / |V1|. Error: DegenerateInput (|V1| = 0).
double voltage_imbalance_seq(const PhaseTriple& phasors);

struct ImbalanceRecord {
    std::string bus;
    double phase_pct = 0.0;
    double seq_pct = 0.0;
    std::array<double, 3> magnitudes{};
};

struct ImbalanceSummary {
    std::size_t count = 0;
    double min = 0.0;
    double max = 0.0;
    double fraction_above_1pct = 0.0;
};

struct ImbalanceReport {
    std::vector<ImbalanceRecord> records;  // ascending by phase_pct
    ImbalanceSummary summary;
};

// Bus filter: a bus is in scope when its id starts with one of the
// prefixes; an empty scope takes every bus.
struct Scope {
    std::vector<std::string> prefixes;
    static Scope parse(std::string_view comma_separated);
    bool contains(std::string_view bus) const;
};

// One record per energized three-phase bus in scope; summary over the
// sorted set with the phase-deviation metric.
ImbalanceReport imbalance_report(const powerflow::PowerFlowSolution& solution, const Scope& scope = {});

}  // namespace tdsim::analysis
