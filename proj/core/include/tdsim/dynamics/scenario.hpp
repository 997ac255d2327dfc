#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "tdsim/netmodel/network.hpp"

namespace tdsim::dynamics {

inline constexpr double kBoltedFaultOhm = 1e-4;
inline constexpr double kDefaultStep = 1.0 / 240.0;

enum class EventKind { ApplyShuntFault, ClearShuntFault, OpenBranch, CloseBranch };

// Faults target a bus, branch events a branch. A fault connects each listed
// phase to ground through resistance_ohm, or the listed phases to each other
// when to_ground is false.
struct Event {
    double time = 0.0;
    EventKind kind = EventKind::ApplyShuntFault;
    std::string target;
    netmodel::PhaseSet phases;
    double resistance_ohm = kBoltedFaultOhm;
    bool to_ground = true;
    bool operator==(const Event&) const = default;
};

enum class ProbeQuantity {
    VoltageMagnitude,
    VoltageAngle,  // degrees
    Delta,
    Speed,
    EqPrime,
    EdPrime,
    PsiKd,
    PsiKq,
    Efd,
    VSensed,
    ElectricalTorque,
    TerminalVoltage,  // positive-sequence magnitude
};

// Bus probes name a bus and phase; machine probes name a generator or
// machine id.
struct Probe {
    std::string id;
    ProbeQuantity quantity = ProbeQuantity::VoltageMagnitude;
    std::string target;
    int phase = 0;
    bool machine() const noexcept {
        return quantity != ProbeQuantity::VoltageMagnitude && quantity != ProbeQuantity::VoltageAngle;
    }
    bool operator==(const Probe&) const = default;
};

struct DynamicScenario {
    double dt = kDefaultStep;
    double duration = 1.0;
    std::vector<Event> events;  // sorted by time (stable)
    std::vector<Probe> probes;
    bool operator==(const DynamicScenario&) const = default;
};

const char* to_string(EventKind kind);
const char* to_string(ProbeQuantity quantity);

// JSON scenario: dt, duration, events[] {time, kind, target, phases,
// resistance_ohm, to_ground}, probes[] {id, bus, phase, quantity} or
// {id, machine, quantity}. Fault resistance is floored at kBoltedFaultOhm.
// Error: SyntaxError.
DynamicScenario parse_scenario(std::string_view json_text);
std::string serialize_scenario(const DynamicScenario& scenario);
// Stable 64-bit FNV-1a digest of the serialized scenario, hex.
std::string scenario_hash(const DynamicScenario& scenario);

// Sampled probes on the uniform grid t_k = k dt, k = 0..steps.
struct TimeSeries {
    std::vector<double> time;
    std::vector<std::string> probe_ids;
    std::vector<Probe> probes;  // same order as probe_ids
    std::vector<std::vector<double>> values;  // per probe, per sample
    double dt = 0.0;
    std::string scenario_hash;
    struct AppliedEvent {
        Event event;
        double snapped_time = 0.0;
        std::size_t step = 0;
    };
    std::vector<AppliedEvent> events;
    std::vector<std::string> notes;  // e.g. DG cut-out, islanding

    const std::vector<double>* find(std::string_view probe_id) const;
};

}  // namespace tdsim::dynamics
