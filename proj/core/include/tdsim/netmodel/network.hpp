#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tdsim/numerics/phasor.hpp"

namespace tdsim::netmodel {

using numerics::Phasor;
using numerics::PhaseMatrix;
using numerics::PhaseTriple;

// Subset of {A, B, C}; phase indices are 0, 1, 2.
class PhaseSet {
public:
    PhaseSet() = default;
    static PhaseSet parse(std::string_view text);  // throws std::invalid_argument
    static PhaseSet abc() { return PhaseSet(0b111); }
    static PhaseSet single(int phase) { return PhaseSet(static_cast<std::uint8_t>(1u << phase)); }

    bool contains(int phase) const noexcept { return (bits_ >> phase) & 1u; }
    std::size_t size() const noexcept;
    bool empty() const noexcept { return bits_ == 0; }
    bool subset_of(PhaseSet other) const noexcept { return (bits_ & ~other.bits_) == 0; }
    // Phase indices in A, B, C order.
    std::vector<int> list() const;
    // Position of `phase` within list(), or -1.
    int position(int phase) const noexcept;
    std::string str() const;
    std::uint8_t bits() const noexcept { return bits_; }

    bool operator==(const PhaseSet&) const = default;

private:
    explicit PhaseSet(std::uint8_t bits) : bits_(bits) {}
    std::uint8_t bits_ = 0;
};

enum class BusKind { Transmission, Distribution, Boundary };

struct Bus {
    std::string id;
    PhaseSet phases;
    double nominal_kv = 0.0;  // line-to-line
    BusKind kind = BusKind::Distribution;
    bool operator==(const Bus&) const = default;
};

enum class BranchKind { Line, Cable, Transformer, Regulator, Switch };
enum class Winding { WyeGrounded, Wye, Delta };

struct TransformerData {
    Winding conn_from = Winding::WyeGrounded;
    Winding conn_to = Winding::WyeGrounded;
    double kv_from = 0.0;  // line-to-line winding ratings
    double kv_to = 0.0;
    double kva = 0.0;      // three-phase rating
    double r_pct = 0.0;    // total series resistance on rating
    double x_pct = 0.0;
    std::vector<double> taps;  // off-nominal ratio on the from side, per phase
    bool operator==(const TransformerData&) const = default;
};

struct RegulatorData {
    std::vector<int> taps;  // per phase
    double band_center_pu = 1.0;
    double bandwidth_pu = 2.0 / 120.0;
    double step_pu = 0.00625;
    int tap_min = -16;
    int tap_max = 16;
    double pt_ratio = 20.0;
    double ct_primary_a = 100.0;
    std::vector<double> r_comp_v;  // line-drop compensator settings, volts on the 120 V base
    std::vector<double> x_comp_v;
    bool ganged = false;  // one control on the first phase moves every phase
    bool operator==(const RegulatorData&) const = default;
};

struct Branch {
    std::string id;
    BranchKind kind = BranchKind::Line;
    std::string from;
    std::string to;
    PhaseSet phases;
    PhaseMatrix z_series;  // ohm, k x k in phase order
    PhaseMatrix y_shunt;   // siemens, total line charging, k x k
    std::optional<TransformerData> transformer;
    std::optional<RegulatorData> regulator;
    bool closed = true;  // switches only
    bool operator==(const Branch&) const = default;
};

enum class LoadConnection { Wye, Delta };

struct LoadComposition {
    double p = 1.0;  // constant power share
    double i = 0.0;  // constant current share
    double z = 0.0;  // constant impedance share
    bool operator==(const LoadComposition&) const = default;
};

// Wye loads have one element per phase (phase to ground). Delta loads on ABC
// have elements AB, BC, CA; on two phases a single element between them.
struct Load {
    std::string id;
    std::string bus;
    PhaseSet phases;
    LoadConnection connection = LoadConnection::Wye;
    std::vector<double> kw;    // per element
    std::vector<double> kvar;  // per element
    LoadComposition model;
    double kv = 0.0;  // element rating: line-to-neutral for wye, line-to-line for delta
    bool operator==(const Load&) const = default;
};

std::size_t load_element_count(const Load& load);

// Grounded-wye capacitor bank.
struct Shunt {
    std::string id;
    std::string bus;
    PhaseSet phases;
    std::vector<double> kvar;  // per phase at rated voltage
    double kv = 0.0;           // line-to-neutral rating
    bool operator==(const Shunt&) const = default;
};

struct DistributedGenerator {
    std::string id;
    std::string bus;
    PhaseSet phases;
    double p_kw = 0.0;
    double q_kvar = 0.0;
    bool unity_pf = true;
    bool operator==(const DistributedGenerator&) const = default;
};

enum class GeneratorRole { Slack, PV };

struct Generator {
    std::string id;
    std::string bus;
    GeneratorRole role = GeneratorRole::PV;
    double p_mw = 0.0;       // three-phase dispatch (PV)
    double v_pu = 1.0;       // positive-sequence terminal magnitude
    double angle_deg = 0.0;  // slack reference angle
    double x_internal_pu = 0.0;  // on system base; 0 means take it from the machine
    std::string machine;     // optional machine id
    bool operator==(const Generator&) const = default;
};

struct GenrouParameters {
    double h = 3.0;
    double d = 0.0;
    double ra = 0.0;
    double tdo_p = 6.0;
    double tdo_pp = 0.03;
    double tqo_p = 0.5;
    double tqo_pp = 0.05;
    double xd = 1.8;
    double xq = 1.7;
    double xd_p = 0.3;
    double xq_p = 0.55;
    double x_pp = 0.25;
    double xl = 0.15;
    double s10 = 0.0;
    double s12 = 0.0;
    bool operator==(const GenrouParameters&) const = default;
};

struct St1aParameters {
    double tr = 0.02;
    double ka = 200.0;
    double tb = 10.0;
    double tc = 1.0;
    double vrmax = 6.0;
    double vrmin = -5.0;
    bool operator==(const St1aParameters&) const = default;
};

struct SynchronousMachine {
    std::string id;
    std::string bus;
    double mva_base = 100.0;
    GenrouParameters genrou;
    St1aParameters st1a;
    bool operator==(const SynchronousMachine&) const = default;
};

// Fixed-voltage source heading a distribution circuit. When `paired_bus` is
// set, the circuit is coupled to that boundary bus of the transmission side.
struct Source {
    std::string id;
    std::string bus;
    PhaseSet phases;
    PhaseTriple voltage{};  // pu, indexed by phase A, B, C
    std::string paired_bus;
    bool operator==(const Source&) const = default;
};

// Record left by the hybrid builder for each replaced lumped load.
struct Substation {
    std::string id;
    std::string bus;
    std::string variant;
    int feeders = 0;
    double load_scale = 1.0;  // uniform factor applied to every feeder load
    bool joined = false;      // feeders physically connected (unified build)
    bool operator==(const Substation&) const = default;
};

struct Network {
    std::string name;
    std::string notes;
    double frequency_hz = 60.0;
    double mva_base = 100.0;
    std::vector<Bus> buses;
    std::vector<Branch> branches;
    std::vector<Load> loads;
    std::vector<Shunt> shunts;
    std::vector<DistributedGenerator> dgs;
    std::vector<Generator> generators;
    std::vector<SynchronousMachine> machines;
    std::vector<Source> sources;
    std::vector<Substation> substations;

    // Rebuilds id lookups; call after structural edits.
    void reindex();
    std::optional<std::size_t> bus_index(std::string_view id) const;
    std::optional<std::size_t> branch_index(std::string_view id) const;
    std::optional<std::size_t> machine_index(std::string_view id) const;
    std::optional<std::size_t> source_index(std::string_view id) const;

    bool operator==(const Network& other) const;

private:
    std::unordered_map<std::string, std::size_t> bus_lookup_;
    std::unordered_map<std::string, std::size_t> branch_lookup_;
    std::unordered_map<std::string, std::size_t> machine_lookup_;
    std::unordered_map<std::string, std::size_t> source_lookup_;
};

const char* to_string(BusKind kind);
const char* to_string(BranchKind kind);
const char* to_string(Winding winding);

// Balanced (transposed) three-phase matrix from sequence values:
// diagonal (z0 + 2 z1)/3 * length, mutual (z0 - z1)/3 * length. A nonzero
// asymmetry scales the diagonals by (1 + alpha, 1, 1 - alpha).
PhaseMatrix three_phase_from_sequence(Phasor z1, Phasor z0, double length, double asymmetry = 0.0);

}  // namespace tdsim::netmodel
