#pragma once

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tdsim/netmodel/network.hpp"
#include "tdsim/numerics/sparse.hpp"

namespace tdsim::powerflow {

using netmodel::Network;
using numerics::PhaseMatrix;
using numerics::Phasor;
using numerics::PhaseTriple;

inline constexpr std::size_t kNoNode = std::numeric_limits<std::size_t>::max();

// Per-phase per-unit system: power base mva_base/3 per phase, voltage base
// the bus line-to-neutral nominal voltage.
struct Node {
    std::size_t bus;
    int phase;
};

// Two-port admittance of a line, cable or transformer in per unit, with rows
// and columns following `from_nodes` / `to_nodes`.
struct BranchBlocks {
    std::size_t branch;
    std::vector<std::size_t> from_nodes;
    std::vector<std::size_t> to_nodes;
    PhaseMatrix yff, yft, ytf, ytt;
};

// Zero-impedance element forcing V_to = ratio * V_from on one phase: closed
// switches (ratio 1) and regulators (ratio 1 + step * tap).
struct Constraint {
    std::size_t branch;
    std::size_t from_node;
    std::size_t to_node;
    double ratio;
};

// One load element: wye elements connect a node to ground (node_b = kNoNode),
// delta elements connect two nodes. Power in per unit at rated voltage.
struct LoadElement {
    std::size_t load;
    std::size_t node_a;
    std::size_t node_b;
    Phasor s;
    netmodel::LoadComposition model;
    double v_rated;  // element rating in per unit of the node base
};

struct DgElement {
    std::size_t dg;
    std::size_t node;
    Phasor s;  // injected, per unit
};

struct GeneratorElement {
    std::size_t generator;
    std::size_t nodes[3];
    Phasor y_internal;  // 1 / (j x'') on the system base
};

struct SourceElement {
    std::size_t source;
    std::vector<std::size_t> nodes;
    std::vector<Phasor> voltage;
};

struct CompileOptions {
    // Regulator taps by branch id; regulators not listed keep their model taps.
    std::map<std::string, std::vector<int>> regulator_taps;
    // Branches forced open (dynamic events) by id.
    std::vector<std::string> open_branches;
    // Internal reactance used for generators without a machine.
    double default_x_internal = 0.05;
};

class CompiledNetwork {
public:
    static CompiledNetwork compile(const Network& net, const CompileOptions& options = {});

    const Network& network() const noexcept { return *net_; }
    std::size_t node_count() const noexcept { return nodes_.size(); }
    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    std::size_t node(std::size_t bus, int phase) const { return bus_nodes_[bus][phase]; }
    double base_kv_ln(std::size_t bus) const { return base_kv_ln_[bus]; }
    double base_mva_phase() const noexcept { return s_base_; }
    // Base current of a bus in amperes.
    double base_current_a(std::size_t bus) const { return s_base_ / base_kv_ln_[bus] * 1000.0; }

    bool energized(std::size_t node) const { return energized_[node] != 0; }
    bool branch_open(std::size_t branch) const { return branch_open_[branch] != 0; }

    // Node-level admittance (series, shunt halves, capacitors) over energized nodes.
    const numerics::SparseComplexMatrix& y() const noexcept { return y_; }
    const std::vector<BranchBlocks>& blocks() const noexcept { return blocks_; }
    // Capacitor admittances per node (also included in y()).
    const std::vector<std::pair<std::size_t, Phasor>>& node_shunts() const noexcept { return shunts_; }
    const std::vector<Constraint>& constraints() const noexcept { return constraints_; }
    const std::vector<LoadElement>& loads() const noexcept { return loads_; }
    // Extra elements not in the model, e.g. boundary loads (load = kNoNode).
    void add_load_element(const LoadElement& e) { loads_.push_back(e); }
    const std::vector<DgElement>& dgs() const noexcept { return dgs_; }
    const std::vector<GeneratorElement>& generators() const noexcept { return generators_; }
    const std::vector<SourceElement>& sources() const noexcept { return sources_; }
    const std::vector<std::vector<int>>& regulator_taps() const noexcept { return taps_; }

    // Constraint reduction: V_node = factor(node) * V_master(node).
    std::size_t master(std::size_t node) const { return master_[node]; }
    double factor(std::size_t node) const { return factor_[node]; }
    // Masters held by a source.
    bool fixed(std::size_t master_node) const { return fixed_[master_node] != 0; }
    // Spanning forest of the constraints: non-root nodes in breadth-first
    // order and the constraint that reached each of them.
    const std::vector<std::size_t>& constraint_order() const noexcept { return constraint_order_; }
    std::size_t parent_constraint(std::size_t node) const { return parent_constraint_[node]; }
    std::size_t block_of_branch(std::size_t branch) const { return block_of_branch_[branch]; }

    // Balanced 1 pu start with angles carried through transformer phase
    // shifts; sources and generator setpoints seed the roots.
    std::vector<Phasor> flat_start() const;

private:
    const Network* net_ = nullptr;
    double s_base_ = 0.0;
    std::vector<Node> nodes_;
    std::vector<std::array<std::size_t, 3>> bus_nodes_;
    std::vector<double> base_kv_ln_;
    std::vector<char> energized_;
    std::vector<char> branch_open_;
    numerics::SparseComplexMatrix y_;
    std::vector<BranchBlocks> blocks_;
    std::vector<std::pair<std::size_t, Phasor>> shunts_;
    std::vector<std::size_t> block_of_branch_;
    std::vector<Constraint> constraints_;
    std::vector<LoadElement> loads_;
    std::vector<DgElement> dgs_;
    std::vector<GeneratorElement> generators_;
    std::vector<SourceElement> sources_;
    std::vector<std::vector<int>> taps_;
    std::vector<std::size_t> master_;
    std::vector<double> factor_;
    std::vector<char> fixed_;
    std::vector<std::size_t> constraint_order_;
    std::vector<std::size_t> parent_constraint_;
};

// Series/shunt primitives in siemens, exposed for tests.
PhaseMatrix invert(const PhaseMatrix& m);  // throws SingularMatrix
// Terminal admittance of a three-phase or single-phase transformer bank,
// rows/cols = from phases then to phases, in siemens.
PhaseMatrix transformer_admittance(const netmodel::TransformerData& t, std::size_t phases);

}  // namespace tdsim::powerflow
