#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdsim/netmodel/network.hpp"

namespace tdsim::netmodel {

// One substation layout. Its buses, branches and loads are copied per mapped
// bus with ids prefixed "SUB<bus>."; `hv_bus` is merged into the
// transmission bus. Template loads are weights: they are scaled so that their
// total equals `load_share` of the removed lumped load. Transformer ratings
// are resized to the demand they carry.
struct SubstationTemplate {
    std::string variant;
    Network network;
    std::string hv_bus;
    std::vector<std::string> feeder_buses;  // feeder k attaches to entry k*size/count
    double load_share = 0.0;
};

// Template file: a model file with an additional top-level object
//   "template": {"variant", "hv_bus", "feeder_buses": [...], "load_share"}.
SubstationTemplate parse_substation_template(std::string_view text);

struct HybridMapping {
    std::string bus;  // transmission load bus
    int feeders = 8;
};

struct HybridOptions {
    int breakers_per_feeder_head = 1;
    double transformer_margin = 1.25;  // rating = margin * carried |S|
    std::optional<SubstationTemplate> detailed;
    std::string detailed_bus;  // mapped bus that receives the detailed layout
    bool unified = false;      // join feeders physically instead of pairing
};

// Twelve of the nineteen IEEE 39-bus loads, eight feeders each.
std::vector<HybridMapping> default_hybrid_mapping();

// Each mapped bus loses its lumped load and gains one substation feeding
// `feeders` copies of the feeder template. Feeder k of bus b gets prefix
// "F<b>_<k>." and its source becomes "S<b>_<k>", paired with boundary bus
// "B<b>_<k>" at the end of head breaker "SUB<b>.HB<k>". Feeder loads are
// scaled uniformly at constant power factor by
//   k = min(1, (1 - load_share) * P_lumped / (feeders * P_feeder));
// what the feeders and the substation loads do not carry stays at the
// transmission bus as the balanced load "SUB<b>.RES".
// Errors: NoLumpedLoad, TemplateInvalid.
Network build_hybrid(const Network& transmission, const Network& feeder_template,
                     const SubstationTemplate& substation, const std::vector<HybridMapping>& mapping,
                     const HybridOptions& options = {});

// Connects every paired feeder directly: branches ending on a boundary bus
// are moved to the source bus; the boundary bus and the source disappear.
Network join_boundaries(const Network& boundary_model);

struct BoundaryCircuit {
    std::string source_id;
    std::string boundary_bus;
    Network network;  // standalone, source unpaired
};

struct BoundarySplit {
    Network transmission;  // everything outside the circuits, boundary buses included
    std::vector<BoundaryCircuit> circuits;
};

// Partitions a boundary-paired model. A circuit is the island of its source
// bus over all branches, open switches included. Error: NotBoundaryModel.
BoundarySplit split_boundary_model(const Network& net);

// Errors: NotBoundaryModel, UnknownSource.
Network extract_circuit(const Network& net, const std::string& source_id);

}  // namespace tdsim::netmodel
