#include "tdsim/netmodel/census.hpp"

#include <unordered_map>

namespace tdsim::netmodel {

const std::vector<std::string>& census_table_keys() {
    static const std::vector<std::string> keys = {
        "feeders",      "lines_1ph",        "lines_2ph", "lines_3ph", "cables_3ph", "regulators",
        "shunt_capacitors", "loads_1ph",    "loads_2ph", "loads_3ph", "transformers", "switches"};
    return keys;
}

Census component_census(const Network& net) {
    Census c;
    for (const std::string& k : census_table_keys()) c[k] = 0;
    for (const char* k : {"lines_3ph", "cables_1ph", "cables_2ph", "transmission_lines", "buses",
                          "generators", "machines", "sources", "dgs", "substations"}) {
        c[k] = 0;
    }
    auto phase_key = [](const char* stem, std::size_t n) {
        return std::string(stem) + "_" + std::to_string(n) + "ph";
    };

    c["buses"] = static_cast<long>(net.buses.size());
    std::unordered_map<std::string, BusKind> kind;
    for (const Bus& b : net.buses) kind.emplace(b.id, b.kind);
    auto is_transmission = [&](const std::string& id) {
        auto it = kind.find(id);
        return it != kind.end() && it->second == BusKind::Transmission;
    };
    for (const Branch& br : net.branches) {
        switch (br.kind) {
        case BranchKind::Line: {
            const bool transmission = is_transmission(br.from) && is_transmission(br.to);
            ++c[transmission ? std::string("transmission_lines") : phase_key("lines", br.phases.size())];
            break;
        }
        case BranchKind::Cable: ++c[phase_key("cables", br.phases.size())]; break;
        case BranchKind::Transformer: ++c["transformers"]; break;
        case BranchKind::Regulator: ++c["regulators"]; break;
        case BranchKind::Switch: ++c["switches"]; break;
        }
    }
    for (const Load& l : net.loads) ++c[phase_key("loads", l.phases.size())];
    c["shunt_capacitors"] = static_cast<long>(net.shunts.size());
    c["generators"] = static_cast<long>(net.generators.size());
    c["machines"] = static_cast<long>(net.machines.size());
    c["sources"] = static_cast<long>(net.sources.size());
    c["dgs"] = static_cast<long>(net.dgs.size());
    c["substations"] = static_cast<long>(net.substations.size());

    long feeders = static_cast<long>(net.sources.size());
    for (const Substation& s : net.substations) {
        if (s.joined) feeders += s.feeders;
    }
    c["feeders"] = feeders;
    return c;
}

}  // namespace tdsim::netmodel
