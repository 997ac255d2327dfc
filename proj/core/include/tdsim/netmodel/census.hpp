#pragma once

#include <map>
#include <string>

#include "tdsim/netmodel/network.hpp"

namespace tdsim::netmodel {

// Component counts keyed by category. The inventory table categories are
//   feeders, lines_1ph, lines_2ph, lines_3ph, cables_3ph, regulators,
//   shunt_capacitors, loads_1ph, loads_2ph, loads_3ph, transformers, switches
// and further keys (buses, transmission_lines, generators, ...) are reported
// alongside. Lines whose two ends are transmission buses count only as
// transmission_lines. Every key is present, zero or not.
using Census = std::map<std::string, long>;

Census component_census(const Network& net);

// The twelve inventory table categories in display order.
const std::vector<std::string>& census_table_keys();

}  // namespace tdsim::netmodel
