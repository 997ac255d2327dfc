#pragma once

#include <string_view>

namespace tdsim::cli {

// Data files compiled into the binary: "ieee39", "ieee123",
// "substation_standard", "substation_detailed", "scenario_slg".
// Unknown names give an empty view.
std::string_view embedded_file(std::string_view name);

}  // namespace tdsim::cli
