#pragma once

#include <string>
#include <string_view>

#include "tdsim/netmodel/network.hpp"

namespace tdsim::netmodel {

// JSON model file. Errors: SyntaxError (with line number), ReferenceError,
// DuplicateId.
Network parse_network(std::string_view text);
std::string serialize_network(const Network& net);

Network load_network(const std::string& path);
std::string read_text_file(const std::string& path);

// Partial override of machine parameters:
//   {"machines": {"<id>": {"genrou": {...}, "st1a": {...}, "mva_base": ...}}}
void apply_machine_overrides(Network& net, std::string_view text);

}  // namespace tdsim::netmodel
