#pragma once

#include <string>
#include <vector>

#include "tdsim/netmodel/network.hpp"

namespace tdsim::netmodel {

struct Diagnostic {
    std::string rule;     // DuplicateId, UnknownBus, PhaseMismatch, ...
    std::string element;  // offending element id
    std::string message;
    bool operator==(const Diagnostic&) const = default;
};

struct ValidateOptions {
    // Templates carry no source of their own; skip Unreachable/MultipleSources.
    bool check_reachability = true;
};

std::vector<Diagnostic> validate(const Network& net, const ValidateOptions& options = {});

}  // namespace tdsim::netmodel
