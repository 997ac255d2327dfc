#pragma once

#include "tdsim/numerics/phasor.hpp"

namespace tdsim::numerics {

struct SequenceSet {
    Phasor v0;
    Phasor v1;
    Phasor v2;
};

// Symmetrical components with the 1/3 convention:
//   V0 = (A + B + C)/3, V1 = (A + aB + a^2 C)/3, V2 = (A + a^2 B + aC)/3.
SequenceSet fortescue_decompose(const PhaseTriple& abc);
PhaseTriple fortescue_compose(const SequenceSet& seq);

}  // namespace tdsim::numerics
