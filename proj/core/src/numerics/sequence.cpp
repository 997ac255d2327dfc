#include "tdsim/numerics/sequence.hpp"

namespace tdsim::numerics {

SequenceSet fortescue_decompose(const PhaseTriple& abc) {
    const Phasor a = kRotate120;
    const Phasor a2 = a * a;
    return {(abc[0] + abc[1] + abc[2]) / 3.0,
            (abc[0] + a * abc[1] + a2 * abc[2]) / 3.0,
            (abc[0] + a2 * abc[1] + a * abc[2]) / 3.0};
}

PhaseTriple fortescue_compose(const SequenceSet& s) {
    const Phasor a = kRotate120;
    const Phasor a2 = a * a;
    return {s.v0 + s.v1 + s.v2,
            s.v0 + a2 * s.v1 + a * s.v2,
            s.v0 + a * s.v1 + a2 * s.v2};
}

}  // namespace tdsim::numerics
