#include "tdsim/powerflow/injection.hpp"

#include <cmath>

namespace tdsim::powerflow {

ElementCurrent load_current(Phasor s, const netmodel::LoadComposition& model, double v_rated, Phasor v) {
    ElementCurrent out{};
    const double mag = std::abs(v);
    if (mag == 0.0) return out;
    const Phasor cs = std::conj(s);
    const Phasor cv = std::conj(v);
    if (model.p != 0.0) {
        out.i += model.p * cs / cv;
        out.b += -model.p * cs / (cv * cv);
    }
    if (model.i != 0.0) {
        const Phasor c = model.i * cs / v_rated;
        out.i += c * mag / cv;
        out.a += c / (2.0 * mag);
        out.b += -c * v * v / (2.0 * mag * mag * mag);
    }
    if (model.z != 0.0) {
        const Phasor y = model.z * cs / (v_rated * v_rated);
        out.i += y * v;
        out.a += y;
    }
    return out;
}

DgInjection dg_injection(const netmodel::DistributedGenerator& dg, const PhaseTriple& v, double base_kva) {
    DgInjection out;
    const auto ph = dg.phases.list();
    if (ph.empty()) return out;
    const Phasor s = Phasor(dg.p_kw, dg.unity_pf ? 0.0 : dg.q_kvar) / base_kva / static_cast<double>(ph.size());
    for (int p : ph) {
        if (std::abs(v[p]) < kDgCutoutPu) {
            out.cutout = true;
            continue;
        }
        out.current[p] = std::conj(s / v[p]);
    }
    return out;
}

void add_element_injections(const CompiledNetwork& net, const std::vector<Phasor>& v, std::vector<Phasor>& inj,
                            std::vector<InjectionTerm>* terms) {
    for (const LoadElement& e : net.loads()) {
        const bool delta = e.node_b != kNoNode;
        const Phasor ve = delta ? v[e.node_a] - v[e.node_b] : v[e.node_a];
        const ElementCurrent c = load_current(e.s, e.model, e.v_rated, ve);
        inj[e.node_a] -= c.i;
        if (delta) inj[e.node_b] += c.i;
        if (!terms) continue;
        terms->push_back({e.node_a, e.node_a, -c.a, -c.b});
        if (delta) {
            terms->push_back({e.node_a, e.node_b, c.a, c.b});
            terms->push_back({e.node_b, e.node_a, c.a, c.b});
            terms->push_back({e.node_b, e.node_b, -c.a, -c.b});
        }
    }
    for (const DgElement& d : net.dgs()) {
        const Phasor vd = v[d.node];
        if (std::abs(vd) < kDgCutoutPu) continue;
        const Phasor cv = std::conj(vd);
        inj[d.node] += std::conj(d.s) / cv;
        if (terms) terms->push_back({d.node, d.node, 0.0, -std::conj(d.s) / (cv * cv)});
    }
}

}  // namespace tdsim::powerflow
