#include "tdsim/netmodel/validate.hpp"

#include <cmath>
#include <map>
#include <numeric>
#include <set>

namespace tdsim::netmodel {

namespace {

class Checker {
public:
    explicit Checker(const Network& net) : net_(net) {
        for (std::size_t i = 0; i < net.buses.size(); ++i) bus_.emplace(net.buses[i].id, i);
    }

    void add(const char* rule, const std::string& element, const std::string& message) {
        out_.push_back({rule, element, message});
    }

    const Bus* bus(const std::string& id) const {
        auto it = bus_.find(id);
        return it == bus_.end() ? nullptr : &net_.buses[it->second];
    }

    // Looks up the bus and checks the element's phases against it.
    const Bus* attach(const std::string& element, const std::string& bus_id, PhaseSet phases) {
        const Bus* b = bus(bus_id);
        if (!b) {
            add("UnknownBus", element, "references unknown bus '" + bus_id + "'");
            return nullptr;
        }
        if (!phases.subset_of(b->phases)) {
            add("PhaseMismatch", element,
                "phases " + phases.str() + " not present on bus '" + bus_id + "' (" + b->phases.str() + ")");
        }
        return b;
    }

    std::size_t index(const std::string& id) const { return bus_.at(id); }
    bool has(const std::string& id) const { return bus_.count(id) > 0; }
    std::vector<Diagnostic> take() { return std::move(out_); }

private:
    const Network& net_;
    std::map<std::string, std::size_t> bus_;
    std::vector<Diagnostic> out_;
};

template <class T>
void unique_ids(Checker& c, const std::vector<T>& items) {
    std::set<std::string> seen;
    for (const T& item : items) {
        if (!seen.insert(item.id).second) c.add("DuplicateId", item.id, "id used more than once");
    }
}

bool symmetric(const PhaseMatrix& m) {
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            const double scale = std::max({std::abs(m(i, j)), std::abs(m(j, i)), 1e-300});
            if (std::abs(m(i, j) - m(j, i)) > 1e-9 * scale) return false;
        }
    }
    return true;
}

bool finite(const PhaseMatrix& m) {
    for (const Phasor& z : m.data()) {
        if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
    }
    return true;
}

bool kv_close(double a, double b) { return std::abs(a - b) <= 0.01 * std::max(a, b); }

void check_branch(Checker& c, const Branch& br) {
    const Bus* f = c.attach(br.id, br.from, br.phases);
    const Bus* t = c.attach(br.id, br.to, br.phases);
    if (br.from == br.to) c.add("InvalidBranch", br.id, "branch joins a bus to itself");
    const std::size_t k = br.phases.size();
    switch (br.kind) {
    case BranchKind::Line:
    case BranchKind::Cable:
        if (br.z_series.size() != k || br.y_shunt.size() != k) {
            c.add("ImpedanceShape", br.id, "impedance matrices must be " + std::to_string(k) + "x" +
                                               std::to_string(k));
            return;
        }
        if (!finite(br.z_series) || !finite(br.y_shunt)) {
            c.add("ImpedanceShape", br.id, "non-finite impedance entry");
        }
        if (!symmetric(br.z_series) || !symmetric(br.y_shunt)) {
            c.add("ImpedanceAsymmetric", br.id, "impedance matrix is not symmetric");
        }
        for (std::size_t i = 0; i < k; ++i) {
            if (br.z_series(i, i).real() < 0.0) c.add("ImpedanceShape", br.id, "negative self resistance");
        }
        break;
    case BranchKind::Transformer: {
        const TransformerData& t_data = *br.transformer;
        if (t_data.kv_from <= 0 || t_data.kv_to <= 0 || t_data.kva <= 0) {
            c.add("TransformerRating", br.id, "ratings must be positive");
        }
        if (t_data.r_pct < 0 || t_data.x_pct <= 0) {
            c.add("TransformerRating", br.id, "impedance must have r >= 0 and x > 0");
        }
        if (t_data.taps.size() != k) c.add("TapRange", br.id, "one tap per phase required");
        for (double tap : t_data.taps) {
            if (!(tap > 0.5 && tap < 1.5)) c.add("TapRange", br.id, "tap ratio outside (0.5, 1.5)");
        }
        const bool delta = t_data.conn_from == Winding::Delta || t_data.conn_to == Winding::Delta;
        if ((delta || t_data.conn_from == Winding::Wye || t_data.conn_to == Winding::Wye) && k != 3) {
            c.add("PhaseMismatch", br.id, "delta or ungrounded-wye transformers need three phases");
        }
        if (f && !kv_close(f->nominal_kv, t_data.kv_from)) {
            c.add("NominalVoltage", br.id, "from-side rating differs from bus nominal voltage");
        }
        if (t && !kv_close(t->nominal_kv, t_data.kv_to)) {
            c.add("NominalVoltage", br.id, "to-side rating differs from bus nominal voltage");
        }
        return;
    }
    case BranchKind::Regulator: {
        const RegulatorData& g = *br.regulator;
        if (g.taps.size() != k) c.add("TapRange", br.id, "one tap per phase required");
        if (g.tap_min > g.tap_max) c.add("TapRange", br.id, "tap_min exceeds tap_max");
        for (int tap : g.taps) {
            if (tap < g.tap_min || tap > g.tap_max) {
                c.add("TapRange", br.id, "tap " + std::to_string(tap) + " outside [" +
                                             std::to_string(g.tap_min) + ", " + std::to_string(g.tap_max) + "]");
            }
        }
        if (g.step_pu <= 0 || g.bandwidth_pu <= 0 || g.pt_ratio <= 0 || g.ct_primary_a <= 0) {
            c.add("RegulatorSettings", br.id, "step, bandwidth, PT ratio and CT rating must be positive");
        }
        if (g.r_comp_v.size() != k || g.x_comp_v.size() != k) {
            c.add("RegulatorSettings", br.id, "compensator settings must list every phase");
        }
        break;
    }
    case BranchKind::Switch:
        break;
    }
    if (f && t && !kv_close(f->nominal_kv, t->nominal_kv)) {
        c.add("NominalVoltage", br.id, "joins buses of different nominal voltage");
    }
}

void check_machine(Checker& c, const SynchronousMachine& m) {
    c.attach(m.id, m.bus, PhaseSet::abc());
    const GenrouParameters& g = m.genrou;
    const bool ordered_d = g.xd >= g.xd_p && g.xd_p >= g.x_pp && g.x_pp > g.xl && g.xl >= 0;
    const bool ordered_q = g.xq >= g.xq_p && g.xq_p >= g.x_pp;
    const bool positive = g.h > 0 && g.tdo_p > 0 && g.tdo_pp > 0 && g.tqo_p > 0 && g.tqo_pp > 0 &&
                          g.ra >= 0 && m.mva_base > 0;
    const bool saturation = g.s10 >= 0 && g.s12 >= g.s10 && (g.s10 > 0 || g.s12 == 0);
    if (!ordered_d) c.add("MachineParameters", m.id, "requires Xd >= X'd >= X'' > Xl >= 0");
    if (!ordered_q) c.add("MachineParameters", m.id, "requires Xq >= X'q >= X''");
    if (!positive) c.add("MachineParameters", m.id, "H, base and time constants must be positive");
    if (!saturation) c.add("MachineParameters", m.id, "requires 0 <= S(1.0) <= S(1.2), both zero or S(1.0) > 0");
    const St1aParameters& e = m.st1a;
    if (e.tr < 0 || e.tb <= 0 || e.tc < 0 || e.ka <= 0 || e.vrmin >= e.vrmax) {
        c.add("MachineParameters", m.id, "invalid ST1A parameters");
    }
}

// Union-find over buses, joined by every branch whatever its switch state.
struct Components {
    explicit Components(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void join(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
    std::vector<std::size_t> parent;
};

void check_reachability(Checker& c, const Network& net) {
    Components comp(net.buses.size());
    for (const Branch& br : net.branches) {
        if (c.has(br.from) && c.has(br.to)) comp.join(c.index(br.from), c.index(br.to));
    }
    std::map<std::size_t, std::vector<std::string>> roots;
    for (const Generator& g : net.generators) {
        if (g.role == GeneratorRole::Slack && c.has(g.bus)) roots[comp.find(c.index(g.bus))].push_back(g.id);
    }
    for (const Source& s : net.sources) {
        if (c.has(s.bus)) roots[comp.find(c.index(s.bus))].push_back(s.id);
    }
    for (const auto& [root, ids] : roots) {
        if (ids.size() > 1) {
            std::string list;
            for (const std::string& id : ids) list += (list.empty() ? "" : ", ") + id;
            c.add("MultipleSources", ids.front(), "one island fed by " + list);
        }
    }
    for (std::size_t i = 0; i < net.buses.size(); ++i) {
        if (!roots.count(comp.find(i))) {
            c.add("Unreachable", net.buses[i].id, "no slack generator or source reaches this bus");
        }
    }
}

}  // namespace

std::vector<Diagnostic> validate(const Network& net, const ValidateOptions& options) {
    Checker c(net);
    unique_ids(c, net.buses);
    unique_ids(c, net.branches);
    unique_ids(c, net.loads);
    unique_ids(c, net.shunts);
    unique_ids(c, net.dgs);
    unique_ids(c, net.generators);
    unique_ids(c, net.machines);
    unique_ids(c, net.sources);
    unique_ids(c, net.substations);
    if (!(net.mva_base > 0) || !(net.frequency_hz > 0)) {
        c.add("SystemBase", net.name, "mva_base and frequency_hz must be positive");
    }

    for (const Bus& b : net.buses) {
        if (!(b.nominal_kv > 0)) c.add("NominalVoltage", b.id, "nominal kV must be positive");
        if (b.phases.empty()) c.add("PhaseMismatch", b.id, "bus has no phases");
    }
    for (const Branch& br : net.branches) check_branch(c, br);

    for (const Load& l : net.loads) {
        c.attach(l.id, l.bus, l.phases);
        const LoadComposition& m = l.model;
        if (m.p < 0 || m.i < 0 || m.z < 0 || std::abs(m.p + m.i + m.z - 1.0) > 1e-9) {
            c.add("LoadComposition", l.id, "composition fractions must be >= 0 and sum to 1");
        }
        const std::size_t n = load_element_count(l);
        if (l.kw.size() != n || l.kvar.size() != n) {
            c.add("LoadComposition", l.id, "kw/kvar must list " + std::to_string(n) + " elements");
        }
        if (!(l.kv > 0)) c.add("NominalVoltage", l.id, "load kV rating must be positive");
    }
    for (const Shunt& s : net.shunts) {
        c.attach(s.id, s.bus, s.phases);
        if (s.kvar.size() != s.phases.size()) c.add("ShuntRating", s.id, "kvar must list every phase");
        if (!(s.kv > 0)) c.add("NominalVoltage", s.id, "shunt kV rating must be positive");
    }
    for (const DistributedGenerator& g : net.dgs) {
        c.attach(g.id, g.bus, g.phases);
        if (g.p_kw < 0) c.add("DGSetpoint", g.id, "P setpoint must be >= 0");
    }
    std::set<std::string> machine_ids;
    for (const SynchronousMachine& m : net.machines) {
        check_machine(c, m);
        machine_ids.insert(m.id);
    }
    for (const Generator& g : net.generators) {
        c.attach(g.id, g.bus, PhaseSet::abc());
        if (!g.machine.empty() && !machine_ids.count(g.machine)) {
            c.add("UnknownMachine", g.id, "references unknown machine '" + g.machine + "'");
        }
        if (!(g.v_pu > 0)) c.add("GeneratorSetpoint", g.id, "voltage setpoint must be positive");
    }
    for (const Source& s : net.sources) {
        c.attach(s.id, s.bus, s.phases);
        if (s.paired_bus.empty()) continue;
        const Bus* b = c.bus(s.paired_bus);
        if (!b) {
            c.add("UnknownBus", s.id, "paired with unknown bus '" + s.paired_bus + "'");
        } else if (b->kind != BusKind::Boundary || b->phases != s.phases) {
            c.add("BoundaryPhases", s.id,
                  "paired bus '" + s.paired_bus + "' must be a boundary bus with phases " + s.phases.str());
        }
    }
    for (const Substation& s : net.substations) c.attach(s.id, s.bus, PhaseSet());

    if (options.check_reachability) check_reachability(c, net);
    return c.take();
}

}  // namespace tdsim::netmodel
