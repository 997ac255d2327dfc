#include "tdsim/netmodel/hybrid.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <complex>
#include <map>
#include <numeric>
#include <set>

#include "tdsim/error.hpp"
#include "tdsim/netmodel/model_io.hpp"
#include "tdsim/netmodel/validate.hpp"

namespace tdsim::netmodel {

namespace {

Phasor total_power(const std::vector<Load>& loads) {
    Phasor s{};
    for (const Load& l : loads) {
        for (std::size_t e = 0; e < l.kw.size(); ++e) s += Phasor(l.kw[e], l.kvar[e]);
    }
    return s;
}

void scale_load(Load& l, double kp, double kq) {
    for (double& p : l.kw) p *= kp;
    for (double& q : l.kvar) q *= kq;
}

std::string diagnostics_text(const std::vector<Diagnostic>& diags) {
    std::string s;
    for (std::size_t i = 0; i < diags.size() && i < 5; ++i) {
        s += (i ? "; " : "") + diags[i].rule + " " + diags[i].element + ": " + diags[i].message;
    }
    return s;
}

void check_feeder_template(const Network& feeder) {
    if (feeder.sources.size() != 1) {
        throw Error(ErrorCode::TemplateInvalid, "feeder template must have exactly one source", feeder.name);
    }
    const auto diags = validate(feeder);
    if (!diags.empty()) {
        throw Error(ErrorCode::TemplateInvalid, "feeder template: " + diagnostics_text(diags), feeder.name);
    }
}

void check_substation_template(const SubstationTemplate& t) {
    const auto diags = validate(t.network, {.check_reachability = false});
    if (!diags.empty()) {
        throw Error(ErrorCode::TemplateInvalid, "substation template: " + diagnostics_text(diags), t.variant);
    }
    if (!t.network.bus_index(t.hv_bus)) {
        throw Error(ErrorCode::TemplateInvalid, "substation template lacks hv bus '" + t.hv_bus + "'", t.variant);
    }
    if (t.feeder_buses.empty()) {
        throw Error(ErrorCode::TemplateInvalid, "substation template lists no feeder buses", t.variant);
    }
    for (const std::string& b : t.feeder_buses) {
        if (!t.network.bus_index(b)) {
            throw Error(ErrorCode::TemplateInvalid, "unknown feeder bus '" + b + "'", t.variant);
        }
    }
    if (t.load_share < 0 || t.load_share >= 1) {
        throw Error(ErrorCode::TemplateInvalid, "load_share must lie in [0, 1)", t.variant);
    }
}

// Demand carried by each template transformer: everything reachable from its
// secondary without passing through the transformer itself or the HV bus.
std::map<std::string, double> transformer_demand(const SubstationTemplate& t,
                                                 const std::map<std::string, Phasor>& bus_demand) {
    std::map<std::string, double> out;
    const Network& n = t.network;
    for (const Branch& tx : n.branches) {
        if (tx.kind != BranchKind::Transformer) continue;
        std::set<std::string> seen{t.hv_bus, tx.to};
        std::vector<std::string> stack{tx.to};
        while (!stack.empty()) {
            const std::string bus = stack.back();
            stack.pop_back();
            for (const Branch& br : n.branches) {
                if (&br == &tx) continue;
                const std::string* next = br.from == bus ? &br.to : br.to == bus ? &br.from : nullptr;
                if (next && seen.insert(*next).second) stack.push_back(*next);
            }
        }
        Phasor s{};
        for (const std::string& bus : seen) {
            if (bus == t.hv_bus) continue;
            auto it = bus_demand.find(bus);
            if (it != bus_demand.end()) s += it->second;
        }
        out[tx.id] = std::abs(s);
    }
    return out;
}

void add_feeder(Network& out, const Network& feeder, const std::string& prefix, double scale,
                const std::string& source_id, const std::string& boundary_bus) {
    auto ns = [&](const std::string& id) { return prefix + id; };
    for (Bus b : feeder.buses) {
        b.id = ns(b.id);
        out.buses.push_back(std::move(b));
    }
    for (Branch br : feeder.branches) {
        br.id = ns(br.id);
        br.from = ns(br.from);
        br.to = ns(br.to);
        out.branches.push_back(std::move(br));
    }
    for (Load l : feeder.loads) {
        l.id = ns(l.id);
        l.bus = ns(l.bus);
        scale_load(l, scale, scale);
        out.loads.push_back(std::move(l));
    }
    for (Shunt s : feeder.shunts) {
        s.id = ns(s.id);
        s.bus = ns(s.bus);
        out.shunts.push_back(std::move(s));
    }
    for (DistributedGenerator g : feeder.dgs) {
        g.id = ns(g.id);
        g.bus = ns(g.bus);
        out.dgs.push_back(std::move(g));
    }
    Source src = feeder.sources.front();
    src.id = source_id;
    src.bus = ns(src.bus);
    src.paired_bus = boundary_bus;
    out.sources.push_back(std::move(src));
}

void add_substation(Network& out, const Network& feeder, const SubstationTemplate& t,
                    const HybridMapping& m, const Bus& hv, const HybridOptions& opt) {
    // Remove and total the lumped load.
    Phasor lumped{};
    LoadComposition model;
    std::vector<Load> kept;
    for (Load& l : out.loads) {
        if (l.bus == m.bus) {
            lumped += total_power({l});
            model = l.model;
        } else {
            kept.push_back(std::move(l));
        }
    }
    out.loads = std::move(kept);

    const Phasor feeder_s = total_power(feeder.loads);
    const double s_share = t.load_share;
    const double scale =
        std::min(1.0, (1.0 - s_share) * lumped.real() / (m.feeders * feeder_s.real()));
    const std::string sub = "SUB" + m.bus;
    auto ns = [&](const std::string& id) { return id == t.hv_bus ? m.bus : sub + "." + id; };

    // Template loads carry load_share of the lumped P and Q.
    const Phasor weights = total_power(t.network.loads);
    const double kp = weights.real() > 0 ? s_share * lumped.real() / weights.real() : 0.0;
    const double kq = weights.imag() != 0 ? s_share * lumped.imag() / weights.imag() : 0.0;
    Phasor template_s{};
    std::map<std::string, Phasor> bus_demand;
    for (Load l : t.network.loads) {
        scale_load(l, kp, kq);
        template_s += total_power({l});
        bus_demand[l.bus] += total_power({l});
        l.id = sub + "." + l.id;
        l.bus = ns(l.bus);
        out.loads.push_back(std::move(l));
    }
    const std::size_t attach = t.feeder_buses.size();
    for (int k = 0; k < m.feeders; ++k) {
        bus_demand[t.feeder_buses[static_cast<std::size_t>(k) * attach / m.feeders]] += scale * feeder_s;
    }
    const auto demand = transformer_demand(t, bus_demand);

    for (Bus b : t.network.buses) {
        if (b.id == t.hv_bus) continue;
        b.id = ns(b.id);
        out.buses.push_back(std::move(b));
    }
    for (Branch br : t.network.branches) {
        if (br.kind == BranchKind::Transformer) {
            const double kva = opt.transformer_margin * demand.at(br.id);
            if (kva > 0) br.transformer->kva = kva;
        }
        br.id = sub + "." + br.id;
        br.from = ns(br.from);
        br.to = ns(br.to);
        out.branches.push_back(std::move(br));
    }

    // Residual balanced load at the transmission bus.
    const Phasor residual = lumped - template_s - static_cast<double>(m.feeders) * scale * feeder_s;
    Load res;
    res.id = sub + ".RES";
    res.bus = m.bus;
    res.phases = PhaseSet::abc();
    res.connection = LoadConnection::Wye;
    res.kw.assign(3, residual.real() / 3.0);
    res.kvar.assign(3, residual.imag() / 3.0);
    res.model = model;
    res.kv = hv.nominal_kv / std::sqrt(3.0);
    out.loads.push_back(std::move(res));

    const Bus& root = feeder.buses[*feeder.bus_index(feeder.sources.front().bus)];
    for (int k = 1; k <= m.feeders; ++k) {
        const std::string tag = m.bus + "_" + std::to_string(k);
        const std::string boundary = "B" + tag;
        std::string upstream = ns(t.feeder_buses[static_cast<std::size_t>(k - 1) * attach / m.feeders]);
        for (int j = 1; j <= opt.breakers_per_feeder_head; ++j) {
            const bool last = j == opt.breakers_per_feeder_head;
            const std::string suffix = j == 1 ? "" : "_" + std::to_string(j);
            const std::string down = last ? boundary : sub + ".HB" + std::to_string(k) + "_" + std::to_string(j);
            if (!last) out.buses.push_back({down, root.phases, root.nominal_kv, BusKind::Distribution});
            Branch hb;
            hb.id = sub + ".HB" + std::to_string(k) + suffix;
            hb.kind = BranchKind::Switch;
            hb.from = upstream;
            hb.to = down;
            hb.phases = root.phases;
            out.branches.push_back(std::move(hb));
            upstream = down;
        }
        out.buses.push_back({boundary, root.phases, root.nominal_kv, BusKind::Boundary});
        add_feeder(out, feeder, "F" + tag + ".", scale, "S" + tag, boundary);
    }
    out.substations.push_back({sub, m.bus, t.variant, m.feeders, scale, false});
}

// Connected components over every branch, switch state ignored.
class Islands {
public:
    explicit Islands(const Network& net) : parent_(net.buses.size()) {
        std::iota(parent_.begin(), parent_.end(), 0);
        for (std::size_t i = 0; i < net.buses.size(); ++i) index_.emplace(net.buses[i].id, i);
        for (const Branch& br : net.branches) join(index_.at(br.from), index_.at(br.to));
    }
    std::size_t of(const std::string& bus) { return find(index_.at(bus)); }

private:
    std::size_t find(std::size_t x) {
        while (parent_[x] != x) x = parent_[x] = parent_[parent_[x]];
        return x;
    }
    void join(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }
    std::vector<std::size_t> parent_;
    std::map<std::string, std::size_t> index_;
};

// Copies the elements whose buses satisfy `keep`.
template <class Keep>
Network subset(const Network& net, Keep keep) {
    Network out;
    out.name = net.name;
    out.notes = net.notes;
    out.frequency_hz = net.frequency_hz;
    out.mva_base = net.mva_base;
    for (const Bus& b : net.buses) {
        if (keep(b.id)) out.buses.push_back(b);
    }
    for (const Branch& br : net.branches) {
        if (keep(br.from) && keep(br.to)) out.branches.push_back(br);
    }
    auto copy = [&](auto& dst, const auto& src) {
        for (const auto& e : src) {
            if (keep(e.bus)) dst.push_back(e);
        }
    };
    copy(out.loads, net.loads);
    copy(out.shunts, net.shunts);
    copy(out.dgs, net.dgs);
    copy(out.generators, net.generators);
    copy(out.machines, net.machines);
    copy(out.sources, net.sources);
    copy(out.substations, net.substations);
    return out;
}

}  // namespace

SubstationTemplate parse_substation_template(std::string_view text) {
    SubstationTemplate t;
    t.network = parse_network(text);
    const nlohmann::json root = nlohmann::json::parse(text.begin(), text.end());
    if (!root.contains("template") || !root.at("template").is_object()) {
        throw Error(ErrorCode::TemplateInvalid, "substation template needs a 'template' object");
    }
    try {
        const nlohmann::json& j = root.at("template");
        t.variant = j.value("variant", std::string("standard"));
        t.hv_bus = j.at("hv_bus").get<std::string>();
        t.feeder_buses = j.at("feeder_buses").get<std::vector<std::string>>();
        t.load_share = j.value("load_share", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::TemplateInvalid, std::string("substation template: ") + e.what());
    }
    check_substation_template(t);
    return t;
}

std::vector<HybridMapping> default_hybrid_mapping() {
    std::vector<HybridMapping> m;
    for (const char* bus : {"3", "4", "7", "8", "12", "15", "16", "18", "21", "23", "25", "27"}) {
        m.push_back({bus, 8});
    }
    return m;
}

Network build_hybrid(const Network& transmission, const Network& feeder_template,
                     const SubstationTemplate& substation, const std::vector<HybridMapping>& mapping,
                     const HybridOptions& options) {
    Network out = transmission;
    out.reindex();
    if (mapping.empty()) return out;

    check_feeder_template(feeder_template);
    check_substation_template(substation);
    if (options.detailed) check_substation_template(*options.detailed);
    if (options.breakers_per_feeder_head < 1) {
        throw Error(ErrorCode::TemplateInvalid, "breakers_per_feeder_head must be at least 1");
    }
    Network feeder = feeder_template;
    feeder.reindex();
    if (total_power(feeder.loads).real() <= 0) {
        throw Error(ErrorCode::TemplateInvalid, "feeder template carries no load", feeder.name);
    }

    std::set<std::string> seen;
    for (const HybridMapping& m : mapping) {
        auto bus = out.bus_index(m.bus);
        if (!bus) throw Error(ErrorCode::ReferenceError, "mapped bus '" + m.bus + "' not found", m.bus);
        if (!seen.insert(m.bus).second) {
            throw Error(ErrorCode::DuplicateId, "bus '" + m.bus + "' mapped twice", m.bus);
        }
        if (m.feeders < 1) throw Error(ErrorCode::TemplateInvalid, "feeder count must be positive", m.bus);
        const bool has_load = std::any_of(out.loads.begin(), out.loads.end(),
                                          [&](const Load& l) { return l.bus == m.bus; });
        if (!has_load) throw Error(ErrorCode::NoLumpedLoad, "bus '" + m.bus + "' carries no load", m.bus);
        const bool detailed = options.detailed && m.bus == options.detailed_bus;
        const Bus hv = out.buses[*bus];
        add_substation(out, feeder, detailed ? *options.detailed : substation, m, hv, options);
    }
    out.notes = transmission.notes.empty() ? "hybrid model" : transmission.notes + " Hybrid model.";
    out.reindex();
    return options.unified ? join_boundaries(out) : out;
}

Network join_boundaries(const Network& boundary_model) {
    Network out = boundary_model;
    std::map<std::string, std::string> redirect;  // boundary bus -> source bus
    std::vector<Source> kept;
    for (const Source& s : out.sources) {
        if (s.paired_bus.empty()) {
            kept.push_back(s);
        } else {
            redirect[s.paired_bus] = s.bus;
        }
    }
    if (redirect.empty()) return out;
    out.sources = std::move(kept);
    for (Branch& br : out.branches) {
        if (auto it = redirect.find(br.from); it != redirect.end()) br.from = it->second;
        if (auto it = redirect.find(br.to); it != redirect.end()) br.to = it->second;
    }
    std::erase_if(out.buses, [&](const Bus& b) { return redirect.count(b.id) > 0; });
    for (Substation& sub : out.substations) {
        const std::string prefix = "S" + sub.bus + "_";
        const bool pending = std::any_of(out.sources.begin(), out.sources.end(),
                                         [&](const Source& s) { return s.id.rfind(prefix, 0) == 0; });
        if (!pending) sub.joined = true;
    }
    out.reindex();
    return out;
}

BoundarySplit split_boundary_model(const Network& net) {
    const bool paired = std::any_of(net.sources.begin(), net.sources.end(),
                                    [](const Source& s) { return !s.paired_bus.empty(); });
    if (!paired) {
        throw Error(ErrorCode::NotBoundaryModel, "model has no boundary-paired sources", net.name);
    }
    Islands islands(net);
    std::map<std::size_t, std::size_t> circuit_of_island;
    BoundarySplit split;
    for (const Source& s : net.sources) {
        if (s.paired_bus.empty()) continue;
        const std::size_t island = islands.of(s.bus);
        if (circuit_of_island.count(island)) {
            throw Error(ErrorCode::InvalidModel, "two paired sources feed one circuit", s.id);
        }
        if (islands.of(s.paired_bus) == island) {
            throw Error(ErrorCode::InvalidModel, "source is physically tied to its boundary bus", s.id);
        }
        circuit_of_island[island] = split.circuits.size();
        split.circuits.push_back({s.id, s.paired_bus, {}});
    }
    std::map<std::string, long> bus_circuit;
    for (const Bus& b : net.buses) {
        auto it = circuit_of_island.find(islands.of(b.id));
        bus_circuit[b.id] = it == circuit_of_island.end() ? -1 : static_cast<long>(it->second);
    }
    for (std::size_t c = 0; c < split.circuits.size(); ++c) {
        Network part = subset(net, [&](const std::string& bus) { return bus_circuit.at(bus) == static_cast<long>(c); });
        std::erase_if(part.sources, [&](const Source& s) { return s.id != split.circuits[c].source_id; });
        for (Source& s : part.sources) s.paired_bus.clear();
        part.name = split.circuits[c].source_id;
        part.notes = "circuit extracted at source " + split.circuits[c].source_id;
        part.substations.clear();
        part.reindex();
        split.circuits[c].network = std::move(part);
    }
    split.transmission = subset(net, [&](const std::string& bus) { return bus_circuit.at(bus) < 0; });
    std::erase_if(split.transmission.sources, [](const Source& s) { return !s.paired_bus.empty(); });
    split.transmission.reindex();
    return split;
}

Network extract_circuit(const Network& net, const std::string& source_id) {
    const bool paired = std::any_of(net.sources.begin(), net.sources.end(),
                                    [](const Source& s) { return !s.paired_bus.empty(); });
    if (!paired) {
        throw Error(ErrorCode::NotBoundaryModel, "model has no boundary-paired sources", net.name);
    }
    auto it = std::find_if(net.sources.begin(), net.sources.end(),
                           [&](const Source& s) { return s.id == source_id && !s.paired_bus.empty(); });
    if (it == net.sources.end()) {
        throw Error(ErrorCode::UnknownSource, "no boundary source '" + source_id + "'", source_id);
    }
    Islands islands(net);
    const std::size_t island = islands.of(it->bus);
    Network part = subset(net, [&](const std::string& bus) { return islands.of(bus) == island; });
    std::erase_if(part.sources, [&](const Source& s) { return s.id != source_id; });
    part.sources.front().paired_bus.clear();
    part.substations.clear();
    part.name = source_id;
    part.notes = "circuit extracted at source " + source_id;
    part.reindex();
    return part;
}

}  // namespace tdsim::netmodel
