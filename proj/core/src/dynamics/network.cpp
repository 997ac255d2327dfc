#include "tdsim/dynamics/network.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "tdsim/error.hpp"
#include "tdsim/powerflow/injection.hpp"

namespace tdsim::dynamics {

using powerflow::kNoNode;

namespace {

struct Stamp {
    std::size_t row;
    std::size_t col;
    Phasor y;
};

}  // namespace

struct DynamicNetwork::Factor {
    std::vector<std::size_t> var;  // master node -> unknown, kNoNode when fixed or dead
    std::size_t unknowns = 0;
    std::vector<Phasor> fixed_voltage;  // by node, masters held by sources
    std::vector<Phasor> rhs_fixed;
    std::unique_ptr<numerics::SparseLu<Phasor>> lu;
};

DynamicNetwork::DynamicNetwork(const netmodel::Network& net, const PowerFlowSolution& pf, std::vector<Phasor> norton)
    : net_(std::make_unique<netmodel::Network>(net)), norton_(std::move(norton)) {
    net_->reindex();
    if (norton_.size() != net_->generators.size()) {
        throw Error(ErrorCode::InvalidModel, "one Norton admittance per generator expected", net_->name);
    }
    std::unordered_map<std::string, std::size_t> solved;
    for (std::size_t i = 0; i < pf.bus_ids.size(); ++i) solved.emplace(pf.bus_ids[i], i);
    pf_voltage_.assign(net_->buses.size(), PhaseTriple{});
    for (std::size_t b = 0; b < net_->buses.size(); ++b) {
        auto it = solved.find(net_->buses[b].id);
        if (it != solved.end()) pf_voltage_[b] = pf.voltage[it->second];
    }
    taps_ = pf.regulator_taps;
    recompile();
}

DynamicNetwork::DynamicNetwork(const DynamicNetwork& o)
    : net_(std::make_unique<netmodel::Network>(*o.net_)),
      pf_voltage_(o.pf_voltage_),
      norton_(o.norton_),
      taps_(o.taps_),
      opened_(o.opened_),
      faults_(o.faults_) {
    net_->reindex();
    recompile();
}

DynamicNetwork& DynamicNetwork::operator=(const DynamicNetwork& o) {
    if (this != &o) *this = DynamicNetwork(o);
    return *this;
}

DynamicNetwork::DynamicNetwork(DynamicNetwork&&) noexcept = default;
DynamicNetwork& DynamicNetwork::operator=(DynamicNetwork&&) noexcept = default;
DynamicNetwork::~DynamicNetwork() = default;

void DynamicNetwork::recompile() {
    powerflow::CompileOptions co;
    co.regulator_taps = taps_;
    co.open_branches.assign(opened_.begin(), opened_.end());
    compiled_ = std::make_unique<CompiledNetwork>(CompiledNetwork::compile(*net_, co));
    refactor();
}

double DynamicNetwork::admittance_base_siemens(std::size_t bus) const {
    const double kv = compiled_->base_kv_ln(bus);
    return compiled_->base_mva_phase() / (kv * kv);
}

std::size_t DynamicNetwork::energized_nodes() const {
    std::size_t count = 0;
    for (std::size_t nd = 0; nd < compiled_->node_count(); ++nd) count += compiled_->energized(nd) ? 1 : 0;
    return count;
}

bool DynamicNetwork::fault_active(const std::string& bus) const {
    return std::any_of(faults_.begin(), faults_.end(), [&](const Event& e) { return e.target == bus; });
}

bool DynamicNetwork::branch_open(const std::string& branch) const {
    if (opened_.count(branch)) return true;
    const auto k = net_->branch_index(branch);
    return k && !net_->branches[*k].closed;
}

namespace {

std::vector<Stamp> element_stamps(const CompiledNetwork& c, const std::vector<PhaseTriple>& pf_voltage,
                                  const std::vector<Phasor>& norton, const std::vector<Event>& faults,
                                  const std::vector<double>& fault_base) {
    std::vector<Stamp> out;
    auto v_of = [&](std::size_t nd) { return pf_voltage[c.nodes()[nd].bus][c.nodes()[nd].phase]; };
    for (const auto& e : c.loads()) {
        const bool delta = e.node_b != kNoNode;
        const Phasor ve = delta ? v_of(e.node_a) - v_of(e.node_b) : v_of(e.node_a);
        if (ve == Phasor{}) continue;
        const Phasor y = powerflow::load_current(e.s, e.model, e.v_rated, ve).i / ve;
        out.push_back({e.node_a, e.node_a, y});
        if (delta) {
            out.push_back({e.node_b, e.node_b, y});
            out.push_back({e.node_a, e.node_b, -y});
            out.push_back({e.node_b, e.node_a, -y});
        }
    }
    for (const auto& d : c.dgs()) {
        const Phasor v = v_of(d.node);
        if (std::abs(v) < powerflow::kDgCutoutPu) continue;
        out.push_back({d.node, d.node, -std::conj(d.s) / std::norm(v)});
    }
    for (const auto& g : c.generators()) {
        for (std::size_t nd : g.nodes) out.push_back({nd, nd, norton[g.generator]});
    }
    for (std::size_t f = 0; f < faults.size(); ++f) {
        const Event& e = faults[f];
        const std::size_t bus = *c.network().bus_index(e.target);
        const Phasor y = 1.0 / e.resistance_ohm / fault_base[f];
        const auto ph = e.phases.list();
        std::vector<std::size_t> nodes;
        for (int p : ph) {
            const std::size_t nd = c.node(bus, p);
            if (nd != kNoNode && c.energized(nd)) nodes.push_back(nd);
        }
        if (e.to_ground) {
            for (std::size_t nd : nodes) out.push_back({nd, nd, y});
        } else {
            for (std::size_t a = 0; a < nodes.size(); ++a) {
                for (std::size_t b = a + 1; b < nodes.size(); ++b) {
                    out.push_back({nodes[a], nodes[a], y});
                    out.push_back({nodes[b], nodes[b], y});
                    out.push_back({nodes[a], nodes[b], -y});
                    out.push_back({nodes[b], nodes[a], -y});
                }
            }
        }
    }
    return out;
}

}  // namespace

numerics::SparseComplexMatrix DynamicNetwork::admittance() const {
    const CompiledNetwork& c = *compiled_;
    const std::size_t n = c.node_count();
    numerics::SparseComplexMatrix m(n);
    const auto& y = c.y();
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t p = y.col_starts()[j]; p < y.col_starts()[j + 1]; ++p) m.add(y.row_index()[p], j, y.values()[p]);
    }
    std::vector<double> base;
    for (const Event& e : faults_) base.push_back(admittance_base_siemens(*net_->bus_index(e.target)));
    for (const Stamp& s : element_stamps(c, pf_voltage_, norton_, faults_, base)) m.add(s.row, s.col, s.y);
    m.compress();
    return m;
}

void DynamicNetwork::refactor() {
    const CompiledNetwork& c = *compiled_;
    const std::size_t n = c.node_count();
    auto f = std::make_unique<Factor>();
    f->var.assign(n, kNoNode);
    for (std::size_t nd = 0; nd < n; ++nd) {
        if (c.energized(nd) && c.master(nd) == nd && !c.fixed(nd)) f->var[nd] = f->unknowns++;
    }
    f->fixed_voltage.assign(n, Phasor{});
    for (const auto& s : c.sources()) {
        for (std::size_t a = 0; a < s.nodes.size(); ++a) f->fixed_voltage[s.nodes[a]] = s.voltage[a];
    }
    auto node_voltage_fixed = [&](std::size_t nd) { return c.factor(nd) * f->fixed_voltage[c.master(nd)]; };

    const numerics::SparseComplexMatrix full = admittance();
    numerics::SparseComplexMatrix reduced(f->unknowns);
    f->rhs_fixed.assign(f->unknowns, Phasor{});
    for (std::size_t j = 0; j < n; ++j) {
        if (!c.energized(j)) continue;
        const std::size_t kj = f->var[c.master(j)];
        for (std::size_t p = full.col_starts()[j]; p < full.col_starts()[j + 1]; ++p) {
            const std::size_t i = full.row_index()[p];
            if (!c.energized(i)) continue;
            const std::size_t ki = f->var[c.master(i)];
            if (ki == kNoNode) continue;
            const Phasor y = full.values()[p];
            if (kj != kNoNode) {
                reduced.add(ki, kj, c.factor(i) * c.factor(j) * y);
            } else {
                f->rhs_fixed[ki] -= c.factor(i) * y * node_voltage_fixed(j);
            }
        }
    }
    reduced.compress();
    if (f->unknowns > 0) f->lu = std::make_unique<numerics::SparseLu<Phasor>>(reduced);
    factor_ = std::move(f);
}

void DynamicNetwork::apply(const Event& e) {
    switch (e.kind) {
    case EventKind::ApplyShuntFault: {
        const auto bus = net_->bus_index(e.target);
        if (!bus) throw Error(ErrorCode::UnknownTarget, "fault on unknown bus '" + e.target + "'", e.target);
        if (!e.phases.subset_of(net_->buses[*bus].phases) || e.phases.empty()) {
            throw Error(ErrorCode::UnknownTarget, "fault phases " + e.phases.str() + " not present at bus '" + e.target + "'",
                        e.target);
        }
        if (fault_active(e.target)) {
            throw Error(ErrorCode::InvalidTransition, "fault already applied at bus '" + e.target + "'", e.target);
        }
        if (!(e.resistance_ohm > 0.0)) {
            throw Error(ErrorCode::InvalidTransition, "fault resistance must be positive", e.target);
        }
        faults_.push_back(e);
        refactor();
        return;
    }
    case EventKind::ClearShuntFault: {
        if (!net_->bus_index(e.target)) {
            throw Error(ErrorCode::UnknownTarget, "clear on unknown bus '" + e.target + "'", e.target);
        }
        auto it = std::find_if(faults_.begin(), faults_.end(), [&](const Event& f) { return f.target == e.target; });
        if (it == faults_.end()) {
            throw Error(ErrorCode::InvalidTransition, "no fault applied at bus '" + e.target + "'", e.target);
        }
        faults_.erase(it);
        refactor();
        return;
    }
    case EventKind::OpenBranch:
    case EventKind::CloseBranch: {
        const auto k = net_->branch_index(e.target);
        if (!k) throw Error(ErrorCode::UnknownTarget, "unknown branch '" + e.target + "'", e.target);
        const bool open = branch_open(e.target);
        if ((e.kind == EventKind::OpenBranch) == open) {
            throw Error(ErrorCode::InvalidTransition,
                        "branch '" + e.target + "' is already " + (open ? "open" : "closed"), e.target);
        }
        if (e.kind == EventKind::OpenBranch) {
            opened_.insert(e.target);
        } else if (opened_.count(e.target)) {
            opened_.erase(e.target);
        } else {
            net_->branches[*k].closed = true;
        }
        recompile();
        return;
    }
    }
}

std::vector<Phasor> DynamicNetwork::solve(const std::vector<Phasor>& emf) const {
    const CompiledNetwork& c = *compiled_;
    const Factor& f = *factor_;
    std::vector<Phasor> rhs = f.rhs_fixed;
    for (const auto& g : c.generators()) {
        const PhaseTriple e = numerics::balanced(emf[g.generator]);
        for (int p = 0; p < 3; ++p) {
            const std::size_t nd = g.nodes[p];
            const std::size_t k = f.var[c.master(nd)];
            if (k != kNoNode) rhs[k] += c.factor(nd) * norton_[g.generator] * e[p];
        }
    }
    const std::vector<Phasor> x = f.lu ? f.lu->solve(rhs) : std::vector<Phasor>{};
    std::vector<Phasor> v(c.node_count());
    for (std::size_t nd = 0; nd < c.node_count(); ++nd) {
        if (!c.energized(nd)) continue;
        const std::size_t m = c.master(nd);
        v[nd] = c.factor(nd) * (f.var[m] != kNoNode ? x[f.var[m]] : f.fixed_voltage[m]);
    }
    return v;
}

}  // namespace tdsim::dynamics
