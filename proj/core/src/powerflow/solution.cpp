#include "tdsim/powerflow/solution.hpp"

#include <algorithm>
#include <cmath>

#include "tdsim/powerflow/injection.hpp"

namespace tdsim::powerflow {

namespace {

// Current each node needs from constraints and sources: (Y v)_n - inj_n.
std::vector<Phasor> node_demand(const CompiledNetwork& net, const std::vector<Phasor>& v,
                                const std::vector<Phasor>& emf) {
    const std::size_t n = net.node_count();
    std::vector<Phasor> inj(n);
    add_element_injections(net, v, inj);
    for (std::size_t g = 0; g < net.generators().size() && g < emf.size(); ++g) {
        const GeneratorElement& ge = net.generators()[g];
        const PhaseTriple e = numerics::balanced(emf[g]);
        for (int p = 0; p < 3; ++p) inj[ge.nodes[p]] += ge.y_internal * (e[p] - v[ge.nodes[p]]);
    }
    std::vector<Phasor> need = net.y().multiply(v);
    for (std::size_t i = 0; i < n; ++i) need[i] -= inj[i];
    return need;
}

}  // namespace

std::optional<std::size_t> PowerFlowSolution::bus(const std::string& id) const {
    auto it = lookup_.find(id);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

PhaseTriple PowerFlowSolution::voltage_at(const std::string& id) const {
    auto b = bus(id);
    return b ? voltage[*b] : PhaseTriple{};
}

void PowerFlowSolution::reindex() {
    lookup_.clear();
    for (std::size_t i = 0; i < bus_ids.size(); ++i) lookup_.emplace(bus_ids[i], i);
}

PowerFlowSolution make_solution(const CompiledNetwork& net, const std::vector<Phasor>& v,
                                const std::vector<Phasor>& emf) {
    const Network& model = net.network();
    PowerFlowSolution sol;
    const std::size_t nb = model.buses.size();
    sol.bus_ids.reserve(nb);
    sol.voltage.assign(nb, PhaseTriple{});
    sol.mismatch.assign(nb, PhaseTriple{});
    for (const auto& b : model.buses) {
        sol.bus_ids.push_back(b.id);
        sol.bus_phases.push_back(b.phases);
    }
    for (std::size_t nd = 0; nd < net.node_count(); ++nd) {
        if (net.energized(nd)) sol.voltage[net.nodes()[nd].bus][net.nodes()[nd].phase] = v[nd];
    }

    const std::size_t nbr = model.branches.size();
    sol.current_from.assign(nbr, PhaseTriple{});
    sol.current_to.assign(nbr, PhaseTriple{});
    for (const auto& br : model.branches) sol.branch_ids.push_back(br.id);
    for (const BranchBlocks& blk : net.blocks()) {
        const std::size_t k = blk.from_nodes.size();
        const std::size_t fb = net.nodes()[blk.from_nodes[0]].bus, tb = net.nodes()[blk.to_nodes[0]].bus;
        for (std::size_t a = 0; a < k; ++a) {
            Phasor i_f{}, i_t{};
            for (std::size_t b = 0; b < k; ++b) {
                i_f += blk.yff(a, b) * v[blk.from_nodes[b]] + blk.yft(a, b) * v[blk.to_nodes[b]];
                i_t -= blk.ytf(a, b) * v[blk.from_nodes[b]] + blk.ytt(a, b) * v[blk.to_nodes[b]];
            }
            sol.current_from[blk.branch][net.nodes()[blk.from_nodes[a]].phase] = i_f * net.base_current_a(fb);
            sol.current_to[blk.branch][net.nodes()[blk.to_nodes[a]].phase] = i_t * net.base_current_a(tb);
        }
    }

    // Constraint currents by accumulating demands from the leaves up.
    std::vector<Phasor> need = node_demand(net, v, emf);
    const auto& order = net.constraint_order();
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const std::size_t child = *it;
        const Constraint& con = net.constraints()[net.parent_constraint(child)];
        const bool child_is_to = child == con.to_node;
        const std::size_t parent = child_is_to ? con.from_node : con.to_node;
        // V_to = r V_from and I_from = r I_to (entering at from, leaving at to).
        Phasor i_from, i_to;
        if (child_is_to) {
            i_to = need[child];
            i_from = con.ratio * i_to;
            need[parent] += i_from;
        } else {
            i_from = -need[child];
            i_to = i_from / con.ratio;
            need[parent] -= i_to;
        }
        const std::size_t fb = net.nodes()[con.from_node].bus, tb = net.nodes()[con.to_node].bus;
        sol.current_from[con.branch][net.nodes()[con.from_node].phase] = i_from * net.base_current_a(fb);
        sol.current_to[con.branch][net.nodes()[con.to_node].phase] = i_to * net.base_current_a(tb);
    }

    const double kva = net.base_mva_phase() * 1000.0;
    std::vector<char> holds_source(net.node_count(), 0);
    for (const SourceElement& s : net.sources()) {
        PhaseTriple p{};
        for (std::size_t nd : s.nodes) {
            holds_source[nd] = 1;
            p[net.nodes()[nd].phase] = v[nd] * std::conj(need[nd]) * kva;
        }
        sol.source_power.emplace_back(model.sources[s.source].id, p);
    }
    double worst = 0.0;
    for (std::size_t nd = 0; nd < net.node_count(); ++nd) {
        if (!net.energized(nd) || net.master(nd) != nd || holds_source[nd]) continue;
        const Phasor s = -v[nd] * std::conj(need[nd]);
        worst = std::max(worst, std::abs(s));
        sol.mismatch[net.nodes()[nd].bus][net.nodes()[nd].phase] = s * kva;
    }
    sol.max_mismatch = worst;
    sol.demand.assign(nb, PhaseTriple{});
    {
        std::vector<Phasor> inj(net.node_count());
        add_element_injections(net, v, inj);
        for (std::size_t nd = 0; nd < net.node_count(); ++nd) {
            if (!net.energized(nd)) continue;
            sol.demand[net.nodes()[nd].bus][net.nodes()[nd].phase] = -v[nd] * std::conj(inj[nd]) * kva;
        }
    }
    for (std::size_t g = 0; g < net.generators().size(); ++g) {
        const GeneratorElement& ge = net.generators()[g];
        GeneratorResult r{model.generators[ge.generator].id, g < emf.size() ? emf[g] : Phasor{}, {}};
        const PhaseTriple e = numerics::balanced(r.emf);
        for (int p = 0; p < 3; ++p) {
            const Phasor vp = v[ge.nodes[p]];
            r.power[p] = vp * std::conj(ge.y_internal * (e[p] - vp)) * kva;
        }
        sol.generators.push_back(std::move(r));
    }
    for (std::size_t i = 0; i < nbr; ++i) {
        if (model.branches[i].kind == netmodel::BranchKind::Regulator) {
            sol.regulator_taps[model.branches[i].id] = net.regulator_taps()[i];
        }
    }
    sol.reindex();
    return sol;
}

std::vector<PhaseTriple> mismatch(const Network& net, const std::vector<PhaseTriple>& voltages) {
    const CompiledNetwork c = CompiledNetwork::compile(net);
    std::vector<Phasor> v(c.node_count());
    for (std::size_t nd = 0; nd < c.node_count(); ++nd) {
        if (c.energized(nd)) v[nd] = voltages.at(c.nodes()[nd].bus)[c.nodes()[nd].phase];
    }
    std::vector<Phasor> need = node_demand(c, v, {});
    for (auto it = c.constraint_order().rbegin(); it != c.constraint_order().rend(); ++it) {
        const Constraint& con = c.constraints()[c.parent_constraint(*it)];
        if (*it == con.to_node) {
            need[con.from_node] += con.ratio * need[*it];
        } else {
            need[con.to_node] += need[*it] / con.ratio;
        }
    }
    std::vector<char> skip(c.node_count(), 0);
    for (const auto& s : c.sources()) {
        for (std::size_t nd : s.nodes) skip[nd] = 1;
    }
    for (const auto& g : c.generators()) {
        for (std::size_t nd : g.nodes) skip[c.master(nd)] = 1;
    }
    std::vector<PhaseTriple> out(net.buses.size(), PhaseTriple{});
    const double kva = c.base_mva_phase() * 1000.0;
    for (std::size_t nd = 0; nd < c.node_count(); ++nd) {
        if (!c.energized(nd) || c.master(nd) != nd || skip[nd]) continue;
        out[c.nodes()[nd].bus][c.nodes()[nd].phase] = -v[nd] * std::conj(need[nd]) * kva;
    }
    return out;
}

PowerBalance power_balance(const Network& net, const PowerFlowSolution& sol) {
    PowerBalance pb;
    for (const auto& [id, s] : sol.source_power) {
        for (int p = 0; p < 3; ++p) pb.generation[p] += s[p];
    }
    for (const auto& g : sol.generators) {
        for (int p = 0; p < 3; ++p) pb.generation[p] += g.power[p];
    }
    const CompiledNetwork c = CompiledNetwork::compile(net);
    const double kva = c.base_mva_phase() * 1000.0;
    auto volt = [&](std::size_t nd) { return sol.voltage[c.nodes()[nd].bus][c.nodes()[nd].phase]; };
    for (const LoadElement& e : c.loads()) {
        const bool delta = e.node_b != kNoNode;
        const Phasor ve = delta ? volt(e.node_a) - volt(e.node_b) : volt(e.node_a);
        const Phasor i = load_current(e.s, e.model, e.v_rated, ve).i;
        pb.load[c.nodes()[e.node_a].phase] += volt(e.node_a) * std::conj(i) * kva;
        if (delta) pb.load[c.nodes()[e.node_b].phase] -= volt(e.node_b) * std::conj(i) * kva;
    }
    for (const DgElement& d : c.dgs()) {
        const Phasor vd = volt(d.node);
        if (std::abs(vd) >= kDgCutoutPu) pb.load[c.nodes()[d.node].phase] -= d.s * kva;
    }
    for (const auto& sh : net.shunts) {
        const std::size_t b = *sol.bus(sh.bus);
        const auto ph = sh.phases.list();
        const double vn = sh.kv / c.base_kv_ln(b);
        for (std::size_t a = 0; a < ph.size(); ++a) {
            const Phasor vp = sol.voltage[b][ph[a]];
            pb.load[ph[a]] += Phasor(0.0, -sh.kvar[a]) * std::norm(vp) / (vn * vn);
        }
    }
    std::unordered_map<std::string, std::size_t> bus_of;
    for (std::size_t i = 0; i < net.buses.size(); ++i) bus_of.emplace(net.buses[i].id, i);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        const std::size_t f = bus_of.at(br.from), t = bus_of.at(br.to);
        for (int p : br.phases.list()) {
            const Phasor sf = sol.voltage[f][p] * c.base_kv_ln(f) * std::conj(sol.current_from[i][p]);
            const Phasor st = sol.voltage[t][p] * c.base_kv_ln(t) * std::conj(sol.current_to[i][p]);
            pb.losses[p] += sf - st;
        }
    }
    return pb;
}

}  // namespace tdsim::powerflow

namespace tdsim::powerflow {

bool regulator_control_step(const Network& net, const PowerFlowSolution& sol,
                            std::map<std::string, std::vector<int>>& taps) {
    bool changed = false;
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        const auto& br = net.branches[i];
        if (br.kind != netmodel::BranchKind::Regulator) continue;
        const auto& reg = *br.regulator;
        auto to = sol.bus(br.to);
        if (!to) continue;
        const double kv_ln = net.buses[*to].nominal_kv / 1.7320508075688772;
        std::vector<int>& t = taps.try_emplace(br.id, reg.taps).first->second;
        const auto ph = br.phases.list();
        const double center = reg.band_center_pu * 120.0;
        const double half = reg.bandwidth_pu * 120.0 / 2.0;
        const double step = reg.step_pu * 120.0;
        for (std::size_t a = 0; a < ph.size(); ++a) {
            if (reg.ganged && a > 0) {
                if (t[a] != t[0]) {
                    t[a] = t[0];
                    changed = true;
                }
                continue;
            }
            const Phasor v = sol.voltage[*to][ph[a]] * kv_ln * 1000.0 / reg.pt_ratio;
            const Phasor drop = Phasor(reg.r_comp_v[a], reg.x_comp_v[a]) * sol.current_to[i][ph[a]] / reg.ct_primary_a;
            const double relay = std::abs(v - drop);
            if (std::abs(v) == 0.0 || std::abs(relay - center) <= half) continue;
            const int move = static_cast<int>(std::lround((center - relay) / step));
            const int next = std::clamp(t[a] + move, reg.tap_min, reg.tap_max);
            if (next != t[a]) {
                t[a] = next;
                changed = true;
            }
        }
    }
    return changed;
}

}  // namespace tdsim::powerflow
