#include "tdsim/powerflow/compiled.hpp"

#include <cmath>
#include <deque>
#include <set>

#include "tdsim/error.hpp"

namespace tdsim::powerflow {

using netmodel::Branch;
using netmodel::BranchKind;
using netmodel::Winding;

namespace {

constexpr double kSqrt3 = 1.7320508075688772;
constexpr double kFloatingGround = 1e-6;

PhaseMatrix multiply(const PhaseMatrix& a, const PhaseMatrix& b) {
    const std::size_t n = a.size();
    PhaseMatrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            const Phasor aik = a(i, k);
            if (aik == Phasor{}) continue;
            for (std::size_t j = 0; j < n; ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

std::vector<Phasor> times(const PhaseMatrix& a, const std::vector<Phasor>& x) {
    std::vector<Phasor> y(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = 0; j < a.size(); ++j) y[i] += a(i, j) * x[j];
    }
    return y;
}

PhaseMatrix scaled(PhaseMatrix m, Phasor s) {
    for (Phasor& z : m.data()) z *= s;
    return m;
}

// Rectangular dense matrix used for the winding incidence product.
struct Dense {
    std::size_t rows, cols;
    std::vector<Phasor> v;
    Dense(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c) {}
    Phasor& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    Phasor operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }
};

}  // namespace

PhaseMatrix invert(const PhaseMatrix& m) {
    const std::size_t n = m.size();
    PhaseMatrix a = m;
    PhaseMatrix inv(n);
    for (std::size_t i = 0; i < n; ++i) inv(i, i) = 1.0;
    double scale = 0.0;
    for (const Phasor& z : m.data()) scale = std::max(scale, std::abs(z));
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::abs(a(r, c)) > std::abs(a(piv, c))) piv = r;
        }
        if (std::abs(a(piv, c)) <= numerics::kPivotThreshold * std::max(scale, 1e-300)) {
            throw Error(ErrorCode::SingularMatrix, "singular phase block");
        }
        for (std::size_t j = 0; j < n; ++j) {
            std::swap(a(c, j), a(piv, j));
            std::swap(inv(c, j), inv(piv, j));
        }
        const Phasor d = a(c, c);
        for (std::size_t j = 0; j < n; ++j) {
            a(c, j) /= d;
            inv(c, j) /= d;
        }
        for (std::size_t r = 0; r < n; ++r) {
            if (r == c || a(r, c) == Phasor{}) continue;
            const Phasor f = a(r, c);
            for (std::size_t j = 0; j < n; ++j) {
                a(r, j) -= f * a(c, j);
                inv(r, j) -= f * inv(c, j);
            }
        }
    }
    return inv;
}

PhaseMatrix transformer_admittance(const netmodel::TransformerData& t, std::size_t k) {
    const bool three = k == 3;
    auto winding_kv = [&](Winding w, double kv) { return w == Winding::Delta || !three ? kv : kv / kSqrt3; };
    const double v1 = winding_kv(t.conn_from, t.kv_from);
    const double v2 = winding_kv(t.conn_to, t.kv_to);
    const double unit_mva = t.kva / 1000.0 / static_cast<double>(k);
    const Phasor z = Phasor(t.r_pct, t.x_pct) / 100.0 * (v2 * v2 / unit_mva);
    const Phasor y = 1.0 / z;

    // Terminals: from phases, to phases, then a neutral per ungrounded wye side.
    const bool n1 = three && t.conn_from == Winding::Wye;
    const bool n2 = three && t.conn_to == Winding::Wye;
    const std::size_t terms = 2 * k + (n1 ? 1 : 0) + (n2 ? 1 : 0);
    const std::size_t neutral1 = 2 * k;
    const std::size_t neutral2 = 2 * k + (n1 ? 1 : 0);

    // Winding voltages = C * terminal voltages.
    Dense c(2 * k, terms);
    auto incidence = [&](std::size_t row, std::size_t offset, Winding w, std::size_t p, bool has_n, std::size_t n) {
        c(row, offset + p) = 1.0;
        if (!three) return;
        if (w == Winding::Delta) c(row, offset + (p + 2) % 3) = -1.0;
        if (w == Winding::Wye && has_n) c(row, n) = -1.0;
    };
    Dense yw(2 * k, 2 * k);
    for (std::size_t p = 0; p < k; ++p) {
        const double tap = p < t.taps.size() ? t.taps[p] : 1.0;
        const double n = v1 * tap / v2;
        yw(p, p) = y / (n * n);
        yw(p, k + p) = -y / n;
        yw(k + p, p) = -y / n;
        yw(k + p, k + p) = y;
        incidence(p, 0, t.conn_from, p, n1, neutral1);
        incidence(k + p, k, t.conn_to, p, n2, neutral2);
    }
    Dense yt(terms, terms);
    for (std::size_t a = 0; a < 2 * k; ++a) {
        for (std::size_t b = 0; b < 2 * k; ++b) {
            const Phasor w = yw(a, b);
            if (w == Phasor{}) continue;
            for (std::size_t i = 0; i < terms; ++i) {
                if (c(a, i) == Phasor{}) continue;
                for (std::size_t j = 0; j < terms; ++j) yt(i, j) += c(a, i) * w * c(b, j);
            }
        }
    }
    // Kron reduction of floating neutrals.
    const std::size_t nn = terms - 2 * k;
    PhaseMatrix out(2 * k);
    if (nn == 0) {
        for (std::size_t i = 0; i < 2 * k; ++i) {
            for (std::size_t j = 0; j < 2 * k; ++j) out(i, j) = yt(i, j);
        }
        return out;
    }
    PhaseMatrix ynn(nn);
    for (std::size_t i = 0; i < nn; ++i) {
        for (std::size_t j = 0; j < nn; ++j) ynn(i, j) = yt(2 * k + i, 2 * k + j);
    }
    const PhaseMatrix inv = invert(ynn);
    for (std::size_t i = 0; i < 2 * k; ++i) {
        for (std::size_t j = 0; j < 2 * k; ++j) {
            Phasor s = yt(i, j);
            for (std::size_t a = 0; a < nn; ++a) {
                for (std::size_t b = 0; b < nn; ++b) s -= yt(i, 2 * k + a) * inv(a, b) * yt(2 * k + b, j);
            }
            out(i, j) = s;
        }
    }
    return out;
}

CompiledNetwork CompiledNetwork::compile(const Network& net, const CompileOptions& options) {
    CompiledNetwork c;
    c.net_ = &net;
    c.s_base_ = net.mva_base / 3.0;
    const std::size_t nb = net.buses.size();
    std::unordered_map<std::string, std::size_t> bus_of;
    for (std::size_t i = 0; i < nb; ++i) bus_of.emplace(net.buses[i].id, i);
    auto bus = [&](const std::string& id) {
        auto it = bus_of.find(id);
        if (it == bus_of.end()) throw Error(ErrorCode::ReferenceError, "unknown bus '" + id + "'", id);
        return it->second;
    };

    c.bus_nodes_.assign(nb, {kNoNode, kNoNode, kNoNode});
    c.base_kv_ln_.resize(nb);
    for (std::size_t b = 0; b < nb; ++b) {
        c.base_kv_ln_[b] = net.buses[b].nominal_kv / kSqrt3;
        for (int p : net.buses[b].phases.list()) {
            c.bus_nodes_[b][p] = c.nodes_.size();
            c.nodes_.push_back({b, p});
        }
    }
    const std::size_t n = c.nodes_.size();
    auto node_at = [&](std::size_t b, int p, const std::string& owner) {
        const std::size_t nd = c.bus_nodes_[b][p];
        if (nd == kNoNode) {
            throw Error(ErrorCode::InvalidModel,
                        "'" + owner + "' uses phase " + std::string(1, char('A' + p)) + " absent at bus '" +
                            net.buses[b].id + "'",
                        owner);
        }
        return nd;
    };

    std::set<std::string> forced_open(options.open_branches.begin(), options.open_branches.end());
    const std::size_t nbr = net.branches.size();
    c.branch_open_.assign(nbr, 0);
    c.taps_.assign(nbr, {});
    for (std::size_t i = 0; i < nbr; ++i) {
        const Branch& br = net.branches[i];
        c.branch_open_[i] = (br.kind == BranchKind::Switch && !br.closed) || forced_open.count(br.id);
        if (br.kind == BranchKind::Regulator) {
            auto it = options.regulator_taps.find(br.id);
            c.taps_[i] = it != options.regulator_taps.end() ? it->second : br.regulator->taps;
            if (c.taps_[i].size() != br.phases.size()) {
                throw Error(ErrorCode::InvalidModel, "regulator tap count mismatch", br.id);
            }
        }
    }

    // Node connectivity for energization.
    std::vector<std::vector<std::size_t>> adj(n);
    auto link = [&](std::size_t a, std::size_t b) {
        adj[a].push_back(b);
        adj[b].push_back(a);
    };
    for (std::size_t i = 0; i < nbr; ++i) {
        if (c.branch_open_[i]) continue;
        const Branch& br = net.branches[i];
        const std::size_t f = bus(br.from), t = bus(br.to);
        const auto ph = br.phases.list();
        if (br.kind == BranchKind::Transformer) {
            const std::size_t anchor = node_at(f, ph.front(), br.id);
            for (int p : ph) {
                link(anchor, node_at(f, p, br.id));
                link(anchor, node_at(t, p, br.id));
            }
        } else {
            for (int p : ph) link(node_at(f, p, br.id), node_at(t, p, br.id));
        }
    }
    std::deque<std::size_t> queue;
    c.energized_.assign(n, 0);
    auto seed = [&](std::size_t nd) {
        if (!c.energized_[nd]) {
            c.energized_[nd] = 1;
            queue.push_back(nd);
        }
    };
    for (std::size_t g = 0; g < net.generators.size(); ++g) {
        const auto& gen = net.generators[g];
        const std::size_t b = bus(gen.bus);
        GeneratorElement e{g, {}, {}};
        for (int p = 0; p < 3; ++p) {
            e.nodes[p] = node_at(b, p, gen.id);
            seed(e.nodes[p]);
        }
        double x = gen.x_internal_pu;
        if (x <= 0 && !gen.machine.empty()) {
            auto m = net.machine_index(gen.machine);
            if (!m) throw Error(ErrorCode::ReferenceError, "unknown machine '" + gen.machine + "'", gen.id);
            const auto& mach = net.machines[*m];
            x = mach.genrou.x_pp * net.mva_base / mach.mva_base;
        }
        if (x <= 0) x = options.default_x_internal;
        e.y_internal = 1.0 / Phasor(0.0, x);
        c.generators_.push_back(e);
    }
    for (std::size_t s = 0; s < net.sources.size(); ++s) {
        const auto& src = net.sources[s];
        const std::size_t b = bus(src.bus);
        SourceElement e{s, {}, {}};
        for (int p : src.phases.list()) {
            e.nodes.push_back(node_at(b, p, src.id));
            e.voltage.push_back(src.voltage[p]);
            seed(e.nodes.back());
        }
        c.sources_.push_back(std::move(e));
    }
    while (!queue.empty()) {
        const std::size_t nd = queue.front();
        queue.pop_front();
        for (std::size_t m : adj[nd]) seed(m);
    }

    // Admittance blocks.
    c.y_ = numerics::SparseComplexMatrix(n);
    c.block_of_branch_.assign(nbr, kNoNode);
    for (std::size_t i = 0; i < nbr; ++i) {
        const Branch& br = net.branches[i];
        if (c.branch_open_[i]) continue;
        const std::size_t f = bus(br.from), t = bus(br.to);
        const auto ph = br.phases.list();
        const std::size_t k = ph.size();
        if (br.kind == BranchKind::Switch || br.kind == BranchKind::Regulator) {
            for (std::size_t a = 0; a < k; ++a) {
                const std::size_t fn = node_at(f, ph[a], br.id), tn = node_at(t, ph[a], br.id);
                if (!c.energized_[fn]) continue;
                const double ratio = br.kind == BranchKind::Switch ? 1.0
                                     : 1.0 + br.regulator->step_pu * c.taps_[i][a];
                c.constraints_.push_back({i, fn, tn, ratio});
            }
            continue;
        }
        BranchBlocks blk{i, {}, {}, PhaseMatrix(k), PhaseMatrix(k), PhaseMatrix(k), PhaseMatrix(k)};
        for (int p : ph) {
            blk.from_nodes.push_back(node_at(f, p, br.id));
            blk.to_nodes.push_back(node_at(t, p, br.id));
        }
        if (!c.energized_[blk.from_nodes.front()]) continue;
        const double vf = c.base_kv_ln_[f], vt = c.base_kv_ln_[t];
        if (br.kind == BranchKind::Transformer) {
            PhaseMatrix yt = transformer_admittance(*br.transformer, k);
            // A delta-delta secondary has no zero-sequence reference of its
            // own; tie its zero sequence alone to ground through a negligible
            // admittance so balanced voltages draw no current through it.
            if (br.transformer->conn_from == Winding::Delta && br.transformer->conn_to == Winding::Delta) {
                const Phasor g = kFloatingGround * std::abs(yt(k, k)) / static_cast<double>(k);
                for (std::size_t a = 0; a < k; ++a) {
                    for (std::size_t b = 0; b < k; ++b) yt(k + a, k + b) += g;
                }
            }
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    blk.yff(a, b) = yt(a, b) * vf * vf / c.s_base_;
                    blk.yft(a, b) = yt(a, k + b) * vf * vt / c.s_base_;
                    blk.ytf(a, b) = yt(k + a, b) * vt * vf / c.s_base_;
                    blk.ytt(a, b) = yt(k + a, k + b) * vt * vt / c.s_base_;
                }
            }
        } else {
            PhaseMatrix yser;
            try {
                yser = invert(br.z_series);
            } catch (const Error&) {
                throw Error(ErrorCode::InvalidModel, "singular series impedance", br.id);
            }
            for (std::size_t a = 0; a < k; ++a) {
                for (std::size_t b = 0; b < k; ++b) {
                    const Phasor ys = yser(a, b), yh = 0.5 * br.y_shunt(a, b);
                    blk.yff(a, b) = (ys + yh) * vf * vf / c.s_base_;
                    blk.yft(a, b) = -ys * vf * vt / c.s_base_;
                    blk.ytf(a, b) = -ys * vt * vf / c.s_base_;
                    blk.ytt(a, b) = (ys + yh) * vt * vt / c.s_base_;
                }
            }
        }
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
                c.y_.add(blk.from_nodes[a], blk.from_nodes[b], blk.yff(a, b));
                c.y_.add(blk.from_nodes[a], blk.to_nodes[b], blk.yft(a, b));
                c.y_.add(blk.to_nodes[a], blk.from_nodes[b], blk.ytf(a, b));
                c.y_.add(blk.to_nodes[a], blk.to_nodes[b], blk.ytt(a, b));
            }
        }
        c.block_of_branch_[i] = c.blocks_.size();
        c.blocks_.push_back(std::move(blk));
    }
    for (const auto& sh : net.shunts) {
        const std::size_t b = bus(sh.bus);
        const auto ph = sh.phases.list();
        const double vn = sh.kv / c.base_kv_ln_[b];
        for (std::size_t a = 0; a < ph.size(); ++a) {
            const std::size_t nd = node_at(b, ph[a], sh.id);
            if (!c.energized_[nd]) continue;
            const Phasor ysh(0.0, sh.kvar[a] / 1000.0 / c.s_base_ / (vn * vn));
            c.y_.add(nd, nd, ysh);
            c.shunts_.emplace_back(nd, ysh);
        }
    }
    c.y_.compress();

    for (std::size_t l = 0; l < net.loads.size(); ++l) {
        const auto& load = net.loads[l];
        const std::size_t b = bus(load.bus);
        const auto ph = load.phases.list();
        const double vr = load.kv / c.base_kv_ln_[b];
        auto add = [&](std::size_t e, std::size_t na, std::size_t nb2) {
            if (!c.energized_[na] || (nb2 != kNoNode && !c.energized_[nb2])) return;
            const Phasor s = Phasor(load.kw[e], load.kvar[e]) / 1000.0 / c.s_base_;
            c.loads_.push_back({l, na, nb2, s, load.model, vr});
        };
        if (load.connection == netmodel::LoadConnection::Wye) {
            for (std::size_t e = 0; e < ph.size(); ++e) add(e, node_at(b, ph[e], load.id), kNoNode);
        } else if (ph.size() == 3) {
            for (std::size_t e = 0; e < 3; ++e) {
                add(e, node_at(b, static_cast<int>(e), load.id), node_at(b, static_cast<int>((e + 1) % 3), load.id));
            }
        } else {
            add(0, node_at(b, ph[0], load.id), node_at(b, ph[1], load.id));
        }
    }
    for (std::size_t g = 0; g < net.dgs.size(); ++g) {
        const auto& dg = net.dgs[g];
        const std::size_t b = bus(dg.bus);
        const auto ph = dg.phases.list();
        const Phasor s = Phasor(dg.p_kw, dg.unity_pf ? 0.0 : dg.q_kvar) / 1000.0 / c.s_base_ /
                         static_cast<double>(ph.size());
        for (int p : ph) {
            const std::size_t nd = node_at(b, p, dg.id);
            if (c.energized_[nd]) c.dgs_.push_back({g, nd, s});
        }
    }

    // Constraint reduction: sources first so their groups become fixed masters.
    c.master_.assign(n, kNoNode);
    c.factor_.assign(n, 1.0);
    c.fixed_.assign(n, 0);
    c.parent_constraint_.assign(n, kNoNode);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> cadj(n);  // (constraint, other)
    for (std::size_t k = 0; k < c.constraints_.size(); ++k) {
        cadj[c.constraints_[k].from_node].push_back({k, c.constraints_[k].to_node});
        cadj[c.constraints_[k].to_node].push_back({k, c.constraints_[k].from_node});
    }
    auto grow = [&](std::size_t root, bool fixed) {
        if (c.master_[root] != kNoNode) return;
        c.master_[root] = root;
        c.factor_[root] = 1.0;
        c.fixed_[root] = fixed;
        std::deque<std::size_t> q{root};
        while (!q.empty()) {
            const std::size_t u = q.front();
            q.pop_front();
            for (auto [k, w] : cadj[u]) {
                if (c.master_[w] != kNoNode) continue;
                const Constraint& con = c.constraints_[k];
                c.master_[w] = root;
                c.factor_[w] = u == con.from_node ? c.factor_[u] * con.ratio : c.factor_[u] / con.ratio;
                c.parent_constraint_[w] = k;
                c.constraint_order_.push_back(w);
                q.push_back(w);
            }
        }
    };
    for (const auto& s : c.sources_) {
        for (std::size_t nd : s.nodes) grow(nd, true);
    }
    for (std::size_t nd = 0; nd < n; ++nd) {
        if (c.energized_[nd]) grow(nd, false);
    }
    return c;
}

std::vector<Phasor> CompiledNetwork::flat_start() const {
    const Network& net = *net_;
    const std::size_t n = nodes_.size();
    std::vector<Phasor> v(n);
    std::vector<char> set(n, 0);
    std::vector<char> bus_done(net.buses.size(), 0);
    std::deque<std::size_t> queue;
    auto assign_bus = [&](std::size_t b, const PhaseTriple& vals) {
        for (int p = 0; p < 3; ++p) {
            const std::size_t nd = bus_nodes_[b][p];
            if (nd != kNoNode && !set[nd]) {
                v[nd] = vals[p];
                set[nd] = 1;
            }
        }
        if (!bus_done[b]) {
            bus_done[b] = 1;
            queue.push_back(b);
        }
    };
    for (const auto& s : sources_) {
        const std::size_t b = nodes_[s.nodes.front()].bus;
        PhaseTriple vals{};
        for (std::size_t a = 0; a < s.nodes.size(); ++a) vals[nodes_[s.nodes[a]].phase] = s.voltage[a];
        for (int p = 0; p < 3; ++p) {
            if (vals[p] == Phasor{}) vals[p] = std::polar(1.0, std::arg(s.voltage.front()) - 2.0943951023931957 * (p - nodes_[s.nodes.front()].phase));
        }
        assign_bus(b, vals);
    }
    for (const auto& g : generators_) {
        const auto& gen = net.generators[g.generator];
        const double ang = gen.role == netmodel::GeneratorRole::Slack ? gen.angle_deg : 0.0;
        assign_bus(nodes_[g.nodes[0]].bus, numerics::balanced(numerics::from_polar_deg(gen.v_pu, ang)));
    }
    std::vector<std::vector<std::size_t>> branches_at(net.buses.size());
    std::unordered_map<std::string, std::size_t> bus_of;
    for (std::size_t i = 0; i < net.buses.size(); ++i) bus_of.emplace(net.buses[i].id, i);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        if (branch_open_[i]) continue;
        branches_at[bus_of.at(net.branches[i].from)].push_back(i);
        branches_at[bus_of.at(net.branches[i].to)].push_back(i);
    }
    while (!queue.empty()) {
        const std::size_t b = queue.front();
        queue.pop_front();
        for (std::size_t i : branches_at[b]) {
            const Branch& br = net.branches[i];
            const std::size_t f = bus_of.at(br.from), t = bus_of.at(br.to);
            const bool forward = f == b;
            const std::size_t other = forward ? t : f;
            if (bus_done[other]) continue;
            PhaseTriple vals{};
            const auto ph = br.phases.list();
            if (br.kind == BranchKind::Transformer && block_of_branch_[i] != kNoNode) {
                const BranchBlocks& blk = blocks_[block_of_branch_[i]];
                std::vector<Phasor> known;
                for (std::size_t nd : forward ? blk.from_nodes : blk.to_nodes) known.push_back(v[nd]);
                std::vector<Phasor> out;
                try {
                    out = forward ? times(scaled(multiply(invert(blk.ytt), blk.ytf), -1.0), known)
                                  : times(scaled(multiply(invert(blk.yff), blk.yft), -1.0), known);
                } catch (const Error&) {
                    out = known;
                }
                for (std::size_t a = 0; a < ph.size(); ++a) {
                    vals[ph[a]] = std::abs(out[a]) > 0 ? out[a] / std::abs(out[a]) : Phasor(1.0, 0.0);
                }
            } else {
                for (int p : ph) {
                    const Phasor x = v[bus_nodes_[b][p]];
                    vals[p] = std::abs(x) > 0 ? x / std::abs(x) : Phasor(1.0, 0.0);
                }
            }
            for (int p = 0; p < 3; ++p) {
                if (vals[p] == Phasor{}) vals[p] = std::polar(1.0, -2.0943951023931957 * p);
            }
            assign_bus(other, vals);
        }
    }
    for (std::size_t nd = 0; nd < n; ++nd) {
        if (!energized_[nd]) {
            v[nd] = 0.0;
        } else if (!set[nd]) {
            v[nd] = std::polar(1.0, -2.0943951023931957 * nodes_[nd].phase);
        }
    }
    return v;
}

}  // namespace tdsim::powerflow
