#include "tdsim/powerflow/fbs.hpp"

#include <chrono>
#include <cmath>
#include <deque>

#include "tdsim/error.hpp"
#include "tdsim/powerflow/injection.hpp"

namespace tdsim::powerflow {

namespace {

PhaseMatrix mul(const PhaseMatrix& a, const PhaseMatrix& b) {
    const std::size_t n = a.size();
    PhaseMatrix c(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t j = 0; j < n; ++j) c(i, j) += a(i, k) * b(k, j);
        }
    }
    return c;
}

PhaseMatrix sub(const PhaseMatrix& a, const PhaseMatrix& b) {
    PhaseMatrix c = a;
    for (std::size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

PhaseMatrix neg(PhaseMatrix a) {
    for (Phasor& z : a.data()) z = -z;
    return a;
}

// Tree edge from parent bus to child bus:
//   I_up = M V_up + N I_down,  V_down = P V_up + Q I_down.
struct Edge {
    std::size_t branch;
    std::vector<std::size_t> up;    // parent-side nodes
    std::vector<std::size_t> down;  // child-side nodes
    PhaseMatrix m, n, p, q;
    bool ideal = false;             // constraint: only diagonal ratios
    std::vector<double> ratio;      // V_down = ratio V_up, I_up = ratio I_down
};

struct Tree {
    std::vector<std::size_t> order;  // buses, root first
    std::vector<std::size_t> parent_edge;
    std::vector<Edge> edges;
};

Tree build_tree(const CompiledNetwork& c, std::size_t root) {
    const Network& net = c.network();
    const std::size_t nb = net.buses.size();
    std::unordered_map<std::string, std::size_t> bus_of;
    for (std::size_t i = 0; i < nb; ++i) bus_of.emplace(net.buses[i].id, i);
    std::vector<std::vector<std::size_t>> at(nb);
    for (std::size_t i = 0; i < net.branches.size(); ++i) {
        if (c.branch_open(i)) continue;
        at[bus_of.at(net.branches[i].from)].push_back(i);
        at[bus_of.at(net.branches[i].to)].push_back(i);
    }
    std::vector<std::vector<const Constraint*>> cons(net.branches.size());
    for (const Constraint& k : c.constraints()) cons[k.branch].push_back(&k);

    Tree t;
    t.parent_edge.assign(nb, kNoNode);
    std::vector<char> seen(nb, 0);
    std::vector<std::size_t> via(nb, kNoNode);
    std::deque<std::size_t> queue{root};
    seen[root] = 1;
    while (!queue.empty()) {
        const std::size_t b = queue.front();
        queue.pop_front();
        t.order.push_back(b);
        for (std::size_t i : at[b]) {
            if (i == via[b]) continue;
            const auto& br = net.branches[i];
            const std::size_t f = bus_of.at(br.from), to = bus_of.at(br.to);
            const bool forward = f == b;
            const std::size_t other = forward ? to : f;
            if (seen[other]) {
                throw Error(ErrorCode::NotRadial, "loop closed by branch '" + br.id + "'", br.id);
            }
            seen[other] = 1;
            via[other] = i;
            Edge e;
            e.branch = i;
            const std::size_t blk_index = c.block_of_branch(i);
            if (blk_index != kNoNode) {
                const BranchBlocks& blk = c.blocks()[blk_index];
                e.up = forward ? blk.from_nodes : blk.to_nodes;
                e.down = forward ? blk.to_nodes : blk.from_nodes;
                const PhaseMatrix& yuu = forward ? blk.yff : blk.ytt;
                const PhaseMatrix& yud = forward ? blk.yft : blk.ytf;
                const PhaseMatrix& ydu = forward ? blk.ytf : blk.yft;
                const PhaseMatrix& ydd = forward ? blk.ytt : blk.yff;
                PhaseMatrix ydd_inv;
                try {
                    ydd_inv = invert(ydd);
                } catch (const Error&) {
                    throw Error(ErrorCode::InvalidModel, "branch cannot be swept (singular block)", br.id);
                }
                e.q = neg(ydd_inv);
                e.p = mul(e.q, ydu);
                e.n = neg(mul(yud, ydd_inv));
                e.m = sub(yuu, mul(mul(yud, ydd_inv), ydu));
            } else {
                e.ideal = true;
                for (const Constraint* k : cons[i]) {
                    e.up.push_back(forward ? k->from_node : k->to_node);
                    e.down.push_back(forward ? k->to_node : k->from_node);
                    e.ratio.push_back(forward ? k->ratio : 1.0 / k->ratio);
                }
            }
            t.parent_edge[other] = t.edges.size();
            t.edges.push_back(std::move(e));
            queue.push_back(other);
        }
    }
    return t;
}

struct Sweep {
    int iterations = 0;
    std::vector<Phasor> v;
};

Sweep sweep(const CompiledNetwork& c, const Tree& tree, std::vector<Phasor> v, const PowerFlowOptions& opt) {
    const std::size_t n = c.node_count();
    std::vector<std::vector<std::size_t>> bus_nodes(c.network().buses.size());
    for (std::size_t nd = 0; nd < n; ++nd) {
        if (c.energized(nd)) bus_nodes[c.nodes()[nd].bus].push_back(nd);
    }
    auto forward = [&](const std::vector<Phasor>& cur) {
        for (std::size_t k = 1; k < tree.order.size(); ++k) {
            const Edge& e = tree.edges[tree.parent_edge[tree.order[k]]];
            for (std::size_t a = 0; a < e.down.size(); ++a) {
                if (e.ideal) {
                    v[e.down[a]] = e.ratio[a] * v[e.up[a]];
                    continue;
                }
                Phasor x{};
                for (std::size_t b = 0; b < e.up.size(); ++b) {
                    x += e.p(a, b) * v[e.up[b]] + e.q(a, b) * cur[e.down[b]];
                }
                v[e.down[a]] = x;
            }
        }
    };
    std::vector<Phasor> out(n);  // current leaving each node into its subtree and elements
    forward(out);
    Sweep s;
    for (s.iterations = 1; s.iterations <= opt.max_inner; ++s.iterations) {
        std::vector<Phasor> inj(n);
        add_element_injections(c, v, inj);
        std::fill(out.begin(), out.end(), Phasor{});
        for (std::size_t nd = 0; nd < n; ++nd) out[nd] = -inj[nd];
        for (const auto& [nd, y] : c.node_shunts()) out[nd] += y * v[nd];
        for (std::size_t k = tree.order.size(); k-- > 1;) {
            const Edge& e = tree.edges[tree.parent_edge[tree.order[k]]];
            for (std::size_t a = 0; a < e.up.size(); ++a) {
                if (e.ideal) {
                    out[e.up[a]] += e.ratio[a] * out[e.down[a]];
                    continue;
                }
                Phasor x{};
                for (std::size_t b = 0; b < e.up.size(); ++b) {
                    x += e.m(a, b) * v[e.up[b]] + e.n(a, b) * out[e.down[b]];
                }
                out[e.up[a]] += x;
            }
        }
        const std::vector<Phasor> before = v;
        forward(out);
        double dv = 0.0;
        for (std::size_t nd = 0; nd < n; ++nd) {
            if (!c.energized(nd)) continue;
            if (!std::isfinite(v[nd].real()) || !std::isfinite(v[nd].imag()) ||
                std::abs(v[nd]) < kCollapseVoltagePu) {
                const auto& node = c.nodes()[nd];
                throw Error(ErrorCode::VoltageCollapse,
                            "voltage below " + std::to_string(kCollapseVoltagePu) + " pu at bus '" +
                                c.network().buses[node.bus].id + "' phase " + std::string(1, char('A' + node.phase)),
                            c.network().name);
            }
            dv = std::max(dv, std::abs(v[nd] - before[nd]));
        }
        if (dv < opt.tolerance) {
            s.v = std::move(v);
            return s;
        }
    }
    throw Error(ErrorCode::NoConvergence,
                "sweep did not converge in " + std::to_string(opt.max_inner) + " iterations", c.network().name);
}

}  // namespace

PowerFlowSolution solve_distribution_fbs(const Network& circuit, const std::optional<PhaseTriple>& source_voltages,
                                         const PowerFlowOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (circuit.sources.size() != 1 || !circuit.generators.empty()) {
        throw Error(ErrorCode::InvalidModel, "sweep needs exactly one source and no generators", circuit.name);
    }
    Network net = circuit;
    net.reindex();
    if (source_voltages) {
        for (int p : net.sources[0].phases.list()) net.sources[0].voltage[p] = (*source_voltages)[p];
    }
    std::map<std::string, std::vector<int>> taps;
    std::vector<OuterRound> trace;
    int iterations = 0;
    for (int round = 0;; ++round) {
        CompileOptions co;
        co.regulator_taps = taps;
        const CompiledNetwork c = CompiledNetwork::compile(net, co);
        const std::size_t root = *net.bus_index(net.sources[0].bus);
        const Tree tree = build_tree(c, root);
        std::vector<Phasor> v(c.node_count());
        for (const auto& s : c.sources()) {
            for (std::size_t a = 0; a < s.nodes.size(); ++a) v[s.nodes[a]] = s.voltage[a];
        }
        Sweep s = sweep(c, tree, std::move(v), options);
        iterations += s.iterations;
        PowerFlowSolution sol = make_solution(c, s.v, {});
        trace.push_back({round + 1, 0.0, sol.max_mismatch, 0.0, s.iterations});
        const bool more = options.regulators == RegulatorControl::Auto && round < options.max_control_rounds &&
                          regulator_control_step(net, sol, taps);
        if (!more) {
            sol.inner_iterations = iterations;
            sol.rounds = std::move(trace);
            sol.converged = true;
            sol.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
            return sol;
        }
    }
}

}  // namespace tdsim::powerflow
