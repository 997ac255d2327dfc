#include "tdsim/powerflow/newton.hpp"

#include <chrono>
#include <cmath>

#include "tdsim/error.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/powerflow/injection.hpp"

namespace tdsim::powerflow {

namespace {

using netmodel::GeneratorRole;
using numerics::kRotate120;

// Positive-sequence weights, V1 = sum w_p V_p, and the phase rotations of a
// balanced set, E_p = rot_p E.
const Phasor kSeqWeight[3] = {1.0 / 3.0, kRotate120 / 3.0, kRotate120 * kRotate120 / 3.0};
const Phasor kRot[3] = {1.0, kRotate120 * kRotate120, kRotate120};

struct Layout {
    std::vector<std::size_t> var;  // master node -> unknown pair index, kNoNode when fixed
    std::size_t masters = 0;
    std::size_t gens = 0;
    std::size_t pairs() const { return masters + gens; }
};

Layout make_layout(const CompiledNetwork& c) {
    Layout l;
    l.var.assign(c.node_count(), kNoNode);
    for (std::size_t nd = 0; nd < c.node_count(); ++nd) {
        if (c.energized(nd) && c.master(nd) == nd && !c.fixed(nd)) l.var[nd] = l.masters++;
    }
    l.gens = c.generators().size();
    return l;
}

class Jacobian {
public:
    explicit Jacobian(std::size_t n) : m_(n) {}

    // Complex row r, complex unknown k: d F_r = a dz_k + b conj(dz_k).
    void complex_term(std::size_t r, std::size_t k, Phasor a, Phasor b) {
        m_.add(2 * r, 2 * k, (a + b).real());
        m_.add(2 * r, 2 * k + 1, -a.imag() + b.imag());
        m_.add(2 * r + 1, 2 * k, (a + b).imag());
        m_.add(2 * r + 1, 2 * k + 1, a.real() - b.real());
    }
    // Real row, complex unknown k: d f = Re(c dz_k + d conj(dz_k)).
    void real_term(std::size_t row, std::size_t k, Phasor c, Phasor d) {
        m_.add(row, 2 * k, (c + d).real());
        m_.add(row, 2 * k + 1, -c.imag() + d.imag());
    }
    numerics::SparseRealMatrix& matrix() { return m_; }

private:
    numerics::SparseRealMatrix m_;
};

struct Outcome {
    std::vector<Phasor> v;
    std::vector<Phasor> emf;
    int iterations = 0;
};

double pv_setpoint_pu(const CompiledNetwork& c, const netmodel::Generator& g) {
    return g.p_mw / c.base_mva_phase();
}

std::vector<Phasor> initial_emf(const CompiledNetwork& c, const std::vector<Phasor>& v) {
    std::vector<Phasor> emf;
    for (const GeneratorElement& ge : c.generators()) {
        const auto& g = c.network().generators[ge.generator];
        const Phasor va = v[ge.nodes[0]];
        const double p = g.role == GeneratorRole::PV ? pv_setpoint_pu(c, g) / 3.0 : 0.0;
        const Phasor i = std::abs(va) > 0.0 ? std::conj(Phasor(p, 0.0) / va) : Phasor{};
        emf.push_back(va + i / ge.y_internal);
    }
    return emf;
}

Outcome newton(const CompiledNetwork& c, std::vector<Phasor> v, std::vector<Phasor> emf,
               const PowerFlowOptions& opt) {
    const Network& net = c.network();
    const std::size_t n = c.node_count();
    const Layout lay = make_layout(c);
    const std::size_t dim = 2 * lay.pairs();

    for (const SourceElement& s : c.sources()) {
        for (std::size_t a = 0; a < s.nodes.size(); ++a) v[s.nodes[a]] = s.voltage[a];
    }
    auto expand = [&] {
        for (std::size_t nd = 0; nd < n; ++nd) {
            v[nd] = c.energized(nd) ? c.factor(nd) * v[c.master(nd)] : Phasor{};
        }
    };
    expand();

    // Network part of the Jacobian does not change between iterations.
    std::vector<std::tuple<std::size_t, std::size_t, Phasor>> ybus;
    {
        const auto& y = c.y();
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t kj = c.energized(j) ? lay.var[c.master(j)] : kNoNode;
            if (kj == kNoNode) continue;
            for (std::size_t p = y.col_starts()[j]; p < y.col_starts()[j + 1]; ++p) {
                const std::size_t i = y.row_index()[p];
                const std::size_t ri = c.energized(i) ? lay.var[c.master(i)] : kNoNode;
                if (ri == kNoNode) continue;
                ybus.emplace_back(ri, kj, c.factor(i) * c.factor(j) * y.values()[p]);
            }
        }
    }

    Outcome out;
    for (int it = 0;; ++it) {
        // Residuals.
        std::vector<Phasor> inj(n);
        std::vector<InjectionTerm> terms;
        add_element_injections(c, v, inj, &terms);
        std::vector<PhaseTriple> gen_current(lay.gens);
        for (std::size_t g = 0; g < lay.gens; ++g) {
            const GeneratorElement& ge = c.generators()[g];
            for (int p = 0; p < 3; ++p) {
                gen_current[g][p] = ge.y_internal * (kRot[p] * emf[g] - v[ge.nodes[p]]);
                inj[ge.nodes[p]] += gen_current[g][p];
            }
        }
        std::vector<Phasor> need = c.y().multiply(v);
        std::vector<Phasor> f(lay.pairs());
        for (std::size_t nd = 0; nd < n; ++nd) {
            if (!c.energized(nd)) continue;
            const std::size_t k = lay.var[c.master(nd)];
            if (k != kNoNode) f[k] += c.factor(nd) * (need[nd] - inj[nd]);
        }
        double worst = 0.0;
        for (std::size_t nd = 0; nd < n; ++nd) {
            const std::size_t k = lay.var[nd];
            if (k == kNoNode) continue;
            worst = std::max(worst, std::abs(f[k]) * std::abs(v[nd]));
        }
        std::vector<double> rhs(dim);
        for (std::size_t k = 0; k < lay.masters; ++k) {
            rhs[2 * k] = f[k].real();
            rhs[2 * k + 1] = f[k].imag();
        }
        std::vector<Phasor> v1(lay.gens);
        for (std::size_t g = 0; g < lay.gens; ++g) {
            const GeneratorElement& ge = c.generators()[g];
            const auto& gen = net.generators[ge.generator];
            for (int p = 0; p < 3; ++p) v1[g] += kSeqWeight[p] * v[ge.nodes[p]];
            const std::size_t row = 2 * (lay.masters + g);
            if (gen.role == GeneratorRole::Slack) {
                const Phasor r = v1[g] - numerics::from_polar_deg(gen.v_pu, gen.angle_deg);
                rhs[row] = r.real();
                rhs[row + 1] = r.imag();
            } else {
                double p = 0.0;
                for (int ph = 0; ph < 3; ++ph) p += (v[ge.nodes[ph]] * std::conj(gen_current[g][ph])).real();
                rhs[row] = p - pv_setpoint_pu(c, gen);
                rhs[row + 1] = std::norm(v1[g]) - gen.v_pu * gen.v_pu;
            }
            worst = std::max({worst, std::abs(rhs[row]), std::abs(rhs[row + 1])});
        }
        for (double x : rhs) {
            if (!std::isfinite(x)) throw Error(ErrorCode::NoConvergence, "Newton iterate diverged", net.name);
        }
        out.iterations = it;
        if (worst <= opt.tolerance) {
            out.v = std::move(v);
            out.emf = std::move(emf);
            return out;
        }
        if (it >= opt.max_inner) {
            throw Error(ErrorCode::NoConvergence,
                        "Newton did not converge in " + std::to_string(opt.max_inner) + " iterations (mismatch " +
                            std::to_string(worst) + " pu)",
                        net.name);
        }

        // Jacobian.
        Jacobian jac(dim);
        for (const auto& [r, k, y] : ybus) jac.complex_term(r, k, y, 0.0);
        for (const InjectionTerm& t : terms) {
            const std::size_t r = lay.var[c.master(t.row)], k = lay.var[c.master(t.col)];
            if (r == kNoNode || k == kNoNode) continue;
            const double s = c.factor(t.row) * c.factor(t.col);
            jac.complex_term(r, k, -s * t.a, -s * t.b);
        }
        for (std::size_t g = 0; g < lay.gens; ++g) {
            const GeneratorElement& ge = c.generators()[g];
            const auto& gen = net.generators[ge.generator];
            const std::size_t ke = lay.masters + g;
            const std::size_t row = 2 * ke;
            const Phasor y = ge.y_internal;
            for (int p = 0; p < 3; ++p) {
                const std::size_t nd = ge.nodes[p];
                const std::size_t k = lay.var[c.master(nd)];
                const double fac = c.factor(nd);
                if (k != kNoNode) jac.complex_term(k, k, fac * fac * y, 0.0);
                if (k != kNoNode) jac.complex_term(k, ke, -fac * y * kRot[p], 0.0);
                if (gen.role == GeneratorRole::Slack) {
                    if (k != kNoNode) jac.complex_term(ke, k, fac * kSeqWeight[p], 0.0);
                } else {
                    const Phasor vp = v[nd];
                    if (k != kNoNode) {
                        jac.real_term(row, k, fac * std::conj(gen_current[g][p]), -fac * vp * std::conj(y));
                        jac.real_term(row + 1, k, 2.0 * std::conj(v1[g]) * kSeqWeight[p] * fac, 0.0);
                    }
                    jac.real_term(row, ke, 0.0, vp * std::conj(y * kRot[p]));
                }
            }
        }
        jac.matrix().compress();
        std::vector<double> dx;
        try {
            dx = numerics::solve_sparse(jac.matrix(), rhs);
        } catch (const Error& e) {
            if (e.code() != ErrorCode::SingularMatrix) throw;
            throw Error(ErrorCode::SingularJacobian, std::string("Jacobian is singular: ") + e.what(), net.name);
        }
        for (std::size_t nd = 0; nd < n; ++nd) {
            const std::size_t k = lay.var[nd];
            if (k != kNoNode) v[nd] -= Phasor(dx[2 * k], dx[2 * k + 1]);
        }
        for (std::size_t g = 0; g < lay.gens; ++g) {
            const std::size_t k = lay.masters + g;
            emf[g] -= Phasor(dx[2 * k], dx[2 * k + 1]);
        }
        expand();
    }
}

void seed_from(const CompiledNetwork& c, const PowerFlowSolution& prev, std::vector<Phasor>& v,
               std::vector<Phasor>& emf) {
    const Network& net = c.network();
    for (std::size_t nd = 0; nd < c.node_count(); ++nd) {
        const auto b = prev.bus(net.buses[c.nodes()[nd].bus].id);
        if (!b) continue;
        const Phasor x = prev.voltage[*b][c.nodes()[nd].phase];
        if (x != Phasor{}) v[nd] = x;
    }
    for (std::size_t g = 0; g < c.generators().size(); ++g) {
        const std::string& id = net.generators[c.generators()[g].generator].id;
        for (const GeneratorResult& r : prev.generators) {
            if (r.id == id && r.emf != Phasor{}) emf[g] = r.emf;
        }
    }
}

PowerFlowSolution solve_newton(const Network& model, const BoundaryLoads& boundary, const PowerFlowOptions& opt,
                               const PowerFlowSolution* initial, bool control) {
    const auto start = std::chrono::steady_clock::now();
    Network net = model;
    net.reindex();
    std::map<std::string, std::vector<int>> taps;
    const PowerFlowSolution* seed = initial;
    PowerFlowSolution last;
    std::vector<OuterRound> trace;
    int iterations = 0;
    for (int round = 0;; ++round) {
        CompileOptions co;
        co.regulator_taps = taps;
        CompiledNetwork c = CompiledNetwork::compile(net, co);
        const double kva = c.base_mva_phase() * 1000.0;
        for (const auto& [bus, s] : boundary) {
            const auto b = net.bus_index(bus);
            if (!b) throw Error(ErrorCode::ReferenceError, "boundary load on unknown bus '" + bus + "'", bus);
            for (int p = 0; p < 3; ++p) {
                const std::size_t nd = c.node(*b, p);
                if (nd == kNoNode || !c.energized(nd) || s[p] == Phasor{}) continue;
                c.add_load_element({kNoNode, nd, kNoNode, s[p] / kva, {1.0, 0.0, 0.0}, 1.0});
            }
        }
        std::vector<Phasor> v = c.flat_start();
        std::vector<Phasor> emf = initial_emf(c, v);
        if (seed) seed_from(c, *seed, v, emf);
        Outcome o = newton(c, std::move(v), std::move(emf), opt);
        iterations += o.iterations;
        last = make_solution(c, o.v, o.emf);
        last.reindex();
        trace.push_back({round + 1, 0.0, last.max_mismatch, 0.0, o.iterations});
        const bool more = control && opt.regulators == RegulatorControl::Auto && round < opt.max_control_rounds &&
                          regulator_control_step(net, last, taps);
        if (!more) break;
        seed = &last;
    }
    last.inner_iterations = iterations;
    last.rounds = std::move(trace);
    last.converged = true;
    last.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return last;
}

}  // namespace

PowerFlowSolution solve_transmission_nr(const Network& net, const BoundaryLoads& boundary_loads,
                                        const PowerFlowOptions& options, const PowerFlowSolution* initial) {
    return solve_newton(net, boundary_loads, options, initial, false);
}

PowerFlowSolution solve_unified(const Network& net, const PowerFlowOptions& options) {
    bool paired = false;
    for (const auto& s : net.sources) paired = paired || !s.paired_bus.empty();
    if (paired) return solve_newton(netmodel::join_boundaries(net), {}, options, nullptr, true);
    return solve_newton(net, {}, options, nullptr, true);
}

}  // namespace tdsim::powerflow
