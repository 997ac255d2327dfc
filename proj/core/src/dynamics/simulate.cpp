#include "tdsim/dynamics/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tdsim/error.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/numerics/sequence.hpp"

namespace tdsim::dynamics {

namespace {

using powerflow::GeneratorElement;

MachineState advance(const MachineState& s, const MachineRates& r, double h) {
    MachineState out = s;
    out.delta += h * r.genrou.delta;
    out.speed += h * r.genrou.speed;
    out.eq_p += h * r.genrou.eq_p;
    out.ed_p += h * r.genrou.ed_p;
    out.psi_kd += h * r.genrou.psi_kd;
    out.psi_kq += h * r.genrou.psi_kq;
    out.v_sensed += h * r.exciter.v_sensed;
    out.lead_lag += h * r.exciter.lead_lag;
    return out;
}

double max_abs(const MachineRates& r) {
    return std::max({std::abs(r.genrou.delta), std::abs(r.genrou.speed), std::abs(r.genrou.eq_p),
                     std::abs(r.genrou.ed_p), std::abs(r.genrou.psi_kd), std::abs(r.genrou.psi_kq),
                     std::abs(r.exciter.v_sensed), std::abs(r.exciter.lead_lag)});
}

bool finite(const MachineState& s) {
    for (double x : {s.delta, s.speed, s.eq_p, s.ed_p, s.psi_kd, s.psi_kq, s.v_sensed, s.lead_lag}) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

const GeneratorElement* element_of(const CompiledNetwork& c, std::size_t generator) {
    for (const auto& g : c.generators()) {
        if (g.generator == generator) return &g;
    }
    return nullptr;
}

Phasor positive_sequence(const std::vector<Phasor>& v, const GeneratorElement& g) {
    return numerics::fortescue_decompose({v[g.nodes[0]], v[g.nodes[1]], v[g.nodes[2]]}).v1;
}

}  // namespace

DynamicSystem::DynamicSystem(DynamicNetwork grid, std::vector<MachineModel> machines,
                             std::vector<MachineState> initial, double omega_base)
    : grid_(std::move(grid)), machines_(std::move(machines)), initial_(std::move(initial)), omega_base_(omega_base) {}

std::vector<Phasor> DynamicSystem::emfs(const std::vector<MachineState>& states) const {
    std::vector<Phasor> e(machines_.size());
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        e[i] = machines_[i].dynamic ? subtransient_emf(machines_[i].machine.genrou, states[i]) : machines_[i].fixed_emf;
    }
    return e;
}

std::vector<Phasor> DynamicSystem::solve_network(const std::vector<MachineState>& states) const {
    return grid_.solve(emfs(states));
}

std::vector<MachineRates> DynamicSystem::rates(const std::vector<MachineState>& states,
                                               const std::vector<Phasor>& v) const {
    const CompiledNetwork& c = grid_.compiled();
    const double s_sys = network().mva_base;
    std::vector<MachineRates> out(machines_.size());
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        const MachineModel& m = machines_[i];
        const GeneratorElement* g = element_of(c, i);
        MachineRates& r = out[i];
        if (!g) continue;
        r.v1 = positive_sequence(v, *g);
        if (!m.dynamic) continue;
        const auto& p = m.machine.genrou;
        const Phasor e = subtransient_emf(p, states[i]);
        const Phasor norton = m.machine.mva_base / s_sys / Phasor(p.ra, p.x_pp);
        r.i1 = norton * (e - r.v1) * m.current_to_machine;
        r.exciter = st1a_output(m.machine.st1a, states[i], m.vref, std::abs(r.v1));
        r.genrou = genrou_derivatives(p, states[i], r.exciter.efd, m.tm, r.v1, r.i1, omega_base_);
    }
    return out;
}

double DynamicSystem::max_rate(const std::vector<MachineState>& states) const {
    double worst = 0.0;
    const auto r = rates(states, solve_network(states));
    for (std::size_t i = 0; i < machines_.size(); ++i) {
        if (machines_[i].dynamic) worst = std::max(worst, max_abs(r[i]));
    }
    return worst;
}

DynamicSystem init_dynamics(const netmodel::Network& input, const PowerFlowSolution& pf) {
    if (!pf.converged) throw Error(ErrorCode::NotConverged, "power flow is not converged", input.name);
    const bool paired = std::any_of(input.sources.begin(), input.sources.end(),
                                    [](const netmodel::Source& s) { return !s.paired_bus.empty(); });
    netmodel::Network net = paired ? netmodel::join_boundaries(input) : input;
    net.reindex();

    std::vector<MachineModel> models;
    std::vector<Phasor> norton;
    for (const auto& g : net.generators) {
        MachineModel m;
        m.generator = g.id;
        if (!g.machine.empty()) {
            const auto k = net.machine_index(g.machine);
            if (!k) throw Error(ErrorCode::InvalidModel, "unknown machine '" + g.machine + "'", g.id);
            m.dynamic = true;
            m.machine = net.machines[*k];
            m.current_to_machine = net.mva_base / m.machine.mva_base;
            norton.push_back(m.machine.mva_base / net.mva_base / Phasor(m.machine.genrou.ra, m.machine.genrou.x_pp));
        } else {
            const double x = g.x_internal_pu > 0.0 ? g.x_internal_pu : powerflow::CompileOptions{}.default_x_internal;
            norton.push_back(1.0 / Phasor(0.0, x));
        }
        for (const auto& r : pf.generators) {
            if (r.id == g.id) m.fixed_emf = r.emf;
        }
        models.push_back(std::move(m));
    }
    DynamicNetwork grid(net, pf, norton);
    const CompiledNetwork& c = grid.compiled();

    // Internal voltages behind the dynamic Norton admittances that carry the
    // power-flow currents, then states from the network's own solution.
    std::vector<Phasor> emf(models.size());
    std::vector<PhaseTriple> pf_terminal(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        const GeneratorElement* g = element_of(c, i);
        if (!g) continue;
        const auto b = std::find(pf.bus_ids.begin(), pf.bus_ids.end(), net.generators[i].bus);
        if (b == pf.bus_ids.end()) {
            throw Error(ErrorCode::NotConverged, "solution lacks generator bus '" + net.generators[i].bus + "'",
                        net.generators[i].id);
        }
        const PhaseTriple vt = pf.voltage[static_cast<std::size_t>(b - pf.bus_ids.begin())];
        const Phasor v1 = numerics::fortescue_decompose(vt).v1;
        const Phasor i1 = g->y_internal * (models[i].fixed_emf - v1);
        emf[i] = models[i].dynamic ? v1 + i1 / norton[i] : models[i].fixed_emf;
        models[i].fixed_emf = emf[i];
    }
    const std::vector<Phasor> v = grid.solve(emf);
    std::vector<MachineState> states(models.size());
    for (std::size_t i = 0; i < models.size(); ++i) {
        const GeneratorElement* g = element_of(c, i);
        if (!g || !models[i].dynamic) continue;
        const Phasor v1 = positive_sequence(v, *g);
        const Phasor i1 = norton[i] * (emf[i] - v1) * models[i].current_to_machine;
        const MachineEquilibrium eq = machine_equilibrium(models[i].machine, v1, i1);
        states[i] = eq.state;
        models[i].tm = eq.tm;
        models[i].vref = eq.vref;
    }
    return DynamicSystem(std::move(grid), std::move(models), std::move(states), 2.0 * std::numbers::pi * net.frequency_hz);
}

TimeSeries simulate(DynamicSystem sys, const DynamicScenario& sc) {
    const netmodel::Network& net = sys.network();
    const auto& machines = sys.machines();

    struct Resolved {
        std::size_t bus = 0;
        std::size_t machine = 0;
    };
    std::vector<Resolved> where(sc.probes.size());
    for (std::size_t i = 0; i < sc.probes.size(); ++i) {
        const Probe& p = sc.probes[i];
        if (!p.machine()) {
            const auto b = net.bus_index(p.target);
            if (!b || !net.buses[*b].phases.contains(p.phase)) {
                throw Error(ErrorCode::UnknownTarget, "probe '" + p.id + "' names no bus phase '" + p.target + "'",
                            p.id);
            }
            where[i].bus = *b;
            continue;
        }
        bool found = false;
        for (std::size_t m = 0; m < machines.size() && !found; ++m) {
            if (machines[m].dynamic && (machines[m].generator == p.target || machines[m].machine.id == p.target)) {
                where[i].machine = m;
                found = true;
            }
        }
        if (!found) throw Error(ErrorCode::UnknownTarget, "probe '" + p.id + "' names no machine '" + p.target + "'", p.id);
    }

    const double dt = sc.dt;
    const auto steps = static_cast<std::size_t>(std::llround(sc.duration / dt));
    TimeSeries ts;
    ts.dt = dt;
    ts.scenario_hash = scenario_hash(sc);
    ts.probes = sc.probes;
    for (const Probe& p : sc.probes) ts.probe_ids.push_back(p.id);
    ts.values.assign(sc.probes.size(), std::vector<double>(steps + 1));
    ts.time.resize(steps + 1);
    for (const Event& e : sc.events) {
        const auto k = std::min<std::size_t>(steps, static_cast<std::size_t>(std::llround(e.time / dt)));
        ts.events.push_back({e, static_cast<double>(k) * dt, k});
    }

    std::vector<MachineState> x = sys.initial_states();
    std::size_t next_event = 0;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * dt;
        while (next_event < ts.events.size() && ts.events[next_event].step == k) {
            const std::size_t before = sys.grid().energized_nodes();
            sys.grid().apply(ts.events[next_event].event);
            const std::size_t after = sys.grid().energized_nodes();
            if (after != before) {
                ts.notes.push_back("t=" + std::to_string(t) + " s: " + std::string(to_string(ts.events[next_event].event.kind)) +
                                   " " + ts.events[next_event].event.target + " changes energized nodes " +
                                   std::to_string(before) + " -> " + std::to_string(after));
            }
            ++next_event;
        }
        const std::vector<Phasor> v = sys.solve_network(x);
        const std::vector<MachineRates> r1 = sys.rates(x, v);

        ts.time[k] = t;
        for (std::size_t i = 0; i < sc.probes.size(); ++i) {
            const Probe& p = sc.probes[i];
            double value = 0.0;
            if (!p.machine()) {
                const std::size_t nd = sys.grid().compiled().node(where[i].bus, p.phase);
                const Phasor vp = nd == powerflow::kNoNode ? Phasor{} : v[nd];
                value = p.quantity == ProbeQuantity::VoltageMagnitude ? std::abs(vp) : numerics::angle_deg(vp);
            } else {
                const MachineState& s = x[where[i].machine];
                const MachineRates& r = r1[where[i].machine];
                switch (p.quantity) {
                case ProbeQuantity::Delta: value = s.delta; break;
                case ProbeQuantity::Speed: value = s.speed; break;
                case ProbeQuantity::EqPrime: value = s.eq_p; break;
                case ProbeQuantity::EdPrime: value = s.ed_p; break;
                case ProbeQuantity::PsiKd: value = s.psi_kd; break;
                case ProbeQuantity::PsiKq: value = s.psi_kq; break;
                case ProbeQuantity::Efd: value = r.exciter.efd; break;
                case ProbeQuantity::VSensed: value = s.v_sensed; break;
                case ProbeQuantity::ElectricalTorque: value = r.genrou.te; break;
                case ProbeQuantity::TerminalVoltage: value = std::abs(r.v1); break;
                default: break;
                }
            }
            ts.values[i][k] = value;
        }
        if (k == steps) break;

        auto stage = [&](const std::vector<MachineRates>& r, double h) {
            std::vector<MachineState> y = x;
            for (std::size_t m = 0; m < machines.size(); ++m) {
                if (machines[m].dynamic) y[m] = advance(x[m], r[m], h);
            }
            return y;
        };
        const auto x2 = stage(r1, dt / 2.0);
        const auto r2 = sys.rates(x2, sys.solve_network(x2));
        const auto x3 = stage(r2, dt / 2.0);
        const auto r3 = sys.rates(x3, sys.solve_network(x3));
        const auto x4 = stage(r3, dt);
        const auto r4 = sys.rates(x4, sys.solve_network(x4));
        for (std::size_t m = 0; m < machines.size(); ++m) {
            if (!machines[m].dynamic) continue;
            MachineState s = x[m];
            s = advance(s, r1[m], dt / 6.0);
            s = advance(s, r2[m], dt / 3.0);
            s = advance(s, r3[m], dt / 3.0);
            s = advance(s, r4[m], dt / 6.0);
            if (!finite(s)) {
                throw Error(ErrorCode::NonFiniteState,
                            "machine state became non-finite at t=" + std::to_string(t + dt) + " s", machines[m].generator);
            }
            x[m] = s;
        }
    }
    return ts;
}

TimeSeries simulate(const netmodel::Network& net, const PowerFlowSolution& pf, const DynamicScenario& scenario) {
    return simulate(init_dynamics(net, pf), scenario);
}

}  // namespace tdsim::dynamics
