#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "support/fixtures.hpp"
#include "tdsim/error.hpp"
#include "tdsim/dynamics/simulate.hpp"
#include "tdsim/numerics/sequence.hpp"
#include "tdsim/powerflow/newton.hpp"

using namespace tdsim;
using namespace tdsim::dynamics;
using netmodel::PhaseSet;
using tdsim::test::ieee39;

namespace {

const PowerFlowSolution& ieee39_flow() {
    static const PowerFlowSolution sol = [] {
        powerflow::PowerFlowOptions o;
        o.tolerance = 1e-10;
        return powerflow::solve_transmission_nr(ieee39(), {}, o);
    }();
    return sol;
}

const DynamicSystem& ieee39_system() {
    static const DynamicSystem sys = init_dynamics(ieee39(), ieee39_flow());
    return sys;
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Io;
}

Event fault(double t, const std::string& bus, const std::string& phases, double ohm) {
    return {t, EventKind::ApplyShuntFault, bus, PhaseSet::parse(phases), ohm, true};
}

Event clear(double t, const std::string& bus, const std::string& phases) {
    return {t, EventKind::ClearShuntFault, bus, PhaseSet::parse(phases), kBoltedFaultOhm, true};
}

// Dense copy of a compressed sparse matrix for exact comparisons.
std::vector<Phasor> dense(const numerics::SparseComplexMatrix& m) {
    std::vector<Phasor> out(m.dim() * m.dim());
    for (std::size_t c = 0; c < m.dim(); ++c) {
        for (std::size_t k = m.col_starts()[c]; k < m.col_starts()[c + 1]; ++k) {
            out[m.row_index()[k] * m.dim() + c] += m.values()[k];
        }
    }
    return out;
}

netmodel::SynchronousMachine sample_machine(double s10, double s12) {
    netmodel::SynchronousMachine m;
    m.id = "M";
    m.bus = "1";
    m.genrou.h = 4.0;
    m.genrou.xd = 1.8;
    m.genrou.xq = 1.7;
    m.genrou.xd_p = 0.3;
    m.genrou.xq_p = 0.55;
    m.genrou.x_pp = 0.25;
    m.genrou.xl = 0.15;
    m.genrou.s10 = s10;
    m.genrou.s12 = s12;
    return m;
}

}  // namespace

TEST_CASE("initialized machines start at rest") {
    const DynamicSystem& sys = ieee39_system();
    CHECK(sys.machines().size() == 10);
    CHECK(sys.max_rate(sys.initial_states()) < 1e-8);
}

TEST_CASE("unloaded machine sits on its terminal voltage") {
    const auto m = sample_machine(0.05, 0.3);
    const MachineEquilibrium eq = machine_equilibrium(m, Phasor(1.0, 0.0), Phasor{});
    CHECK(std::abs(eq.state.delta) < 1e-15);
    // Open circuit: E'q carries the full flux and Efd adds the saturation increment.
    CHECK(eq.state.eq_p == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(eq.state.efd == doctest::Approx(1.0 + 0.05).epsilon(1e-12));
    CHECK(std::abs(eq.tm) < 1e-15);
    CHECK(std::abs(subtransient_emf(m.genrou, eq.state) - Phasor(1.0, 0.0)) < 1e-15);
}

TEST_CASE("saturation fit passes through both points") {
    const Saturation s = Saturation::fit(0.05, 0.3);
    CHECK(s(1.0) == doctest::Approx(0.05));
    CHECK(s(1.2) == doctest::Approx(0.3));
    CHECK(s(s.a * 0.5) == 0.0);
    CHECK(Saturation::fit(0.0, 0.0)(1.5) == 0.0);
}

TEST_CASE("unconverged power flow is refused") {
    PowerFlowSolution pf = ieee39_flow();
    pf.converged = false;
    CHECK(code_of([&] { (void)init_dynamics(ieee39(), pf); }) == ErrorCode::NotConverged);
}

TEST_CASE("field step moves only the E'q rate") {
    const auto m = sample_machine(0.05, 0.3);
    const Phasor v(1.02, 0.1), i(0.8, -0.3);
    const MachineEquilibrium eq = machine_equilibrium(m, v, i);
    const GenrouDerivatives base = genrou_derivatives(m.genrou, eq.state, eq.state.efd, eq.tm, v, i, 377.0);
    const GenrouDerivatives step = genrou_derivatives(m.genrou, eq.state, eq.state.efd + 0.1, eq.tm, v, i, 377.0);
    CHECK(std::abs(base.eq_p) < 1e-12);
    CHECK(step.eq_p == doctest::Approx(0.1 / m.genrou.tdo_p).epsilon(1e-12));
    CHECK(step.ed_p == base.ed_p);
    CHECK(step.psi_kd == base.psi_kd);
    CHECK(step.psi_kq == base.psi_kq);
    CHECK(step.speed == base.speed);
}

TEST_CASE("without saturation the rates are linear in the flux states") {
    const auto m = sample_machine(0.0, 0.0);
    const Phasor v(1.0, 0.05), i(0.6, -0.2);
    const MachineEquilibrium eq = machine_equilibrium(m, v, i);
    auto rates = [&](double k) {
        MachineState s = eq.state;
        s.eq_p += 0.01 * k;
        s.ed_p -= 0.02 * k;
        s.psi_kd += 0.015 * k;
        s.psi_kq += 0.005 * k;
        return genrou_derivatives(m.genrou, s, eq.state.efd, eq.tm, v, i, 377.0);
    };
    const auto r0 = rates(0.0), r1 = rates(1.0), r2 = rates(2.0);
    CHECK((r2.eq_p - r0.eq_p) == doctest::Approx(2.0 * (r1.eq_p - r0.eq_p)).epsilon(1e-12));
    CHECK((r2.ed_p - r0.ed_p) == doctest::Approx(2.0 * (r1.ed_p - r0.ed_p)).epsilon(1e-12));
    CHECK((r2.psi_kd - r0.psi_kd) == doctest::Approx(2.0 * (r1.psi_kd - r0.psi_kd)).epsilon(1e-12));
    CHECK((r2.psi_kq - r0.psi_kq) == doctest::Approx(2.0 * (r1.psi_kq - r0.psi_kq)).epsilon(1e-12));
}

TEST_CASE("exciter holds, clamps and passes the gain") {
    const auto m = sample_machine(0.0, 0.0);
    const MachineEquilibrium eq = machine_equilibrium(m, Phasor(1.0, 0.0), Phasor(0.5, -0.2));
    const double vt = 1.0;
    SUBCASE("equilibrium") {
        const ExciterOutput out = st1a_output(m.st1a, eq.state, eq.vref, vt);
        CHECK(out.efd == doctest::Approx(eq.state.efd).epsilon(1e-14));
        CHECK(std::abs(out.v_sensed) < 1e-14);
        CHECK(std::abs(out.lead_lag) < 1e-14);
    }
    SUBCASE("extreme error hits the ceiling") {
        const ExciterOutput out = st1a_output(m.st1a, eq.state, eq.vref + 10.0, 0.9);
        CHECK(out.efd == m.st1a.vrmax * 0.9);
        const ExciterOutput low = st1a_output(m.st1a, eq.state, eq.vref - 10.0, 0.9);
        CHECK(low.efd == m.st1a.vrmin * 0.9);
    }
    SUBCASE("equal lead and lag is a pure gain") {
        netmodel::St1aParameters p = m.st1a;
        p.tb = p.tc = 1.0;
        MachineState s = eq.state;
        s.v_sensed = vt;
        const double e = 0.002;
        const ExciterOutput out = st1a_output(p, s, vt + e, vt);
        CHECK(out.efd == doctest::Approx(p.ka * e).epsilon(1e-12));
    }
}

TEST_CASE("balanced network gives machines a pure positive sequence") {
    const DynamicSystem& sys = ieee39_system();
    const auto v = sys.solve_network(sys.initial_states());
    const auto& c = sys.grid().compiled();
    for (const auto& g : ieee39().generators) {
        const std::size_t b = *ieee39().bus_index(g.bus);
        const PhaseTriple abc{v[c.node(b, 0)], v[c.node(b, 1)], v[c.node(b, 2)]};
        const auto seq = numerics::fortescue_decompose(abc);
        INFO(g.id);
        CHECK(std::abs(seq.v2) < 1e-9);
        CHECK(std::abs(seq.v0) < 1e-9);
        CHECK(std::abs(seq.v1) == doctest::Approx(std::abs(abc[0])).epsilon(1e-9));
    }
}

TEST_CASE("machines read the positive sequence of an unbalanced terminal") {
    netmodel::Network net = ieee39();
    netmodel::Load extra;
    extra.id = "XA";
    extra.bus = "39";
    extra.phases = PhaseSet::parse("A");
    extra.kw = {80000.0};
    extra.kvar = {20000.0};
    extra.kv = tdsim::test::phase_kv(345.0);
    net.loads.push_back(extra);
    net.reindex();
    const PowerFlowSolution pf = powerflow::solve_transmission_nr(net);
    const DynamicSystem sys = init_dynamics(net, pf);
    const auto v = sys.solve_network(sys.initial_states());
    const auto rates = sys.rates(sys.initial_states(), v);
    const auto& c = sys.grid().compiled();
    for (std::size_t k = 0; k < net.generators.size(); ++k) {
        const std::size_t b = *net.bus_index(net.generators[k].bus);
        const Phasor a(-0.5, std::sqrt(3.0) / 2.0);
        const Phasor va = v[c.node(b, 0)], vb = v[c.node(b, 1)], vc = v[c.node(b, 2)];
        const Phasor v1 = (va + a * vb + a * a * vc) / 3.0;
        INFO(net.generators[k].id);
        CHECK(std::abs(rates[k].v1 - v1) < 1e-12);
    }
    const std::size_t b39 = *net.bus_index("39");
    const auto seq = numerics::fortescue_decompose({v[c.node(b39, 0)], v[c.node(b39, 1)], v[c.node(b39, 2)]});
    CHECK(std::abs(seq.v2) > 1e-4);
}

TEST_CASE("fault stamp adds exactly 1/R on the faulted phase") {
    DynamicNetwork grid = ieee39_system().grid();
    const auto before = grid.admittance();
    const std::size_t b = *ieee39().bus_index("12");
    const std::size_t na = grid.compiled().node(b, 0);
    grid.apply(fault(0.0, "12", "A", 18.0));
    const auto after = grid.admittance();
    const double added_siemens =
        (after.coeff(na, na) - before.coeff(na, na)).real() * grid.admittance_base_siemens(b);
    CHECK(added_siemens == doctest::Approx(1.0 / 18.0).epsilon(1e-12));
    CHECK(after.coeff(na, na).imag() == before.coeff(na, na).imag());
    const std::size_t nb = grid.compiled().node(b, 1);
    CHECK(after.coeff(nb, nb) == before.coeff(nb, nb));
    CHECK(grid.fault_active("12"));
}

TEST_CASE("apply then clear restores the admittance bit for bit") {
    DynamicNetwork grid = ieee39_system().grid();
    const auto before = dense(grid.admittance());
    grid.apply(fault(0.0, "12", "A", 18.0));
    grid.apply(clear(0.0, "12", "A"));
    CHECK(dense(grid.admittance()) == before);
    CHECK_FALSE(grid.fault_active("12"));
    grid.apply({0.0, EventKind::OpenBranch, "L16_17", {}, kBoltedFaultOhm, true});
    grid.apply({0.0, EventKind::CloseBranch, "L16_17", {}, kBoltedFaultOhm, true});
    CHECK(dense(grid.admittance()) == before);
}

TEST_CASE("invalid event transitions are rejected") {
    DynamicNetwork grid = ieee39_system().grid();
    CHECK(code_of([&] { grid.apply(clear(0.0, "12", "A")); }) == ErrorCode::InvalidTransition);
    CHECK(code_of([&] { grid.apply(fault(0.0, "nope", "A", 1.0)); }) == ErrorCode::UnknownTarget);
    CHECK(code_of([&] { grid.apply({0.0, EventKind::CloseBranch, "L16_17", {}, 1.0, true}); }) ==
          ErrorCode::InvalidTransition);
    grid.apply(fault(0.0, "12", "A", 1.0));
    CHECK(code_of([&] { grid.apply(fault(0.0, "12", "A", 1.0)); }) == ErrorCode::InvalidTransition);
}

TEST_CASE("opening both substation breakers de-energizes the island") {
    const DynamicSystem sys = init_dynamics(tdsim::test::default_hybrid(), tdsim::test::hybrid_unified());
    DynamicNetwork grid = sys.grid();
    const std::size_t live = grid.energized_nodes();
    grid.apply({0.0, EventKind::OpenBranch, "SUB12.B1", {}, kBoltedFaultOhm, true});
    grid.apply({0.0, EventKind::OpenBranch, "SUB12.B2", {}, kBoltedFaultOhm, true});
    CHECK(grid.branch_open("SUB12.B1"));
    CHECK(grid.energized_nodes() < live);
    const auto v = grid.solve(sys.emfs(sys.initial_states()));
    const auto& c = grid.compiled();
    const std::size_t h2 = *grid.network().bus_index("SUB12.H2");
    for (int p = 0; p < 3; ++p) CHECK(v[c.node(h2, p)] == Phasor{});
    const std::size_t b12 = *grid.network().bus_index("12");
    for (int p = 0; p < 3; ++p) CHECK(std::abs(v[c.node(b12, p)]) > 0.9);
}

TEST_CASE("no-event run holds the equilibrium for five seconds") {
    DynamicScenario sc;
    sc.duration = 5.0;
    sc.probes = {{"d", ProbeQuantity::Delta, "G30", 0}, {"w", ProbeQuantity::Speed, "G30", 0}};
    const TimeSeries ts = simulate(ieee39_system(), sc);
    CHECK(ts.time.size() == 1201);
    const auto& d = *ts.find("d");
    const auto& w = *ts.find("w");
    for (std::size_t k = 0; k < d.size(); ++k) {
        CHECK(std::abs(d[k] - d[0]) < 1e-6);
        CHECK(std::abs(w[k]) < 1e-6);
    }
}

TEST_CASE("time grid is uniform and events snap to the nearest step") {
    DynamicScenario sc;
    sc.dt = 0.01;
    sc.duration = 0.3;
    sc.events = {fault(0.1012, "12", "A", 18.0), clear(0.2049, "12", "A")};
    sc.probes = {{"v", ProbeQuantity::VoltageMagnitude, "12", 0}};
    const TimeSeries ts = simulate(ieee39_system(), sc);
    REQUIRE(ts.time.size() == 31);
    for (std::size_t k = 0; k < ts.time.size(); ++k) CHECK(ts.time[k] == doctest::Approx(0.01 * k).epsilon(1e-14));
    REQUIRE(ts.events.size() == 2);
    CHECK(ts.events[0].step == 10);
    CHECK(ts.events[0].snapped_time == doctest::Approx(0.1));
    CHECK(ts.events[1].step == 20);
    const auto& v = *ts.find("v");
    CHECK(v[9] > v[10] + 0.01);
    CHECK(v[19] < v[20] - 0.01);
    CHECK(ts.dt == 0.01);
    CHECK(!ts.scenario_hash.empty());
}

TEST_CASE("probe naming no bus or machine is an unknown target") {
    DynamicScenario sc;
    sc.duration = 0.1;
    sc.probes = {{"v", ProbeQuantity::VoltageMagnitude, "nope", 0}};
    CHECK(code_of([&] { (void)simulate(ieee39_system(), sc); }) == ErrorCode::UnknownTarget);
    sc.probes = {{"d", ProbeQuantity::Delta, "G99", 0}};
    CHECK(code_of([&] { (void)simulate(ieee39_system(), sc); }) == ErrorCode::UnknownTarget);
}

TEST_CASE("scenario JSON round-trips and floors the fault resistance") {
    const DynamicScenario sc = parse_scenario(R"({"dt": 0.005, "duration": 0.5,
      "events": [{"time": 0.1, "kind": "apply_shunt_fault", "target": "12", "phases": "A", "resistance_ohm": 0.0}],
      "probes": [{"id": "m", "bus": "12", "phase": "A", "quantity": "magnitude"},
                 {"id": "g", "machine": "G30", "quantity": "delta"}]})");
    REQUIRE(sc.events.size() == 1);
    CHECK(sc.events[0].resistance_ohm == kBoltedFaultOhm);
    CHECK(sc.probes[1].machine());
    CHECK(parse_scenario(serialize_scenario(sc)) == sc);
    CHECK(scenario_hash(sc) == scenario_hash(parse_scenario(serialize_scenario(sc))));
    CHECK(code_of([] { (void)parse_scenario("{\"dt\": }"); }) == ErrorCode::SyntaxError);
}

TEST_CASE("SLG fault sags the faulted phase and recovers after clearing") {
    DynamicScenario sc;
    sc.duration = 1.0;
    sc.events = {fault(10.0 / 60.0, "12", "A", 18.0), clear(20.0 / 60.0, "12", "A")};
    sc.probes = {{"a", ProbeQuantity::VoltageMagnitude, "12", 0}, {"b", ProbeQuantity::VoltageMagnitude, "12", 1}};
    const TimeSeries ts = simulate(ieee39_system(), sc);
    const auto& a = *ts.find("a");
    const auto& b = *ts.find("b");
    const std::size_t on = 40, off = 80;
    for (std::size_t k = on; k < off; ++k) CHECK(a[k] < b[k]);
    CHECK(a[on] < a[0] - 0.05);
    CHECK(std::abs(a.back() - a[0]) < 0.02);
}
