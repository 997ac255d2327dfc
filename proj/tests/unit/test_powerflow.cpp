#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "support/fixtures.hpp"
#include "tdsim/error.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/numerics/phasor.hpp"
#include "tdsim/powerflow/coupled.hpp"
#include "tdsim/powerflow/fbs.hpp"
#include "tdsim/powerflow/injection.hpp"
#include "tdsim/powerflow/newton.hpp"

using namespace tdsim;
using namespace tdsim::powerflow;
using netmodel::Network;
using netmodel::PhaseSet;
using tdsim::test::ieee123;
using tdsim::test::ieee39;

namespace {

struct ReferenceVoltage {
    std::string bus;
    int phase;
    double v_pu;
    double angle_deg;
};

std::vector<ReferenceVoltage> ieee123_reference() {
    std::ifstream in(tdsim::test::data_path("reference/ieee123_opendss_vln.csv"));
    REQUIRE(in.good());
    std::vector<ReferenceVoltage> out;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::stringstream row(line);
        std::string bus, phase, v, ang;
        std::getline(row, bus, ',');
        std::getline(row, phase, ',');
        std::getline(row, v, ',');
        std::getline(row, ang, ',');
        out.push_back({bus, phase[0] - 'A', std::stod(v), std::stod(ang)});
    }
    return out;
}

// Feeder with every load, DG, capacitor and line charging removed.
Network unloaded(Network net) {
    net.loads.clear();
    net.dgs.clear();
    net.shunts.clear();
    for (auto& br : net.branches) br.y_shunt = numerics::PhaseMatrix(br.phases.size());
    net.reindex();
    return net;
}

void set_regulator_taps(Network& net, int tap) {
    for (auto& br : net.branches) {
        if (br.regulator) std::fill(br.regulator->taps.begin(), br.regulator->taps.end(), tap);
    }
}

double max_voltage_difference(const PowerFlowSolution& a, const PowerFlowSolution& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.bus_ids.size(); ++i) {
        const auto j = b.bus(a.bus_ids[i]);
        REQUIRE(j.has_value());
        for (int p = 0; p < 3; ++p) worst = std::max(worst, std::abs(a.voltage[i][p] - b.voltage[*j][p]));
    }
    return worst;
}

bool starts_with(const std::string& s, const std::string& prefix) { return s.rfind(prefix, 0) == 0; }

// Removes every bus whose id starts with `prefix` and every element touching one.
Network without_prefix(Network net, const std::string& prefix) {
    std::set<std::string> gone;
    for (const auto& b : net.buses) {
        if (starts_with(b.id, prefix)) gone.insert(b.id);
    }
    auto on_gone = [&](const std::string& bus) { return gone.count(bus) != 0; };
    std::erase_if(net.buses, [&](const auto& b) { return on_gone(b.id); });
    std::erase_if(net.branches, [&](const auto& b) { return on_gone(b.from) || on_gone(b.to); });
    std::erase_if(net.loads, [&](const auto& x) { return on_gone(x.bus); });
    std::erase_if(net.shunts, [&](const auto& x) { return on_gone(x.bus); });
    std::erase_if(net.dgs, [&](const auto& x) { return on_gone(x.bus); });
    net.reindex();
    return net;
}

ErrorCode code_of(const std::function<void()>& f, std::string* subject = nullptr) {
    try {
        f();
    } catch (const Error& e) {
        if (subject) *subject = e.subject();
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Io;
}

}  // namespace

TEST_CASE("IEEE 123 sweep matches the published node voltages") {
    const PowerFlowSolution sol = solve_distribution_fbs(ieee123());
    CHECK(sol.converged);
    const auto ref = ieee123_reference();
    CHECK(ref.size() > 250);
    double worst = 0.0;
    for (const auto& r : ref) {
        INFO(r.bus << " phase " << r.phase);
        const auto b = sol.bus(r.bus);
        REQUIRE(b.has_value());
        const double dv = std::abs(std::abs(sol.voltage[*b][r.phase]) - r.v_pu);
        CHECK(dv < 0.001);
        worst = std::max(worst, dv);
    }
    MESSAGE("worst magnitude deviation " << worst);
}

TEST_CASE("zero-load feeder holds the source voltage everywhere") {
    Network net = unloaded(ieee123());
    set_regulator_taps(net, 0);
    PowerFlowOptions o;
    o.tolerance = 1e-12;
    const PowerFlowSolution sol = solve_distribution_fbs(net, std::nullopt, o);
    const PhaseTriple vs = net.sources.front().voltage;
    int live = 0;
    for (std::size_t b = 0; b < sol.bus_ids.size(); ++b) {
        for (int p : sol.bus_phases[b].list()) {
            if (sol.voltage[b][p] == Phasor{}) continue;
            ++live;
            INFO(sol.bus_ids[b] << " phase " << p);
            CHECK(std::abs(sol.voltage[b][p] - vs[p]) < 1e-9);
        }
    }
    CHECK(live > 250);
}

TEST_CASE("zero-load regulator output is the tap ratio times its input") {
    Network net = unloaded(ieee123());
    set_regulator_taps(net, 5);
    const PowerFlowSolution sol = solve_distribution_fbs(net);
    int checked = 0;
    for (const auto& br : net.branches) {
        if (!br.regulator) continue;
        const PhaseTriple vf = sol.voltage_at(br.from);
        const PhaseTriple vt = sol.voltage_at(br.to);
        for (int p : br.phases.list()) {
            INFO(br.id << " phase " << p);
            CHECK(std::abs(vt[p] - (1.0 + 0.00625 * 5) * vf[p]) < 1e-9);
            ++checked;
        }
    }
    CHECK(checked >= 6);
}

TEST_CASE("two-bus sweep matches the scalar fixed point") {
    const Phasor z(0.01, 0.02);
    const Phasor s(1.0, 0.5);
    Phasor v(1.0, 0.0);
    for (int k = 0; k < 200; ++k) v = 1.0 - z * std::conj(s / v);
    PowerFlowOptions o;
    o.tolerance = 1e-12;
    const PowerFlowSolution sol = solve_distribution_fbs(tdsim::test::two_bus_feeder(z, s), std::nullopt, o);
    CHECK(std::abs(sol.voltage_at("L")[0] - v) < 1e-8);
}

TEST_CASE("sweep rejects a loop") {
    Network net = tdsim::test::two_bus_feeder({0.01, 0.02}, {0.1, 0.05});
    net.branches.push_back(net.branches.front());
    net.branches.back().id = "LN2";
    net.reindex();
    CHECK(code_of([&] { (void)solve_distribution_fbs(net); }) == ErrorCode::NotRadial);
}

TEST_CASE("sweep reports voltage collapse on a heavy load") {
    const Network net = tdsim::test::two_bus_feeder({0.05, 0.1}, {20.0, 10.0});
    const ErrorCode c = code_of([&] { (void)solve_distribution_fbs(net); });
    CHECK((c == ErrorCode::VoltageCollapse || c == ErrorCode::NoConvergence));
}

TEST_CASE("no-load all-generator network sits at 1 pu balanced") {
    Network net = unloaded(ieee39());
    for (auto& br : net.branches) {
        if (br.transformer) std::fill(br.transformer->taps.begin(), br.transformer->taps.end(), 1.0);
    }
    for (auto& g : net.generators) {
        g.v_pu = 1.0;
        g.p_mw = 0.0;
        g.angle_deg = 0.0;
    }
    const PowerFlowSolution sol = solve_transmission_nr(net);
    CHECK(sol.inner_iterations <= 1);
    const PhaseTriple want = numerics::balanced(1.0);
    for (std::size_t b = 0; b < sol.bus_ids.size(); ++b) {
        for (int p = 0; p < 3; ++p) CHECK(std::abs(sol.voltage[b][p] - want[p]) < 1e-9);
    }
}

TEST_CASE("two-bus Newton matches the closed-form quadratic") {
    const Phasor z(0.02, 0.08);
    const Phasor s(0.9, 0.4);
    // |V1|^2 |V2|^2 = (|V2|^2 + RP + XQ)^2 + (XP - RQ)^2 with V1 = 1.
    const double r = z.real(), x = z.imag(), p = s.real(), q = s.imag();
    const double b = 2.0 * (r * p + x * q) - 1.0;
    const double c = std::norm(z) * std::norm(s);
    const double u = (-b + std::sqrt(b * b - 4.0 * c)) / 2.0;
    const Phasor v2 = std::conj(u + z * std::conj(s));
    PowerFlowOptions o;
    o.tolerance = 1e-13;
    const PowerFlowSolution sol = solve_transmission_nr(tdsim::test::two_bus_transmission(z, s), {}, o);
    const PhaseTriple got = sol.voltage_at("2");
    const PhaseTriple want = numerics::balanced(v2);
    for (int ph = 0; ph < 3; ++ph) CHECK(std::abs(got[ph] - want[ph]) < 1e-10);
    CHECK(std::abs(sol.voltage_at("1")[0] - Phasor(1.0, 0.0)) < 1e-10);
}

TEST_CASE("transmission-only model solves identically through the unified path") {
    const PowerFlowSolution a = solve(ieee39());
    const PowerFlowSolution b = solve_transmission_nr(ieee39());
    REQUIRE(a.bus_ids == b.bus_ids);
    CHECK(a.voltage == b.voltage);
}

TEST_CASE("coupled loop without circuits takes one round") {
    PowerFlowOptions o;
    o.mode = CouplingMode::Coupled;
    const PowerFlowSolution a = solve_iterative_coupled(ieee39(), o);
    CHECK(a.rounds.size() == 1);
    PowerFlowOptions inner;
    inner.tolerance = 1e-3 * std::min(o.tolerance, o.boundary_tolerance);
    const PowerFlowSolution b = solve_transmission_nr(ieee39(), {}, inner);
    REQUIRE(a.bus_ids == b.bus_ids);
    CHECK(a.voltage == b.voltage);
}

TEST_CASE("open feeder breaker drops the feeder and leaves the rest as if deleted") {
    Network joined = netmodel::join_boundaries(tdsim::test::default_hybrid());
    const Network reduced = without_prefix(joined, "F18_3.");
    const auto hb = joined.branch_index("SUB18.HB3");
    REQUIRE(hb.has_value());
    joined.branches[*hb].closed = false;
    PowerFlowOptions o;
    o.tolerance = 1e-9;
    const PowerFlowSolution open = solve_unified(joined, o);
    const PowerFlowSolution ref = solve_unified(reduced, o);
    int dead = 0;
    for (std::size_t b = 0; b < open.bus_ids.size(); ++b) {
        if (!starts_with(open.bus_ids[b], "F18_3.")) continue;
        ++dead;
        for (int p = 0; p < 3; ++p) CHECK(open.voltage[b][p] == Phasor{});
    }
    CHECK(dead > 100);
    CHECK(max_voltage_difference(ref, open) < 1e-8);
}

TEST_CASE("coupled trace decreases after the second round") {
    const PowerFlowSolution& sol = tdsim::test::hybrid_coupled();
    CHECK(sol.converged);
    REQUIRE(sol.rounds.size() >= 2);
    for (std::size_t k = 2; k < sol.rounds.size(); ++k) CHECK(sol.rounds[k].max_dv < sol.rounds[k - 1].max_dv);
    CHECK(sol.rounds.back().max_dv <= 1e-6);
}

TEST_CASE("overloaded feeders fail with the circuit named") {
    Network net = tdsim::test::default_hybrid();
    for (auto& l : net.loads) {
        if (!starts_with(l.bus, "F18_")) continue;
        for (double& v : l.kw) v *= 50.0;
        for (double& v : l.kvar) v *= 50.0;
    }
    PowerFlowOptions o;
    o.mode = CouplingMode::Coupled;
    std::string subject;
    const ErrorCode c = code_of([&] { (void)solve(net, o); }, &subject);
    CHECK((c == ErrorCode::VoltageCollapse || c == ErrorCode::NoConvergence));
    CHECK(starts_with(subject, "S18_"));
}

TEST_CASE("DG injection follows the conjugate power rule") {
    const double base = 100000.0 / 3.0;
    netmodel::DistributedGenerator dg;
    dg.id = "PV";
    dg.bus = "X";
    dg.phases = PhaseSet::parse("A");
    SUBCASE("zero setpoint") {
        dg.phases = PhaseSet::abc();
        const DgInjection inj = dg_injection(dg, numerics::balanced(1.0), base);
        for (int p = 0; p < 3; ++p) CHECK(inj.current[p] == Phasor{});
    }
    SUBCASE("single phase") {
        dg.p_kw = 100.0;
        const DgInjection inj = dg_injection(dg, numerics::balanced(1.0), base);
        CHECK(std::abs(inj.current[0] - Phasor(100.0 / base, 0.0)) < 1e-15);
        CHECK(inj.current[1] == Phasor{});
        CHECK(inj.current[2] == Phasor{});
        CHECK_FALSE(inj.cutout);
    }
    SUBCASE("three phase balanced") {
        dg.phases = PhaseSet::abc();
        dg.p_kw = 300.0;
        const DgInjection inj = dg_injection(dg, numerics::balanced(1.0), base);
        for (int p = 0; p < 3; ++p) {
            CHECK(std::abs(inj.current[p]) == doctest::Approx(100.0 / base));
            CHECK(numerics::angle_deg(inj.current[p]) == doctest::Approx(std::array{0.0, -120.0, 120.0}[p]));
        }
    }
    SUBCASE("low voltage cutout") {
        dg.p_kw = 100.0;
        const DgInjection inj = dg_injection(dg, {Phasor(0.1, 0.0), {}, {}}, base);
        CHECK(inj.cutout);
        CHECK(inj.current[0] == Phasor{});
    }
}

TEST_CASE("converged solution has mismatch within tolerance") {
    const PowerFlowSolution sol = solve_transmission_nr(ieee39());
    CHECK(sol.converged);
    CHECK(sol.max_mismatch <= 1e-6);
    const double base = tdsim::test::phase_kva(ieee39().mva_base);
    std::vector<PhaseTriple> v = sol.voltage;
    const auto res = mismatch(ieee39(), v);
    for (const auto& r : res) {
        for (int p = 0; p < 3; ++p) CHECK(std::abs(r[p]) <= 1e-6 * base);
    }
}

TEST_CASE("flat start residual equals the scheduled load") {
    Network net = unloaded(ieee39());
    net.loads = ieee39().loads;
    for (auto& br : net.branches) {
        if (br.transformer) std::fill(br.transformer->taps.begin(), br.transformer->taps.end(), 1.0);
    }
    net.reindex();
    const std::vector<PhaseTriple> flat(net.buses.size(), numerics::balanced(1.0));
    const auto res = mismatch(net, flat);
    std::set<std::string> gen_buses;
    for (const auto& g : net.generators) gen_buses.insert(g.bus);
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        INFO(net.buses[b].id);
        PhaseTriple want{};
        if (!gen_buses.count(net.buses[b].id)) {
            for (const auto& l : net.loads) {
                if (l.bus != net.buses[b].id) continue;
                for (int p = 0; p < 3; ++p) want[p] -= Phasor(l.kw[p], l.kvar[p]);
            }
        }
        for (int p = 0; p < 3; ++p) CHECK(std::abs(res[b][p] - want[p]) < 1e-6);
    }
}

TEST_CASE("perturbing one voltage changes the residual only next to it") {
    const Network& net = ieee39();
    const PowerFlowSolution sol = solve_transmission_nr(net);
    const std::string target = "16";
    std::set<std::string> near{target};
    for (const auto& br : net.branches) {
        if (br.from == target) near.insert(br.to);
        if (br.to == target) near.insert(br.from);
    }
    std::vector<PhaseTriple> v = sol.voltage;
    const std::size_t t = *sol.bus(target);
    for (int p = 0; p < 3; ++p) v[t][p] += 0.01;
    const auto base = mismatch(net, sol.voltage);
    const auto bumped = mismatch(net, v);
    bool changed_at_target = false;
    for (std::size_t b = 0; b < net.buses.size(); ++b) {
        double d = 0.0;
        for (int p = 0; p < 3; ++p) d = std::max(d, std::abs(bumped[b][p] - base[b][p]));
        if (!near.count(net.buses[b].id)) {
            INFO(net.buses[b].id);
            CHECK(d == 0.0);
        }
        if (net.buses[b].id == target) changed_at_target = d > 1.0;
    }
    CHECK(changed_at_target);
}

TEST_CASE("regulator auto mode brings taps into band") {
    PowerFlowOptions o;
    o.regulators = RegulatorControl::Auto;
    const PowerFlowSolution sol = solve_distribution_fbs(ieee123(), std::nullopt, o);
    CHECK(sol.converged);
    CHECK(!sol.regulator_taps.empty());
    auto taps = sol.regulator_taps;
    CHECK_FALSE(regulator_control_step(ieee123(), sol, taps));
}
