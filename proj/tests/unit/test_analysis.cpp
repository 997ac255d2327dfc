#include <doctest.h>

#include <cmath>
#include <functional>

#include "support/fixtures.hpp"
#include "tdsim/analysis/export.hpp"
#include "tdsim/analysis/imbalance.hpp"
#include "tdsim/analysis/sag.hpp"
#include "tdsim/error.hpp"
#include "tdsim/numerics/phasor.hpp"

using namespace tdsim;
using namespace tdsim::analysis;
using numerics::from_polar_deg;
using numerics::Phasor;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::Io;
}

// One voltage-magnitude probe sampled at step dt.
dynamics::TimeSeries trace(const std::vector<double>& v, double dt) {
    dynamics::TimeSeries ts;
    ts.dt = dt;
    for (std::size_t k = 0; k < v.size(); ++k) ts.time.push_back(dt * static_cast<double>(k));
    ts.probe_ids = {"M"};
    ts.probes = {{"M", dynamics::ProbeQuantity::VoltageMagnitude, "B", 0}};
    ts.values = {v};
    return ts;
}

std::vector<double> with_dip(std::vector<double> v, std::size_t from, std::size_t steps, double depth) {
    for (std::size_t k = from; k < from + steps; ++k) v[k] = depth;
    return v;
}

powerflow::PowerFlowSolution hand_solution() {
    powerflow::PowerFlowSolution s;
    s.bus_ids = {"T1", "D1", "D2"};
    s.bus_phases = {netmodel::PhaseSet::abc(), netmodel::PhaseSet::abc(), netmodel::PhaseSet::parse("A")};
    s.voltage = {numerics::balanced(1.0),
                 {from_polar_deg(1.02, 0.0), from_polar_deg(1.00, -120.0), from_polar_deg(0.98, 120.0)},
                 {Phasor(1.0, 0.0), {}, {}}};
    s.converged = true;
    s.reindex();
    return s;
}

}  // namespace

TEST_CASE("phase-deviation imbalance examples") {
    CHECK(voltage_imbalance_phase({1.0, 1.0, 1.0}) == 0.0);
    CHECK(voltage_imbalance_phase({1.02, 1.00, 0.98}) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(voltage_imbalance_phase({0.95, 1.00, 1.05}) == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(code_of([] { (void)voltage_imbalance_phase({1.0, 0.0, 1.0}); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("negative-sequence imbalance examples") {
    CHECK(voltage_imbalance_seq(numerics::balanced(1.0)) < 1e-13);
    const numerics::PhaseTriple neg{Phasor(1.0, 0.0), from_polar_deg(1.0, 120.0), from_polar_deg(1.0, -120.0)};
    CHECK(code_of([&] { (void)voltage_imbalance_seq(neg); }) == ErrorCode::DegenerateInput);
    // Direct symmetrical-component sums with a = 1∠120°.
    const numerics::PhaseTriple v{from_polar_deg(1.0, 0.0), from_polar_deg(0.95, -121.0), from_polar_deg(1.02, 122.0)};
    const Phasor a = from_polar_deg(1.0, 120.0);
    const Phasor v1 = (v[0] + a * v[1] + a * a * v[2]) / 3.0;
    const Phasor v2 = (v[0] + a * a * v[1] + a * v[2]) / 3.0;
    CHECK(voltage_imbalance_seq(v) == doctest::Approx(100.0 * std::abs(v2) / std::abs(v1)).epsilon(1e-12));
}

TEST_CASE("report over hand-set voltages") {
    const ImbalanceReport r = imbalance_report(hand_solution());
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].bus == "T1");
    CHECK(r.records[0].phase_pct < 1e-12);
    CHECK(r.records[1].bus == "D1");
    CHECK(r.records[1].phase_pct == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.records[1].magnitudes[0] == doctest::Approx(1.02));
    CHECK(r.summary.count == 2);
    CHECK(r.summary.max == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(r.summary.fraction_above_1pct == doctest::Approx(0.5));
    const ImbalanceReport scoped = imbalance_report(hand_solution(), Scope::parse("D"));
    REQUIRE(scoped.records.size() == 1);
    CHECK(scoped.records[0].bus == "D1");
}

TEST_CASE("balanced solution reports no imbalance") {
    powerflow::PowerFlowSolution s = hand_solution();
    s.voltage[1] = numerics::balanced(from_polar_deg(0.97, -3.0));
    const ImbalanceReport r = imbalance_report(s);
    for (const auto& rec : r.records) {
        CHECK(rec.phase_pct < 1e-12);
        CHECK(rec.seq_pct < 1e-12);
    }
    CHECK(r.summary.fraction_above_1pct == 0.0);
}

TEST_CASE("scope parsing") {
    const Scope s = Scope::parse("F12_,12");
    CHECK(s.contains("F12_3.45"));
    CHECK(s.contains("12"));
    CHECK(s.contains("120"));
    CHECK_FALSE(s.contains("F18_1.1"));
    CHECK(Scope{}.contains("anything"));
}

TEST_CASE("boundary bus is the least imbalanced in its feeder scope") {
    const auto& sol = tdsim::test::hybrid_unified();
    for (const auto& sub : tdsim::test::default_hybrid().substations) {
        INFO(sub.bus);
        const ImbalanceReport r = imbalance_report(sol, Scope::parse("F" + sub.bus + "_"));
        REQUIRE(!r.records.empty());
        const ImbalanceReport t = imbalance_report(sol, Scope{{sub.bus}});
        double tx = -1.0;
        for (const auto& rec : t.records) {
            if (rec.bus == sub.bus) tx = rec.phase_pct;
        }
        REQUIRE(tx >= 0.0);
        CHECK(tx <= r.summary.min);
    }
}

TEST_CASE("ITI classification examples") {
    CHECK(iti_classify(0.0, 0.01) == ItiClass::WithinEnvelope);
    CHECK(iti_classify(0.4, 10.0 / 60.0) == ItiClass::UndervoltageViolation);
    CHECK(iti_classify(0.95, 100.0) == ItiClass::WithinEnvelope);
    CHECK(iti_classify(0.75, 1.0) == ItiClass::UndervoltageViolation);
    CHECK(iti_classify(0.85, 5.0) == ItiClass::WithinEnvelope);
    CHECK(iti_classify(0.85, 20.0) == ItiClass::UndervoltageViolation);
}

TEST_CASE("ITI envelope breakpoints") {
    CHECK(iti_minimum_voltage(0.0199) == 0.0);
    CHECK(iti_minimum_voltage(0.02) == 0.7);
    CHECK(iti_minimum_voltage(0.5) == 0.7);
    CHECK(iti_minimum_voltage(0.5001) == 0.8);
    CHECK(iti_minimum_voltage(10.0) == 0.8);
    CHECK(iti_minimum_voltage(10.001) == 0.9);
    CHECK(iti_classify(0.7, 0.3) == ItiClass::WithinEnvelope);
    const auto env = iti_envelope();
    CHECK(env.front() == std::pair{0.0, 0.0});
    CHECK(env.back().second == 0.9);
}

TEST_CASE("flat trace has no sag") {
    CHECK(sag_trace(trace(std::vector<double>(100, 1.0), 0.01), "M").empty());
}

TEST_CASE("ten-cycle dip to 0.4 pu is one violation") {
    const double dt = 1.0 / 240.0;
    const auto ts = trace(with_dip(std::vector<double>(240, 1.0), 40, 40, 0.4), dt);
    const auto ev = sag_trace(ts, "M");
    REQUIRE(ev.size() == 1);
    CHECK(ev[0].start == doctest::Approx(40 * dt));
    CHECK(ev[0].duration == doctest::Approx(10.0 / 60.0));
    CHECK(ev[0].residual == 0.4);
    CHECK(ev[0].bus == "B");
    CHECK(ev[0].classification == ItiClass::UndervoltageViolation);
}

TEST_CASE("two separated dips are classified separately") {
    const double dt = 0.01;
    auto v = with_dip(std::vector<double>(300, 1.0), 20, 10, 0.85);
    v = with_dip(v, 100, 100, 0.3);
    const auto ev = sag_trace(trace(v, dt), "M");
    REQUIRE(ev.size() == 2);
    CHECK(ev[0].duration == doctest::Approx(0.1));
    CHECK(ev[0].classification == ItiClass::WithinEnvelope);
    CHECK(ev[1].duration == doctest::Approx(1.0));
    CHECK(ev[1].classification == ItiClass::UndervoltageViolation);
}

TEST_CASE("sag errors") {
    const auto ts = trace(std::vector<double>(10, 1.0), 0.01);
    CHECK(code_of([&] { (void)sag_trace(ts, "nope"); }) == ErrorCode::UnknownProbe);
    auto speed = ts;
    speed.probes[0].quantity = dynamics::ProbeQuantity::Speed;
    CHECK(code_of([&] { (void)sag_trace(speed, "M"); }) == ErrorCode::DegenerateInput);
}

TEST_CASE("numbers are written with twelve significant digits") {
    CHECK(format_number(1.0 / 3.0) == "0.333333333333");
    CHECK(format_number(0.0) == "0");
    CHECK(format_number(-2.5e-7) == "-2.5e-07");
}

TEST_CASE("solution CSV has one row per present bus phase") {
    const std::string csv = solution_csv(hand_solution());
    CHECK(csv.rfind("bus,phase,v_pu,angle_deg,kw,kvar\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 + 3 + 1);
    CHECK(csv.find("D1,A,1.02,0,") != std::string::npos);
}

TEST_CASE("voltage table lines up probes by time") {
    const auto ts = trace({1.0, 0.5, 1.0}, 0.5);
    CHECK(voltage_table_csv(ts) == "time,M\n0,1\n0.5,0.5\n1,1\n");
}
