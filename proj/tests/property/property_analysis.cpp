#include <doctest.h>

#include <algorithm>
#include <array>
#include <cmath>

#include "support/generators.hpp"
#include "tdsim/analysis/imbalance.hpp"
#include "tdsim/analysis/sag.hpp"

using namespace tdsim;
using namespace tdsim::analysis;
using tdsim::test::for_all;
using tdsim::test::Rng;

namespace {

// Phasors near a balanced set, so that both metrics are defined.
numerics::PhaseTriple near_balanced(Rng& rng) {
    numerics::PhaseTriple v = numerics::balanced(std::polar(rng.uniform(0.5, 1.2), rng.uniform(-3.0, 3.0)));
    for (auto& x : v) x *= std::polar(rng.uniform(0.85, 1.15), rng.uniform(-0.1, 0.1));
    return v;
}

std::array<double, 3> magnitudes(const numerics::PhaseTriple& v) {
    return {std::abs(v[0]), std::abs(v[1]), std::abs(v[2])};
}

}  // namespace

TEST_CASE("both imbalance metrics are scale invariant") {
    for_all(100, 500, [](Rng& rng) {
        const auto v = near_balanced(rng);
        const double k = std::exp(rng.uniform(-5.0, 5.0));
        numerics::PhaseTriple w = v;
        for (auto& x : w) x *= k;
        const double p = voltage_imbalance_phase(magnitudes(v));
        const double s = voltage_imbalance_seq(v);
        CHECK(voltage_imbalance_phase(magnitudes(w)) == doctest::Approx(p).epsilon(1e-10).scale(1e-12));
        CHECK(voltage_imbalance_seq(w) == doctest::Approx(s).epsilon(1e-10).scale(1e-12));
        CHECK(p >= 0.0);
        CHECK(s >= 0.0);
    });
}

TEST_CASE("phase-deviation imbalance ignores phase order") {
    for_all(200, 500, [](Rng& rng) {
        std::array<double, 3> m{rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5), rng.uniform(0.5, 1.5)};
        const double base = voltage_imbalance_phase(m);
        std::sort(m.begin(), m.end());
        do {
            CHECK(voltage_imbalance_phase(m) == doctest::Approx(base).epsilon(1e-12).scale(1e-14));
        } while (std::next_permutation(m.begin(), m.end()));
    });
}

TEST_CASE("balanced inputs have zero imbalance on both metrics") {
    for_all(300, 200, [](Rng& rng) {
        const auto v = numerics::balanced(std::polar(rng.uniform(0.1, 2.0), rng.uniform(-3.0, 3.0)));
        CHECK(voltage_imbalance_phase(magnitudes(v)) < 1e-12);
        CHECK(voltage_imbalance_seq(v) < 1e-12);
    });
}

TEST_CASE("ITI classification is monotone in residual and duration") {
    for_all(400, 2000, [](Rng& rng) {
        const double r = rng.uniform(0.0, 1.1);
        const double d = std::exp(rng.uniform(std::log(1e-3), std::log(200.0)));
        const ItiClass c = iti_classify(r, d);
        const double higher = r + rng.uniform(0.0, 0.5);
        const double shorter = d * rng.uniform(0.0, 1.0);
        if (c == ItiClass::WithinEnvelope) {
            CHECK(iti_classify(higher, d) == ItiClass::WithinEnvelope);
            CHECK(iti_classify(r, shorter) == ItiClass::WithinEnvelope);
        }
        CHECK(!(iti_classify(higher, d) == ItiClass::UndervoltageViolation && c == ItiClass::WithinEnvelope));
    });
}

TEST_CASE("sag events partition the samples below threshold") {
    for_all(500, 300, [](Rng& rng) {
        const double dt = rng.uniform(1e-3, 2e-2);
        const std::size_t n = static_cast<std::size_t>(rng.integer(1, 400));
        dynamics::TimeSeries ts;
        ts.dt = dt;
        ts.probe_ids = {"V"};
        ts.probes = {{"V", dynamics::ProbeQuantity::VoltageMagnitude, "X", 0}};
        std::vector<double> v(n);
        double level = 1.0;
        for (std::size_t k = 0; k < n; ++k) {
            if (rng.chance(0.08)) level = rng.chance(0.5) ? rng.uniform(0.0, 0.95) : 1.0;
            v[k] = level;
            ts.time.push_back(dt * static_cast<double>(k));
        }
        ts.values = {v};
        const auto events = sag_trace(ts, "V");
        std::vector<int> owner(n, -1);
        for (std::size_t e = 0; e < events.size(); ++e) {
            const auto& ev = events[e];
            CHECK(ev.duration > 0.0);
            CHECK(ev.residual < kSagThresholdPu);
            CHECK(ev.classification == iti_classify(ev.residual, ev.duration));
            if (e > 0) CHECK(ev.start >= events[e - 1].start + events[e - 1].duration - 1e-12);
            const auto first = static_cast<std::size_t>(std::llround(ev.start / dt));
            const auto len = static_cast<std::size_t>(std::llround(ev.duration / dt));
            double lowest = 2.0;
            for (std::size_t k = first; k < first + len && k < n; ++k) {
                CHECK(owner[k] == -1);
                owner[k] = static_cast<int>(e);
                lowest = std::min(lowest, v[k]);
            }
            CHECK(ev.residual == lowest);
        }
        for (std::size_t k = 0; k < n; ++k) CHECK((v[k] < kSagThresholdPu) == (owner[k] != -1));
    });
}
