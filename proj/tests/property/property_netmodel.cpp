#include <doctest.h>

#include <cmath>

#include "support/fixtures.hpp"
#include "support/generators.hpp"
#include "tdsim/netmodel/census.hpp"
#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/netmodel/model_io.hpp"
#include "tdsim/netmodel/validate.hpp"

using namespace tdsim;
using namespace tdsim::netmodel;
using tdsim::test::for_all;
using tdsim::test::Rng;

namespace {

Census operator+(Census a, const Census& b) {
    for (const auto& [k, n] : b) a[k] += n;
    return a;
}

Census scaled(Census a, long k) {
    for (auto& [key, n] : a) n *= k;
    return a;
}

struct Mapped {
    Network tx;
    Network feeder;
    std::vector<HybridMapping> mapping;
};

Mapped random_mapping(Rng& rng) {
    Mapped m{tdsim::test::random_transmission(rng), tdsim::test::random_feeder(rng), {}};
    for (const Load& l : m.tx.loads) {
        if (m.mapping.empty() || (m.mapping.size() < 2 && rng.chance(0.5))) m.mapping.push_back({l.bus, rng.integer(1, 3)});
    }
    return m;
}

Phasor nominal_power(const Load& l) {
    Phasor s{};
    for (std::size_t i = 0; i < l.kw.size(); ++i) s += Phasor(l.kw[i], l.kvar[i]);
    return s;
}

}  // namespace

TEST_CASE("serialize then parse returns the same network") {
    for_all(100, 40, [](Rng& rng) {
        const Network f = tdsim::test::random_feeder(rng);
        CHECK(parse_network(serialize_network(f)) == f);
        const Network t = tdsim::test::random_transmission(rng);
        CHECK(parse_network(serialize_network(t)) == t);
    });
    for_all(150, 10, [](Rng& rng) {
        const Network h = tdsim::test::random_hybrid(rng);
        CHECK(parse_network(serialize_network(h)) == h);
    });
    CHECK(parse_network(serialize_network(tdsim::test::ieee123())) == tdsim::test::ieee123());
}

TEST_CASE("generated models validate clean") {
    for_all(200, 40, [](Rng& rng) {
        for (const Network& net : {tdsim::test::random_feeder(rng), tdsim::test::random_transmission(rng)}) {
            const auto diags = validate(net);
            for (const auto& d : diags) MESSAGE(d.rule << " " << d.element << ": " << d.message);
            CHECK(diags.empty());
        }
    });
}

TEST_CASE("hybrid census is additive over its parts") {
    for_all(300, 25, [](Rng& rng) {
        const Mapped m = random_mapping(rng);
        const SubstationTemplate& sub = tdsim::test::standard_substation();
        const Network out = build_hybrid(m.tx, m.feeder, sub, m.mapping);
        Census want = component_census(m.tx);
        const Census sub_census = component_census(sub.network);
        const Census feeder_census = component_census(m.feeder);
        for (const auto& map : m.mapping) {
            // The lumped load goes; the residual load at the same bus takes its place.
            want = want + sub_census + scaled(feeder_census, map.feeders);
            want["buses"] += map.feeders - 1;  // boundary buses in, hv bus merged
            want["switches"] += map.feeders;   // one head breaker per feeder
            want["substations"] += 1;
        }
        const Census got = component_census(out);
        for (const auto& [key, n] : want) {
            INFO(key);
            CHECK(got.at(key) == n);
        }
    });
}

TEST_CASE("substation demand equals the removed lumped load") {
    for_all(400, 25, [](Rng& rng) {
        const Mapped m = random_mapping(rng);
        const Network out = build_hybrid(m.tx, m.feeder, tdsim::test::standard_substation(), m.mapping);
        for (const auto& map : m.mapping) {
            Phasor lumped{};
            for (const Load& l : m.tx.loads) {
                if (l.bus == map.bus) lumped += nominal_power(l);
            }
            const std::string sub = "SUB" + map.bus + ".";
            const std::string feeders = "F" + map.bus + "_";
            Phasor carried{};
            for (const Load& l : out.loads) {
                if (l.id.rfind(sub, 0) == 0 || l.bus.rfind(feeders, 0) == 0) carried += nominal_power(l);
            }
            INFO(map.bus);
            CHECK(std::abs(carried.real() - lumped.real()) <= 1e-3 * std::abs(lumped.real()));
            CHECK(std::abs(carried.imag() - lumped.imag()) <= 1e-3 * std::abs(lumped) + 1e-9);
        }
    });
}

TEST_CASE("every extracted circuit has the feeder template census") {
    for_all(500, 15, [](Rng& rng) {
        const Mapped m = random_mapping(rng);
        const Network out = build_hybrid(m.tx, m.feeder, tdsim::test::standard_substation(), m.mapping);
        const Census want = component_census(m.feeder);
        Census total;
        for (const Source& s : out.sources) {
            const Census got = component_census(extract_circuit(out, s.id));
            for (const auto& key : census_table_keys()) {
                INFO(s.id << " " << key);
                CHECK(got.at(key) == want.at(key));
            }
            total = total + got;
        }
        // The circuits partition everything that is not on the transmission side.
        const BoundarySplit split = split_boundary_model(out);
        const Census full = component_census(out);
        const Census tx = component_census(split.transmission);
        for (const auto& key : census_table_keys()) {
            if (key == "feeders") continue;
            INFO(key);
            CHECK(total.at(key) == full.at(key) - tx.at(key));
        }
    });
}

TEST_CASE("joining keeps the table census") {
    for_all(600, 15, [](Rng& rng) {
        const Network paired = tdsim::test::random_hybrid(rng);
        const Network joined = join_boundaries(paired);
        const Census a = component_census(paired), b = component_census(joined);
        for (const auto& key : census_table_keys()) {
            INFO(key);
            CHECK(a.at(key) == b.at(key));
        }
        CHECK(b.at("sources") == 0);
        const auto diags = validate(joined);
        for (const auto& d : diags) MESSAGE(d.rule << " " << d.element << ": " << d.message);
        CHECK(diags.empty());
    });
}
