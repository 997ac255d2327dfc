#include <doctest.h>

#include <cmath>

#include "support/generators.hpp"
#include "tdsim/numerics/phasor.hpp"
#include "tdsim/numerics/sequence.hpp"
#include "tdsim/numerics/sparse.hpp"

using namespace tdsim;
using namespace tdsim::numerics;
using tdsim::test::for_all;
using tdsim::test::Rng;

namespace {

double norm2(const std::vector<Phasor>& x) {
    double s = 0.0;
    for (const Phasor& v : x) s += std::norm(v);
    return std::sqrt(s);
}

double max_abs(const PhaseTriple& t) { return std::max({std::abs(t[0]), std::abs(t[1]), std::abs(t[2])}); }

}  // namespace

TEST_CASE("compose after decompose is the identity") {
    for_all(1000, 500, [](Rng& rng) {
        const PhaseTriple x = tdsim::test::random_triple(rng, rng.uniform(1e-3, 1e3));
        const PhaseTriple y = fortescue_compose(fortescue_decompose(x));
        const double scale = max_abs(x);
        for (int p = 0; p < 3; ++p) CHECK(std::abs(y[p] - x[p]) <= 1e-12 * scale);
    });
}

TEST_CASE("decompose after compose is the identity") {
    for_all(2000, 500, [](Rng& rng) {
        const SequenceSet s{rng.phasor(2.0), rng.phasor(2.0), rng.phasor(2.0)};
        const SequenceSet t = fortescue_decompose(fortescue_compose(s));
        const double scale = std::max({std::abs(s.v0), std::abs(s.v1), std::abs(s.v2)});
        CHECK(std::abs(t.v0 - s.v0) <= 1e-12 * scale);
        CHECK(std::abs(t.v1 - s.v1) <= 1e-12 * scale);
        CHECK(std::abs(t.v2 - s.v2) <= 1e-12 * scale);
    });
}

TEST_CASE("balanced positive-sequence triples have no other sequence") {
    for_all(3000, 500, [](Rng& rng) {
        const Phasor a = std::polar(rng.uniform(0.0, 2.0), rng.uniform(-4.0, 4.0));
        const SequenceSet s = fortescue_decompose(balanced(a));
        CHECK(std::abs(s.v0) < 1e-12);
        CHECK(std::abs(s.v2) < 1e-12);
        CHECK(std::abs(s.v1 - a) < 1e-12);
    });
}

TEST_CASE("decomposition is linear") {
    for_all(4000, 300, [](Rng& rng) {
        const PhaseTriple x = tdsim::test::random_triple(rng), y = tdsim::test::random_triple(rng);
        const Phasor k = rng.phasor(3.0);
        PhaseTriple z;
        for (int p = 0; p < 3; ++p) z[p] = x[p] + k * y[p];
        const SequenceSet sx = fortescue_decompose(x), sy = fortescue_decompose(y), sz = fortescue_decompose(z);
        CHECK(std::abs(sz.v0 - (sx.v0 + k * sy.v0)) < 1e-12 * (1.0 + std::abs(k)) * 4.0);
        CHECK(std::abs(sz.v1 - (sx.v1 + k * sy.v1)) < 1e-12 * (1.0 + std::abs(k)) * 4.0);
        CHECK(std::abs(sz.v2 - (sx.v2 + k * sy.v2)) < 1e-12 * (1.0 + std::abs(k)) * 4.0);
    });
}

TEST_CASE("sparse solve meets the residual bound on dominant systems") {
    for_all(5000, 40, [](Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(1, 2000));
        const SparseComplexMatrix a = tdsim::test::random_dominant_matrix(rng, n, rng.integer(1, 6));
        std::vector<Phasor> b(n);
        for (Phasor& v : b) v = rng.phasor(10.0);
        const std::vector<Phasor> x = solve_sparse_complex(a, b);
        std::vector<Phasor> r = a.multiply(x);
        for (std::size_t i = 0; i < n; ++i) r[i] -= b[i];
        INFO("n = " << n);
        CHECK(norm2(r) <= 1e-10 * norm2(b));
    });
}

TEST_CASE("the full-size system of 2000 unknowns is solved") {
    Rng rng(6000);
    const SparseComplexMatrix a = tdsim::test::random_dominant_matrix(rng, 2000, 5);
    std::vector<Phasor> b(2000);
    for (Phasor& v : b) v = rng.phasor(1.0);
    const SparseLu<Phasor> lu(a);
    const std::vector<Phasor> x = lu.solve(b);
    std::vector<Phasor> r = a.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= b[i];
    CHECK(norm2(r) <= 1e-10 * norm2(b));
    CHECK(lu.min_pivot() > kPivotThreshold);
}

TEST_CASE("assembly order does not change the compressed matrix") {
    for_all(7000, 50, [](Rng& rng) {
        const std::size_t n = static_cast<std::size_t>(rng.integer(2, 30));
        struct Entry {
            std::size_t r, c;
            Phasor v;
        };
        std::vector<Entry> entries;
        for (int k = 0; k < 100; ++k) {
            entries.push_back({static_cast<std::size_t>(rng.integer(0, static_cast<int>(n) - 1)),
                               static_cast<std::size_t>(rng.integer(0, static_cast<int>(n) - 1)),
                               Phasor(rng.integer(-8, 8), rng.integer(-8, 8))});
        }
        SparseComplexMatrix a(n), b(n);
        for (const auto& e : entries) a.add(e.r, e.c, e.v);
        for (auto it = entries.rbegin(); it != entries.rend(); ++it) b.add(it->r, it->c, it->v);
        a.compress();
        b.compress();
        // Small integers sum exactly in any order.
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) CHECK(a.coeff(r, c) == b.coeff(r, c));
        }
    });
}
