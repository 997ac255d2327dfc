#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <doctest.h>

#include "tdsim/netmodel/hybrid.hpp"
#include "tdsim/numerics/sparse.hpp"

namespace tdsim::test {

// Seeded source of random test inputs.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
    bool chance(double p) { return uniform(0.0, 1.0) < p; }
    numerics::Phasor phasor(double max_magnitude) {
        return std::polar(uniform(0.0, max_magnitude), uniform(-3.14159265358979, 3.14159265358979));
    }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

// Runs `body` on `cases` independent generators; the failing seed is
// reported with the assertion.
template <class Body>
void for_all(std::uint64_t seed, int cases, Body&& body) {
    for (int c = 0; c < cases; ++c) {
        const std::uint64_t s = seed + static_cast<std::uint64_t>(c);
        INFO("seed " << s);
        Rng rng(s);
        body(rng);
    }
}

numerics::PhaseTriple random_triple(Rng& rng, double max_magnitude = 2.0);

// Diagonally dominant complex system of size n with about `per_row`
// off-diagonal entries per row.
numerics::SparseComplexMatrix random_dominant_matrix(Rng& rng, std::size_t n, int per_row);

// Radial 4.16 kV feeder with one source at "R", three-phase trunk, single
// and two-phase laterals, mixed ZIP wye loads and an occasional capacitor.
netmodel::Network random_feeder(Rng& rng);

// Small 345 kV meshed system with a slack unit, an optional PV unit and
// balanced loads on every other bus. Lines are balanced when `balanced`.
netmodel::Network random_transmission(Rng& rng, bool balanced = false);

// Random transmission and feeder joined through the standard substation on
// one or two load buses with one to three feeders each.
netmodel::Network random_hybrid(Rng& rng, bool unified = false);

}  // namespace tdsim::test
