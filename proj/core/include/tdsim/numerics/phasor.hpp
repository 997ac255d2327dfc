#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <numbers>
#include <vector>

namespace tdsim::numerics {

using Phasor = std::complex<double>;
using PhaseTriple = std::array<Phasor, 3>;

// Rotation operator a = 1 at 120 degrees.
inline const Phasor kRotate120{-0.5, std::numbers::sqrt3 / 2.0};

inline Phasor from_polar_deg(double magnitude, double degrees) {
    return std::polar(magnitude, degrees * std::numbers::pi / 180.0);
}

inline double angle_deg(Phasor p) { return std::arg(p) * 180.0 / std::numbers::pi; }

// Balanced positive-sequence set whose phase A equals `a`.
inline PhaseTriple balanced(Phasor a) {
    return {a, a * kRotate120 * kRotate120, a * kRotate120};
}

// Dense square complex matrix in row-major order; used for per-branch phase
// blocks (at most a handful of conductors).
class PhaseMatrix {
public:
    PhaseMatrix() = default;
    explicit PhaseMatrix(std::size_t n) : n_(n), v_(n * n) {}

    std::size_t size() const noexcept { return n_; }
    Phasor& operator()(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
    const Phasor& operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
    const std::vector<Phasor>& data() const noexcept { return v_; }
    std::vector<Phasor>& data() noexcept { return v_; }

    bool operator==(const PhaseMatrix&) const = default;

private:
    std::size_t n_ = 0;
    std::vector<Phasor> v_;
};

}  // namespace tdsim::numerics
