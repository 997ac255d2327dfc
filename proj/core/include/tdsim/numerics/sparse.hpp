#pragma once

#include <complex>
#include <cstddef>
#include <memory>
#include <vector>

namespace tdsim::numerics {

// Square sparse matrix assembled from (row, col, value) contributions.
// Duplicate coordinates are summed by compress(), in insertion order, so the
// same contributions always produce bit-identical values.
template <class Scalar>
class SparseMatrix {
public:
    SparseMatrix() = default;
    explicit SparseMatrix(std::size_t n) : n_(n) {}

    std::size_t dim() const noexcept { return n_; }

    void add(std::size_t row, std::size_t col, Scalar value);
    void compress();
    bool compressed() const noexcept { return pending_.empty(); }

    // Column-compressed storage; valid after compress().
    const std::vector<std::size_t>& col_starts() const noexcept { return col_start_; }
    const std::vector<std::size_t>& row_index() const noexcept { return row_; }
    const std::vector<Scalar>& values() const noexcept { return val_; }
    std::size_t nonzeros() const noexcept { return val_.size(); }

    Scalar coeff(std::size_t row, std::size_t col) const;
    std::vector<Scalar> multiply(const std::vector<Scalar>& x) const;

private:
    struct Entry {
        std::size_t row;
        std::size_t col;
        Scalar value;
    };
    std::size_t n_ = 0;
    std::vector<Entry> pending_;
    std::vector<std::size_t> col_start_;
    std::vector<std::size_t> row_;
    std::vector<Scalar> val_;
};

using SparseComplexMatrix = SparseMatrix<std::complex<double>>;
using SparseRealMatrix = SparseMatrix<double>;

// Pivots with magnitude below this are treated as exact zeros.
inline constexpr double kPivotThreshold = 1e-13;

// LU factorization kept for repeated solves with the same matrix.
template <class Scalar>
class SparseLu {
public:
    explicit SparseLu(const SparseMatrix<Scalar>& a);
    ~SparseLu();
    SparseLu(SparseLu&&) noexcept;
    SparseLu& operator=(SparseLu&&) noexcept;

    std::vector<Scalar> solve(const std::vector<Scalar>& b) const;
    double min_pivot() const noexcept { return min_pivot_; }

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    double min_pivot_ = 0.0;
};

template <class Scalar>
std::vector<Scalar> solve_sparse(const SparseMatrix<Scalar>& a, const std::vector<Scalar>& b) {
    return SparseLu<Scalar>(a).solve(b);
}

inline std::vector<std::complex<double>> solve_sparse_complex(
    const SparseComplexMatrix& a, const std::vector<std::complex<double>>& b) {
    return solve_sparse(a, b);
}

}  // namespace tdsim::numerics
