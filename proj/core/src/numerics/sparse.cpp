#include "tdsim/numerics/sparse.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "tdsim/error.hpp"

namespace tdsim::numerics {

template <class Scalar>
void SparseMatrix<Scalar>::add(std::size_t row, std::size_t col, Scalar value) {
    if (row >= n_ || col >= n_) {
        throw std::out_of_range("sparse entry outside matrix");
    }
    pending_.push_back({row, col, value});
}

template <class Scalar>
void SparseMatrix<Scalar>::compress() {
    if (pending_.empty() && col_start_.size() == n_ + 1) {
        return;
    }
    std::vector<Entry> all;
    all.reserve(val_.size() + pending_.size());
    for (std::size_t c = 0; c + 1 < col_start_.size(); ++c) {
        for (std::size_t k = col_start_[c]; k < col_start_[c + 1]; ++k) {
            all.push_back({row_[k], c, val_[k]});
        }
    }
    all.insert(all.end(), pending_.begin(), pending_.end());
    pending_.clear();
    std::stable_sort(all.begin(), all.end(), [](const Entry& a, const Entry& b) {
        return a.col != b.col ? a.col < b.col : a.row < b.row;
    });
    col_start_.assign(n_ + 1, 0);
    row_.clear();
    val_.clear();
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        Scalar sum = all[i].value;
        while (++j < all.size() && all[j].row == all[i].row && all[j].col == all[i].col) {
            sum += all[j].value;
        }
        row_.push_back(all[i].row);
        val_.push_back(sum);
        ++col_start_[all[i].col + 1];
        i = j;
    }
    std::partial_sum(col_start_.begin(), col_start_.end(), col_start_.begin());
}

template <class Scalar>
Scalar SparseMatrix<Scalar>::coeff(std::size_t row, std::size_t col) const {
    if (!compressed() || col_start_.size() != n_ + 1) {
        throw std::logic_error("sparse matrix not compressed");
    }
    auto first = row_.begin() + static_cast<std::ptrdiff_t>(col_start_[col]);
    auto last = row_.begin() + static_cast<std::ptrdiff_t>(col_start_[col + 1]);
    auto it = std::lower_bound(first, last, row);
    if (it == last || *it != row) {
        return Scalar{};
    }
    return val_[static_cast<std::size_t>(it - row_.begin())];
}

template <class Scalar>
std::vector<Scalar> SparseMatrix<Scalar>::multiply(const std::vector<Scalar>& x) const {
    if (!compressed() || col_start_.size() != n_ + 1) {
        throw std::logic_error("sparse matrix not compressed");
    }
    std::vector<Scalar> y(n_, Scalar{});
    for (std::size_t c = 0; c < n_; ++c) {
        for (std::size_t k = col_start_[c]; k < col_start_[c + 1]; ++k) {
            y[row_[k]] += val_[k] * x[c];
        }
    }
    return y;
}

template <class Scalar>
struct SparseLu<Scalar>::Impl {
    Eigen::SparseLU<Eigen::SparseMatrix<Scalar>, Eigen::COLAMDOrdering<int>> lu;
    std::size_t n = 0;
};

template <class Scalar>
SparseLu<Scalar>::SparseLu(const SparseMatrix<Scalar>& a) : impl_(std::make_unique<Impl>()) {
    const std::size_t n = a.dim();
    impl_->n = n;
    if (!a.compressed() || a.col_starts().size() != n + 1) {
        throw std::logic_error("sparse matrix not compressed");
    }
    if (n == 0) {
        return;
    }
    std::vector<Eigen::Triplet<Scalar>> trip;
    trip.reserve(a.nonzeros());
    for (std::size_t c = 0; c < n; ++c) {
        for (std::size_t k = a.col_starts()[c]; k < a.col_starts()[c + 1]; ++k) {
            trip.emplace_back(static_cast<int>(a.row_index()[k]), static_cast<int>(c),
                              a.values()[k]);
        }
    }
    Eigen::SparseMatrix<Scalar> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m.setFromTriplets(trip.begin(), trip.end());
    m.makeCompressed();
    impl_->lu.analyzePattern(m);
    impl_->lu.factorize(m);
    if (impl_->lu.info() != Eigen::Success) {
        throw Error(ErrorCode::SingularMatrix, "factorization failed: " + impl_->lu.lastErrorMessage());
    }
    // The diagonal of U lives in the supernodal L storage.
    const auto& mapped = impl_->lu.matrixL().m_mapL;
    using Mapped = std::decay_t<decltype(mapped)>;
    double smallest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(n); ++j) {
        double pivot = 0.0;
        for (typename Mapped::InnerIterator it(mapped, j); it; ++it) {
            if (it.row() == j) {
                pivot = std::abs(it.value());
                break;
            }
        }
        smallest = std::min(smallest, pivot);
    }
    min_pivot_ = smallest;
    if (!(smallest >= kPivotThreshold)) {
        throw Error(ErrorCode::SingularMatrix,
                    "pivot magnitude " + std::to_string(smallest) + " below threshold");
    }
}

template <class Scalar>
SparseLu<Scalar>::~SparseLu() = default;
template <class Scalar>
SparseLu<Scalar>::SparseLu(SparseLu&&) noexcept = default;
template <class Scalar>
SparseLu<Scalar>& SparseLu<Scalar>::operator=(SparseLu&&) noexcept = default;

template <class Scalar>
std::vector<Scalar> SparseLu<Scalar>::solve(const std::vector<Scalar>& b) const {
    if (b.size() != impl_->n) {
        throw std::invalid_argument("right-hand side dimension mismatch");
    }
    if (impl_->n == 0) {
        return {};
    }
    Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> rhs(b.data(),
                                                                  static_cast<Eigen::Index>(b.size()));
    Eigen::Matrix<Scalar, Eigen::Dynamic, 1> x = impl_->lu.solve(rhs);
    return std::vector<Scalar>(x.data(), x.data() + x.size());
}

template class SparseMatrix<double>;
template class SparseMatrix<std::complex<double>>;
template class SparseLu<double>;
template class SparseLu<std::complex<double>>;

}  // namespace tdsim::numerics
