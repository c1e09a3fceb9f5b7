#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace evoconv {

/// General band matrix with kl sub- and ku super-diagonals, stored LAPACK-style with
/// kl extra rows reserved for fill-in from partial pivoting.
class BandedMatrix {
public:
    using value_type = std::complex<double>;

    BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku);

    std::size_t size() const noexcept { return n_; }
    std::size_t lower() const noexcept { return kl_; }
    std::size_t upper() const noexcept { return ku_; }

    /// Entry (i, j); requires i - j <= kl and j - i <= ku.
    value_type& at(std::size_t i, std::size_t j);
    value_type get(std::size_t i, std::size_t j) const;

    void multiply(std::span<const value_type> x, std::span<value_type> y) const;

private:
    friend class BandedLU;
    std::size_t ldab() const noexcept { return 2 * kl_ + ku_ + 1; }
    value_type& raw(std::size_t row, std::size_t col) { return ab_[col * ldab() + row]; }
    const value_type& raw(std::size_t row, std::size_t col) const { return ab_[col * ldab() + row]; }

    std::size_t n_, kl_, ku_;
    std::vector<value_type> ab_;
};

/// LU factorization with partial pivoting of a BandedMatrix.
class BandedLU {
public:
    using value_type = std::complex<double>;

    explicit BandedLU(BandedMatrix m);

    /// Smallest pivot magnitude encountered; zero means singular.
    double min_pivot() const noexcept { return min_pivot_; }
    double max_pivot() const noexcept { return max_pivot_; }
    bool singular() const noexcept { return min_pivot_ == 0.0; }

    /// In-place solve.
    void solve(std::span<value_type> b) const;

private:
    BandedMatrix lu_;
    std::vector<std::size_t> pivots_;
    double min_pivot_ = 0.0;
    double max_pivot_ = 0.0;
};

}  // namespace evoconv
