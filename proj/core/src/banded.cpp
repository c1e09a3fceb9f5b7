#include "evoconv/banded.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace evoconv {

BandedMatrix::BandedMatrix(std::size_t n, std::size_t kl, std::size_t ku)
    : n_(n), kl_(kl), ku_(ku), ab_(n * (2 * kl + ku + 1)) {}

BandedMatrix::value_type& BandedMatrix::at(std::size_t i, std::size_t j) {
    if (i >= n_ || j >= n_ || (i > j && i - j > kl_) || (j > i && j - i > ku_))
        throw std::out_of_range("BandedMatrix::at: entry outside the band");
    return raw(kl_ + ku_ + i - j, j);
}

BandedMatrix::value_type BandedMatrix::get(std::size_t i, std::size_t j) const {
    if (i >= n_ || j >= n_ || (i > j && i - j > kl_) || (j > i && j - i > ku_)) return 0.0;
    return raw(kl_ + ku_ + i - j, j);
}

void BandedMatrix::multiply(std::span<const value_type> x, std::span<value_type> y) const {
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t j0 = i > kl_ ? i - kl_ : 0;
        const std::size_t j1 = std::min(n_ - 1, i + ku_);
        value_type s = 0.0;
        for (std::size_t j = j0; j <= j1; ++j) s += raw(kl_ + ku_ + i - j, j) * x[j];
        y[i] = s;
    }
}

BandedLU::BandedLU(BandedMatrix m) : lu_(std::move(m)), pivots_(lu_.n_) {
    const std::size_t n = lu_.n_;
    const std::size_t kl = lu_.kl_;
    const std::size_t kv = lu_.kl_ + lu_.ku_;
    min_pivot_ = std::numeric_limits<double>::infinity();
    max_pivot_ = 0.0;
    std::size_t ju = 0;
    for (std::size_t j = 0; j < n; ++j) {
        const std::size_t km = std::min(kl, n - 1 - j);
        std::size_t p = 0;
        double best = std::abs(lu_.raw(kv, j));
        for (std::size_t i = 1; i <= km; ++i) {
            const double a = std::abs(lu_.raw(kv + i, j));
            if (a > best) {
                best = a;
                p = i;
            }
        }
        pivots_[j] = j + p;
        min_pivot_ = std::min(min_pivot_, best);
        max_pivot_ = std::max(max_pivot_, best);
        if (best == 0.0) continue;
        ju = std::max(ju, std::min(j + lu_.ku_ + p, n - 1));
        if (p != 0)
            for (std::size_t c = j; c <= ju; ++c) std::swap(lu_.raw(kv + j - c, c), lu_.raw(kv + j + p - c, c));
        const value_type pivot = lu_.raw(kv, j);
        for (std::size_t i = 1; i <= km; ++i) lu_.raw(kv + i, j) /= pivot;
        for (std::size_t c = j + 1; c <= ju; ++c) {
            const value_type top = lu_.raw(kv + j - c, c);
            if (top == value_type(0.0)) continue;
            for (std::size_t i = 1; i <= km; ++i) lu_.raw(kv + j + i - c, c) -= lu_.raw(kv + i, j) * top;
        }
    }
    if (n == 0) min_pivot_ = 0.0;
}

void BandedLU::solve(std::span<value_type> b) const {
    if (singular()) throw std::runtime_error("BandedLU::solve: matrix is singular");
    const std::size_t n = lu_.n_;
    const std::size_t kl = lu_.kl_;
    const std::size_t kv = lu_.kl_ + lu_.ku_;
    for (std::size_t j = 0; j < n; ++j) {
        if (pivots_[j] != j) std::swap(b[j], b[pivots_[j]]);
        const std::size_t km = std::min(kl, n - 1 - j);
        for (std::size_t i = 1; i <= km; ++i) b[j + i] -= lu_.raw(kv + i, j) * b[j];
    }
    for (std::size_t j = n; j-- > 0;) {
        b[j] /= lu_.raw(kv, j);
        const std::size_t i0 = j > kv ? j - kv : 0;
        for (std::size_t i = i0; i < j; ++i) b[i] -= lu_.raw(kv + i - j, j) * b[j];
    }
}

}  // namespace evoconv
