#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "evoconv/error.hpp"

namespace evoconv {

using cplx = std::complex<double>;

/// Uniform causal time grid t_k = k*dt (k = 0..K-1) carrying the exponential weight nu.
/// Signals on the grid are implicitly zero for t < 0.
class TimeGrid {
public:
    TimeGrid(double nu, double dt, std::size_t steps);

    /// Grid with K = round(horizon / dt) steps.
    static TimeGrid over(double nu, double dt, double horizon);

    double nu() const noexcept { return nu_; }
    double dt() const noexcept { return dt_; }
    std::size_t steps() const noexcept { return steps_; }
    double t(std::size_t k) const noexcept { return static_cast<double>(k) * dt_; }
    double last_time() const noexcept { return t(steps_ - 1); }
    /// e^{-2 nu t_k}
    double weight(std::size_t k) const noexcept;

    bool operator==(const TimeGrid& other) const = default;

private:
    double nu_;
    double dt_;
    std::size_t steps_;
};

/// Complex samples on a time grid, `width` components per step (row-major K x W).
/// `measure` is the spatial quadrature weight applied to every component in inner products.
class TimeSignal {
public:
    explicit TimeSignal(TimeGrid grid, std::size_t width = 1, double measure = 1.0);

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t steps() const noexcept { return grid_.steps(); }
    std::size_t width() const noexcept { return width_; }
    double measure() const noexcept { return measure_; }

    cplx& operator()(std::size_t k, std::size_t c = 0) { return values_[k * width_ + c]; }
    const cplx& operator()(std::size_t k, std::size_t c = 0) const { return values_[k * width_ + c]; }

    std::span<cplx> row(std::size_t k) { return {values_.data() + k * width_, width_}; }
    std::span<const cplx> row(std::size_t k) const { return {values_.data() + k * width_, width_}; }

    std::vector<cplx>& values() noexcept { return values_; }
    const std::vector<cplx>& values() const noexcept { return values_; }

    /// Zero signal with the same grid, width and measure.
    TimeSignal zeros_like() const { return TimeSignal(grid_, width_, measure_); }
    bool same_shape(const TimeSignal& other) const noexcept;

    TimeSignal& operator+=(const TimeSignal& other);
    TimeSignal& operator-=(const TimeSignal& other);
    TimeSignal& operator*=(cplx s);

    /// Fill with u(t_k, c) = fn(t_k, c).
    static TimeSignal sample(TimeGrid grid, std::size_t width, double measure,
                             const std::function<cplx(double, std::size_t)>& fn);
    /// i.i.d. standard normal real and imaginary parts, reproducible from `seed`.
    static TimeSignal random(TimeGrid grid, std::size_t width, double measure, std::uint64_t seed);

private:
    TimeGrid grid_;
    std::size_t width_;
    double measure_;
    std::vector<cplx> values_;
};

TimeSignal operator+(TimeSignal a, const TimeSignal& b);
TimeSignal operator-(TimeSignal a, const TimeSignal& b);
TimeSignal operator*(cplx s, TimeSignal a);

/// Throws PreconditionError unless both signals share grid, width and measure.
void require_same_shape(const TimeSignal& a, const TimeSignal& b, const char* where);

/// <u, v>_nu = sum_k sum_c u_kc conj(v_kc) e^{-2 nu t_k} dt measure
cplx weighted_inner_product(const TimeSignal& u, const TimeSignal& v);
double weighted_norm(const TimeSignal& u);

/// Backward difference (u_k - u_{k-1}) / dt with u_{-1} = 0.
TimeSignal apply_d0(const TimeSignal& u);
/// dt * sum_{j<=k} f_j; exact inverse of apply_d0.
TimeSignal apply_d0_inverse(const TimeSignal& f);
/// Adjoints of the two operators above in the weighted inner product.
TimeSignal apply_d0_adjoint(const TimeSignal& u);
TimeSignal apply_d0_inverse_adjoint(const TimeSignal& f);

/// Discrete Fourier-Laplace image: unitary DFT of the zero-padded signal sqrt(dt) e^{-nu t_k} u_k.
struct SpectralSignal {
    TimeGrid grid;
    std::size_t padded_steps;  // L >= K
    std::size_t width;
    double measure;
    std::vector<cplx> coefficients;  // L x W, row-major

    /// Signed angular frequency xi_m = 2 pi m' / (L dt), m' in (-L/2, L/2].
    double frequency(std::size_t m) const;
};

SpectralSignal fourier_laplace(const TimeSignal& u, std::size_t padding = 1);
TimeSignal inverse_fourier_laplace(const SpectralSignal& s);

/// Continuous symbol of d0^{-1}: 1 / (i xi + nu).
cplx continuous_d0_inverse_symbol(double nu, double xi);
/// Symbol of the backward-difference d0^{-1}: dt / (1 - e^{-(nu + i xi) dt}).
cplx discrete_d0_inverse_symbol(const TimeGrid& grid, double xi);

/// Forward transform with padding, pointwise multiplication by symbol(xi), inverse, truncation.
TimeSignal apply_spectral_multiplier(const TimeSignal& u, const std::function<cplx(double)>& symbol,
                                     std::size_t padding = 4);

/// Zero every sample with t_k >= a.
TimeSignal truncate_before(const TimeSignal& u, double a);
/// Zero every sample with t_k > a.
TimeSignal truncate_after(const TimeSignal& u, double a);

/// tau_h u = u(. + h); h must be an integer multiple of dt. Negative h delays the signal.
TimeSignal time_shift(const TimeSignal& u, double h);
/// Integer step count of h; throws naming the nearest admissible values otherwise.
long shift_steps(const TimeGrid& grid, double h);

using LinearMap = std::function<TimeSignal(const TimeSignal&)>;

struct NormOptions {
    std::size_t max_iterations = 10000;
    double tolerance = 1e-8;
    std::uint64_t seed = 0x5eedULL;
};

struct NormEstimate {
    double value;
    std::size_t iterations;
};

/// Largest singular value of `op` in the weighted metric by power iteration on op* op.
/// `adjoint` must be the weighted adjoint of `op`; `shape` fixes grid, width and measure.
NormEstimate operator_norm(const LinearMap& op, const LinearMap& adjoint, const TimeSignal& shape,
                           const NormOptions& options = {});

}  // namespace evoconv
