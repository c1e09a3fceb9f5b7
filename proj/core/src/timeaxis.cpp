#include "evoconv/timeaxis.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

namespace evoconv {

TimeGrid::TimeGrid(double nu, double dt, std::size_t steps) : nu_(nu), dt_(dt), steps_(steps) {
    if (!(nu > 0.0)) throw PreconditionError("TimeGrid: nu must be positive");
    if (!(dt > 0.0)) throw PreconditionError("TimeGrid: dt must be positive");
    if (steps < 2) throw PreconditionError("TimeGrid: at least two steps are required");
}

TimeGrid TimeGrid::over(double nu, double dt, double horizon) {
    if (!(dt > 0.0) || !(horizon > 0.0)) throw PreconditionError("TimeGrid: dt and horizon must be positive");
    return TimeGrid(nu, dt, static_cast<std::size_t>(std::llround(horizon / dt)));
}

double TimeGrid::weight(std::size_t k) const noexcept { return std::exp(-2.0 * nu_ * t(k)); }

TimeSignal::TimeSignal(TimeGrid grid, std::size_t width, double measure)
    : grid_(grid), width_(width), measure_(measure), values_(grid.steps() * width) {
    if (width == 0) throw PreconditionError("TimeSignal: width must be positive");
    if (!(measure > 0.0)) throw PreconditionError("TimeSignal: measure must be positive");
}

bool TimeSignal::same_shape(const TimeSignal& other) const noexcept {
    return grid_ == other.grid_ && width_ == other.width_ && measure_ == other.measure_;
}

TimeSignal& TimeSignal::operator+=(const TimeSignal& other) {
    require_same_shape(*this, other, "operator+=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += other.values_[i];
    return *this;
}

TimeSignal& TimeSignal::operator-=(const TimeSignal& other) {
    require_same_shape(*this, other, "operator-=");
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= other.values_[i];
    return *this;
}

TimeSignal& TimeSignal::operator*=(cplx s) {
    for (auto& v : values_) v *= s;
    return *this;
}

TimeSignal TimeSignal::sample(TimeGrid grid, std::size_t width, double measure,
                              const std::function<cplx(double, std::size_t)>& fn) {
    TimeSignal out(grid, width, measure);
    for (std::size_t k = 0; k < grid.steps(); ++k)
        for (std::size_t c = 0; c < width; ++c) out(k, c) = fn(grid.t(k), c);
    return out;
}

TimeSignal TimeSignal::random(TimeGrid grid, std::size_t width, double measure, std::uint64_t seed) {
    TimeSignal out(grid, width, measure);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    for (auto& v : out.values_) v = cplx(normal(rng), normal(rng));
    return out;
}

TimeSignal operator+(TimeSignal a, const TimeSignal& b) { return a += b; }
TimeSignal operator-(TimeSignal a, const TimeSignal& b) { return a -= b; }
TimeSignal operator*(cplx s, TimeSignal a) { return a *= s; }

void require_same_shape(const TimeSignal& a, const TimeSignal& b, const char* where) {
    if (!a.same_shape(b)) {
        std::ostringstream msg;
        msg << where << ": signals live on different grids or layouts (K=" << a.steps() << " vs "
            << b.steps() << ", W=" << a.width() << " vs " << b.width() << ")";
        throw PreconditionError(msg.str());
    }
}

cplx weighted_inner_product(const TimeSignal& u, const TimeSignal& v) {
    require_same_shape(u, v, "weighted_inner_product");
    const TimeGrid& g = u.grid();
    cplx total = 0.0;
    for (std::size_t k = 0; k < g.steps(); ++k) {
        auto a = u.row(k);
        auto b = v.row(k);
        cplx s = 0.0;
        for (std::size_t c = 0; c < a.size(); ++c) s += a[c] * std::conj(b[c]);
        total += s * g.weight(k);
    }
    return total * g.dt() * u.measure();
}

double weighted_norm(const TimeSignal& u) {
    return std::sqrt(std::max(0.0, weighted_inner_product(u, u).real()));
}

TimeSignal apply_d0(const TimeSignal& u) {
    TimeSignal out = u.zeros_like();
    const double inv_dt = 1.0 / u.grid().dt();
    const std::size_t W = u.width();
    for (std::size_t c = 0; c < W; ++c) out(0, c) = u(0, c) * inv_dt;
    for (std::size_t k = 1; k < u.steps(); ++k)
        for (std::size_t c = 0; c < W; ++c) out(k, c) = (u(k, c) - u(k - 1, c)) * inv_dt;
    return out;
}

TimeSignal apply_d0_inverse(const TimeSignal& f) {
    TimeSignal out = f.zeros_like();
    const double dt = f.grid().dt();
    const std::size_t W = f.width();
    std::vector<cplx> acc(W);
    for (std::size_t k = 0; k < f.steps(); ++k)
        for (std::size_t c = 0; c < W; ++c) {
            acc[c] += f(k, c);
            out(k, c) = acc[c] * dt;
        }
    return out;
}

// Weighted adjoint of T is E^{-1} T^H E with E = diag(e^{-2 nu t_k}).
TimeSignal apply_d0_adjoint(const TimeSignal& u) {
    const TimeGrid& g = u.grid();
    const std::size_t K = g.steps();
    const std::size_t W = u.width();
    const double inv_dt = 1.0 / g.dt();
    TimeSignal out = u.zeros_like();
    for (std::size_t k = 0; k < K; ++k) {
        const double wk = g.weight(k);
        const double wn = k + 1 < K ? g.weight(k + 1) : 0.0;
        for (std::size_t c = 0; c < W; ++c) {
            cplx next = k + 1 < K ? u(k + 1, c) * wn : 0.0;
            out(k, c) = (u(k, c) * wk - next) * inv_dt / wk;
        }
    }
    return out;
}

TimeSignal apply_d0_inverse_adjoint(const TimeSignal& f) {
    const TimeGrid& g = f.grid();
    const std::size_t W = f.width();
    TimeSignal out = f.zeros_like();
    std::vector<cplx> acc(W);
    for (std::size_t kk = g.steps(); kk-- > 0;) {
        const double wk = g.weight(kk);
        for (std::size_t c = 0; c < W; ++c) {
            acc[c] += f(kk, c) * wk;
            out(kk, c) = acc[c] * g.dt() / wk;
        }
    }
    return out;
}

double SpectralSignal::frequency(std::size_t m) const {
    const auto L = static_cast<long>(padded_steps);
    long signed_m = static_cast<long>(m);
    if (signed_m > L / 2) signed_m -= L;
    return 2.0 * std::numbers::pi * static_cast<double>(signed_m) / (static_cast<double>(L) * grid.dt());
}

SpectralSignal fourier_laplace(const TimeSignal& u, std::size_t padding) {
    if (padding == 0) throw PreconditionError("fourier_laplace: padding must be at least 1");
    const TimeGrid& g = u.grid();
    const std::size_t K = g.steps();
    const std::size_t L = K * padding;
    const std::size_t W = u.width();
    SpectralSignal s{g, L, W, u.measure(), std::vector<cplx>(L * W)};

    Eigen::FFT<double> fft;
    std::vector<cplx> in(L), out(L);
    const double scale = std::sqrt(g.dt() / static_cast<double>(L));
    for (std::size_t c = 0; c < W; ++c) {
        std::fill(in.begin(), in.end(), cplx(0.0));
        for (std::size_t k = 0; k < K; ++k) in[k] = u(k, c) * std::exp(-g.nu() * g.t(k));
        fft.fwd(out, in);
        for (std::size_t m = 0; m < L; ++m) s.coefficients[m * W + c] = out[m] * scale;
    }
    return s;
}

TimeSignal inverse_fourier_laplace(const SpectralSignal& s) {
    const TimeGrid& g = s.grid;
    const std::size_t K = g.steps();
    const std::size_t L = s.padded_steps;
    const std::size_t W = s.width;
    TimeSignal u(g, W, s.measure);

    Eigen::FFT<double> fft;
    std::vector<cplx> in(L), out(L);
    const double scale = std::sqrt(static_cast<double>(L) / g.dt());
    for (std::size_t c = 0; c < W; ++c) {
        for (std::size_t m = 0; m < L; ++m) in[m] = s.coefficients[m * W + c];
        fft.inv(out, in);
        for (std::size_t k = 0; k < K; ++k) u(k, c) = out[k] * scale * std::exp(g.nu() * g.t(k));
    }
    return u;
}

cplx continuous_d0_inverse_symbol(double nu, double xi) { return 1.0 / cplx(nu, xi); }

cplx discrete_d0_inverse_symbol(const TimeGrid& grid, double xi) {
    const double dt = grid.dt();
    return dt / (1.0 - std::exp(-cplx(grid.nu(), xi) * dt));
}

TimeSignal apply_spectral_multiplier(const TimeSignal& u, const std::function<cplx(double)>& symbol,
                                     std::size_t padding) {
    SpectralSignal s = fourier_laplace(u, padding);
    for (std::size_t m = 0; m < s.padded_steps; ++m) {
        const cplx factor = symbol(s.frequency(m));
        for (std::size_t c = 0; c < s.width; ++c) s.coefficients[m * s.width + c] *= factor;
    }
    return inverse_fourier_laplace(s);
}

TimeSignal truncate_before(const TimeSignal& u, double a) {
    TimeSignal out = u;
    for (std::size_t k = 0; k < u.steps(); ++k)
        if (u.grid().t(k) >= a)
            for (auto& v : out.row(k)) v = 0.0;
    return out;
}

TimeSignal truncate_after(const TimeSignal& u, double a) {
    TimeSignal out = u;
    for (std::size_t k = 0; k < u.steps(); ++k)
        if (u.grid().t(k) > a)
            for (auto& v : out.row(k)) v = 0.0;
    return out;
}

long shift_steps(const TimeGrid& grid, double h) {
    const double ratio = h / grid.dt();
    const double nearest = std::round(ratio);
    if (std::abs(ratio - nearest) > 1e-9 * std::max(1.0, std::abs(ratio))) {
        std::ostringstream msg;
        msg.precision(12);
        msg << "time shift h=" << h << " is not a multiple of dt=" << grid.dt()
            << "; nearest admissible values are " << std::floor(ratio) * grid.dt() << " and "
            << std::ceil(ratio) * grid.dt();
        throw PreconditionError(msg.str());
    }
    return static_cast<long>(nearest);
}

TimeSignal time_shift(const TimeSignal& u, double h) {
    const long s = shift_steps(u.grid(), h);
    const auto K = static_cast<long>(u.steps());
    TimeSignal out = u.zeros_like();
    for (long k = 0; k < K; ++k) {
        const long src = k + s;
        if (src < 0 || src >= K) continue;
        auto from = u.row(static_cast<std::size_t>(src));
        std::copy(from.begin(), from.end(), out.row(static_cast<std::size_t>(k)).begin());
    }
    return out;
}

NormEstimate operator_norm(const LinearMap& op, const LinearMap& adjoint, const TimeSignal& shape,
                           const NormOptions& options) {
    TimeSignal x = TimeSignal::random(shape.grid(), shape.width(), shape.measure(), options.seed);
    double nx = weighted_norm(x);
    x *= 1.0 / nx;
    double lambda_old = 0.0;
    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        TimeSignal y = adjoint(op(x));
        require_same_shape(shape, y, "operator_norm");
        const double lambda = weighted_inner_product(y, x).real();
        const double ny = weighted_norm(y);
        if (ny == 0.0) return {0.0, it};
        x = (1.0 / ny) * std::move(y);
        if (std::abs(lambda - lambda_old) <= options.tolerance * std::abs(lambda))
            return {std::sqrt(std::max(lambda, 0.0)), it};
        lambda_old = lambda;
    }
    throw ConvergenceError("operator_norm: power iteration did not converge within the iteration cap",
                           std::sqrt(std::max(lambda_old, 0.0)), options.max_iterations);
}

}  // namespace evoconv
