#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "evoconv/timeaxis.hpp"

namespace evoconv {

/// Instantaneous (memoryless) coefficient of a causal law at one time step.
class Instant {
public:
    static Instant diagonal(Eigen::VectorXcd d);
    static Instant dense(Eigen::MatrixXcd m);
    static Instant identity(std::size_t width) { return diagonal(Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(width))); }
    static Instant zero(std::size_t width) { return diagonal(Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(width))); }

    bool is_diagonal() const noexcept { return diagonal_; }
    std::size_t width() const noexcept;
    const Eigen::VectorXcd& diag() const { return diag_; }
    const Eigen::MatrixXcd& matrix() const { return dense_; }
    Eigen::MatrixXcd to_dense() const;

    /// out = D in
    void apply(std::span<const cplx> in, std::span<cplx> out) const;
    /// out += D in
    void apply_add(std::span<const cplx> in, std::span<cplx> out) const;

    Instant operator+(const Instant& other) const;
    /// Composition this * other.
    Instant operator*(const Instant& other) const;
    Instant scaled(cplx s) const;

private:
    bool diagonal_ = true;
    Eigen::VectorXcd diag_;
    Eigen::MatrixXcd dense_;
};

/// Incremental evaluation of a causal law: at step k, (M w)_k = D_k w_k + r_k where D_k is
/// instantaneous and r_k depends only on w_0..w_{k-1}.
class LawStepper {
public:
    virtual ~LawStepper() = default;
    /// Prepares step k; steps must be visited in order 0, 1, 2, ...
    virtual void begin(std::size_t k) = 0;
    virtual const Instant& instant() const = 0;
    virtual std::span<const cplx> memory() const = 0;
    /// Records w_k once it is known.
    virtual void commit(std::span<const cplx> w) = 0;
    /// True if D_k is the same for every k.
    virtual bool constant_instant() const = 0;
};

namespace detail {
struct LawNode;
}

/// Immutable, composable description of a bounded causal space-time operator.
class MaterialLaw {
public:
    enum class Kind {
        Zero,
        Identity,
        SpaceMul,
        TimeMul,
        SpaceTimeMul,
        TimeConvolution,
        Hardy,
        D0Inverse,
        Shift,
        MeanProjection,
        CompressedInverse,
        Sum,
        Product,
    };

    static MaterialLaw zero();
    static MaterialLaw identity();
    /// Multiplication by g_c on component c (width fixed by g).
    static MaterialLaw space_mul(std::vector<cplx> g);
    static MaterialLaw space_mul(const std::vector<double>& g);
    /// Multiplication by kappa(t) on every component.
    static MaterialLaw time_mul(std::function<cplx(double)> kappa, std::string label = "kappa(t)");
    static MaterialLaw constant(cplx value);
    /// Multiplication by g(t, c).
    static MaterialLaw space_time_mul(std::function<cplx(double, std::size_t)> g, std::string label = "g(t,x)");
    /// Causal convolution (kappa * u)(t_k) = dt sum_{j<=k} kappa(t_{k-j}) u_j.
    static MaterialLaw time_convolution(std::function<cplx(double)> kernel, std::string label = "kappa");
    /// M(d0^{-1}) for M analytic and bounded on the disc B(r, r); requires r > 1/(2 nu) on use.
    static MaterialLaw hardy(std::function<cplx(cplx)> M, double r, std::string label = "M");
    static MaterialLaw d0_inverse();
    /// u -> u(. - delay); a negative delay is anti-causal.
    static MaterialLaw shift(double delay);
    /// Orthogonal projection onto mean-zero vectors on components [offset, offset + size), zero elsewhere.
    static MaterialLaw mean_projection(std::size_t offset, std::size_t size);
    /// (P b P + (1 - P))^{-1} on components [offset, offset + b.size()), zero elsewhere, where P is
    /// the mean-zero projection and b > 0.
    static MaterialLaw compressed_inverse(std::size_t offset, std::vector<double> b);
    static MaterialLaw sum(std::vector<MaterialLaw> terms);
    /// Composition factors[0] * factors[1] * ... (rightmost acts first).
    static MaterialLaw product(std::vector<MaterialLaw> factors);

    Kind kind() const noexcept;
    std::string describe() const;
    /// Width required by the law, or 0 if it acts on any width.
    std::size_t required_width() const noexcept;

    TimeSignal apply(const TimeSignal& w) const;
    /// Adjoint in the weighted inner product of the grid of `w`.
    TimeSignal apply_adjoint(const TimeSignal& w) const;
    std::unique_ptr<LawStepper> stepper(const TimeGrid& grid, std::size_t width) const;

    MaterialLaw operator+(const MaterialLaw& other) const { return sum({*this, other}); }
    MaterialLaw operator*(const MaterialLaw& other) const { return product({*this, other}); }

    const detail::LawNode& node() const { return *node_; }

private:
    explicit MaterialLaw(std::shared_ptr<const detail::LawNode> node) : node_(std::move(node)) {}
    std::shared_ptr<const detail::LawNode> node_;
};

/// M(d0 w) - d0(M w).
TimeSignal commutator_with_d0(const MaterialLaw& M, const TimeSignal& w);
/// Weighted adjoint of the commutator map.
TimeSignal commutator_with_d0_adjoint(const MaterialLaw& M, const TimeSignal& w);

struct CausalityReport {
    bool causal;
    double worst_leakage;  // max ||1_{<a} M f|| / ||f|| over trials with spt f in [a, inf)
};

/// Probes truncation commutation with random signals supported after several cut points.
CausalityReport check_causality(const MaterialLaw& M, const TimeSignal& shape, std::size_t trials,
                                std::uint64_t seed = 7, double tolerance = 1e-11);

struct PositivityOptions {
    std::vector<double> a_samples;  // default: t_{K-1}/3, 2 t_{K-1}/3, t_{K-1}
    std::size_t lanczos_steps = 120;
    std::uint64_t seed = 11;
};

struct PositivityReport {
    double c_estimate;            // smallest Ritz value over all cut points
    std::vector<double> a_samples;
    std::vector<double> quotients;  // per cut point
    double min_quotient;
    bool well_posed() const noexcept { return c_estimate > 0.0; }
    /// c in (0, 0.01 nu]
    bool marginal(double nu) const noexcept { return c_estimate > 0.0 && c_estimate <= 0.01 * nu; }
};

/// Smallest eigenvalue of the Hermitian part of u -> 1_{<=a} d0 M 1_{<=a} u in the weighted
/// space, estimated by Lanczos with full reorthogonalization for each cut point a.
PositivityReport estimate_positivity(const MaterialLaw& M, const TimeSignal& shape,
                                     const PositivityOptions& options = {});

/// Weighted operator norm of a law on the grid and layout of `shape`.
NormEstimate law_norm(const MaterialLaw& M, const TimeSignal& shape, const NormOptions& options = {});

struct NeumannInverse {
    MaterialLaw law;   // sum_{l=0}^{L} (-B^{-1} A d0^{-1})^l B^{-1}
    double q;          // measured ||B^{-1} A d0^{-1}||
    double b_inverse_norm;
    double tail_bound;  // q^{L+1} / (1 - q) * ||B^{-1}||
    std::size_t order;
};

/// Truncated Neumann series for (B + A d0^{-1})^{-1}; throws PreconditionError when q >= 1.
NeumannInverse neumann_inverse(const MaterialLaw& B_inverse, const MaterialLaw& A, std::size_t order,
                               const TimeSignal& shape);

/// Period average over [0, 1] by composite Gauss-Legendre quadrature split at `breakpoints`.
cplx weak_limit_coefficient(const std::function<cplx(double)>& g, std::vector<double> breakpoints = {});
Eigen::MatrixXcd weak_limit_coefficient(const std::function<Eigen::MatrixXcd(double)>& g, Eigen::Index rows,
                                        Eigen::Index cols, std::vector<double> breakpoints = {});
/// Inverse of the period average of 1/g.
cplx harmonic_mean(const std::function<cplx(double)>& g, std::vector<double> breakpoints = {});

}  // namespace evoconv
