#include "evoconv/matlaw.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "law_node.hpp"

namespace evoconv {

using detail::LawNode;
using Kind = MaterialLaw::Kind;

namespace {

std::shared_ptr<LawNode> make_node(Kind kind, std::string label) {
    auto n = std::make_shared<LawNode>();
    n->kind = kind;
    n->label = std::move(label);
    return n;
}

void require_width(const LawNode& n, std::size_t width, const char* where) {
    std::size_t need = 0;
    if (n.kind == Kind::SpaceMul) need = n.space.size();
    if (n.kind == Kind::MeanProjection || n.kind == Kind::CompressedInverse) need = n.offset + n.size;
    if (need != 0 && (n.kind == Kind::SpaceMul ? width != need : width < need)) {
        std::ostringstream msg;
        msg << where << ": law " << n.label << " does not fit a field of width " << width;
        throw PreconditionError(msg.str());
    }
}

// Direct causal convolution with samples kappa_k: y_k = dt sum_{j<=k} kappa_{k-j} u_j.
TimeSignal convolve(const TimeSignal& u, const std::vector<cplx>& kappa) {
    TimeSignal out = u.zeros_like();
    const std::size_t K = u.steps();
    const std::size_t W = u.width();
    const double dt = u.grid().dt();
    for (std::size_t k = 0; k < K; ++k) {
        auto y = out.row(k);
        for (std::size_t j = 0; j <= k; ++j) {
            const cplx c = kappa[k - j] * dt;
            if (c == cplx(0.0)) continue;
            auto x = u.row(j);
            for (std::size_t i = 0; i < W; ++i) y[i] += c * x[i];
        }
    }
    return out;
}

// Weighted adjoint of convolve: E^{-1} T^H E.
TimeSignal convolve_adjoint(const TimeSignal& z, const std::vector<cplx>& kappa) {
    const TimeGrid& g = z.grid();
    TimeSignal out = z.zeros_like();
    const std::size_t K = z.steps();
    const std::size_t W = z.width();
    for (std::size_t j = 0; j < K; ++j) {
        auto y = out.row(j);
        for (std::size_t k = j; k < K; ++k) {
            const cplx c = std::conj(kappa[k - j]) * g.dt() * (g.weight(k) / g.weight(j));
            if (c == cplx(0.0)) continue;
            auto x = z.row(k);
            for (std::size_t i = 0; i < W; ++i) y[i] += c * x[i];
        }
    }
    return out;
}

std::vector<cplx> sample_kernel(const LawNode& n, const TimeGrid& g) {
    std::vector<cplx> kappa(g.steps());
    for (std::size_t k = 0; k < g.steps(); ++k) kappa[k] = n.fn_t(g.t(k));
    return kappa;
}

long delay_steps(const LawNode& n, const TimeGrid& g) { return shift_steps(g, n.delay); }

TimeSignal shift_apply(const TimeSignal& u, long s) {
    // (tau u)_k = u_{k-s}
    TimeSignal out = u.zeros_like();
    const auto K = static_cast<long>(u.steps());
    for (long k = 0; k < K; ++k) {
        const long src = k - s;
        if (src < 0 || src >= K) continue;
        auto from = u.row(static_cast<std::size_t>(src));
        std::copy(from.begin(), from.end(), out.row(static_cast<std::size_t>(k)).begin());
    }
    return out;
}

TimeSignal shift_adjoint(const TimeSignal& z, long s) {
    const TimeGrid& g = z.grid();
    TimeSignal out = z.zeros_like();
    const auto K = static_cast<long>(z.steps());
    for (long j = 0; j < K; ++j) {
        const long src = j + s;
        if (src < 0 || src >= K) continue;
        const double ratio = g.weight(static_cast<std::size_t>(src)) / g.weight(static_cast<std::size_t>(j));
        auto from = z.row(static_cast<std::size_t>(src));
        auto to = out.row(static_cast<std::size_t>(j));
        for (std::size_t i = 0; i < from.size(); ++i) to[i] = from[i] * ratio;
    }
    return out;
}

TimeSignal hardy_apply(const LawNode& n, const TimeSignal& u, bool adjoint) {
    const TimeGrid& g = u.grid();
    detail::require_hardy_radius(n, g);
    auto symbol = [&](double xi) {
        const cplx m = n.symbol(discrete_d0_inverse_symbol(g, xi));
        return adjoint ? std::conj(m) : m;
    };
    return apply_spectral_multiplier(u, symbol, detail::hardy_padding(g));
}

TimeSignal block_map(const TimeSignal& u, std::size_t offset, std::size_t size,
                     const std::function<void(const cplx*, cplx*)>& f) {
    TimeSignal out = u.zeros_like();
    for (std::size_t k = 0; k < u.steps(); ++k) f(u.row(k).data() + offset, out.row(k).data() + offset);
    (void)size;
    return out;
}

void mean_projection_block(std::size_t n, const cplx* in, cplx* out) {
    cplx mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += in[i];
    mean /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = in[i] - mean;
}

TimeSignal apply_node(const LawNode& n, const TimeSignal& u, bool adjoint) {
    require_width(n, u.width(), adjoint ? "MaterialLaw::apply_adjoint" : "MaterialLaw::apply");
    const TimeGrid& g = u.grid();
    switch (n.kind) {
        case Kind::Zero:
            return u.zeros_like();
        case Kind::Identity:
            return u;
        case Kind::SpaceMul: {
            TimeSignal out = u;
            for (std::size_t k = 0; k < u.steps(); ++k) {
                auto r = out.row(k);
                for (std::size_t c = 0; c < r.size(); ++c) r[c] *= adjoint ? std::conj(n.space[c]) : n.space[c];
            }
            return out;
        }
        case Kind::TimeMul: {
            TimeSignal out = u;
            for (std::size_t k = 0; k < u.steps(); ++k) {
                const cplx s = adjoint ? std::conj(n.fn_t(g.t(k))) : n.fn_t(g.t(k));
                for (auto& x : out.row(k)) x *= s;
            }
            return out;
        }
        case Kind::SpaceTimeMul: {
            TimeSignal out = u;
            for (std::size_t k = 0; k < u.steps(); ++k) {
                auto r = out.row(k);
                for (std::size_t c = 0; c < r.size(); ++c) {
                    const cplx s = n.fn_tc(g.t(k), c);
                    r[c] *= adjoint ? std::conj(s) : s;
                }
            }
            return out;
        }
        case Kind::TimeConvolution: {
            const auto kappa = sample_kernel(n, g);
            return adjoint ? convolve_adjoint(u, kappa) : convolve(u, kappa);
        }
        case Kind::Hardy:
            return hardy_apply(n, u, adjoint);
        case Kind::D0Inverse:
            return adjoint ? apply_d0_inverse_adjoint(u) : apply_d0_inverse(u);
        case Kind::Shift: {
            const long s = delay_steps(n, g);
            return adjoint ? shift_adjoint(u, s) : shift_apply(u, s);
        }
        case Kind::MeanProjection:
            return block_map(u, n.offset, n.size,
                             [&](const cplx* in, cplx* out) { mean_projection_block(n.size, in, out); });
        case Kind::CompressedInverse:
            return block_map(u, n.offset, n.size,
                             [&](const cplx* in, cplx* out) { detail::compressed_inverse_block(n.b, in, out); });
        case Kind::Sum: {
            TimeSignal out = u.zeros_like();
            for (const auto& c : n.children) out += adjoint ? c.apply_adjoint(u) : c.apply(u);
            return out;
        }
        case Kind::Product: {
            TimeSignal y = u;
            if (adjoint)
                for (const auto& c : n.children) y = c.apply_adjoint(y);
            else
                for (auto it = n.children.rbegin(); it != n.children.rend(); ++it) y = it->apply(y);
            return y;
        }
    }
    throw Error("MaterialLaw: unknown kind");
}

}  // namespace

namespace detail {

std::size_t hardy_padding(const TimeGrid& grid) {
    const double span = grid.nu() * grid.dt() * static_cast<double>(grid.steps());
    const auto extra = static_cast<std::size_t>(std::ceil(40.0 / span));
    return std::max<std::size_t>(4, 1 + extra);
}

void require_hardy_radius(const LawNode& node, const TimeGrid& grid) {
    if (!(node.radius > 1.0 / (2.0 * grid.nu()))) {
        std::ostringstream msg;
        msg << "Hardy law " << node.label << ": radius r=" << node.radius << " must exceed 1/(2 nu)="
            << 1.0 / (2.0 * grid.nu());
        throw PreconditionError(msg.str());
    }
}

std::vector<cplx> hardy_kernel(const LawNode& node, const TimeGrid& grid) {
    TimeSignal impulse(grid, 1, 1.0);
    impulse(0) = 1.0;
    TimeSignal response = hardy_apply(node, impulse, false);
    std::vector<cplx> kappa(grid.steps());
    for (std::size_t k = 0; k < grid.steps(); ++k) kappa[k] = response(k) / grid.dt();
    return kappa;
}

void compressed_inverse_block(const std::vector<double>& b, const cplx* in, cplx* out) {
    const std::size_t n = b.size();
    cplx mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += in[i];
    mean /= static_cast<double>(n);
    cplx s_over_b = 0.0;
    double inv_b = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        s_over_b += (in[i] - mean) / b[i];
        inv_b += 1.0 / b[i];
    }
    const cplx c = -s_over_b / inv_b;
    for (std::size_t i = 0; i < n; ++i) out[i] = (in[i] - mean + c) / b[i] + mean;
}

}  // namespace detail

MaterialLaw MaterialLaw::zero() { return MaterialLaw(make_node(Kind::Zero, "0")); }
MaterialLaw MaterialLaw::identity() { return MaterialLaw(make_node(Kind::Identity, "1")); }

MaterialLaw MaterialLaw::space_mul(std::vector<cplx> g) {
    if (g.empty()) throw PreconditionError("space_mul: empty coefficient vector");
    auto n = make_node(Kind::SpaceMul, "g(x)");
    n->space = std::move(g);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::space_mul(const std::vector<double>& g) {
    return space_mul(std::vector<cplx>(g.begin(), g.end()));
}

MaterialLaw MaterialLaw::time_mul(std::function<cplx(double)> kappa, std::string label) {
    auto n = make_node(Kind::TimeMul, std::move(label));
    n->fn_t = std::move(kappa);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::constant(cplx value) {
    std::ostringstream label;
    label << value;
    auto n = make_node(Kind::TimeMul, label.str());
    n->fn_t = [value](double) { return value; };
    n->time_invariant = true;
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::space_time_mul(std::function<cplx(double, std::size_t)> g, std::string label) {
    auto n = make_node(Kind::SpaceTimeMul, std::move(label));
    n->fn_tc = std::move(g);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::time_convolution(std::function<cplx(double)> kernel, std::string label) {
    auto n = make_node(Kind::TimeConvolution, std::move(label));
    n->fn_t = std::move(kernel);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::hardy(std::function<cplx(cplx)> M, double r, std::string label) {
    if (!(r > 0.0)) throw PreconditionError("hardy: radius must be positive");
    auto n = make_node(Kind::Hardy, std::move(label));
    n->symbol = std::move(M);
    n->radius = r;
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::d0_inverse() { return MaterialLaw(make_node(Kind::D0Inverse, "d0^-1")); }

MaterialLaw MaterialLaw::shift(double delay) {
    std::ostringstream label;
    label << "tau(" << -delay << ")";
    auto n = make_node(Kind::Shift, label.str());
    n->delay = delay;
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::mean_projection(std::size_t offset, std::size_t size) {
    if (size == 0) throw PreconditionError("mean_projection: empty block");
    auto n = make_node(Kind::MeanProjection, "P");
    n->offset = offset;
    n->size = size;
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::compressed_inverse(std::size_t offset, std::vector<double> b) {
    if (b.empty()) throw PreconditionError("compressed_inverse: empty block");
    if (std::any_of(b.begin(), b.end(), [](double x) { return !(x > 0.0); }))
        throw PreconditionError("compressed_inverse: coefficient must be strictly positive");
    auto n = make_node(Kind::CompressedInverse, "(PbP)^-1");
    n->offset = offset;
    n->size = b.size();
    n->b = std::move(b);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::sum(std::vector<MaterialLaw> terms) {
    if (terms.empty()) return zero();
    if (terms.size() == 1) return terms.front();
    auto n = make_node(Kind::Sum, "sum");
    n->children = std::move(terms);
    return MaterialLaw(n);
}

MaterialLaw MaterialLaw::product(std::vector<MaterialLaw> factors) {
    if (factors.empty()) return identity();
    if (factors.size() == 1) return factors.front();
    auto n = make_node(Kind::Product, "product");
    n->children = std::move(factors);
    return MaterialLaw(n);
}

MaterialLaw::Kind MaterialLaw::kind() const noexcept { return node_->kind; }

std::size_t MaterialLaw::required_width() const noexcept {
    const LawNode& n = *node_;
    if (n.kind == Kind::SpaceMul) return n.space.size();
    std::size_t w = 0;
    for (const auto& c : n.children) w = std::max(w, c.required_width());
    return w;
}

std::string MaterialLaw::describe() const {
    const LawNode& n = *node_;
    auto join = [&](const char* sep) {
        std::string s;
        for (std::size_t i = 0; i < n.children.size(); ++i) {
            if (i) s += sep;
            const bool wrap = n.children[i].kind() == Kind::Sum;
            s += wrap ? "(" + n.children[i].describe() + ")" : n.children[i].describe();
        }
        return s;
    };
    switch (n.kind) {
        case Kind::Sum:
            return join(" + ");
        case Kind::Product:
            return join(" * ");
        case Kind::TimeConvolution:
            return n.label + "*";
        case Kind::Hardy:
            return n.label + "(d0^-1)";
        default:
            return n.label;
    }
}

TimeSignal MaterialLaw::apply(const TimeSignal& w) const { return apply_node(*node_, w, false); }
TimeSignal MaterialLaw::apply_adjoint(const TimeSignal& w) const { return apply_node(*node_, w, true); }

TimeSignal commutator_with_d0(const MaterialLaw& M, const TimeSignal& w) {
    return M.apply(apply_d0(w)) - apply_d0(M.apply(w));
}

TimeSignal commutator_with_d0_adjoint(const MaterialLaw& M, const TimeSignal& w) {
    return apply_d0_adjoint(M.apply_adjoint(w)) - M.apply_adjoint(apply_d0_adjoint(w));
}

CausalityReport check_causality(const MaterialLaw& M, const TimeSignal& shape, std::size_t trials,
                                std::uint64_t seed, double tolerance) {
    const TimeGrid& g = shape.grid();
    CausalityReport report{true, 0.0};
    for (std::size_t trial = 0; trial < trials; ++trial) {
        for (int i = 1; i <= 3; ++i) {
            const double a = g.last_time() * i / 4.0;
            TimeSignal f = TimeSignal::random(g, shape.width(), shape.measure(), seed + 31 * trial + i);
            f -= truncate_before(f, a);
            const double leak = weighted_norm(truncate_before(M.apply(f), a)) / weighted_norm(f);
            report.worst_leakage = std::max(report.worst_leakage, leak);
        }
    }
    report.causal = report.worst_leakage <= tolerance;
    return report;
}

PositivityReport estimate_positivity(const MaterialLaw& M, const TimeSignal& shape, const PositivityOptions& options) {
    const TimeGrid& g = shape.grid();
    PositivityReport report{};
    report.a_samples = options.a_samples;
    if (report.a_samples.empty())
        report.a_samples = {g.last_time() / 3.0, 2.0 * g.last_time() / 3.0, g.last_time()};

    for (const double a : report.a_samples) {
        std::size_t active = 0;
        for (std::size_t k = 0; k < g.steps(); ++k)
            if (g.t(k) <= a) ++active;
        if (active == 0) throw PreconditionError("estimate_positivity: cut point before the first grid time");
        auto H = [&](const TimeSignal& x) {
            TimeSignal xa = truncate_after(x, a);
            TimeSignal forward = apply_d0(M.apply(xa));
            TimeSignal backward = M.apply_adjoint(apply_d0_adjoint(xa));
            TimeSignal y = truncate_after(forward + backward, a);
            return 0.5 * std::move(y);
        };
        const std::size_t dim = active * shape.width();
        const std::size_t m = std::min(options.lanczos_steps, dim);

        // Basis stored as sqrt(weight)-scaled columns so the weighted inner product is a plain dot.
        const auto len = static_cast<Eigen::Index>(g.steps() * shape.width());
        Eigen::VectorXd scale(len);
        for (std::size_t k = 0; k < g.steps(); ++k)
            scale.segment(static_cast<Eigen::Index>(k * shape.width()), static_cast<Eigen::Index>(shape.width()))
                .setConstant(std::sqrt(g.weight(k) * g.dt() * shape.measure()));
        const Eigen::VectorXd inv_scale = (scale.array() > 0.0).select(scale.cwiseInverse(), 0.0);
        auto to_scaled = [&](const TimeSignal& x) {
            return Eigen::VectorXcd(scale.cwiseProduct(Eigen::Map<const Eigen::VectorXcd>(x.values().data(), len)));
        };
        Eigen::MatrixXcd Q(len, static_cast<Eigen::Index>(m));
        std::vector<double> alpha, beta;
        TimeSignal v = truncate_after(TimeSignal::random(g, shape.width(), shape.measure(), options.seed), a);
        v *= 1.0 / weighted_norm(v);
        Q.col(0) = to_scaled(v);
        for (std::size_t j = 0; j < m; ++j) {
            const auto cols = static_cast<Eigen::Index>(j + 1);
            Eigen::Map<Eigen::VectorXcd>(v.values().data(), len) = Q.col(cols - 1).cwiseProduct(inv_scale.cast<cplx>());
            Eigen::VectorXcd w = to_scaled(H(v));
            const double aj = Q.col(cols - 1).dot(w).real();
            alpha.push_back(aj);
            for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(cols) * (Q.leftCols(cols).adjoint() * w);
            const double bj = w.norm();
            if (j + 1 == m || bj <= 1e-12 * std::max(1.0, std::abs(aj))) break;
            beta.push_back(bj);
            Q.col(cols) = w / bj;
        }
        const auto n = static_cast<Eigen::Index>(alpha.size());
        Eigen::VectorXd d = Eigen::Map<Eigen::VectorXd>(alpha.data(), n);
        Eigen::VectorXd e = n > 1 ? Eigen::VectorXd(Eigen::Map<Eigen::VectorXd>(beta.data(), n - 1))
                                  : Eigen::VectorXd(0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
        eig.computeFromTridiagonal(d, e, Eigen::EigenvaluesOnly);
        if (eig.info() != Eigen::Success)
            throw ConvergenceError("estimate_positivity: tridiagonal eigenproblem failed",
                                   report.quotients.empty() ? 0.0 : report.quotients.back(), alpha.size());
        report.quotients.push_back(eig.eigenvalues()(0));
    }
    report.min_quotient = *std::min_element(report.quotients.begin(), report.quotients.end());
    report.c_estimate = report.min_quotient;
    return report;
}

NormEstimate law_norm(const MaterialLaw& M, const TimeSignal& shape, const NormOptions& options) {
    return operator_norm([&](const TimeSignal& x) { return M.apply(x); },
                         [&](const TimeSignal& x) { return M.apply_adjoint(x); }, shape, options);
}

NeumannInverse neumann_inverse(const MaterialLaw& B_inverse, const MaterialLaw& A, std::size_t order,
                               const TimeSignal& shape) {
    const double b_norm = law_norm(B_inverse, shape).value;
    if (A.kind() == Kind::Zero) return NeumannInverse{B_inverse, 0.0, b_norm, 0.0, order};

    const MaterialLaw step = MaterialLaw::product({B_inverse, A, MaterialLaw::d0_inverse()});
    const double q = law_norm(step, shape).value;
    if (!(q < 1.0)) {
        std::ostringstream msg;
        msg << "neumann_inverse: contraction factor q=" << q << " >= 1 at nu=" << shape.grid().nu()
            << "; increase nu";
        throw PreconditionError(msg.str());
    }
    const MaterialLaw minus_step = MaterialLaw::product({MaterialLaw::constant(-1.0), step});
    MaterialLaw series = B_inverse;
    for (std::size_t l = 0; l < order; ++l) series = B_inverse + minus_step * series;
    const double tail = std::pow(q, static_cast<double>(order + 1)) / (1.0 - q) * b_norm;
    return NeumannInverse{series, q, b_norm, tail, order};
}

namespace {

struct GaussRule {
    std::vector<double> x, w;  // on [-1, 1]
};

GaussRule gauss_legendre(std::size_t n) {
    GaussRule r{std::vector<double>(n), std::vector<double>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (std::size_t j = 1; j <= n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j - 1.0) * z * p1 - (j - 1.0) * p2) / static_cast<double>(j);
            }
            dp = static_cast<double>(n) * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        r.x[i] = z;
        r.w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    return r;
}

std::vector<double> pieces(std::vector<double> breakpoints) {
    breakpoints.push_back(0.0);
    breakpoints.push_back(1.0);
    std::sort(breakpoints.begin(), breakpoints.end());
    breakpoints.erase(std::remove_if(breakpoints.begin(), breakpoints.end(),
                                     [](double b) { return b < 0.0 || b > 1.0; }),
                      breakpoints.end());
    breakpoints.erase(std::unique(breakpoints.begin(), breakpoints.end()), breakpoints.end());
    return breakpoints;
}

template <class T, class F>
T integrate(const F& g, const std::vector<double>& breakpoints, T zero) {
    static const GaussRule rule = gauss_legendre(20);
    constexpr int kSub = 32;
    const auto edges = pieces(breakpoints);
    T total = zero;
    for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
        const double a = edges[p], b = edges[p + 1];
        const double h = (b - a) / kSub;
        for (int s = 0; s < kSub; ++s) {
            const double mid = a + (s + 0.5) * h;
            for (std::size_t i = 0; i < rule.x.size(); ++i) total += g(mid + 0.5 * h * rule.x[i]) * (0.5 * h * rule.w[i]);
        }
    }
    return total;
}

}  // namespace

cplx weak_limit_coefficient(const std::function<cplx(double)>& g, std::vector<double> breakpoints) {
    return integrate<cplx>(g, breakpoints, cplx(0.0));
}

Eigen::MatrixXcd weak_limit_coefficient(const std::function<Eigen::MatrixXcd(double)>& g, Eigen::Index rows,
                                        Eigen::Index cols, std::vector<double> breakpoints) {
    return integrate<Eigen::MatrixXcd>(g, breakpoints, Eigen::MatrixXcd::Zero(rows, cols));
}

cplx harmonic_mean(const std::function<cplx(double)>& g, std::vector<double> breakpoints) {
    return 1.0 / weak_limit_coefficient([&](double x) { return 1.0 / g(x); }, std::move(breakpoints));
}

}  // namespace evoconv
