#include "evoconv/evosolve.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace evoconv {

namespace {

/// Factorized spatial system D/dt + E + A for one step (or for all steps when both
/// instants are constant).
class StepSystem {
public:
    StepSystem(const Instant& D, const Instant& E, double dt, const SpatialOperator& A, std::size_t step)
        : order_(A.band_order()) {
        const std::size_t W = A.width();
        if (D.is_diagonal() && E.is_diagonal()) {
            std::vector<cplx> d(W);
            for (std::size_t c = 0; c < W; ++c) {
                const auto i = static_cast<Eigen::Index>(c);
                d[c] = D.diag()(i) / dt + E.diag()(i);
            }
            banded_.emplace(A.band_with_diagonal(d));
            min_pivot_ = banded_->min_pivot();
            max_pivot_ = banded_->max_pivot();
        } else {
            Eigen::MatrixXcd m = D.to_dense() / dt + E.to_dense();
            m += Eigen::MatrixXcd(A.matrix());
            dense_.emplace(m);
            const auto diag = dense_->matrixLU().diagonal().cwiseAbs();
            min_pivot_ = diag.minCoeff();
            max_pivot_ = diag.maxCoeff();
        }
        if (!(min_pivot_ > 1e-13 * max_pivot_)) {
            std::ostringstream msg;
            msg << "solve: singular step matrix at step " << step << " (min pivot " << min_pivot_ << ", max pivot "
                << max_pivot_ << "); the law is likely not positive at this nu";
            throw SingularStepError(msg.str(), step, min_pivot_);
        }
    }

    void solve(std::span<cplx> rhs) {
        const auto n = static_cast<Eigen::Index>(rhs.size());
        if (dense_) {
            Eigen::Map<Eigen::VectorXcd> b(rhs.data(), n);
            b = dense_->solve(Eigen::VectorXcd(b));
            return;
        }
        work_.resize(rhs.size());
        for (std::size_t r = 0; r < order_.size(); ++r) work_[r] = rhs[order_[r]];
        banded_->solve(work_);
        for (std::size_t r = 0; r < order_.size(); ++r) rhs[order_[r]] = work_[r];
    }

private:
    std::vector<std::size_t> order_;
    std::optional<BandedLU> banded_;
    std::optional<Eigen::PartialPivLU<Eigen::MatrixXcd>> dense_;
    std::vector<cplx> work_;
    double min_pivot_ = 0.0;
    double max_pivot_ = 0.0;
};

TimeSignal diagnostic_shape(const TimeSignal& f, std::size_t max_steps) {
    const TimeGrid& g = f.grid();
    const std::size_t m = std::max<std::size_t>(1, g.steps() / std::max<std::size_t>(max_steps, 2));
    const std::size_t steps = std::max<std::size_t>(2, (g.steps() + m - 1) / m);
    return TimeSignal(TimeGrid(g.nu(), g.dt() * static_cast<double>(m), steps), f.width(), f.measure());
}

template <class F>
auto on_coarse_grid(const TimeSignal& f, std::size_t max_steps, F&& estimate) {
    try {
        return estimate(diagnostic_shape(f, max_steps));
    } catch (const PreconditionError&) {
        // Shifts that do not align with the coarse step.
        return estimate(f.zeros_like());
    }
}

}  // namespace

MaterialLaw effective_law(const Problem& p) {
    if (p.N.kind() == MaterialLaw::Kind::Zero) return p.M;
    return p.M + MaterialLaw::d0_inverse() * p.N;
}

double continuity_constant(double law_norm, double c, double nu) {
    if (!(c > 0.0)) return std::numeric_limits<double>::infinity();
    return 1.0 / nu + law_norm / c + 1.0 / (c * nu);
}

SolveReport solve(const Problem& p, const SolveOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    const TimeSignal& f = p.f;
    const TimeGrid& g = f.grid();
    const std::size_t K = g.steps();
    const std::size_t W = f.width();
    const double dt = g.dt();
    if (p.A.width() != W) throw PreconditionError("solve: spatial operator width does not match the forcing");

    SolveReport report{.u = f.zeros_like(), .elapsed = {}, .warnings = {}};
    report.f_norm = weighted_norm(f);

    auto Ms = p.M.stepper(g, W);
    auto Ns = p.N.stepper(g, W);
    std::optional<StepSystem> system;

    std::vector<cplx> prev_Mu(W, cplx(0.0));
    std::vector<cplx> rhs(W);
    for (std::size_t k = 0; k < K; ++k) {
        Ms->begin(k);
        Ns->begin(k);
        const auto r = Ms->memory();
        const auto s = Ns->memory();
        const auto fk = f.row(k);
        for (std::size_t c = 0; c < W; ++c) rhs[c] = fk[c] - (r[c] - prev_Mu[c]) / dt - s[c];

        const bool reuse = system && Ms->constant_instant() && Ns->constant_instant();
        if (!reuse) system.emplace(Ms->instant(), Ns->instant(), dt, p.A, k);
        system->solve(rhs);

        auto uk = report.u.row(k);
        std::copy(rhs.begin(), rhs.end(), uk.begin());
        Ms->instant().apply(uk, prev_Mu);
        for (std::size_t c = 0; c < W; ++c) prev_Mu[c] += r[c];
        Ms->commit(uk);
        Ns->commit(uk);
    }

    const TimeSignal res = residual(p, report.u);
    report.residual_norm = weighted_norm(res);
    report.lattice_norm = lattice_norm(report.u, p.A);

    if (options.diagnostics) {
        const MaterialLaw eff = effective_law(p);
        report.positivity_c = options.positivity_c ? *options.positivity_c
                                                   : on_coarse_grid(f, options.diagnostic_steps, [&](const TimeSignal& s) {
                                                         PositivityOptions po;
                                                         po.lanczos_steps = options.lanczos_steps;
                                                         return estimate_positivity(eff, s, po).c_estimate;
                                                     });
        report.law_norm = options.law_norm ? *options.law_norm
                                           : on_coarse_grid(f, options.diagnostic_steps, [&](const TimeSignal& s) {
                                                 return law_norm(eff, s, NormOptions{10000, options.norm_tolerance}).value;
                                             });
        report.bound_rhs = continuity_constant(report.law_norm, report.positivity_c, g.nu()) * report.f_norm;
        if (!(report.positivity_c > 0.0)) {
            std::ostringstream msg;
            msg << "positivity estimate c=" << report.positivity_c << " is not positive; the problem may be ill-posed at nu="
                << g.nu();
            report.warnings.push_back(msg.str());
        } else if (report.positivity_c <= 0.01 * g.nu()) {
            std::ostringstream msg;
            msg << "marginal positivity: c=" << report.positivity_c << " <= 0.01 nu";
            report.warnings.push_back(msg.str());
        }
    }
    if (report.residual_norm > 1e-10 * std::max(report.f_norm, std::numeric_limits<double>::min())) {
        std::ostringstream msg;
        msg << "relative residual " << report.residual_norm / report.f_norm << " exceeds 1e-10";
        report.warnings.push_back(msg.str());
    }
    report.elapsed = std::chrono::steady_clock::now() - start;
    return report;
}

TimeSignal residual(const Problem& p, const TimeSignal& u) {
    TimeSignal r = apply_d0(p.M.apply(u));
    if (p.N.kind() != MaterialLaw::Kind::Zero) r += p.N.apply(u);
    r += p.A.apply(u);
    r -= p.f;
    return r;
}

double lattice_norm(const TimeSignal& u, const SpatialOperator& A) {
    TimeSignal v = A.apply(u);
    v += u;
    return weighted_norm(apply_d0_inverse(v));
}

bool verify_continuity_estimate(const SolveReport& report, double law_norm, double c, double nu, double slack) {
    if (report.f_norm == 0.0) return report.lattice_norm == 0.0;
    return report.lattice_norm <= (1.0 + slack) * continuity_constant(law_norm, c, nu) * report.f_norm;
}

}  // namespace evoconv
