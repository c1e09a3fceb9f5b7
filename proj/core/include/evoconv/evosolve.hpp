#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <vector>

#include "evoconv/matlaw.hpp"
#include "evoconv/space1d.hpp"
#include "evoconv/timeaxis.hpp"

namespace evoconv {

/// (d0 M + N + A) u = f on the grid of f.
struct Problem {
    MaterialLaw M;
    MaterialLaw N = MaterialLaw::zero();
    SpatialOperator A;
    TimeSignal f;
};

struct SolveOptions {
    /// Estimate c and ||M|| and evaluate the continuity bound.
    bool diagnostics = true;
    /// Known values skip the corresponding estimate.
    std::optional<double> positivity_c;
    std::optional<double> law_norm;
    /// Diagnostics run on a grid coarsened to at most this many steps.
    std::size_t diagnostic_steps = 64;
    std::size_t lanczos_steps = 60;
    /// Relative tolerance of the ||M|| power iteration.
    double norm_tolerance = 1e-6;
};

struct SolveReport {
    TimeSignal u;
    double f_norm = 0.0;
    double residual_norm = 0.0;
    double lattice_norm = 0.0;
    /// (1/nu + ||M||/c + 1/(c nu)) |f|; zero when diagnostics are off.
    double bound_rhs = 0.0;
    double positivity_c = 0.0;
    double law_norm = 0.0;
    std::chrono::duration<double> elapsed{};
    std::vector<std::string> warnings;
};

/// Causal block forward elimination. Throws SingularStepError when a step matrix is singular; a
/// non-positive or marginal positivity estimate is reported in `warnings`.
SolveReport solve(const Problem& p, const SolveOptions& options = {});

/// Residual of the discrete equation, re-applying every operator to u.
TimeSignal residual(const Problem& p, const TimeSignal& u);

/// |u|_{-1,1} = ||d0^{-1} (A + 1) u||_nu.
double lattice_norm(const TimeSignal& u, const SpatialOperator& A);

/// True iff report.lattice_norm <= (1 + slack) (1/nu + ||M||/c + 1/(c nu)) |f|.
bool verify_continuity_estimate(const SolveReport& report, double law_norm, double c, double nu,
                                double slack = 0.05);

/// Continuity constant 1/nu + ||M||/c + 1/(c nu).
double continuity_constant(double law_norm, double c, double nu);

/// M + d0^{-1} N, the law whose positivity governs (d0 M + N + A).
MaterialLaw effective_law(const Problem& p);

}  // namespace evoconv
