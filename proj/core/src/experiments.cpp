#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "evoconv/gconv.hpp"
#include "law_node.hpp"

namespace evoconv {

namespace {

using Intervals = std::vector<std::pair<double, double>>;
using LawPair = std::pair<MaterialLaw, MaterialLaw>;  // (M, N)

// Phase sets of the mixed-type system: M0 on u, M0 on v, M1 on u, M1 on v.
const Intervals kM0u{{0.0, 0.25}, {0.5, 0.75}};
const Intervals kM0v{{0.0, 0.25}, {0.75, 1.0}};
const Intervals kM1u{{0.25, 0.5}, {0.75, 1.0}};
const Intervals kM1v{{0.25, 0.5}, {0.5, 0.75}};

const Piecewise kTwoPhase{{0.0, 0.5}, {1.0, 2.0}};

// Reported norms only need six digits.
const NormOptions kReportNorm{10000, 1e-6};

std::string fmt(double x) {
    std::ostringstream out;
    out.precision(12);
    out << x;
    return out.str();
}

std::string fmt_list(const std::vector<double>& xs) {
    std::string s;
    for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? ", " : "") + fmt(xs[i]);
    return s;
}

TimeGrid time_grid(const ExperimentSettings& s) { return TimeGrid(s.nu, s.dt, s.steps()); }

double horizon(const TimeGrid& g) { return g.dt() * static_cast<double>(g.steps()); }

double forcing_profile(const TimeGrid& g, double t) {
    const double T = horizon(g);
    return bump((t - 0.25 * T) / (0.2 * T));
}

/// f on the first block, g on the second (if present and requested).
TimeSignal layout_forcing(const TimeGrid& g, const FieldLayout& layout, bool second_block) {
    const auto pi = std::numbers::pi;
    TimeSignal f = layout.zeros(g);
    const auto& blocks = layout.blocks();
    for (std::size_t k = 0; k < g.steps(); ++k) {
        const double a = forcing_profile(g, g.t(k));
        if (a == 0.0) continue;
        const Block& b0 = blocks[0];
        for (std::size_t i = 0; i < b0.size; ++i) {
            const double x = b0.positions[i];
            f(k, b0.offset + i) = a * std::sin(pi * x) * (blocks.size() > 1 ? bump((x - 0.5) / 0.45) : 1.0);
        }
        if (second_block && blocks.size() > 1) {
            const Block& b1 = blocks[1];
            for (std::size_t i = 0; i < b1.size; ++i) f(k, b1.offset + i) = a * bump((b1.positions[i] - 0.4) / 0.3);
        }
    }
    return f;
}

TimeSignal scalar_forcing(const TimeGrid& g) {
    const double T = horizon(g);
    return TimeSignal::sample(g, 1, 1.0, [T](double t, std::size_t) { return bump((t - 0.45 * T) / (0.4 * T)); });
}

std::vector<double> concat(std::vector<double> a, const std::vector<double>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

bool is_integer(double x) { return std::abs(x - std::round(x)) <= 1e-12 * std::max(1.0, std::abs(x)); }

void require(bool ok, const std::string& message) {
    if (!ok) throw PreconditionError(message);
}

/// Breakpoints start/n of a period-1/n profile must land on cell faces.
void require_aligned(std::size_t N, double n, const std::vector<double>& starts, const std::string& what) {
    require(is_integer(n) && n >= 1.0, what + ": oscillation index n=" + fmt(n) + " must be a positive integer");
    for (const double s : starts) {
        const double faces = static_cast<double>(N) * s / n;
        if (!is_integer(faces)) {
            std::ostringstream msg;
            msg << what << ": N=" << N << " does not align the breakpoint " << s << " of the n=" << n
                << " oscillation with the grid; use N a multiple of " << n << " / " << s;
            throw PreconditionError(msg.str());
        }
    }
}

std::optional<Piecewise> profile_for(const ExperimentSettings& s, const Piecewise& preset) {
    if (s.coefficient == "preset") return preset;
    if (s.coefficient == "constant") return std::nullopt;
    return Piecewise::parse(s.coefficient);
}

std::vector<double> mixed_block(const SpaceGrid& sg, double n, const Intervals& on_nodes, const Intervals& on_cells) {
    return concat(sample_nodes(sg, oscillated(indicator(on_nodes), n)),
                  sample_cells(sg, oscillated(indicator(on_cells), n)));
}

MaterialLaw mixed_law(const std::vector<double>& m0, const std::vector<double>& m1) {
    return MaterialLaw::space_mul(m0) + MaterialLaw::d0_inverse() * MaterialLaw::space_mul(m1);
}

SolveOptions solve_options() { return SolveOptions{}; }

SolveCheck check_of(double n, const SolveReport& r) {
    const bool holds = r.lattice_norm <= 1.05 * r.bound_rhs;
    return SolveCheck{n, r.lattice_norm, r.bound_rhs, r.residual_norm, r.f_norm, holds};
}

void common_params(ConvergenceReport& r, const ExperimentSettings& s) {
    r.params = {{"nu", fmt(s.nu)},
                {"dt", fmt(s.dt)},
                {"T", fmt(s.T)},
                {"K", std::to_string(s.steps())},
                {"N", std::to_string(s.N)},
                {"coefficient", s.coefficient}};
}

/// Solves every ladder member and the limit system (last entry) concurrently.
std::vector<SolveReport> solve_all(std::size_t count, std::size_t threads,
                                   const std::function<Problem(std::size_t)>& build) {
    std::vector<std::optional<SolveReport>> out(count);
    parallel_for(count, threads, [&](std::size_t i) { out[i] = solve(build(i), solve_options()); });
    std::vector<SolveReport> reports;
    reports.reserve(count);
    for (auto& r : out) reports.push_back(std::move(*r));
    return reports;
}

void collect_warnings(ConvergenceReport& r, const SolveReport& s, const std::string& who) {
    for (const auto& w : s.warnings) r.notes.push_back(who + ": " + w);
}

/// Shared protocol: solve each member and the limit, pair the differences against the test set.
void run_ladder(ConvergenceReport& r, const ExperimentSettings& s, const FieldLayout& layout, const SpatialOperator& A,
                const TimeSignal& f, const std::function<LawPair(double)>& member, const LawPair& limit) {
    const TimeGrid& g = f.grid();
    const auto tests = TestFunctionSet::standard(g, layout);
    const std::size_t L = s.ladder.size();
    const auto reports = solve_all(L + 1, s.threads, [&](std::size_t i) {
        const LawPair laws = i < L ? member(s.ladder[i]) : limit;
        return Problem{laws.first, laws.second, A, f};
    });
    const SolveReport& lim = reports[L];
    const MaterialLaw limit_eff = effective_law(Problem{limit.first, limit.second, A, f});
    // Probe with data on every block so coefficient changes on any block show up in the gap.
    const TimeSignal probe = layout_forcing(g, layout, true);
    const TimeSignal limit_probe = limit_eff.apply(probe);
    r.n_values = s.ladder;
    for (std::size_t i = 0; i < L; ++i) {
        r.pairing_errors.push_back(tests.pairings(reports[i].u - lim.u));
        const LawPair laws = member(s.ladder[i]);
        const auto gap = tests.pairings(effective_law(Problem{laws.first, laws.second, A, f}).apply(probe) - limit_probe);
        r.oracle_gaps.push_back(*std::max_element(gap.begin(), gap.end()));
        r.solves.push_back(check_of(s.ladder[i], reports[i]));
        collect_warnings(r, reports[i], r.ladder_name + "=" + fmt(s.ladder[i]));
    }
    r.solves.push_back(check_of(std::numeric_limits<double>::infinity(), lim));
    collect_warnings(r, lim, "limit");
    r.oracle_gap_meaning = "max_j |<(M_n - M) p, phi_j>| for the effective law M + d0^-1 N and a probe p on all blocks";
    const auto errors = r.max_errors();
    r.fitted_rate = fitted_rate(r.n_values, errors);
    r.verdict = convergence_verdict(r.n_values, errors);
}

template <class F>
ConvergenceReport timed(const std::string& name, const ExperimentSettings& s, F&& body) {
    validate(s);
    const auto start = std::chrono::steady_clock::now();
    ConvergenceReport r;
    r.experiment = name;
    r.expected = expected_verdict(name);
    common_params(r, s);
    body(r);
    r.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

std::function<cplx(double)> load_kernel(const std::string& path) {
    std::ifstream in(path);
    require(static_cast<bool>(in), "kernel file '" + path + "' cannot be opened");
    std::vector<double> ts, vs;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream row(line);
        double t = 0.0, v = 0.0;
        if (!(row >> t)) continue;
        require(static_cast<bool>(row >> v), "kernel file '" + path + "' line " + std::to_string(lineno) +
                                                 ": expected two columns (t, value)");
        require(t >= 0.0, "kernel file '" + path + "' line " + std::to_string(lineno) +
                              ": kernels must be supported on t >= 0");
        require(ts.empty() || t > ts.back(),
                "kernel file '" + path + "' line " + std::to_string(lineno) + ": times must increase");
        ts.push_back(t);
        vs.push_back(v);
    }
    require(ts.size() >= 2, "kernel file '" + path + "' needs at least two samples");
    return [ts, vs](double t) -> cplx {
        if (t < ts.front() || t > ts.back()) return 0.0;
        const auto it = std::upper_bound(ts.begin(), ts.end(), t);
        const std::size_t j = it == ts.end() ? ts.size() - 1 : static_cast<std::size_t>(it - ts.begin());
        const std::size_t i = j - 1;
        const double w = (t - ts[i]) / (ts[j] - ts[i]);
        return (1.0 - w) * vs[i] + w * vs[j];
    };
}

std::function<cplx(double)> convolution_kernel(const ExperimentSettings& s) {
    if (s.kernel_file.empty()) return [](double t) { return cplx(std::exp(-t)); };
    if (s.kernel_file == "none") return [](double) { return cplx(0.0); };
    return load_kernel(s.kernel_file);
}

/// Mixed-type coefficient pair for oscillation index n, or the constant limit when n is infinite.
std::pair<std::vector<double>, std::vector<double>> mixed_coefficients(const SpaceGrid& sg, const ExperimentSettings& s,
                                                                       double n) {
    const std::size_t W = 2 * sg.cells() - 1;
    if (std::isinf(n) || s.coefficient == "constant") return {std::vector<double>(W, 0.5), std::vector<double>(W, 0.5)};
    return {mixed_block(sg, n, kM0u, kM0v), mixed_block(sg, n, kM1u, kM1v)};
}

void mixed_oracles(ConvergenceReport& r) {
    auto mean = [](const Intervals& iv) {
        std::vector<double> bp;
        for (const auto& [a, b] : iv) bp.insert(bp.end(), {a, b});
        return weak_limit_coefficient([f = indicator(iv)](double x) { return cplx(f(x)); }, bp).real();
    };
    r.oracle_values.emplace_back("limit_M0_u", mean(kM0u));
    r.oracle_values.emplace_back("limit_M0_v", mean(kM0v));
    r.oracle_values.emplace_back("limit_M1_u", mean(kM1u));
    r.oracle_values.emplace_back("limit_M1_v", mean(kM1v));
}

double law_gap_norm(const MaterialLaw& a, const MaterialLaw& b, const TimeSignal& shape, ConvergenceReport& r,
                    const std::string& what) {
    const MaterialLaw diff = a + MaterialLaw::constant(-1.0) * b;
    try {
        return law_norm(diff, shape, kReportNorm).value;
    } catch (const ConvergenceError& e) {
        r.notes.push_back(what + ": power iteration stopped at the cap; using the last estimate");
        return e.last_estimate();
    }
}

double estimate_norm(const LinearMap& op, const LinearMap& adj, const TimeSignal& shape, ConvergenceReport& r,
                     const std::string& what) {
    try {
        return operator_norm(op, adj, shape, kReportNorm).value;
    } catch (const ConvergenceError& e) {
        r.notes.push_back(what + ": power iteration stopped at the cap; using the last estimate");
        return e.last_estimate();
    }
}

}  // namespace

const std::vector<ExperimentInfo>& list_experiments() {
    static const std::vector<ExperimentInfo> list{
        {"mixed_type", "oscillating mixed-type system; limit 1/2 + d0^-1 1/2 on both blocks", Verdict::Confirms},
        {"mixed_type_convolution", "mixed-type system with (1 + kappa_n*) memory, kappa_n -> kappa in norm",
         Verdict::Confirms},
        {"mixed_type_timedep", "mixed-type system with Lipschitz time factor N_n(t) -> N(t)", Verdict::Confirms},
        {"commutator_counterexample", "N_n = sin(n t) + 2 with unbounded [N_n, d0]; naive limit fails",
         Verdict::Refutes},
        {"compactness_counterexample", "(a(n x) + i) u_n = f without compact resolvent; naive limit fails",
         Verdict::Refutes},
        {"kelvin_voigt", "visco-elastic Neumann-series limit; A_n = 0 gives the harmonic mean 4/3", Verdict::Confirms},
        {"wave_1d", "1D wave with oscillating flux coefficient; limit M2 = mean, flux = harmonic mean 2/3",
         Verdict::Confirms},
        {"singular_perturbation", "eps d0 phi 1_p + 1_e (1 - phi) tau_{-eps} - Laplacian as eps -> 0",
         Verdict::Confirms},
    };
    return list;
}

Verdict expected_verdict(const std::string& experiment) {
    for (const auto& e : list_experiments())
        if (e.name == experiment) return e.expected;
    throw PreconditionError("unknown experiment '" + experiment + "'; run 'evoconv list' for the available names");
}

ExperimentSettings default_settings(const std::string& experiment) {
    expected_verdict(experiment);
    ExperimentSettings s;
    s.experiment = experiment;
    s.ladder = {4, 8, 16, 32};
    if (experiment == "commutator_counterexample") {
        s.dt = 1e-3;
        s.N = 4;
        s.ladder = {8, 16, 32, 64};
    } else if (experiment == "compactness_counterexample") {
        s.dt = 5e-3;
        s.ladder = {8, 16, 32, 64};
    } else if (experiment == "singular_perturbation") {
        s.dt = 0.0125;
        s.T = 3.0;
        s.N = 32;
        s.ladder = {0.2, 0.1, 0.05, 0.025};
    }
    return s;
}

void validate(const ExperimentSettings& s) {
    const std::string& e = s.experiment;
    expected_verdict(e);
    require(s.nu > 0.0, e + ": nu must be positive");
    require(s.dt > 0.0 && s.T > 0.0, e + ": dt and T must be positive");
    require(s.steps() >= 2, e + ": T/dt must give at least 2 time steps");
    require(std::abs(static_cast<double>(s.steps()) * s.dt - s.T) <= 1e-9 * s.T,
            e + ": T=" + fmt(s.T) + " is not a multiple of dt=" + fmt(s.dt));
    require(s.N >= 4, e + ": N must be at least 4");
    require(!s.ladder.empty(), e + ": the ladder must not be empty");

    if (e == "singular_perturbation") {
        const TimeGrid g = time_grid(s);
        for (const double eps : s.ladder) {
            require(eps >= 0.0, e + ": eps values must be non-negative");
            shift_steps(g, eps);
        }
        const double h = 1.0 / static_cast<double>(s.N);
        const double lambda1 = 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2);
        require(s.lambda > 0.0 && s.lambda < lambda1,
                e + ": lambda must lie in (0, lambda_1) with lambda_1=" + fmt(lambda1));
        return;
    }
    for (const double n : s.ladder) require(n > 0.0, e + ": ladder values must be positive");
    if (e == "commutator_counterexample") return;

    const bool mixed = e.rfind("mixed_type", 0) == 0;
    if (mixed) {
        require(s.coefficient == "preset" || s.coefficient == "constant",
                e + ": coefficient must be 'preset' or 'constant' (the phase sets are fixed)");
        if (s.coefficient == "preset")
            for (const double n : s.ladder) require_aligned(s.N, n, {0.25, 0.5, 0.75}, e);
        if (e == "mixed_type_convolution" && !s.kernel_file.empty() && s.kernel_file != "none")
            load_kernel(s.kernel_file);
        if (e == "mixed_type_timedep")
            for (const double n : s.ladder) {
                // N_n ranges over [1, 1 + (1 - 1/n)/4]; both bounds hold with c = 0.8.
                require(n >= 1.0, e + ": n must be at least 1 so that 1/c >= N_n >= c");
            }
        return;
    }
    const auto profile = profile_for(s, kTwoPhase);
    if (profile) {
        for (const double n : s.ladder) require_aligned(s.N, n, profile->starts, e);
        if (e != "compactness_counterexample")
            for (const double v : profile->values) require(v > 0.0, e + ": coefficient values must be positive");
    }
    if (e == "kelvin_voigt") require(s.series_order >= 1, e + ": series_order must be at least 1");
}

ConvergenceReport experiment_mixed_type(const ExperimentSettings& s) {
    return timed("mixed_type", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::staggered(sg);
        const auto A = SpatialOperator::block(BlockOperatorA(sg));
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, true);
        auto laws = [&](double n) {
            const auto [m0, m1] = mixed_coefficients(sg, s, n);
            return LawPair{mixed_law(m0, m1), MaterialLaw::zero()};
        };
        r.limit_description = "d0 (1/2) + (1/2) + A on both blocks";
        run_ladder(r, s, layout, A, f, laws, laws(std::numeric_limits<double>::infinity()));
        mixed_oracles(r);
    });
}

ConvergenceReport experiment_mixed_type_convolution(const ExperimentSettings& s) {
    return timed("mixed_type_convolution", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::staggered(sg);
        const auto A = SpatialOperator::block(BlockOperatorA(sg));
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, true);
        const auto kappa = convolution_kernel(s);
        auto kernel_n = [&](double n) {
            const double scale = std::isinf(n) ? 1.0 : 1.0 + 1.0 / n;
            return MaterialLaw::time_convolution([kappa, scale](double t) { return scale * kappa(t); }, "kappa_n");
        };
        auto laws = [&](double n) {
            const auto [m0, m1] = mixed_coefficients(sg, s, n);
            return LawPair{(MaterialLaw::identity() + kernel_n(n)) * mixed_law(m0, m1), MaterialLaw::zero()};
        };
        r.limit_description = "d0 (1 + kappa*)(1/2 + d0^-1 1/2) + A";
        r.params.emplace_back("kernel", s.kernel_file.empty() ? "exp(-t)" : s.kernel_file);
        run_ladder(r, s, layout, A, f, laws, laws(std::numeric_limits<double>::infinity()));
        mixed_oracles(r);

        // Norm-topology convergence of the kernels against the Young bound.
        const TimeSignal scalar(g, 1, 1.0);
        double young = 0.0;
        for (std::size_t k = 0; k < g.steps(); ++k) young += std::abs(kappa(g.t(k))) * std::exp(-s.nu * g.t(k)) * g.dt();
        for (const double n : s.ladder) {
            const double gap =
                law_gap_norm(kernel_n(n), kernel_n(std::numeric_limits<double>::infinity()), scalar, r, "kernel gap");
            r.oracle_values.emplace_back("kernel_gap_n" + fmt(n), gap);
            r.oracle_values.emplace_back("kernel_young_bound_n" + fmt(n), young / n);
        }
    });
}

ConvergenceReport experiment_mixed_type_timedep(const ExperimentSettings& s) {
    return timed("mixed_type_timedep", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::staggered(sg);
        const auto A = SpatialOperator::block(BlockOperatorA(sg));
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, true);
        const bool degenerate = s.coefficient == "constant";
        auto N_n = [degenerate](double n) {
            const double amp = degenerate ? 0.0 : (std::isinf(n) ? 1.0 : 1.0 - 1.0 / n);
            return [amp](double t) { return cplx(1.0 + 0.5 * std::atan(t) / std::numbers::pi * amp); };
        };
        auto laws = [&](double n) {
            const auto [m0, m1] = mixed_coefficients(sg, s, n);
            const MaterialLaw law = MaterialLaw::time_mul(N_n(n), "N_n(t)") * MaterialLaw::space_mul(m0) +
                                    MaterialLaw::d0_inverse() * MaterialLaw::space_mul(m1);
            return LawPair{law, MaterialLaw::zero()};
        };
        r.limit_description = "d0 (N(t) 1/2 + d0^-1 1/2) + A";
        run_ladder(r, s, layout, A, f, laws, laws(std::numeric_limits<double>::infinity()));
        mixed_oracles(r);

        const auto N_inf = MaterialLaw::time_mul(N_n(std::numeric_limits<double>::infinity()));
        const TimeSignal scalar(g, 1, 1.0);
        r.oracle_gap_meaning = "||(N_n - N)(m0) f|| / ||f|| (strong convergence of the time factor)";
        for (std::size_t i = 0; i < s.ladder.size(); ++i) {
            const double n = s.ladder[i];
            const auto Nn = MaterialLaw::time_mul(N_n(n));
            r.oracle_gaps[i] = weighted_norm(Nn.apply(f) - N_inf.apply(f)) / weighted_norm(f);
            const double comm = estimate_norm([&](const TimeSignal& x) { return commutator_with_d0(Nn, x); },
                                              [&](const TimeSignal& x) { return commutator_with_d0_adjoint(Nn, x); },
                                              scalar, r, "commutator norm");
            r.oracle_values.emplace_back("commutator_norm_n" + fmt(n), comm);
            r.oracle_values.emplace_back("lipschitz_N_n" + fmt(n),
                                         degenerate ? 0.0 : 0.5 / std::numbers::pi * (1.0 - 1.0 / n));
        }
    });
}

ConvergenceReport counterexample_commutator(const ExperimentSettings& s) {
    return timed("commutator_counterexample", s, [&](ConvergenceReport& r) {
        const TimeGrid g = time_grid(s);
        const TimeSignal f = scalar_forcing(g);
        const auto one = SpatialOperator::scalar(1, 1.0);
        const double ff = weighted_inner_product(f, f).real();
        const auto pi = std::numbers::pi;
        auto N_n = [](double n) {
            return MaterialLaw::time_mul([n](double t) { return cplx(std::sin(n * t) + 2.0); }, "sin(n t) + 2");
        };
        // Normalized period means over one period of sin.
        const double mean_u = weak_limit_coefficient([&](double x) { return 1.0 / (std::sin(2 * pi * x) + 3.0); }).real();
        const double mean_Nu =
            weak_limit_coefficient([&](double x) { return (std::sin(2 * pi * x) + 2.0) / (std::sin(2 * pi * x) + 3.0); })
                .real();
        const double mean_N = weak_limit_coefficient([&](double x) { return std::sin(2 * pi * x) + 2.0; }).real();
        const double naive_u = 1.0 / (mean_N + 1.0);

        const std::size_t L = s.ladder.size();
        const auto reports = solve_all(L + 1, s.threads, [&](std::size_t i) {
            // Entry L is the naive limit equation (mean N + 1) u = f.
            const MaterialLaw N = i < L ? N_n(s.ladder[i]) : MaterialLaw::constant(mean_N);
            return Problem{MaterialLaw::zero(), N, one, f};
        });
        const TimeSignal u_weak = mean_u * f;
        const auto tests = TestFunctionSet::standard(g, FieldLayout::scalar());
        const TimeSignal scalar(g, 1, 1.0);
        double measured_u = 0.0, measured_Nu = 0.0;
        std::vector<double> comm;
        r.n_values = s.ladder;
        for (std::size_t i = 0; i < L; ++i) {
            const double n = s.ladder[i];
            const TimeSignal& u = reports[i].u;
            measured_u = weighted_inner_product(u, f).real() / ff;
            measured_Nu = weighted_inner_product(N_n(n).apply(u), f).real() / ff;
            r.pairing_errors.push_back(tests.pairings(u - u_weak));
            r.oracle_gaps.push_back(std::abs(measured_u - mean_u));
            r.solves.push_back(check_of(n, reports[i]));
            collect_warnings(r, reports[i], "n=" + fmt(n));
            const auto law = N_n(n);
            comm.push_back(estimate_norm([&](const TimeSignal& x) { return commutator_with_d0(law, x); },
                                         [&](const TimeSignal& x) { return commutator_with_d0_adjoint(law, x); },
                                         scalar, r, "commutator norm"));
            r.oracle_values.emplace_back("commutator_norm_n" + fmt(n), comm.back());
        }
        r.solves.push_back(check_of(std::numeric_limits<double>::infinity(), reports[L]));
        const double naive_measured = weighted_inner_product(reports[L].u, f).real() / ff;
        r.oracle_gap_meaning = "|<u_n, f>/<f, f> - mean of 1/(sin + 3)|";
        r.fitted_rate = fitted_rate(r.n_values, r.max_errors());
        r.limit_description = "weak limit u = mean(1/(sin + 3)) f; naive candidate (mean N + 1)^-1 f";

        const double tol = 0.02 * mean_u;
        const bool matches = std::abs(measured_u - mean_u) <= tol;
        const bool separated = std::abs(measured_u - naive_u) >= 5.0 * tol;
        if (matches && separated)
            r.verdict = Verdict::Refutes;
        else if (std::abs(measured_u - naive_u) <= 0.02 * naive_u)
            r.verdict = Verdict::Confirms;
        else
            r.verdict = Verdict::Inconclusive;
        if (matches && !separated) {
            std::ostringstream note;
            note << "measured multiplier matches the weak-limit oracle, but its distance " << std::abs(measured_u - naive_u)
                 << " to the naive candidate is below the required 5 x " << tol << " = " << 5.0 * tol;
            r.notes.push_back(note.str());
        }
        const double slope = -fitted_rate(r.n_values, comm);
        r.oracle_values.insert(r.oracle_values.begin(),
                               {{"mean_inverse", mean_u},
                                {"mean_product", mean_Nu},
                                {"mean_N", mean_N},
                                {"naive_product", mean_N * mean_u},
                                {"naive_solution", naive_u},
                                {"naive_solution_solved", naive_measured},
                                {"measured_u", measured_u},
                                {"measured_Nu", measured_Nu},
                                {"tolerance", tol},
                                {"commutator_slope", slope}});
    });
}

ConvergenceReport counterexample_compactness(const ExperimentSettings& s) {
    return timed("compactness_counterexample", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::cells(sg);
        const std::size_t W = layout.width();
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, false);
        const auto Ai = SpatialOperator::scalar(W, cplx(0.0, 1.0));
        const auto profile = profile_for(s, kTwoPhase).value_or(Piecewise{{0.0}, {1.0}});
        const auto a = profile.function();
        const cplx I(0.0, 1.0);
        const cplx mean_inv = weak_limit_coefficient([&](double x) { return 1.0 / (a(x) + I); }, profile.starts);
        const cplx effective = 1.0 / mean_inv;
        const double mean_a = weak_limit_coefficient([&](double x) { return cplx(a(x)); }, profile.starts).real();
        const cplx naive = 1.0 / (mean_a + I);

        const std::size_t L = s.ladder.size();
        const auto reports = solve_all(L + 2, s.threads, [&](std::size_t i) {
            if (i < L)
                return Problem{MaterialLaw::zero(),
                               MaterialLaw::space_mul(sample_cells(sg, oscillated(a, s.ladder[i]))), Ai, f};
            // L: limit predicted by the weak limit of u_n; L + 1: naive limit 3/2 + i.
            const cplx coeff = i == L ? effective - I : cplx(mean_a);
            return Problem{MaterialLaw::zero(), MaterialLaw::constant(coeff), Ai, f};
        });
        const cplx ff = weighted_inner_product(f, f);
        const auto tests = TestFunctionSet::standard(g, layout);
        cplx measured = 0.0;
        r.n_values = s.ladder;
        for (std::size_t i = 0; i < L; ++i) {
            measured = weighted_inner_product(reports[i].u, f) / ff;
            r.pairing_errors.push_back(tests.pairings(reports[i].u - reports[L].u));
            r.oracle_gaps.push_back(std::abs(measured - mean_inv));
            r.solves.push_back(check_of(s.ladder[i], reports[i]));
            collect_warnings(r, reports[i], "n=" + fmt(s.ladder[i]));
        }
        r.solves.push_back(check_of(std::numeric_limits<double>::infinity(), reports[L]));
        r.solves.push_back(check_of(std::numeric_limits<double>::infinity(), reports[L + 1]));
        r.oracle_gap_meaning = "|<u_n, f>/<f, f> - integral of (a + i)^-1|";
        r.fitted_rate = fitted_rate(r.n_values, r.max_errors());
        r.limit_description = "u = (integral of (a + i)^-1) f, i.e. effective coefficient 18/13 + 14/13 i";

        const double d_true = std::abs(measured - mean_inv);
        const double d_naive = std::abs(measured - naive);
        r.verdict = d_naive >= 3.0 * d_true ? Verdict::Refutes
                    : d_true >= 3.0 * d_naive ? Verdict::Confirms
                                              : Verdict::Inconclusive;
        r.oracle_values = {{"mean_inverse_re", mean_inv.real()},
                           {"mean_inverse_im", mean_inv.imag()},
                           {"effective_re", effective.real()},
                           {"effective_im", effective.imag()},
                           {"mean_a", mean_a},
                           {"naive_re", naive.real()},
                           {"naive_im", naive.imag()},
                           {"measured_re", measured.real()},
                           {"measured_im", measured.imag()},
                           {"distance_to_true", d_true},
                           {"distance_to_naive", d_naive},
                           {"analytic_gap", std::abs(mean_inv - naive)}};
    });
}

ConvergenceReport experiment_kelvin_voigt(const ExperimentSettings& s) {
    return timed("kelvin_voigt", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::staggered(sg);
        const std::size_t M = sg.interior_nodes();
        const auto A = SpatialOperator::block(BlockOperatorA(sg), -1.0);
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, false);
        const auto profile = profile_for(s, kTwoPhase).value_or(Piecewise{{0.0}, {1.0}});
        const auto coef = profile.function();
        const double rho_limit = weak_limit_coefficient([&](double x) { return cplx(coef(x)); }, profile.starts).real();
        const double b_limit = harmonic_mean([&](double x) { return cplx(coef(x)); }, profile.starts).real();

        auto b_n = [&](double n) {
            return std::isinf(n) ? std::vector<double>(sg.cells(), b_limit) : sample_cells(sg, oscillated(coef, n));
        };
        auto laws = [&](double n) {
            const std::vector<double> rho = std::isinf(n) ? std::vector<double>(M, rho_limit)
                                                          : sample_nodes(sg, oscillated(coef, n));
            const MaterialLaw Mlaw = MaterialLaw::space_mul(concat(rho, std::vector<double>(sg.cells(), 0.0)));
            return LawPair{Mlaw, MaterialLaw::compressed_inverse(M, b_n(n))};
        };
        r.limit_description = "d0 diag(mean rho, 0) + diag(0, (P b_h P)^-1) - A with b_h the harmonic mean";
        r.params.emplace_back("series_order", std::to_string(s.series_order));
        run_ladder(r, s, layout, A, f, laws, laws(std::numeric_limits<double>::infinity()));

        // Flux coefficient of the range block: <s, s> / <(P b_n P)^-1 s, s> for s = cos(pi x).
        std::vector<cplx> cs(sg.cells()), out(sg.cells());
        for (std::size_t i = 0; i < cs.size(); ++i) cs[i] = std::cos(std::numbers::pi * sg.cell(i));
        double flux = 0.0;
        for (const double n : s.ladder) {
            const auto b = b_n(n);
            detail::compressed_inverse_block(b, cs.data(), out.data());
            cplx num = 0.0, den = 0.0;
            for (std::size_t i = 0; i < cs.size(); ++i) {
                num += cs[i] * std::conj(cs[i]);
                den += out[i] * std::conj(cs[i]);
            }
            flux = (num / den).real();
            r.oracle_values.emplace_back("flux_coefficient_n" + fmt(n), flux);
        }

        // Neumann series for (B + A d0^-1)^-1 with B = b_n (largest n), A = 1, at nu = 2.
        const double nu_series = std::max(2.0, s.nu);
        const TimeGrid gs(nu_series, s.dt, s.steps());
        const auto cells = FieldLayout::cells(sg);
        const auto b = b_n(s.ladder.back());
        std::vector<double> b_inv(b.size());
        std::transform(b.begin(), b.end(), b_inv.begin(), [](double x) { return 1.0 / x; });
        const TimeSignal shape = cells.zeros(gs);
        const NeumannInverse series =
            neumann_inverse(MaterialLaw::space_mul(b_inv), MaterialLaw::identity(), s.series_order, shape);
        const TimeSignal rhs = TimeSignal::random(gs, cells.width(), cells.measure(), s.seed);
        const MaterialLaw direct_law =
            MaterialLaw::d0_inverse() * (MaterialLaw::space_mul(b) + MaterialLaw::d0_inverse());
        const SolveReport direct =
            solve(Problem{direct_law, MaterialLaw::zero(), SpatialOperator::zero(cells.width()), rhs}, solve_options());
        r.solves.push_back(check_of(s.ladder.back(), direct));
        collect_warnings(r, direct, "neumann direct solve");
        const double series_error = weighted_norm(series.law.apply(rhs) - direct.u) / weighted_norm(rhs);

        r.oracle_values.insert(r.oracle_values.begin(), {{"rho_limit", rho_limit},
                                                         {"harmonic_mean", b_limit},
                                                         {"flux_coefficient", flux},
                                                         {"neumann_nu", nu_series},
                                                         {"neumann_q", series.q},
                                                         {"neumann_b_inverse_norm", series.b_inverse_norm},
                                                         {"neumann_tail_bound", series.tail_bound},
                                                         {"neumann_error", series_error}});
        if (!(series_error <= series.tail_bound)) r.notes.push_back("Neumann series error exceeds its tail bound");
    });
}

ConvergenceReport experiment_wave_1d(const ExperimentSettings& s) {
    return timed("wave_1d", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::staggered(sg);
        const std::size_t M = sg.interior_nodes();
        const auto A = SpatialOperator::block(BlockOperatorA(sg));
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, false);
        const auto profile = profile_for(s, kTwoPhase).value_or(Piecewise{{0.0}, {1.0}});
        const auto m = profile.function();
        const double mean_m = weak_limit_coefficient([&](double x) { return cplx(m(x)); }, profile.starts).real();
        const double flux = harmonic_mean([&](double x) { return cplx(1.0 / m(x)); }, profile.starts).real();
        auto laws = [&](double n) {
            const std::vector<double> m2 =
                std::isinf(n) ? std::vector<double>(sg.cells(), mean_m) : sample_cells(sg, oscillated(m, n));
            return LawPair{MaterialLaw::space_mul(concat(std::vector<double>(M, 1.0), m2)), MaterialLaw::zero()};
        };
        r.limit_description = "d0 diag(1, mean M2) + A, i.e. flux coefficient M2^-1 = harmonic mean of M2_n^-1";
        run_ladder(r, s, layout, A, f, laws, laws(std::numeric_limits<double>::infinity()));
        r.oracle_values = {{"limit_M1", 1.0}, {"limit_M2", mean_m}, {"flux_coefficient", flux}};
    });
}

ConvergenceReport experiment_singular_perturbation(const ExperimentSettings& s) {
    return timed("singular_perturbation", s, [&](ConvergenceReport& r) {
        const SpaceGrid sg(s.N);
        const auto layout = FieldLayout::nodes(sg);
        const auto A = SpatialOperator::dirichlet_laplacian(sg, s.lambda);
        const TimeGrid g = time_grid(s);
        const TimeSignal f = layout_forcing(g, layout, false);
        const Block& nodes = layout.block("u");
        auto phi = [](double t) { return std::clamp(t, 0.0, 1.0); };
        auto in_p = [&](std::size_t c) { return nodes.positions[c] < 0.5 ? 1.0 : 0.0; };
        const double lambda = s.lambda;

        const MaterialLaw elliptic = MaterialLaw::space_time_mul(
            [=](double t, std::size_t c) { return cplx((1.0 - in_p(c)) * (1.0 - phi(t))); }, "1_e (1 - phi)");
        auto law_eps = [&](double eps) {
            const MaterialLaw parabolic = MaterialLaw::space_time_mul(
                [=](double t, std::size_t c) { return cplx(eps * phi(t) * in_p(c)); }, "eps phi 1_p");
            return parabolic + MaterialLaw::d0_inverse() * elliptic * MaterialLaw::shift(eps) +
                   MaterialLaw::d0_inverse() * MaterialLaw::constant(lambda);
        };
        const MaterialLaw limit = MaterialLaw::d0_inverse() * (elliptic + MaterialLaw::constant(lambda));
        r.ladder_name = "eps";
        r.params.emplace_back("lambda", fmt(lambda));
        r.limit_description = "(1_e (1 - phi) - Laplacian) u_0 = f";

        const std::size_t L = s.ladder.size();
        const auto reports = solve_all(L + 1, s.threads, [&](std::size_t i) {
            return Problem{i < L ? law_eps(s.ladder[i]) : limit, MaterialLaw::zero(), A, f};
        });
        const auto tests = TestFunctionSet::standard(g, layout);
        const TimeSignal shape = layout.zeros(g);
        r.n_values = s.ladder;
        std::vector<double> inverse_eps, gaps;
        for (std::size_t i = 0; i < L; ++i) {
            const double eps = s.ladder[i];
            r.pairing_errors.push_back(tests.pairings(reports[i].u - reports[L].u));
            r.oracle_gaps.push_back(eps == 0.0 ? 0.0 : law_gap_norm(law_eps(eps), limit, shape, r, "law gap"));
            r.solves.push_back(check_of(eps, reports[i]));
            collect_warnings(r, reports[i], "eps=" + fmt(eps));
            inverse_eps.push_back(eps == 0.0 ? std::numeric_limits<double>::infinity() : 1.0 / eps);
        }
        r.solves.push_back(check_of(0.0, reports[L]));
        collect_warnings(r, reports[L], "limit");
        r.oracle_gap_meaning = "||M_eps - M_0|| (weighted operator norm)";

        const auto errors = r.max_errors();
        r.fitted_rate = fitted_rate(inverse_eps, errors);
        r.verdict = convergence_verdict(inverse_eps, errors);
        bool monotone = true;
        for (std::size_t i = 1; i < errors.size(); ++i) monotone = monotone && errors[i] < errors[i - 1];
        if (!monotone && r.verdict == Verdict::Confirms) {
            r.verdict = Verdict::Inconclusive;
            r.notes.push_back("pairing errors are not monotone in eps");
        }
        const double h = sg.h();
        r.oracle_values = {{"lambda1_discrete", 4.0 / (h * h) * std::pow(std::sin(std::numbers::pi * h / 2.0), 2)},
                           {"pi_squared", std::numbers::pi * std::numbers::pi},
                           {"lambda", lambda},
                           {"monotone", monotone ? 1.0 : 0.0},
                           {"gap_slope", fitted_rate(inverse_eps, r.oracle_gaps)}};
    });
}

ConvergenceReport run_experiment(const ExperimentSettings& s) {
    static const std::map<std::string, ConvergenceReport (*)(const ExperimentSettings&)> drivers{
        {"mixed_type", experiment_mixed_type},
        {"mixed_type_convolution", experiment_mixed_type_convolution},
        {"mixed_type_timedep", experiment_mixed_type_timedep},
        {"commutator_counterexample", counterexample_commutator},
        {"compactness_counterexample", counterexample_compactness},
        {"kelvin_voigt", experiment_kelvin_voigt},
        {"wave_1d", experiment_wave_1d},
        {"singular_perturbation", experiment_singular_perturbation},
    };
    const auto it = drivers.find(s.experiment);
    if (it == drivers.end())
        throw PreconditionError("unknown experiment '" + s.experiment + "'; run 'evoconv list' for the available names");
    ConvergenceReport r = it->second(s);
    r.params.insert(r.params.begin(), {r.ladder_name + "_values", fmt_list(s.ladder)});
    return r;
}

}  // namespace evoconv
