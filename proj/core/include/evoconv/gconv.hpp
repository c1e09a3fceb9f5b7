#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "evoconv/evosolve.hpp"
#include "evoconv/matlaw.hpp"
#include "evoconv/space1d.hpp"
#include "evoconv/timeaxis.hpp"

namespace evoconv {

/// Smooth bump exp(-1/(1-s^2)) on (-1, 1).
double bump(double s);

/// Fixed family of unit-norm test fields used to measure weak convergence by pairings.
class TestFunctionSet {
public:
    /// J = 8: four space-time bumps and four low tensor Fourier modes adapted to the layout.
    static TestFunctionSet standard(const TimeGrid& grid, const FieldLayout& layout);
    static TestFunctionSet from(std::vector<TimeSignal> functions, std::vector<std::string> labels);

    std::size_t size() const noexcept { return functions_.size(); }
    const TimeSignal& operator[](std::size_t j) const { return functions_[j]; }
    const std::string& label(std::size_t j) const { return labels_[j]; }

    /// |<u, phi_j>_nu| for every j.
    std::vector<double> pairings(const TimeSignal& u) const;

private:
    std::vector<TimeSignal> functions_;
    std::vector<std::string> labels_;
};

enum class Verdict { Confirms, Refutes, Inconclusive };
std::string to_string(Verdict v);

/// Least-squares slope of -log(errors) against log(n); errors <= 0 are skipped.
double fitted_rate(const std::vector<double>& n, const std::vector<double>& errors);

/// Confirms iff errors.back() <= 0.25 errors.front() and the fitted rate is >= 0.8, or every error
/// is below 1e-9; refutes if the errors do not decrease at all.
Verdict convergence_verdict(const std::vector<double>& n, const std::vector<double>& max_errors);

/// Continuity-estimate check of one solve.
struct SolveCheck {
    double ladder_value;
    double lattice_norm;
    double bound_rhs;
    double residual_norm;
    double f_norm;
    bool holds;
};

struct ConvergenceReport {
    std::string experiment;
    std::vector<std::pair<std::string, std::string>> params;
    std::string ladder_name = "n";
    std::vector<double> n_values;
    std::vector<std::vector<double>> pairing_errors;  // [n][j]
    std::vector<double> oracle_gaps;                  // one per n
    std::string oracle_gap_meaning;
    double fitted_rate = 0.0;
    std::string limit_description;
    Verdict verdict = Verdict::Inconclusive;
    Verdict expected = Verdict::Confirms;
    std::vector<std::pair<std::string, double>> oracle_values;
    std::vector<std::string> notes;
    std::vector<SolveCheck> solves;
    double elapsed_seconds = 0.0;

    std::vector<double> max_errors() const;
    bool matches_expectation() const noexcept { return verdict == expected; }
    bool continuity_holds() const;
    /// Value recorded under `name` in oracle_values; throws if absent.
    double oracle(const std::string& name) const;
};

/// Piecewise-constant periodic profile on [0, 1): value[i] on [start[i], start[i+1]).
struct Piecewise {
    std::vector<double> starts;
    std::vector<double> values;

    std::function<double(double)> function() const;
    std::vector<double> breakpoints() const { return starts; }
    double mean() const;
    double harmonic_mean() const;
    /// Parses "0:1, 0.5:2" (start:value pairs).
    static Piecewise parse(const std::string& text);
    std::string to_string() const;
};

struct ExperimentSettings {
    std::string experiment;
    double nu = 1.0;
    double dt = 4.0 / 512.0;
    double T = 4.0;
    std::size_t N = 128;
    std::vector<double> ladder;
    /// "preset", "constant" or an inline piecewise profile.
    std::string coefficient = "preset";
    /// Two-column (t, value) kernel for the convolution variant; empty means e^{-t}.
    std::string kernel_file;
    std::uint64_t seed = 7;
    std::size_t series_order = 6;
    double lambda = 1.0;
    /// 0 means EVOCONV_THREADS or the hardware concurrency.
    std::size_t threads = 0;

    std::size_t steps() const;
};

struct ExperimentInfo {
    std::string name;
    std::string anchor;
    Verdict expected;
};

/// Stable, alphabetical-by-design list of the drivers.
const std::vector<ExperimentInfo>& list_experiments();
Verdict expected_verdict(const std::string& experiment);
ExperimentSettings default_settings(const std::string& experiment);
/// Checks positivity and alignment preconditions; throws PreconditionError with an actionable message.
void validate(const ExperimentSettings& s);
ConvergenceReport run_experiment(const ExperimentSettings& s);

ConvergenceReport experiment_mixed_type(const ExperimentSettings& s);
ConvergenceReport experiment_mixed_type_convolution(const ExperimentSettings& s);
ConvergenceReport experiment_mixed_type_timedep(const ExperimentSettings& s);
ConvergenceReport counterexample_commutator(const ExperimentSettings& s);
ConvergenceReport counterexample_compactness(const ExperimentSettings& s);
ConvergenceReport experiment_kelvin_voigt(const ExperimentSettings& s);
ConvergenceReport experiment_wave_1d(const ExperimentSettings& s);
ConvergenceReport experiment_singular_perturbation(const ExperimentSettings& s);

struct WeakStrongReport {
    std::vector<double> n_values;
    std::vector<double> max_errors;  // max_j |<M_n v_n - M v, phi_j>|
    std::vector<double> d0_norms;    // ||d0 v_n||, the bound the principle assumes
    double scale = 0.0;
    double tolerance = 0.02;
    bool passes = false;
    bool bounded_derivatives = false;
};

/// w-lim M_n v_n = (tau_w-lim M_n)(w-lim v_n), measured by pairings against `tests`.
WeakStrongReport check_weak_strong_principle(const std::function<MaterialLaw(double)>& M_n, const MaterialLaw& M,
                                             const std::function<TimeSignal(double)>& v_n, const TimeSignal& v,
                                             const std::vector<double>& n_values, const TestFunctionSet& tests,
                                             double tolerance = 0.02);

/// Runs `job(i)` for i in [0, count) on up to `threads` workers (0: EVOCONV_THREADS or hardware).
void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job);

}  // namespace evoconv
