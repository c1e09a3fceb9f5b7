#include "evoconv/gconv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <numeric>
#include <sstream>
#include <thread>

namespace evoconv {

double bump(double s) {
    if (!(std::abs(s) < 1.0)) return 0.0;
    return std::exp(-1.0 / (1.0 - s * s));
}

namespace {

TimeSignal tensor(const TimeGrid& g, const FieldLayout& layout, const Block& block, double tc, double tw,
                  const std::function<double(double)>& profile) {
    TimeSignal p = layout.zeros(g);
    for (std::size_t k = 0; k < g.steps(); ++k) {
        const double a = bump((g.t(k) - tc) / tw);
        if (a == 0.0) continue;
        for (std::size_t i = 0; i < block.size; ++i) p(k, block.offset + i) = a * profile(block.positions[i]);
    }
    return p;
}

}  // namespace

TestFunctionSet TestFunctionSet::standard(const TimeGrid& g, const FieldLayout& layout) {
    const double T = g.dt() * static_cast<double>(g.steps());
    const std::pair<double, double> windows[] = {{0.25 * T, 0.2 * T}, {0.5 * T, 0.25 * T}};
    const double mode_c = 0.375 * T, mode_w = 0.35 * T;
    const auto pi = std::numbers::pi;
    std::vector<TimeSignal> fns;
    std::vector<std::string> labels;

    const auto& blocks = layout.blocks();
    if (layout.width() == 1) {
        for (int j = 0; j < 8; ++j) {
            const double c = (0.2 + 0.085 * j) * T;
            const double w = (j % 2 == 0 ? 0.12 : 0.18) * T;
            fns.push_back(tensor(g, layout, blocks[0], c, w, [](double) { return 1.0; }));
            labels.push_back("time bump " + std::to_string(j));
        }
    } else if (blocks.size() >= 2) {
        const Block& first = blocks[0];
        const Block& second = blocks[1];
        for (const auto& [tc, tw] : windows) {
            fns.push_back(tensor(g, layout, first, tc, tw, [](double x) { return bump((x - 0.3) / 0.25); }));
            labels.push_back("bump on " + first.name);
            fns.push_back(tensor(g, layout, second, tc, tw, [](double x) { return bump((x - 0.6) / 0.3); }));
            labels.push_back("bump on " + second.name);
        }
        for (int m = 1; m <= 2; ++m) {
            fns.push_back(tensor(g, layout, first, mode_c, mode_w, [=](double x) { return std::sin(m * pi * x); }));
            labels.push_back("sin(" + std::to_string(m) + " pi x) on " + first.name);
            fns.push_back(tensor(g, layout, second, mode_c, mode_w, [=](double x) { return std::cos(m * pi * x); }));
            labels.push_back("cos(" + std::to_string(m) + " pi x) on " + second.name);
        }
    } else {
        const Block& b = blocks[0];
        for (const auto& [tc, tw] : windows) {
            fns.push_back(tensor(g, layout, b, tc, tw, [](double x) { return bump((x - 0.3) / 0.25); }));
            labels.push_back("left bump");
            fns.push_back(tensor(g, layout, b, tc, tw, [](double x) { return bump((x - 0.6) / 0.3); }));
            labels.push_back("right bump");
        }
        for (int m = 1; m <= 2; ++m) {
            fns.push_back(tensor(g, layout, b, mode_c, mode_w, [=](double x) { return std::sin(m * pi * x); }));
            labels.push_back("sin(" + std::to_string(m) + " pi x)");
            fns.push_back(tensor(g, layout, b, mode_c, mode_w, [=](double x) { return std::cos(m * pi * x); }));
            labels.push_back("cos(" + std::to_string(m) + " pi x)");
        }
    }
    return from(std::move(fns), std::move(labels));
}

TestFunctionSet TestFunctionSet::from(std::vector<TimeSignal> functions, std::vector<std::string> labels) {
    if (functions.size() != labels.size()) throw PreconditionError("TestFunctionSet: one label per function");
    for (auto& f : functions) {
        const double n = weighted_norm(f);
        if (!(n > 0.0)) throw PreconditionError("TestFunctionSet: test function vanishes on this grid");
        f *= 1.0 / n;
    }
    TestFunctionSet s;
    s.functions_ = std::move(functions);
    s.labels_ = std::move(labels);
    return s;
}

std::vector<double> TestFunctionSet::pairings(const TimeSignal& u) const {
    std::vector<double> out;
    out.reserve(functions_.size());
    for (const auto& phi : functions_) out.push_back(std::abs(weighted_inner_product(u, phi)));
    return out;
}

std::string to_string(Verdict v) {
    switch (v) {
        case Verdict::Confirms:
            return "confirms";
        case Verdict::Refutes:
            return "refutes";
        case Verdict::Inconclusive:
            return "inconclusive";
    }
    return "inconclusive";
}

double fitted_rate(const std::vector<double>& n, const std::vector<double>& errors) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < std::min(n.size(), errors.size()); ++i) {
        if (!(errors[i] > 0.0) || !(n[i] > 0.0)) continue;
        x.push_back(std::log(n[i]));
        y.push_back(std::log(errors[i]));
    }
    if (x.size() < 2) return 0.0;
    const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
    const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
    }
    return sxx > 0.0 ? -sxy / sxx : 0.0;
}

Verdict convergence_verdict(const std::vector<double>& n, const std::vector<double>& max_errors) {
    if (max_errors.size() < 2) return Verdict::Inconclusive;
    if (std::all_of(max_errors.begin(), max_errors.end(), [](double e) { return e <= 1e-9; })) return Verdict::Confirms;
    if (max_errors.back() <= 0.25 * max_errors.front() && fitted_rate(n, max_errors) >= 0.8) return Verdict::Confirms;
    if (!(max_errors.back() < max_errors.front())) return Verdict::Refutes;
    return Verdict::Inconclusive;
}

std::vector<double> ConvergenceReport::max_errors() const {
    std::vector<double> out;
    for (const auto& row : pairing_errors) out.push_back(row.empty() ? 0.0 : *std::max_element(row.begin(), row.end()));
    return out;
}

bool ConvergenceReport::continuity_holds() const {
    return std::all_of(solves.begin(), solves.end(), [](const SolveCheck& s) { return s.holds; });
}

double ConvergenceReport::oracle(const std::string& name) const {
    for (const auto& [k, v] : oracle_values)
        if (k == name) return v;
    throw PreconditionError("ConvergenceReport: no oracle value named '" + name + "'");
}

std::function<double(double)> Piecewise::function() const {
    return [s = starts, v = values](double x) {
        std::size_t i = 0;
        while (i + 1 < s.size() && x >= s[i + 1]) ++i;
        return v[i];
    };
}

double Piecewise::mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const double end = i + 1 < starts.size() ? starts[i + 1] : 1.0;
        m += values[i] * (end - starts[i]);
    }
    return m;
}

double Piecewise::harmonic_mean() const {
    double m = 0.0;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const double end = i + 1 < starts.size() ? starts[i + 1] : 1.0;
        m += (end - starts[i]) / values[i];
    }
    return 1.0 / m;
}

Piecewise Piecewise::parse(const std::string& text) {
    Piecewise p;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto colon = item.find(':');
        if (colon == std::string::npos)
            throw PreconditionError("piecewise profile '" + text + "': expected start:value pairs such as 0:1, 0.5:2");
        try {
            p.starts.push_back(std::stod(item.substr(0, colon)));
            p.values.push_back(std::stod(item.substr(colon + 1)));
        } catch (const std::logic_error&) {
            throw PreconditionError("piecewise profile '" + text + "': '" + item + "' is not a start:value pair");
        }
    }
    if (p.starts.empty() || p.starts.front() != 0.0)
        throw PreconditionError("piecewise profile '" + text + "': the first piece must start at 0");
    for (std::size_t i = 1; i < p.starts.size(); ++i)
        if (!(p.starts[i] > p.starts[i - 1]) || !(p.starts[i] < 1.0))
            throw PreconditionError("piecewise profile '" + text + "': starts must increase within [0, 1)");
    return p;
}

std::string Piecewise::to_string() const {
    std::ostringstream out;
    out.precision(17);
    for (std::size_t i = 0; i < starts.size(); ++i) {
        if (i) out << ", ";
        out << starts[i] << ":" << values[i];
    }
    return out.str();
}

std::size_t ExperimentSettings::steps() const { return static_cast<std::size_t>(std::llround(T / dt)); }

WeakStrongReport check_weak_strong_principle(const std::function<MaterialLaw(double)>& M_n, const MaterialLaw& M,
                                             const std::function<TimeSignal(double)>& v_n, const TimeSignal& v,
                                             const std::vector<double>& n_values, const TestFunctionSet& tests,
                                             double tolerance) {
    WeakStrongReport r;
    r.n_values = n_values;
    r.tolerance = tolerance;
    const TimeSignal limit = M.apply(v);
    for (const double n : n_values) {
        const TimeSignal vn = v_n(n);
        const TimeSignal product = M_n(n).apply(vn);
        for (const double p : tests.pairings(product)) r.scale = std::max(r.scale, p);
        const auto e = tests.pairings(product - limit);
        r.max_errors.push_back(*std::max_element(e.begin(), e.end()));
        r.d0_norms.push_back(weighted_norm(apply_d0(vn)));
    }
    for (const double p : tests.pairings(limit)) r.scale = std::max(r.scale, p);
    r.passes = !r.max_errors.empty() && r.max_errors.back() <= tolerance * r.scale;
    r.bounded_derivatives = !r.d0_norms.empty() && r.d0_norms.back() <= 2.0 * r.d0_norms.front();
    return r;
}

void parallel_for(std::size_t count, std::size_t threads, const std::function<void(std::size_t)>& job) {
    if (threads == 0) {
        threads = std::max(1u, std::thread::hardware_concurrency());
        if (const char* env = std::getenv("EVOCONV_THREADS")) {
            const long cap = std::strtol(env, nullptr, 10);
            if (cap > 0) threads = std::min<std::size_t>(threads, static_cast<std::size_t>(cap));
        }
    }
    threads = std::min(threads, count);
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) job(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < count; i = next++) {
                try {
                    job(i);
                } catch (...) {
                    std::lock_guard lock(failure_mutex);
                    if (!failure) failure = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

}  // namespace evoconv
