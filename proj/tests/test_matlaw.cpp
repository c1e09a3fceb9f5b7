#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "evoconv/evosolve.hpp"
#include "evoconv/matlaw.hpp"
#include "evoconv/space1d.hpp"

using namespace evoconv;

namespace {

double bump(double s) { return std::abs(s) < 1.0 ? std::exp(-1.0 / (1.0 - s * s)) : 0.0; }

TimeSignal smooth_bump(const TimeGrid& g, std::size_t width, double centre, double halfwidth) {
    return TimeSignal::sample(g, width, 1.0 / static_cast<double>(width), [=](double t, std::size_t c) {
        return cplx(bump((t - centre) / halfwidth) * (1.0 + 0.1 * static_cast<double>(c)));
    });
}

double rel(const TimeSignal& a, const TimeSignal& b) { return weighted_norm(a - b) / weighted_norm(b); }

/// Replays a law through its stepper: (M w)_k = D_k w_k + r_k.
TimeSignal replay(const MaterialLaw& M, const TimeSignal& w) {
    auto st = M.stepper(w.grid(), w.width());
    TimeSignal out = w.zeros_like();
    for (std::size_t k = 0; k < w.steps(); ++k) {
        st->begin(k);
        auto row = out.row(k);
        st->instant().apply(w.row(k), row);
        const auto mem = st->memory();
        for (std::size_t c = 0; c < w.width(); ++c) row[c] += mem[c];
        st->commit(w.row(k));
    }
    return out;
}

/// Representative laws of every kind on width 3 (unit measure 1/3) and dt = 0.05.
std::vector<MaterialLaw> zoo() {
    const std::vector<double> g{1.0, 2.0, 0.5};
    return {
        MaterialLaw::zero(),
        MaterialLaw::identity(),
        MaterialLaw::space_mul(g),
        MaterialLaw::time_mul([](double t) { return cplx(1.0 + std::sin(t), 0.2); }),
        MaterialLaw::constant(cplx(0.5, -0.5)),
        MaterialLaw::space_time_mul([](double t, std::size_t c) { return cplx(1.0 + t * static_cast<double>(c)); }),
        MaterialLaw::time_convolution([](double t) { return cplx(std::exp(-2.0 * t)); }),
        MaterialLaw::hardy([](cplx z) { return z / (1.0 + z); }, 1.0),
        MaterialLaw::d0_inverse(),
        MaterialLaw::shift(0.15),
        MaterialLaw::mean_projection(1, 2),
        MaterialLaw::compressed_inverse(1, {1.0, 2.0}),
        MaterialLaw::space_mul(g) + MaterialLaw::d0_inverse() * MaterialLaw::time_mul([](double t) { return cplx(t); }),
        MaterialLaw::product({MaterialLaw::identity() + MaterialLaw::time_convolution([](double t) {
                                  return cplx(std::exp(-t));
                              }),
                              MaterialLaw::space_mul(g), MaterialLaw::shift(0.1)}),
    };
}

}  // namespace

TEST(Law, IdentityIsIdentity) {
    TimeGrid g(1.0, 0.05, 40);
    const auto w = TimeSignal::random(g, 2, 0.5, 1);
    EXPECT_EQ(weighted_norm(MaterialLaw::identity().apply(w) - w), 0.0);
}

TEST(Law, ImpulseKernelIsConvolutionIdentity) {
    TimeGrid g(1.0, 0.05, 40);
    const auto w = TimeSignal::random(g, 2, 0.5, 1);
    const auto delta = MaterialLaw::time_convolution([](double t) { return cplx(t < 0.025 ? 1.0 / 0.05 : 0.0); });
    EXPECT_LE(rel(delta.apply(w), w), 1e-14);
}

TEST(Law, HardyIdentitySymbolIsD0Inverse) {
    TimeGrid g(1.0, 1e-3, 4000);
    const auto f = smooth_bump(g, 1, 1.2, 0.8);
    const auto hardy = MaterialLaw::hardy([](cplx z) { return z; }, 1.0);
    EXPECT_LE(rel(hardy.apply(f), apply_d0_inverse(f)), 1e-2);
}

TEST(Law, HardyRadiusChecked) {
    TimeGrid g(0.4, 0.05, 40);
    const auto hardy = MaterialLaw::hardy([](cplx z) { return z; }, 1.0);
    EXPECT_THROW(hardy.apply(TimeSignal(g)), PreconditionError);
}

TEST(Law, SumAndProductAreExact) {
    TimeGrid g(1.0, 0.05, 60);
    const auto w = TimeSignal::random(g, 3, 1.0 / 3, 2);
    const auto laws = zoo();
    for (std::size_t i = 0; i + 1 < laws.size(); ++i) {
        const auto& a = laws[i];
        const auto& b = laws[i + 1];
        EXPECT_EQ(weighted_norm((a + b).apply(w) - (a.apply(w) + b.apply(w))), 0.0) << a.describe();
        EXPECT_LE(weighted_norm((a * b).apply(w) - a.apply(b.apply(w))), 1e-15 * (1.0 + weighted_norm(w)))
            << a.describe();
    }
}

TEST(Law, Linearity) {
    TimeGrid g(1.0, 0.05, 60);
    const auto u = TimeSignal::random(g, 3, 1.0 / 3, 3);
    const auto v = TimeSignal::random(g, 3, 1.0 / 3, 4);
    const cplx s(0.3, -1.7);
    for (const auto& M : zoo()) {
        const auto lhs = M.apply(u + s * v);
        const auto rhs = M.apply(u) + s * M.apply(v);
        EXPECT_LE(weighted_norm(lhs - rhs), 1e-12 * (1.0 + weighted_norm(rhs))) << M.describe();
    }
}

TEST(Law, AdjointIdentity) {
    TimeGrid g(1.0, 0.05, 60);
    const auto u = TimeSignal::random(g, 3, 1.0 / 3, 5);
    const auto v = TimeSignal::random(g, 3, 1.0 / 3, 6);
    for (const auto& M : zoo()) {
        const cplx lhs = weighted_inner_product(M.apply(u), v);
        const cplx rhs = weighted_inner_product(u, M.apply_adjoint(v));
        EXPECT_LE(std::abs(lhs - rhs), 1e-11 * (1.0 + std::abs(lhs))) << M.describe();
    }
}

TEST(Law, StepperReproducesApply) {
    TimeGrid g(1.0, 0.05, 60);
    const auto w = TimeSignal::random(g, 3, 1.0 / 3, 7);
    for (const auto& M : zoo()) {
        const auto direct = M.apply(w);
        EXPECT_LE(weighted_norm(replay(M, w) - direct), 1e-10 * (1.0 + weighted_norm(direct))) << M.describe();
    }
}

TEST(Law, AntiCausalShiftHasNoStepper) {
    TimeGrid g(1.0, 0.05, 10);
    EXPECT_THROW(MaterialLaw::shift(-0.05).stepper(g, 1), PreconditionError);
}

TEST(Law, DescribeAndWidth) {
    EXPECT_FALSE(MaterialLaw::d0_inverse().describe().empty());
    EXPECT_EQ(MaterialLaw::space_mul(std::vector<double>{1.0, 2.0}).required_width(), 2u);
    EXPECT_EQ(MaterialLaw::identity().required_width(), 0u);
    EXPECT_EQ(MaterialLaw::sum({}).kind(), MaterialLaw::Kind::Zero);
    EXPECT_EQ(MaterialLaw::product({}).kind(), MaterialLaw::Kind::Identity);
}

TEST(Commutator, SpaceMulCommutes) {
    TimeGrid g(1.0, 0.01, 300);
    const auto w = TimeSignal::random(g, 3, 1.0 / 3, 8);
    const auto c = commutator_with_d0(MaterialLaw::space_mul(std::vector<double>{1.0, 3.0, -2.0}), w);
    EXPECT_LE(weighted_norm(c), 1e-13 * weighted_norm(apply_d0(w)));
}

TEST(Commutator, TimeMulProductRule) {
    double previous = 0.0;
    for (const double dt : {4e-3, 2e-3, 1e-3}) {
        TimeGrid g(1.0, dt, static_cast<std::size_t>(std::round(3.0 / dt)));
        const auto w = smooth_bump(g, 1, 1.5, 1.0);
        const auto c = commutator_with_d0(MaterialLaw::time_mul([](double t) { return cplx(t); }), w);
        double err = 0.0;
        for (std::size_t k = 0; k < g.steps(); ++k) err = std::max(err, std::abs(c(k) + w(k)));
        EXPECT_LE(err, 2.0 * dt);
        if (previous > 0.0) {
            EXPECT_NEAR(previous / err, 2.0, 0.1);
        }
        previous = err;
    }
}

TEST(Commutator, HardyCommutes) {
    TimeGrid g(1.0, 0.01, 400);
    const auto w = smooth_bump(g, 1, 1.5, 1.0);
    const auto hardy = MaterialLaw::hardy([](cplx z) { return 1.0 / (1.0 + z); }, 1.0);
    EXPECT_LE(weighted_norm(commutator_with_d0(hardy, w)), 1e-10 * weighted_norm(apply_d0(w)));
}

TEST(Commutator, LipschitzBoundAcrossGrids) {
    // kappa(t) = sin(2 t) has Lipschitz constant 2.
    const auto M = MaterialLaw::time_mul([](double t) { return cplx(std::sin(2.0 * t)); });
    for (const double dt : {0.02, 0.01, 0.005}) {
        TimeGrid g(1.0, dt, static_cast<std::size_t>(std::round(4.0 / dt)));
        const double n = operator_norm([&](const TimeSignal& x) { return commutator_with_d0(M, x); },
                                       [&](const TimeSignal& x) { return commutator_with_d0_adjoint(M, x); },
                                       TimeSignal(g), NormOptions{10000, 1e-6})
                             .value;
        EXPECT_LE(n, 2.0 + 4.0 * dt) << "dt=" << dt;
        EXPECT_GE(n, 1.8);
    }
}

TEST(Causality, MultiplicationLaws) {
    TimeGrid g(1.0, 0.05, 80);
    const TimeSignal shape(g, 3, 1.0 / 3);
    for (const auto& M : {MaterialLaw::space_mul(std::vector<double>{1.0, 2.0, 3.0}),
                          MaterialLaw::time_mul([](double t) { return cplx(std::cos(t)); }),
                          MaterialLaw::space_time_mul([](double t, std::size_t c) { return cplx(t + c); })}) {
        const auto r = check_causality(M, shape, 5);
        EXPECT_TRUE(r.causal);
        EXPECT_LE(r.worst_leakage, 1e-14);
    }
}

TEST(Causality, ZooAndComposites) {
    TimeGrid g(1.0, 0.05, 80);
    const TimeSignal shape(g, 3, 1.0 / 3);
    for (const auto& M : zoo()) EXPECT_TRUE(check_causality(M, shape, 5).causal) << M.describe();
    const auto laws = zoo();
    for (std::size_t i = 0; i + 2 < laws.size(); ++i) {
        const auto M = laws[i] * laws[i + 1] + laws[i + 2];
        EXPECT_TRUE(check_causality(M, shape, 3, 100 + i).causal) << M.describe();
    }
}

TEST(Causality, AntiCausalShiftFails) {
    TimeGrid g(1.0, 0.05, 80);
    const auto r = check_causality(MaterialLaw::shift(-0.05), TimeSignal(g), 5);
    EXPECT_FALSE(r.causal);
    EXPECT_GT(r.worst_leakage, 1e-3);
}

TEST(Positivity, IdentityGivesNu) {
    // Smallest eigenvalue of the truncated Hermitian part over the three default cut points,
    // frozen from a dense eigen-solve with K = 150, dt = 0.02.
    const std::pair<double, double> cases[] = {{1.0, 1.0006731328}, {2.0, 1.9709248119}};
    for (const auto& [nu, dense_min] : cases) {
        TimeGrid g(nu, 0.02, 150);
        const auto r = estimate_positivity(MaterialLaw::identity(), TimeSignal(g));
        EXPECT_TRUE(r.well_posed());
        EXPECT_GE(r.c_estimate, dense_min - 1e-9);
        EXPECT_LE(r.c_estimate, dense_min * 1.02);
        EXPECT_GE(r.c_estimate, nu * (1.0 - 0.02 * nu));
        PositivityOptions full;
        full.lanczos_steps = 150;
        EXPECT_NEAR(estimate_positivity(MaterialLaw::identity(), TimeSignal(g), full).c_estimate, dense_min, 1e-8);
    }
}

TEST(Positivity, MixedTypeLawAtNuOne) {
    SpaceGrid sg(32);
    const auto layout = FieldLayout::staggered(sg);
    const std::size_t W = layout.width();
    std::vector<double> m0(W), m1(W);
    const auto a = sample_nodes(sg, oscillated(indicator({{0.0, 0.25}, {0.5, 0.75}}), 4));
    const auto b = sample_cells(sg, oscillated(indicator({{0.0, 0.25}, {0.75, 1.0}}), 4));
    for (std::size_t i = 0; i < W; ++i) {
        m0[i] = i < a.size() ? a[i] : b[i - a.size()];
        m1[i] = 1.0 - m0[i];
    }
    const auto M = MaterialLaw::space_mul(m0) + MaterialLaw::d0_inverse() * MaterialLaw::space_mul(m1);
    TimeGrid g(1.0, 0.02, 100);
    const auto r = estimate_positivity(M, layout.zeros(g));
    EXPECT_GE(r.c_estimate, 1.0 - 4.0 * 0.02);
}

TEST(Positivity, SignIndefiniteBlockFlagged) {
    const std::vector<double> g{1.0, -1.0, 1.0};
    TimeGrid grid(1.0, 0.02, 100);
    const auto r = estimate_positivity(MaterialLaw::space_mul(g), TimeSignal(grid, 3, 1.0 / 3));
    EXPECT_LT(r.c_estimate, 0.0);
    EXPECT_FALSE(r.well_posed());
}

TEST(LawNorm, ConstantAndMultiplier) {
    TimeGrid g(1.0, 0.05, 50);
    EXPECT_NEAR(law_norm(MaterialLaw::constant(2.0), TimeSignal(g)).value, 2.0, 1e-8);
    EXPECT_NEAR(law_norm(MaterialLaw::space_mul(std::vector<double>{1.0, -3.0}), TimeSignal(g, 2, 0.5)).value, 3.0,
                1e-8);
}

TEST(Neumann, ZeroPerturbationIsBInverse) {
    TimeGrid g(2.0, 0.05, 60);
    const auto Binv = MaterialLaw::space_mul(std::vector<double>{0.5, 1.0});
    const auto s = neumann_inverse(Binv, MaterialLaw::zero(), 6, TimeSignal(g, 2, 0.5));
    const auto f = TimeSignal::random(g, 2, 0.5, 1);
    EXPECT_EQ(weighted_norm(s.law.apply(f) - Binv.apply(f)), 0.0);
    EXPECT_EQ(s.tail_bound, 0.0);
}

TEST(Neumann, ScalarSeriesAgainstDirectSolve) {
    TimeGrid g(2.0, 0.01, 300);
    const TimeSignal shape(g);
    const auto s = neumann_inverse(MaterialLaw::identity(), MaterialLaw::identity(), 6, shape);
    // q = ||d0^{-1}|| at nu = 2.
    EXPECT_NEAR(s.q, operator_norm(apply_d0_inverse, apply_d0_inverse_adjoint, shape).value, 1e-6);
    EXPECT_LT(s.q, 0.51);
    const auto f = TimeSignal::random(g, 1, 1.0, 2);
    // (1 + d0^{-1}) u = f  <=>  d0 (d0^{-1} (1 + d0^{-1})) u = f.
    const auto direct = solve(Problem{MaterialLaw::d0_inverse() * (MaterialLaw::identity() + MaterialLaw::d0_inverse()),
                                      MaterialLaw::zero(), SpatialOperator::zero(1), f});
    const double err = weighted_norm(s.law.apply(f) - direct.u) / weighted_norm(f);
    EXPECT_LE(err, std::pow(s.q, 7) / (1.0 - s.q));
    EXPECT_GT(err, 0.0);
}

TEST(Neumann, CompositionIdentity) {
    TimeGrid g(3.0, 0.02, 150);
    const std::vector<double> b{1.0, 2.0, 1.5};
    std::vector<double> b_inv(3);
    for (std::size_t i = 0; i < 3; ++i) b_inv[i] = 1.0 / b[i];
    const auto A = MaterialLaw::space_mul(std::vector<double>{0.5, 1.0, -1.0});
    const auto s = neumann_inverse(MaterialLaw::space_mul(b_inv), A, 6, TimeSignal(g, 3, 1.0 / 3));
    const auto f = TimeSignal::random(g, 3, 1.0 / 3, 3);
    const auto u = s.law.apply(f);
    const auto back = MaterialLaw::space_mul(b).apply(u) + A.apply(apply_d0_inverse(u));
    const double B_norm = 2.0;
    EXPECT_LE(weighted_norm(back - f) / weighted_norm(f), s.tail_bound * (B_norm + s.q / s.b_inverse_norm));
}

TEST(Neumann, DivergentSeriesRejected) {
    TimeGrid g(0.5, 0.05, 100);
    EXPECT_THROW(neumann_inverse(MaterialLaw::identity(), MaterialLaw::identity(), 4, TimeSignal(g)),
                 PreconditionError);
}

TEST(WeakLimit, PeriodMeans) {
    const auto ind = indicator({{0.0, 0.25}, {0.5, 0.75}});
    EXPECT_NEAR(std::abs(weak_limit_coefficient([&](double x) { return cplx(ind(x)); }, {0.25, 0.5, 0.75}) - 0.5),
                0.0, 1e-10);
    const auto a = two_phase(1.0, 2.0);
    EXPECT_NEAR(std::abs(weak_limit_coefficient([&](double x) { return cplx(a(x)); }, {0.5}) - 1.5), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(harmonic_mean([&](double x) { return cplx(a(x)); }, {0.5}) - 4.0 / 3.0), 0.0, 1e-10);
}

TEST(WeakLimit, ComplexMeanOfInverse) {
    const auto a = two_phase(1.0, 2.0);
    const cplx I(0.0, 1.0);
    const cplx m = weak_limit_coefficient([&](double x) { return 1.0 / (a(x) + I); }, {0.5});
    EXPECT_NEAR(std::abs(m - cplx(9.0, -7.0) / 20.0), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(1.0 / m - cplx(18.0 / 13.0, 14.0 / 13.0)), 0.0, 1e-10);
}

TEST(WeakLimit, SmoothPeriodicMean) {
    const auto pi = std::numbers::pi;
    const cplx m = weak_limit_coefficient([&](double x) { return 1.0 / (std::sin(2 * pi * x) + 3.0); });
    EXPECT_NEAR(m.real(), 1.0 / (2.0 * std::sqrt(2.0)), 1e-12);
}

TEST(WeakLimit, MatrixValued) {
    const auto a = two_phase(1.0, 2.0);
    const auto m = weak_limit_coefficient(
        [&](double x) {
            Eigen::MatrixXcd r(2, 2);
            r << a(x), 0.0, 0.0, 1.0 / a(x);
            return r;
        },
        2, 2, {0.5});
    EXPECT_NEAR(std::abs(m(0, 0) - 1.5), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(m(1, 1) - 0.75), 0.0, 1e-12);
}

TEST(WeakOperatorConvergence, OscillatedSpaceMulSlope) {
    SpaceGrid sg(256);
    const auto layout = FieldLayout::cells(sg);
    TimeGrid g(1.0, 0.05, 40);
    const auto pi = std::numbers::pi;
    const auto psi = TimeSignal::sample(g, layout.width(), layout.measure(), [&](double t, std::size_t c) {
        return cplx(bump((t - 1.0) / 0.9) * std::sin(pi * sg.cell(c)));
    });
    const auto phi = TimeSignal::sample(g, layout.width(), layout.measure(), [&](double t, std::size_t c) {
        return cplx(bump((t - 1.0) / 0.9) * std::exp(-4.0 * sg.cell(c)));
    });
    const auto profile = [](double x) { return 1.0 + x; };  // mean 3/2 over a period
    std::vector<double> errors, ns;
    for (const double n : {4.0, 8.0, 16.0, 32.0, 64.0}) {
        const auto M = MaterialLaw::space_mul(sample_cells(sg, oscillated(profile, n)));
        errors.push_back(std::abs(weighted_inner_product(M.apply(psi) - 1.5 * psi, phi)));
        ns.push_back(n);
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = std::log(ns[i]), y = std::log(errors[i]);
        sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double m = static_cast<double>(ns.size());
    const double slope = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
    EXPECT_GE(slope, 0.9);
}
