#include <benchmark/benchmark.h>

#include <cmath>

#include "evoconv/evosolve.hpp"
#include "evoconv/gconv.hpp"

using namespace evoconv;

namespace {

MaterialLaw oscillating_law(const SpaceGrid& sg, double n) {
    auto coeff = [&](double lo, double hi) {
        auto a = sample_nodes(sg, oscillated(two_phase(lo, hi), n));
        const auto b = sample_cells(sg, oscillated(two_phase(hi, lo), n));
        a.insert(a.end(), b.begin(), b.end());
        return a;
    };
    return MaterialLaw::space_mul(coeff(1.0, 0.0)) + MaterialLaw::d0_inverse() * MaterialLaw::space_mul(coeff(0.0, 1.0));
}

void BM_D0Inverse(benchmark::State& state) {
    const TimeGrid g(1.0, 1e-2, static_cast<std::size_t>(state.range(0)));
    const auto u = TimeSignal::random(g, 1, 1.0, 1);
    for (auto _ : state) benchmark::DoNotOptimize(apply_d0_inverse(u));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_D0Inverse)->RangeMultiplier(4)->Range(256, 16384)->Complexity(benchmark::oN);

void BM_LawApply(benchmark::State& state) {
    const SpaceGrid sg(static_cast<std::size_t>(state.range(0)));
    const auto layout = FieldLayout::staggered(sg);
    const TimeGrid g(1.0, 4.0 / 512, 512);
    const auto M = oscillating_law(sg, 8);
    const auto u = TimeSignal::random(g, layout.width(), layout.measure(), 2);
    for (auto _ : state) benchmark::DoNotOptimize(M.apply(u));
}
BENCHMARK(BM_LawApply)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_ConvolutionApply(benchmark::State& state) {
    const TimeGrid g(1.0, 1e-2, static_cast<std::size_t>(state.range(0)));
    const auto M = MaterialLaw::time_convolution([](double t) { return cplx(std::exp(-t)); });
    const auto u = TimeSignal::random(g, 1, 1.0, 3);
    for (auto _ : state) benchmark::DoNotOptimize(M.apply(u));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ConvolutionApply)->RangeMultiplier(2)->Range(256, 2048)->Complexity(benchmark::oNSquared);

void BM_SolveMixed(benchmark::State& state) {
    const SpaceGrid sg(static_cast<std::size_t>(state.range(0)));
    const auto layout = FieldLayout::staggered(sg);
    const TimeGrid g(1.0, 4.0 / 512, 512);
    const Problem p{oscillating_law(sg, 8), MaterialLaw::zero(), SpatialOperator::block(BlockOperatorA(sg)),
                    TimeSignal::random(g, layout.width(), layout.measure(), 4)};
    SolveOptions o;
    o.diagnostics = false;
    for (auto _ : state) benchmark::DoNotOptimize(solve(p, o));
}
BENCHMARK(BM_SolveMixed)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_SolveWithDiagnostics(benchmark::State& state) {
    const SpaceGrid sg(128);
    const auto layout = FieldLayout::staggered(sg);
    const TimeGrid g(1.0, 4.0 / 512, 512);
    const Problem p{oscillating_law(sg, 8), MaterialLaw::zero(), SpatialOperator::block(BlockOperatorA(sg)),
                    TimeSignal::random(g, layout.width(), layout.measure(), 5)};
    for (auto _ : state) benchmark::DoNotOptimize(solve(p));
}
BENCHMARK(BM_SolveWithDiagnostics)->Unit(benchmark::kMillisecond);

void BM_Positivity(benchmark::State& state) {
    const SpaceGrid sg(128);
    const auto layout = FieldLayout::staggered(sg);
    const TimeGrid g(1.0, 4.0 / 64, 64);
    const auto M = oscillating_law(sg, 8);
    for (auto _ : state) benchmark::DoNotOptimize(estimate_positivity(M, layout.zeros(g)));
}
BENCHMARK(BM_Positivity)->Unit(benchmark::kMillisecond);

void BM_D0InverseNorm(benchmark::State& state) {
    const TimeGrid g(1.0, 1e-2, static_cast<std::size_t>(state.range(0)));
    for (auto _ : state)
        benchmark::DoNotOptimize(operator_norm(apply_d0_inverse, apply_d0_inverse_adjoint, TimeSignal(g)));
}
BENCHMARK(BM_D0InverseNorm)->Arg(512)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_Pairings(benchmark::State& state) {
    const SpaceGrid sg(128);
    const auto layout = FieldLayout::staggered(sg);
    const TimeGrid g(1.0, 4.0 / 512, 512);
    const auto tests = TestFunctionSet::standard(g, layout);
    const auto u = TimeSignal::random(g, layout.width(), layout.measure(), 6);
    for (auto _ : state) benchmark::DoNotOptimize(tests.pairings(u));
}
BENCHMARK(BM_Pairings);

}  // namespace

BENCHMARK_MAIN();
