#include <benchmark/benchmark.h>

#include "harvest/bayes.hpp"
#include "harvest/evaluation.hpp"
#include "harvest/myopic.hpp"
#include "harvest/planner.hpp"

using namespace harvest;

namespace {

KnowledgeState knowledge(int j) {
    Rng rng(7);
    return fit_improper(draw_history(case_study_truth(), j, rng));
}

void BM_Update(benchmark::State& state) {
    KnowledgeState k = knowledge(10);
    const Observation o{0.49, 0.47};
    for (auto _ : state) {
        k = update(k, o);
        benchmark::DoNotOptimize(k);
    }
}
BENCHMARK(BM_Update);

void BM_HTilde(benchmark::State& state) {
    const auto k = knowledge(10);
    const auto econ = case_study_economics();
    const auto limits = case_study_limits();
    double i = 10.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(h_tilde(15.0, i, k, econ, limits));
        i = i < 45.0 ? i + 0.5 : 10.0;
    }
}
BENCHMARK(BM_HTilde);

void BM_TraceBoundary(benchmark::State& state) {
    const auto k = knowledge(10);
    for (auto _ : state)
        benchmark::DoNotOptimize(trace_boundary(GrowthModel{k}, case_study_economics(), case_study_limits()));
}
BENCHMARK(BM_TraceBoundary)->Unit(benchmark::kMillisecond);

void BM_PlannerDecide(benchmark::State& state) {
    PlannerConfig cfg;
    cfg.branch_k = static_cast<int>(state.range(0));
    const HyperState h{{1.5 * std::exp(0.488 * 4), 2.0 * std::exp(0.488 * 4)}, knowledge(10), 4};
    for (auto _ : state) {
        ++cfg.seed;
        benchmark::DoNotOptimize(decide(h, cfg, case_study_economics(), case_study_limits()));
    }
}
BENCHMARK(BM_PlannerDecide)->Arg(3)->Arg(5)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_EvaluateCurrentPractice(benchmark::State& state) {
    const StrategySpec spec{StrategyKind::CurrentPractice, 0, {}, 0.6};
    for (auto _ : state)
        benchmark::DoNotOptimize(evaluate(spec, case_study_truth(), case_study_economics(), case_study_limits(),
                                          EvalOptions{1000, 1, 1}));
}
BENCHMARK(BM_EvaluateCurrentPractice)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
