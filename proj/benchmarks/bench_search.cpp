#include <benchmark/benchmark.h>

#include <costdiag/greedy.hpp>
#include <costdiag/sweep.hpp>

using namespace costdiag;

namespace {

Dataset noisy(int n_tests, int m, uint64_t seed) {
    Dataset ds;
    for (int a = 0; a < n_tests; ++a)
        ds.attrs.push_back({"n" + std::to_string(a), 2, 1.0, {}, true});
    ds.class_names = {"neg", "pos"};
    ds.num_classes = 2;
    Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        Example ex;
        ex.label = rng.unit() < 0.5 ? 0 : 1;
        for (int a = 0; a < n_tests; ++a)
            ex.values.push_back(rng.unit() < 0.35 ? 1 - ex.label : ex.label);
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

MCMatrix sym_mc(double c) {
    MCMatrix mc;
    mc.cost = {{0.0, c}, {c, 0.0}};
    return mc;
}

}  // namespace

static void BM_MatchCount(benchmark::State& state) {
    Dataset ds = noisy(12, static_cast<int>(state.range(0)), 7);
    ProbEstimator est(ds, Smoothing::ML);
    State s = State{}.with(2, 1).with(7, 0);
    for (auto _ : state) benchmark::DoNotOptimize(est.match_count(s));
}
BENCHMARK(BM_MatchCount)->Arg(1000)->Arg(10000);

static void BM_AoSearch(benchmark::State& state) {
    Dataset ds = noisy(static_cast<int>(state.range(0)), 120, 11);
    CostModel cost = make_cost_model(ds, sym_mc(12.0));
    ProbEstimator est(ds, Smoothing::ML);
    for (auto _ : state) {
        AoResult res = run_ao(est, cost, SearchConfig{});
        benchmark::DoNotOptimize(res.stats.expansions);
    }
}
BENCHMARK(BM_AoSearch)->Arg(6)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_AoSearchLaplace(benchmark::State& state) {
    Dataset ds = noisy(8, 120, 13);
    CostModel cost = make_cost_model(ds, sym_mc(12.0));
    ProbEstimator est(ds, Smoothing::Laplace);
    for (auto _ : state) {
        AoResult res = run_ao(est, cost, SearchConfig{});
        benchmark::DoNotOptimize(res.stats.expansions);
    }
}
BENCHMARK(BM_AoSearchLaplace)->Unit(benchmark::kMillisecond);

static void BM_GreedyVoi(benchmark::State& state) {
    Dataset ds = noisy(15, 300, 17);
    CostModel cost = make_cost_model(ds, sym_mc(20.0));
    ProbEstimator est(ds, Smoothing::ML);
    GreedyConfig cfg;
    cfg.variant = GreedyVariant::Voi;
    for (auto _ : state) {
        auto policy = grow_greedy(est, cost, cfg);
        benchmark::DoNotOptimize(policy->value);
    }
}
BENCHMARK(BM_GreedyVoi)->Unit(benchmark::kMillisecond);

static void BM_PolicyEvaluate(benchmark::State& state) {
    Dataset ds = noisy(10, 5000, 19);
    CostModel cost = make_cost_model(ds, sym_mc(15.0));
    ProbEstimator est(ds, Smoothing::ML);
    GreedyConfig cfg;
    cfg.variant = GreedyVariant::McNorton;
    auto policy = grow_greedy(est, cost, cfg);
    for (auto _ : state) {
        EvalResult res = evaluate(*policy, ds.examples, cost);
        benchmark::DoNotOptimize(res.v_test);
    }
}
BENCHMARK(BM_PolicyEvaluate)->Unit(benchmark::kMillisecond);

static void BM_Bootstrap(benchmark::State& state) {
    Rng rng(23);
    std::vector<double> c1, c2;
    for (int i = 0; i < 250; ++i) {
        c1.push_back(30 * rng.unit());
        c2.push_back(30 * rng.unit());
    }
    for (auto _ : state) {
        auto cmp = bdeltacost(c1, c2, 1000, 0.95, 5);
        benchmark::DoNotOptimize(cmp.ci_lo);
    }
}
BENCHMARK(BM_Bootstrap)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
