#pragma once

// Shared builders for the test suites: the worked diabetes example from the
// docs/figures, seeded random small instances for oracle cross-checks, and a
// noisy wide instance that overfits.

#include <costdiag/eval.hpp>
#include <costdiag/policy.hpp>

namespace costdiag::testsup {

// Diabetes example: BMI (cost 1, small/large), Insulin (cost 22.78, high/low),
// classes Healthy(0)/Diabetes(1), MC(Healthy,Diabetes)=100, MC(Diabetes,Healthy)=80.
// The joint is exact at m=10000, so ML estimates reproduce the stated
// branch probabilities and leaf costs exactly.
inline SyntheticSpec diabetes_spec() {
    SyntheticSpec spec;
    spec.attrs = {
        {"BMI", 2, 1.0, {}, true},
        {"Insulin", 2, 22.78, {}, true},
    };
    spec.class_names = {"Healthy", "Diabetes"};
    spec.num_classes = 2;
    // cell order: (BMI, Insulin, y), y fastest
    spec.joint = {0.3222, 0.0358, 0.1278, 0.0142, 0.1200, 0.2800, 0.0800, 0.0200};
    MCMatrix mc;
    mc.cost = {{0.0, 100.0}, {80.0, 0.0}};
    spec.mc = mc;
    return spec;
}

inline Dataset diabetes_data() { return materialize_exact(diabetes_spec(), 10000); }

inline CostModel diabetes_cost(const Dataset& ds) {
    return make_cost_model(ds, *diabetes_spec().mc);
}

// BMI first; small -> Healthy, large -> Insulin; high -> Diabetes, low -> Healthy.
inline PolicyPtr figure1_policy() {
    auto root = make_measure(State{}, 0);
    root->children[0] = make_leaf(State{}.with(0, 0), 0);
    auto large = make_measure(State{}.with(0, 1), 1);
    large->children[0] = make_leaf(State{}.with(0, 1).with(1, 0), 1);
    large->children[1] = make_leaf(State{}.with(0, 1).with(1, 1), 0);
    root->children[1] = std::move(large);
    return root;
}

// Same classification decisions with Insulin tested first.
inline PolicyPtr figure2_policy() {
    auto root = make_measure(State{}, 1);
    auto high = make_measure(State{}.with(1, 0), 0);
    high->children[0] = make_leaf(State{}.with(1, 0).with(0, 0), 0);
    high->children[1] = make_leaf(State{}.with(1, 0).with(0, 1), 1);
    root->children[0] = std::move(high);
    root->children[1] = make_leaf(State{}.with(1, 1), 0);
    return root;
}

struct TestInstance {
    Dataset data;
    CostModel cost;
    bool heavy_costs = false;
};

// Seeded random instance small enough for exhaustive enumeration:
// 1..3 tests of arity 2..3, 30..200 examples, random joint and costs.
// heavy_costs puts every measurement cost at or above the largest
// misdiagnosis entry.
inline TestInstance make_instance(uint64_t seed, bool heavy_costs) {
    for (uint64_t attempt = 0;; ++attempt) {
        Rng rng(mix_seed(seed, 77, attempt));
        SyntheticSpec spec;
        int n_tests = 1 + static_cast<int>(rng.below(3));
        for (int a = 0; a < n_tests; ++a) {
            AttributeMeta meta;
            meta.name = "t" + std::to_string(a);
            meta.arity = 2 + static_cast<int>(rng.below(2));
            spec.attrs.push_back(meta);
        }
        spec.class_names = {"neg", "pos"};
        spec.num_classes = 2;
        size_t cells = spec.table_size();
        double total = 0;
        for (size_t i = 0; i < cells; ++i) {
            spec.joint.push_back(0.05 + rng.unit());
            total += spec.joint.back();
        }
        for (double& p : spec.joint) p /= total;

        double mc01 = 5 + 25 * rng.unit();
        double mc10 = 5 + 25 * rng.unit();
        double mc_max = std::max(mc01, mc10);
        MCMatrix mc;
        mc.cost = {{0.0, mc01}, {mc10, 0.0}};

        int m = 30 + static_cast<int>(rng.below(171));
        Dataset data = gen_synthetic(spec, mix_seed(seed, 171, attempt), m);
        long per_class[2] = {0, 0};
        for (const auto& ex : data.examples) ++per_class[ex.label];
        if (per_class[0] < 2 || per_class[1] < 2) continue;  // reseed, keep determinism

        for (auto& a : data.attrs)
            a.cost = heavy_costs ? mc_max * (1.0 + rng.unit()) : 0.25 + 2.0 * rng.unit();

        TestInstance inst;
        inst.cost = make_cost_model(data, mc);
        inst.data = std::move(data);
        inst.heavy_costs = heavy_costs;
        return inst;
    }
}

// Wide noisy problem for the overfitting demonstration: y is a fair coin and
// every test is an independent noisy copy of it.
inline Dataset noisy_instance(int n_tests, double flip, int m, uint64_t seed) {
    Dataset ds;
    for (int a = 0; a < n_tests; ++a)
        ds.attrs.push_back({"n" + std::to_string(a), 2, 1.0, {}, true});
    ds.class_names = {"neg", "pos"};
    ds.num_classes = 2;
    Rng rng(seed);
    for (int i = 0; i < m; ++i) {
        Example ex;
        ex.label = rng.unit() < 0.5 ? 0 : 1;
        for (int a = 0; a < n_tests; ++a) {
            int v = ex.label;
            if (rng.unit() < flip) v = 1 - v;
            ex.values.push_back(v);
        }
        ds.examples.push_back(std::move(ex));
    }
    return ds;
}

inline MCMatrix symmetric_mc(double off_diagonal) {
    MCMatrix mc;
    mc.cost = {{0.0, off_diagonal}, {off_diagonal, 0.0}};
    return mc;
}

}  // namespace costdiag::testsup
