#include "costdiag/regularize.hpp"

#include <algorithm>
#include <cmath>

namespace costdiag {

double normal_z(double confidence) {
    if (std::abs(confidence - 0.95) < 1e-12) return 1.96;
    if (std::abs(confidence - 0.99) < 1e-12) return 2.576;
    if (std::abs(confidence - 0.90) < 1e-12) return 1.645;
    // Beasley-Springer/Moro rational approximation for other levels
    double p = 1.0 - (1.0 - confidence) / 2.0;
    double t = std::sqrt(-2.0 * std::log(1.0 - p));
    return t - (2.515517 + 0.802853 * t + 0.010328 * t * t) /
                   (1.0 + 1.432788 * t + 0.189269 * t * t + 0.001308 * t * t * t);
}

namespace {

struct MeanSd {
    double mean = 0;
    double sd = 0;  // sample standard deviation, n-1 denominator
    long n = 0;
};

MeanSd mean_sd(std::span<const double> sample) {
    MeanSd ms;
    ms.n = static_cast<long>(sample.size());
    if (ms.n == 0) return ms;
    for (double x : sample) ms.mean += x;
    ms.mean /= static_cast<double>(ms.n);
    if (ms.n < 2) return ms;
    double ss = 0;
    for (double x : sample) ss += (x - ms.mean) * (x - ms.mean);
    ms.sd = std::sqrt(ss / static_cast<double>(ms.n - 1));
    return ms;
}

}  // namespace

double normal_upper_limit(std::span<const double> sample, double confidence) {
    MeanSd ms = mean_sd(sample);
    if (ms.n < 2) return ms.mean;
    return ms.mean + normal_z(confidence) * ms.sd / std::sqrt(static_cast<double>(ms.n));
}

SpDecision sp_check(AndOrGraph& graph, int or_id, const SpConfig& cfg) {
    const OrNode& node = graph.or_at(or_id);
    int and_id = -1;
    for (int c : node.and_children)
        if (graph.and_at(c).action == node.pi_opt) { and_id = c; break; }
    if (and_id < 0 || graph.and_at(and_id).expanded) return SpDecision::Keep;

    bool prune = false;
    if (node.counts.total < cfg.min_support) {
        prune = true;  // no evidence to distinguish the two policies
    } else {
        auto totals = graph.realistic_costs_from(or_id);
        MeanSd ms = mean_sd(totals);
        double center = graph.estimator().mode() == Smoothing::ML ? ms.mean : node.v_real;
        double half = ms.n >= 2 ? normal_z(cfg.confidence) * ms.sd / std::sqrt(double(ms.n)) : 0.0;
        prune = node.v_opt >= center - half && node.v_opt <= center + half;
    }
    if (!prune) return SpDecision::Keep;
    graph.prune_and(and_id);  // only the optimistic side changes
    return SpDecision::Prune;
}

std::function<SpDecision(AndOrGraph&, int)> make_sp_hook(const SpConfig& cfg) {
    return [cfg](AndOrGraph& g, int or_id) { return sp_check(g, or_id, cfg); };
}

EsResult run_es(const Dataset& train, const CostModel& cost, Smoothing mode,
                SearchConfig config, uint64_t split_seed) {
    if (train.size() < 4) throw Error("early stopping needs at least 4 training examples");
    auto reps = make_replicas(train, 1, 0.5, split_seed);
    Dataset subtrain = subset(train, reps[0].train);
    Dataset holdout = subset(train, reps[0].test);
    for (int y = 0; y < train.num_classes; ++y) {
        auto has = [y](const Dataset& d) {
            for (const auto& ex : d.examples)
                if (ex.label == y) return true;
            return false;
        };
        if (!has(subtrain) || !has(holdout))
            throw Error("degenerate early-stopping split: class " + std::to_string(y) +
                        " missing from a half");
    }

    ProbEstimator est(subtrain, mode);
    EsResult out;
    out.best_holdout_cost = std::numeric_limits<double>::infinity();
    config.eval_set = holdout.examples;  // holdout evaluation is never Laplace-corrected
    config.on_iteration = [&](const AndOrGraph& g, const AnytimeRecord& rec) {
        if (rec.v_test && *rec.v_test < out.best_holdout_cost) {  // ties keep the earliest
            out.best_holdout_cost = *rec.v_test;
            out.best_iter = rec.iter;
            out.policy = g.extract_policy();
        }
    };
    AoResult ao = run_ao(est, cost, config);
    out.converged_holdout_cost = ao.log.back().v_test.value_or(0.0);
    out.log = std::move(ao.log);
    out.stats = ao.stats;
    if (!out.policy) out.policy = std::move(ao.policy);
    return out;
}

namespace {

struct PppContext {
    const ProbEstimator* est;
    const CostModel* cost;
    double confidence;
};

// Post-order UB computation; converts an internal node to a leaf when
// diagnosing f_best now has a smaller upper confidence limit than the
// subtree. Returns UB(s).
double ppp_walk(PolicyNode& node, const std::vector<int>& rows, const PppContext& ctx) {
    const ProbEstimator& est = *ctx.est;
    const CostModel& cost = *ctx.cost;
    ClassCounts counts = est.class_counts(rows);

    auto leaf_ub = [&](int k) {
        std::vector<double> sample;
        sample.reserve(rows.size() + est.num_classes());
        for (int i : rows) sample.push_back(cost.mc.at(k, est.data().examples[i].label));
        if (est.mode() == Smoothing::Laplace)  // one virtual example per diagnosis
            for (int y = 0; y < est.num_classes(); ++y) sample.push_back(cost.mc.at(k, y));
        return normal_upper_limit(sample, ctx.confidence);
    };

    if (node.is_leaf()) return leaf_ub(node.action.index);

    auto parts = est.partition(rows, node.action.index);
    double ub = cost.measure_cost[node.action.index];
    for (auto& [v, child] : node.children)
        ub += node.branch_prob.at(v) * ppp_walk(*child, parts[v], ctx);

    auto [fb, c_fb] = best_diagnosis_from(counts, cost, est.mode());
    double ub_leaf = leaf_ub(fb);
    if (ub_leaf < ub) {
        node.action = Action::diagnose(fb);
        node.children.clear();
        node.branch_prob.clear();
        node.value = c_fb;
        return ub_leaf;
    }
    return ub;
}

}  // namespace

PolicyPtr ppp_ao(PolicyPtr policy, const ProbEstimator& est, const CostModel& cost,
                 double confidence) {
    PppContext ctx{&est, &cost, confidence};
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    ppp_walk(*policy, all, ctx);
    return policy;
}

}  // namespace costdiag
