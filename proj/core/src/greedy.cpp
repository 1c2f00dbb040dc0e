#include "costdiag/greedy.hpp"

#include <algorithm>
#include <cmath>

namespace costdiag {

double entropy(std::span<const double> dist) {
    double h = 0;
    for (double p : dist) {
        if (p < 0) throw Error("entropy of a distribution with a negative entry");
        if (p > 0) h -= p * std::log2(p);
    }
    return h;
}

namespace {

double entropy_of_counts(const ClassCounts& c) {
    if (c.total == 0) return 0.0;
    double h = 0;
    for (long x : c.per_class) {
        if (x == 0) continue;
        double p = static_cast<double>(x) / c.total;
        h -= p * std::log2(p);
    }
    return h;
}

double info_gain_rows(const ProbEstimator& est, std::span<const int> rows, int attr) {
    // always raw ML counts, even under Laplace-corrected algorithms
    if (rows.empty()) throw Error("information gain undefined on a zero-support state");
    ClassCounts counts = est.class_counts(rows);
    auto parts = est.partition(rows, attr);
    double gain = entropy_of_counts(counts);
    for (const auto& part : parts) {
        if (part.empty()) continue;
        gain -= (static_cast<double>(part.size()) / rows.size()) *
                entropy_of_counts(est.class_counts(part));
    }
    return gain;
}

double one_step_la_rows(const ProbEstimator& est, const CostModel& cost,
                        std::span<const int> rows, int attr, Smoothing mode) {
    auto parts = est.partition(rows, attr);
    int arity = est.arity(attr);
    long total = static_cast<long>(rows.size());
    double la = cost.measure_cost[attr];
    for (int v = 0; v < arity; ++v) {
        long cnt = static_cast<long>(parts[v].size());
        if (mode == Smoothing::ML && cnt == 0) continue;
        double p = p_value_from(cnt, total, arity, mode);
        la += p * best_diagnosis_from(est.class_counts(parts[v]), cost, mode).second;
    }
    return la;
}

}  // namespace

double info_gain(const ProbEstimator& est, const State& s, int attr) {
    if (s.has(attr)) throw Error("attribute already measured");
    auto rows = est.match_indices(s);
    return info_gain_rows(est, rows, attr);
}

double norton_score(const ProbEstimator& est, const CostModel& cost, const State& s, int attr) {
    return info_gain(est, s, attr) / cost.measure_cost[attr];
}

double one_step_la(const ProbEstimator& est, const CostModel& cost, const State& s, int attr) {
    if (s.has(attr)) throw Error("attribute already measured");
    auto rows = est.match_indices(s);
    return one_step_la_rows(est, cost, rows, attr, est.mode());
}

double one_step_voi(const ProbEstimator& est, const CostModel& cost, const State& s, int attr) {
    auto counts = est.match_count(s);
    double c_fbest = best_diagnosis_from(counts, cost, est.mode()).second;
    return c_fbest - (one_step_la(est, cost, s, attr) - cost.measure_cost[attr]);
}

namespace {

struct GrowContext {
    const ProbEstimator* est;
    const CostModel* cost;
    GreedyConfig cfg;
};

// C4.5 minimum-support rule: a test is eligible only if at least two of its
// outcomes are matched by at least min_support examples.
bool eligible_by_support(const ProbEstimator& est, std::span<const int> rows, int attr,
                         long min_support) {
    auto parts = est.partition(rows, attr);
    int good = 0;
    for (const auto& p : parts)
        if (static_cast<long>(p.size()) >= min_support) ++good;
    return good >= 2;
}

std::vector<int> candidate_tests(const GrowContext& ctx, const State& s,
                                 std::span<const int> rows, bool apply_support) {
    std::vector<int> out;
    const auto& attrs = ctx.est->data().attrs;
    for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
        if (!attrs[a].usable || s.has(a)) continue;
        if (apply_support && !eligible_by_support(*ctx.est, rows, a, ctx.cfg.min_support))
            continue;
        out.push_back(a);
    }
    return out;
}

PolicyPtr grow(const GrowContext& ctx, const State& s, const std::vector<int>& rows);

PolicyPtr grow_children(const GrowContext& ctx, const State& s, const std::vector<int>& rows,
                        int attr, Smoothing branch_mode) {
    auto node = make_measure(s, attr);
    auto parts = ctx.est->partition(rows, attr);
    int arity = ctx.est->arity(attr);
    for (int v = 0; v < arity; ++v) {
        if (branch_mode == Smoothing::ML && parts[v].empty()) continue;
        node->children[v] = grow(ctx, s.with(attr, v), parts[v]);
    }
    return node;
}

PolicyPtr grow(const GrowContext& ctx, const State& s, const std::vector<int>& rows) {
    const ProbEstimator& est = *ctx.est;
    const CostModel& cost = *ctx.cost;
    ClassCounts counts = est.class_counts(rows);

    if (ctx.cfg.variant == GreedyVariant::Voi) {
        Smoothing mode = ctx.cfg.laplace ? Smoothing::Laplace : Smoothing::ML;
        auto [fb, c_fb] = best_diagnosis_from(counts, cost, mode);
        auto tests = candidate_tests(ctx, s, rows, ctx.cfg.voi_min_support);
        int x_best = -1;
        double la_best = 0;
        for (int a : tests) {
            double la = one_step_la_rows(est, cost, rows, a, mode);
            if (x_best < 0 || la < la_best) {  // ties keep the smallest attribute
                x_best = a;
                la_best = la;
            }
        }
        if (x_best < 0 || c_fb <= la_best) {
            auto leaf = make_leaf(s, fb);
            leaf->support = counts.total;
            return leaf;
        }
        auto node = grow_children(ctx, s, rows, x_best, mode);
        node->support = counts.total;
        node->fallback_diag = fb;
        return node;
    }

    // Norton and MC+Norton share growth: info-gain-per-cost selection with
    // C4.5 stopping conditions; they differ in the leaf diagnosis rule.
    bool pure = false;
    int majority = 0;
    for (int y = 0; y < est.num_classes(); ++y) {
        if (counts.per_class[y] == counts.total && counts.total > 0) pure = true;
        if (counts.per_class[y] > counts.per_class[majority]) majority = y;
    }
    auto leaf_diag = [&] {
        if (ctx.cfg.variant == GreedyVariant::Norton) return majority;
        Smoothing mode = ctx.cfg.laplace ? Smoothing::Laplace : Smoothing::ML;
        return best_diagnosis_from(counts, cost, mode).first;
    };

    auto tests = candidate_tests(ctx, s, rows, true);
    if (pure || tests.empty()) {
        auto leaf = make_leaf(s, leaf_diag());
        leaf->support = counts.total;
        return leaf;
    }
    int x_best = -1;
    double score_best = 0;
    for (int a : tests) {
        double score = info_gain_rows(est, rows, a) / cost.measure_cost[a];
        if (x_best < 0 || score > score_best) {
            x_best = a;
            score_best = score;
        }
    }
    auto node = grow_children(ctx, s, rows, x_best, Smoothing::ML);
    node->support = counts.total;
    node->fallback_diag = leaf_diag();
    return node;
}

}  // namespace

PolicyPtr grow_greedy_raw(const ProbEstimator& est, const CostModel& cost,
                          const GreedyConfig& cfg) {
    GrowContext ctx{&est, &cost, cfg};
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    return grow(ctx, State{}, all);
}

PolicyPtr grow_greedy(const ProbEstimator& est, const CostModel& cost, const GreedyConfig& cfg) {
    PolicyPtr policy = grow_greedy_raw(est, cost, cfg);
    switch (cfg.variant) {
        case GreedyVariant::Norton:
            policy = c45_ppp(std::move(policy), est, cfg);
            break;
        case GreedyVariant::McNorton:
            policy = total_cost_prune(std::move(policy), est, cost, cfg.laplace);
            break;
        case GreedyVariant::Voi:
            break;  // pruning is built into the stopping rule
    }
    policy_value(*policy, est, cost);
    return policy;
}

double c45_upper_bound(long n, double p, double z) {
    return n * (p + z * std::sqrt(p * (1 - p) / n) + 1.0 / (2.0 * n));
}

namespace {

struct C45Context {
    const ProbEstimator* est;
    GreedyConfig cfg;
};

double c45_walk(PolicyNode& node, const std::vector<int>& rows, const C45Context& ctx) {
    const ProbEstimator& est = *ctx.est;
    ClassCounts counts = est.class_counts(rows);
    if (counts.total == 0) throw Error("pessimistic pruning reached a zero-support node");
    int majority = 0;
    for (int y = 1; y < est.num_classes(); ++y)
        if (counts.per_class[y] > counts.per_class[majority]) majority = y;

    auto pessimistic_errors = [&](int k) {
        long n = counts.total;
        long e = n - counts.per_class[k];
        double p = ctx.cfg.laplace
                       ? (e + est.num_classes() - 1.0) / (n + est.num_classes())
                       : static_cast<double>(e) / n;
        return c45_upper_bound(n, p, ctx.cfg.z_c);
    };

    if (node.is_leaf()) return pessimistic_errors(node.action.index);

    auto parts = est.partition(rows, node.action.index);
    double children_sum = 0;
    for (auto& [v, child] : node.children) children_sum += c45_walk(*child, parts[v], ctx);

    double as_leaf = pessimistic_errors(majority);
    if (children_sum >= as_leaf) {
        node.action = Action::diagnose(majority);
        node.children.clear();
        node.branch_prob.clear();
        return as_leaf;
    }
    return children_sum;
}

}  // namespace

PolicyPtr c45_ppp(PolicyPtr policy, const ProbEstimator& est, const GreedyConfig& cfg) {
    C45Context ctx{&est, cfg};
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    c45_walk(*policy, all, ctx);
    return policy;
}

namespace {

// Single post-order pass comparing C(s, f_best) against the one-step Bellman
// value of keeping the split; returns V of the (possibly pruned) subtree.
double tcp_walk(PolicyNode& node, const std::vector<int>& rows, const ProbEstimator& est,
                const CostModel& cost, Smoothing mode) {
    ClassCounts counts = est.class_counts(rows);
    if (node.is_leaf()) return diag_cost_from(counts, cost, node.action.index, mode);

    int attr = node.action.index;
    auto parts = est.partition(rows, attr);
    int arity = est.arity(attr);
    double q = cost.measure_cost[attr];
    for (auto& [v, child] : node.children) {
        double p = p_value_from(static_cast<long>(parts[v].size()), counts.total, arity, mode);
        q += p * tcp_walk(*child, parts[v], est, cost, mode);
    }
    auto [fb, c_fb] = best_diagnosis_from(counts, cost, mode);
    if (c_fb <= q) {
        node.action = Action::diagnose(fb);
        node.children.clear();
        node.branch_prob.clear();
        return c_fb;
    }
    return q;
}

}  // namespace

PolicyPtr total_cost_prune(PolicyPtr policy, const ProbEstimator& est, const CostModel& cost,
                           bool laplace) {
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    tcp_walk(*policy, all, est, cost, laplace ? Smoothing::Laplace : Smoothing::ML);
    return policy;
}

}  // namespace costdiag
