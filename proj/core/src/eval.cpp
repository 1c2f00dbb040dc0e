#include "costdiag/eval.hpp"

#include <algorithm>
#include <cmath>

namespace costdiag {

std::string comp_result_str(CompResult r) {
    switch (r) {
        case CompResult::Win: return "win";
        case CompResult::Tie: return "tie";
        case CompResult::Loss: return "loss";
    }
    return "?";
}

ComparisonOutcome bdeltacost(std::span<const double> c1, std::span<const double> c2,
                             int resamples, double confidence, uint64_t seed) {
    if (c1.size() != c2.size())
        throw Error("paired bootstrap needs equal-length cost vectors (" +
                    std::to_string(c1.size()) + " vs " + std::to_string(c2.size()) + ")");
    size_t m = c1.size();
    if (m < 2) throw Error("paired bootstrap needs at least 2 examples");
    if (resamples < 2) throw ConfigError("resample count must be at least 2");

    std::vector<double> delta(m);
    for (size_t i = 0; i < m; ++i) delta[i] = c1[i] - c2[i];

    Rng rng(seed);
    std::vector<double> means(resamples);
    for (int b = 0; b < resamples; ++b) {
        double sum = 0;
        for (size_t i = 0; i < m; ++i) sum += delta[rng.below(m)];
        means[b] = sum / static_cast<double>(m);
    }
    std::sort(means.begin(), means.end());

    // symmetric order statistics: swapping c1/c2 mirrors the interval exactly
    double alpha = 1.0 - confidence;
    int lo_idx = static_cast<int>(std::floor(alpha / 2.0 * resamples));
    lo_idx = std::clamp(lo_idx, 0, resamples - 1);
    int hi_idx = resamples - 1 - lo_idx;

    ComparisonOutcome out;
    out.ci_lo = means[lo_idx];
    out.ci_hi = means[hi_idx];
    out.resamples = resamples;
    if (out.ci_hi < 0)
        out.result = CompResult::Win;
    else if (out.ci_lo > 0)
        out.result = CompResult::Loss;
    else
        out.result = CompResult::Tie;
    return out;
}

double ChessTable::tie_score(const std::string& alg, const std::string& domain) const {
    auto it = games.find({alg, domain});
    return it == games.end() ? 0.0 : 0.5 * static_cast<double>(it->second);
}

ChessTable chess_scores(const std::vector<GameRecord>& outcomes) {
    ChessTable table;
    for (const auto& g : outcomes) {
        PairScore& fwd = table.pairs[{g.alg1, g.alg2, g.domain}];
        PairScore& rev = table.pairs[{g.alg2, g.alg1, g.domain}];
        switch (g.result) {
            case CompResult::Win: ++fwd.wins; ++rev.losses; break;
            case CompResult::Tie: ++fwd.ties; ++rev.ties; break;
            case CompResult::Loss: ++fwd.losses; ++rev.wins; break;
        }
    }
    for (const auto& [key, score] : table.pairs) {
        const auto& [alg1, alg2, domain] = key;
        table.overall[{alg1, domain}] += score.score();
        table.games[{alg1, domain}] += score.games();
    }
    return table;
}

namespace {

struct OracleContext {
    const ProbEstimator* est;
    const CostModel* cost;
    std::unordered_map<State, std::pair<double, Action>, StateHash> memo;
};

double solve(OracleContext& ctx, const State& s, const std::vector<int>& rows) {
    auto it = ctx.memo.find(s);
    if (it != ctx.memo.end()) return it->second.first;

    const ProbEstimator& est = *ctx.est;
    ClassCounts counts = est.class_counts(rows);
    auto [fb, c_fb] = best_diagnosis_from(counts, *ctx.cost, est.mode());
    double best = c_fb;
    Action best_action = Action::diagnose(fb);

    const auto& attrs = est.data().attrs;
    for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
        if (!attrs[a].usable || s.has(a)) continue;
        auto parts = est.partition(rows, a);
        double q = ctx.cost->measure_cost[a];
        for (int v = 0; v < attrs[a].arity; ++v) {
            long cnt = static_cast<long>(parts[v].size());
            if (est.mode() == Smoothing::ML && cnt == 0) continue;
            double p = p_value_from(cnt, counts.total, attrs[a].arity, est.mode());
            q += p * solve(ctx, s.with(a, v), parts[v]);
        }
        if (q < best) {  // diagnosis first, then tests ascending: global order
            best = q;
            best_action = Action::measure(a);
        }
    }
    ctx.memo[s] = {best, best_action};
    return best;
}

PolicyPtr build_optimal(OracleContext& ctx, const State& s, const std::vector<int>& rows) {
    const Action action = ctx.memo.at(s).second;
    if (action.kind == Action::Diagnose) return make_leaf(s, action.index);
    auto node = make_measure(s, action.index);
    const ProbEstimator& est = *ctx.est;
    auto parts = est.partition(rows, action.index);
    int arity = est.arity(action.index);
    long total = static_cast<long>(rows.size());
    for (int v = 0; v < arity; ++v) {
        long cnt = static_cast<long>(parts[v].size());
        if (est.mode() == Smoothing::ML && cnt == 0) continue;
        node->branch_prob[v] = p_value_from(cnt, total, arity, est.mode());
        node->children[v] = build_optimal(ctx, s.with(action.index, v), parts[v]);
    }
    return node;
}

}  // namespace

OracleResult brute_force_optimal(const ProbEstimator& est, const CostModel& cost,
                                 int max_tests) {
    int usable = 0;
    for (const auto& a : est.data().attrs)
        if (a.usable) ++usable;
    if (usable > max_tests)
        throw ConfigError("exhaustive enumeration refused: " + std::to_string(usable) +
                          " tests exceed the guard of " + std::to_string(max_tests));

    OracleContext ctx{&est, &cost, {}};
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    OracleResult out;
    out.v_star = solve(ctx, State{}, all);
    out.policy = build_optimal(ctx, State{}, all);
    policy_value(*out.policy, est, cost);
    return out;
}

}  // namespace costdiag
