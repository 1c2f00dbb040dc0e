#include "costdiag/ao.hpp"

#include <algorithm>
#include <cassert>
#include <deque>

namespace costdiag {

namespace {

// Memory accounting for the "optimized data structure" budget: fixed
// per-node footprints so the limit is reproducible across runs.
constexpr long long kOrNodeBytes = 64;
constexpr long long kPerActionBytes = 8;
constexpr long long kAndNodeBytes = 48;
constexpr long long kPerOutcomeBytes = 16;

}  // namespace

AndOrGraph::AndOrGraph(const ProbEstimator& est, const CostModel& cost, bool use_heuristic)
    : est_(&est), cost_(&cost), use_heuristic_(use_heuristic) {
    std::vector<int> all(est.data().size());
    for (int i = 0; i < est.data().size(); ++i) all[i] = i;
    root_ = intern_or(State{}, std::move(all));
}

// h_opt(s): minimum over the cost of diagnosing now and the bare cost of
// each remaining test. Admissible because any policy pays at least one more
// action before terminating.
double AndOrGraph::h_opt_rows(const State& s, std::span<const int> rows) const {
    ClassCounts counts = est_->class_counts(rows);
    double best = best_diagnosis_from(counts, *cost_, est_->mode()).second;
    const auto& attrs = est_->data().attrs;
    for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
        if (!attrs[a].usable || s.has(a)) continue;
        best = std::min(best, cost_->measure_cost[a]);
    }
    return best;
}

double AndOrGraph::q_opt_unexpanded_rows(const State& s, int attr, std::span<const int> rows,
                                         std::vector<int>* values, std::vector<double>* probs,
                                         std::vector<std::vector<int>>* parts_out) const {
    auto parts = est_->partition(rows, attr);
    int arity = est_->arity(attr);
    long total = static_cast<long>(rows.size());
    double q = cost_->measure_cost[attr];
    for (int v = 0; v < arity; ++v) {
        long cnt = static_cast<long>(parts[v].size());
        if (est_->mode() == Smoothing::ML && cnt == 0) continue;  // zero-probability branch
        double p = p_value_from(cnt, total, arity, est_->mode());
        if (values) values->push_back(v);
        if (probs) probs->push_back(p);
        if (use_heuristic_) q += p * h_opt_rows(s.with(attr, v), parts[v]);
    }
    if (!use_heuristic_) q = 0.0;  // ablation: every unexpanded node scores zero
    if (parts_out) *parts_out = std::move(parts);
    return q;
}

int AndOrGraph::intern_or(const State& s, std::vector<int> rows) {
    int id = static_cast<int>(ors_.size());
    ors_.push_back(OrNode{});
    OrNode& node = ors_.back();
    node.state = s;
    node.rows = std::move(rows);
    node.counts = est_->class_counts(node.rows);
    node.order = order_counter_++;
    auto [fb, c_fb] = best_diagnosis_from(node.counts, *cost_, est_->mode());
    node.fbest = fb;
    node.c_fbest = c_fb;
    index_[s] = id;

    // the single cheapest diagnosis action is materialized immediately
    int diag = make_and(id, Action::diagnose(fb));
    ands_[diag].expanded = true;
    ands_[diag].q_opt = c_fb;
    ands_[diag].q_real = c_fb;
    node.and_children.push_back(diag);

    const auto& attrs = est_->data().attrs;
    for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
        if (!attrs[a].usable || s.has(a)) continue;
        int and_id = make_and(id, Action::measure(a));
        AndNode& child = ands_[and_id];
        child.q_opt = q_opt_unexpanded_rows(s, a, ors_[id].rows, &child.outcome_values,
                                            &child.outcome_prob, nullptr);
        bytes_ += kPerOutcomeBytes * static_cast<long long>(child.outcome_values.size());
        ors_[id].and_children.push_back(and_id);
    }

    OrNode& done = ors_[id];
    bytes_ += kOrNodeBytes + kPerActionBytes * static_cast<long long>(done.and_children.size());
    done.v_real = done.c_fbest;
    done.pi_real = Action::diagnose(done.fbest);
    bool dummy = false;
    recompute_or(id, dummy);
    return id;
}

int AndOrGraph::make_and(int parent_or, const Action& a) {
    int id = static_cast<int>(ands_.size());
    ands_.push_back(AndNode{});
    ands_[id].parent_or = parent_or;
    ands_[id].action = a;
    bytes_ += kAndNodeBytes;
    return id;
}

void AndOrGraph::expand(int and_id) {
    // copy what we need up front: intern_or reallocates both node vectors
    if (ands_[and_id].expanded || ands_[and_id].pruned ||
        ands_[and_id].action.kind != Action::Measure)
        throw Error("expand called on a non-expandable AND node");
    const int attr = ands_[and_id].action.index;
    const State parent_state = ors_[ands_[and_id].parent_or].state;
    auto parts = est_->partition(ors_[ands_[and_id].parent_or].rows, attr);
    const std::vector<int> values = ands_[and_id].outcome_values;
    ands_[and_id].children.resize(values.size());
    for (size_t i = 0; i < values.size(); ++i) {
        int v = values[i];
        State child_state = parent_state.with(attr, v);
        auto it = index_.find(child_state);
        int child_id;
        if (it != index_.end()) {
            child_id = it->second;  // shared state reached via another test order
        } else {
            child_id = intern_or(child_state, std::move(parts[v]));
        }
        ands_[and_id].children[i] = child_id;
        ors_[child_id].parents.push_back(and_id);
    }
    ands_[and_id].expanded = true;
}

void AndOrGraph::recompute_and(int and_id) {
    AndNode& node = ands_[and_id];
    if (node.action.kind == Action::Diagnose || !node.expanded) return;
    double q_opt = cost_->measure_cost[node.action.index];
    double q_real = q_opt;
    for (size_t i = 0; i < node.children.size(); ++i) {
        q_opt += node.outcome_prob[i] * ors_[node.children[i]].v_opt;
        q_real += node.outcome_prob[i] * ors_[node.children[i]].v_real;
    }
    node.q_opt = q_opt;
    node.q_real = q_real;
}

void AndOrGraph::recompute_or(int or_id, bool& values_changed) {
    OrNode& node = ors_[or_id];
    double v_opt = std::numeric_limits<double>::infinity();
    double v_real = std::numeric_limits<double>::infinity();
    Action pi_opt = Action::diagnose(node.fbest);
    Action pi_real = pi_opt;
    // children are ordered diagnosis-first, then tests ascending, which is
    // exactly the global tie-break order: strict < keeps the first minimum
    for (int and_id : node.and_children) {
        const AndNode& a = ands_[and_id];
        if (a.pruned) continue;
        if (a.q_opt < v_opt) {
            v_opt = a.q_opt;
            pi_opt = a.action;
        }
        if (a.expanded && a.q_real < v_real) {
            v_real = a.q_real;
            pi_real = a.action;
        }
    }
    values_changed = v_opt != node.v_opt || v_real != node.v_real;
    node.v_opt = v_opt;
    node.v_real = v_real;
    node.pi_opt = pi_opt;
    node.pi_real = pi_real;
}

void AndOrGraph::backup(int and_id) {
    std::deque<int> queue{and_id};
    std::vector<char> queued(ands_.size(), 0);
    queued[and_id] = 1;
    while (!queue.empty()) {
        int a = queue.front();
        queue.pop_front();
        queued[a] = 0;
        recompute_and(a);
        bool changed = false;
        int parent = ands_[a].parent_or;
        recompute_or(parent, changed);
        if (!changed) continue;
        for (int p : ors_[parent].parents) {
            if (queued[p]) continue;
            queued[p] = 1;
            queue.push_back(p);
        }
    }
}

void AndOrGraph::prune_and(int and_id) {
    ands_[and_id].pruned = true;
    backup(and_id);
}

std::optional<int> AndOrGraph::select_expansion() const {
    struct Candidate {
        int and_id = -1;
        double priority = 0;
        long order = 0;
    };
    Candidate best;
    // Depth-first walk of the optimistic policy tree; a state appears at
    // most once on it, so the reach probability is a simple path product.
    struct Frame {
        int or_id;
        double reach;
    };
    std::vector<Frame> stack{{root_, 1.0}};
    while (!stack.empty()) {
        auto [or_id, reach] = stack.back();
        stack.pop_back();
        const OrNode& node = ors_[or_id];
        if (node.pi_opt.kind == Action::Diagnose) continue;
        int and_id = -1;
        for (int c : node.and_children)
            if (ands_[c].action == node.pi_opt) { and_id = c; break; }
        assert(and_id >= 0);
        const AndNode& a = ands_[and_id];
        if (!a.expanded) {
            double priority = (node.v_real - node.v_opt) * reach;
            if (best.and_id < 0 || priority > best.priority ||
                (priority == best.priority && node.order < best.order)) {
                best = {and_id, priority, node.order};
            }
            continue;
        }
        for (size_t i = 0; i < a.children.size(); ++i)
            stack.push_back({a.children[i], reach * a.outcome_prob[i]});
    }
    if (best.and_id < 0) return std::nullopt;
    return best.and_id;
}

std::vector<double> AndOrGraph::realistic_costs_from(int or_id) const {
    std::vector<double> totals;
    totals.reserve(ors_[or_id].rows.size());
    for (int row : ors_[or_id].rows) {
        const Example& ex = est_->data().examples[row];
        int cur = or_id;
        double total = 0;
        while (true) {
            const OrNode& node = ors_[cur];
            if (node.pi_real.kind == Action::Diagnose) {
                total += cost_->mc.at(node.pi_real.index, ex.label);
                break;
            }
            int attr = node.pi_real.index;
            total += cost_->measure_cost[attr];
            const AndNode* chosen = nullptr;
            for (int c : node.and_children)
                if (ands_[c].action == node.pi_real) { chosen = &ands_[c]; break; }
            assert(chosen && chosen->expanded);
            int v = ex.values[attr];
            int next = -1;
            for (size_t i = 0; i < chosen->outcome_values.size(); ++i)
                if (chosen->outcome_values[i] == v) { next = chosen->children[i]; break; }
            assert(next >= 0);  // the example matches, so its branch exists
            cur = next;
        }
        totals.push_back(total);
    }
    return totals;
}

namespace {

PolicyPtr extract_from(const AndOrGraph& g, int or_id) {
    const OrNode& node = g.or_at(or_id);
    PolicyPtr out;
    if (node.pi_real.kind == Action::Diagnose) {
        out = make_leaf(node.state, node.pi_real.index);
    } else {
        out = make_measure(node.state, node.pi_real.index);
        const AndNode* chosen = nullptr;
        for (int c : node.and_children)
            if (g.and_at(c).action == node.pi_real) { chosen = &g.and_at(c); break; }
        for (size_t i = 0; i < chosen->outcome_values.size(); ++i) {
            int v = chosen->outcome_values[i];
            out->children[v] = extract_from(g, chosen->children[i]);
            out->branch_prob[v] = chosen->outcome_prob[i];
        }
    }
    out->value = node.v_real;
    out->support = node.counts.total;
    out->fallback_diag = node.fbest;
    return out;
}

}  // namespace

PolicyPtr AndOrGraph::extract_policy() const { return extract_from(*this, root_); }

long AndOrGraph::count_heuristic_cutoffs() const {
    long cutoffs = 0;
    for (const auto& node : ors_) {
        for (int c : node.and_children) {
            const AndNode& a = ands_[c];
            if (a.action.kind != Action::Measure || a.expanded || a.pruned) continue;
            if (node.v_real < a.q_opt) ++cutoffs;
        }
    }
    return cutoffs;
}

double h_opt(const ProbEstimator& est, const CostModel& cost, const State& s) {
    ClassCounts counts = est.match_count(s);
    double best = best_diagnosis_from(counts, cost, est.mode()).second;
    const auto& attrs = est.data().attrs;
    for (int a = 0; a < static_cast<int>(attrs.size()); ++a) {
        if (!attrs[a].usable || s.has(a)) continue;
        best = std::min(best, cost.measure_cost[a]);
    }
    return best;
}

double q_opt_unexpanded(const ProbEstimator& est, const CostModel& cost, const State& s,
                        int attr) {
    if (s.has(attr)) throw Error("attribute already measured");
    auto rows = est.match_indices(s);
    auto parts = est.partition(rows, attr);
    int arity = est.arity(attr);
    double q = cost.measure_cost[attr];
    for (int v = 0; v < arity; ++v) {
        long cnt = static_cast<long>(parts[v].size());
        if (est.mode() == Smoothing::ML && cnt == 0) continue;
        double p = p_value_from(cnt, static_cast<long>(rows.size()), arity, est.mode());
        q += p * h_opt(est, cost, s.with(attr, v));
    }
    return q;
}

AoResult run_ao(const ProbEstimator& est, const CostModel& cost, const SearchConfig& config) {
    AoResult res;
    AndOrGraph graph(est, cost, config.use_heuristic);

    auto emit = [&](long iter) {
        const OrNode& root = graph.or_at(graph.root());
        AnytimeRecord rec;
        rec.iter = iter;
        rec.v_real_train = root.v_real;
        rec.v_opt_train = root.v_opt;
        rec.nodes = graph.or_count() + graph.and_count();
        rec.bytes = graph.bytes();
        if (!config.eval_set.empty()) {
            auto policy = graph.extract_policy();
            rec.v_test = evaluate(*policy, config.eval_set, cost).v_test;
        }
        res.log.push_back(rec);
        if (config.on_iteration) config.on_iteration(graph, rec);
    };

    emit(0);
    long iter = 0;
    while (true) {
        auto selected = graph.select_expansion();
        if (!selected) {
            res.stats.converged = true;
            break;
        }
        if (graph.bytes() >= config.memory_limit_bytes) {
            res.stats.hit_memory_limit = true;  // current realistic policy is the result
            break;
        }
        ++iter;
        int and_id = *selected;
        int or_id = graph.and_at(and_id).parent_or;
        if (config.sp_hook && config.sp_hook(graph, or_id) == SpDecision::Prune) {
            ++res.stats.sp_prunes;
        } else {
            graph.expand(and_id);
            ++res.stats.expansions;
            graph.backup(and_id);
        }
        emit(iter);
    }

    res.stats.iterations = iter;
    res.stats.or_nodes = graph.or_count();
    res.stats.and_nodes = graph.and_count();
    res.stats.bytes = graph.bytes();
    res.stats.heuristic_cutoffs = graph.count_heuristic_cutoffs();
    res.policy = graph.extract_policy();
    return res;
}

}  // namespace costdiag
