#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <unordered_map>

#include "costdiag/policy.hpp"

namespace costdiag {

/// OR node: a knowledge state with optimistic and realistic values/policies.
/// Only the single cheapest diagnosis action is materialized (as a terminal
/// AND child); measurement actions get one AND child each.
struct OrNode {
    State state;
    std::vector<int> rows;  // matching training example indices
    ClassCounts counts;
    int fbest = 0;          // argmin_k C(s, f_k)
    double c_fbest = 0.0;   // C(s, f_best)
    double v_opt = 0.0;
    double v_real = 0.0;
    Action pi_opt;
    Action pi_real;
    std::vector<int> and_children;  // first entry is the diagnosis child
    std::vector<int> parents;       // AND nodes with an edge into this state
    long order = 0;                 // creation counter, used for tie-breaks
};

/// AND node (s, a). Diagnosis children are terminal and always "expanded";
/// measurement children hold the outcome distribution and, once expanded,
/// one OR child per outcome.
struct AndNode {
    int parent_or = -1;
    Action action;
    bool expanded = false;
    bool pruned = false;  // removed from A(s) by statistical pruning
    double q_opt = 0.0;
    double q_real = std::numeric_limits<double>::quiet_NaN();  // absent unless expanded
    std::vector<int> outcome_values;
    std::vector<double> outcome_prob;
    std::vector<int> children;  // OR ids, parallel to outcome_values once expanded
};

struct SearchStats {
    long iterations = 0;
    long expansions = 0;
    long sp_prunes = 0;
    long heuristic_cutoffs = 0;
    long or_nodes = 0;
    long and_nodes = 0;
    long long bytes = 0;
    bool converged = false;
    bool hit_memory_limit = false;
};

struct AnytimeRecord {
    long iter = 0;
    double v_real_train = 0.0;
    double v_opt_train = 0.0;
    std::optional<double> v_test;
    long nodes = 0;  // OR + AND nodes in the graph
    long long bytes = 0;
};

class AndOrGraph;
enum class SpDecision { Keep, Prune };

struct SearchConfig {
    long long memory_limit_bytes = 100ll * 1024 * 1024;
    bool use_heuristic = true;
    uint64_t seed = 0;
    // When set, every anytime record also carries V_test of pi_real on this set.
    std::span<const Example> eval_set;
    // Statistical pruning hook; consulted before each expansion with the
    // selected OR node. Installed by make_sp_hook (regularize.hpp).
    std::function<SpDecision(AndOrGraph&, int or_id)> sp_hook;
    // Called after every iteration; early stopping snapshots pi_real here.
    std::function<void(const AndOrGraph&, const AnytimeRecord&)> on_iteration;
};

class AndOrGraph {
public:
    AndOrGraph(const ProbEstimator& est, const CostModel& cost, bool use_heuristic);

    const ProbEstimator& estimator() const { return *est_; }
    const CostModel& cost_model() const { return *cost_; }

    int root() const { return root_; }
    const OrNode& or_at(int id) const { return ors_[id]; }
    const AndNode& and_at(int id) const { return ands_[id]; }
    long or_count() const { return static_cast<long>(ors_.size()); }
    long and_count() const { return static_cast<long>(ands_.size()); }
    long long bytes() const { return bytes_; }

    /// Unexpanded AND node on the optimistic policy with the largest
    /// [v_real - v_opt] * P_reach; nullopt when pi_opt is complete.
    std::optional<int> select_expansion() const;

    /// Creates the children OR nodes of an AND node. Under ML only outcomes
    /// with matching examples become children; under Laplace all arity values
    /// do. Shared states are reused.
    void expand(int and_id);

    /// Bottom-up update of Q/V/pi (optimistic and realistic) from this AND
    /// node through all ancestors, iterated to a fixed point.
    void backup(int and_id);

    /// Statistical pruning: delete the action from A(s) and update the
    /// optimistic side. The realistic side is untouched by construction.
    void prune_and(int and_id);

    /// Realistic per-example diagnosis totals for the training rows matching
    /// an OR node, executing pi_real from that node.
    std::vector<double> realistic_costs_from(int or_id) const;

    PolicyPtr extract_policy() const;

    long count_heuristic_cutoffs() const;

private:
    int intern_or(const State& s, std::vector<int> rows);
    int make_and(int parent_or, const Action& a);
    void recompute_and(int and_id);
    void recompute_or(int or_id, bool& values_changed);
    double h_opt_rows(const State& s, std::span<const int> rows) const;
    double q_opt_unexpanded_rows(const State& s, int attr, std::span<const int> rows,
                                 std::vector<int>* values, std::vector<double>* probs,
                                 std::vector<std::vector<int>>* parts) const;

    const ProbEstimator* est_;
    const CostModel* cost_;
    bool use_heuristic_;
    int root_ = -1;
    std::vector<OrNode> ors_;
    std::vector<AndNode> ands_;
    std::unordered_map<State, int, StateHash> index_;
    long long bytes_ = 0;
    long order_counter_ = 0;

    friend struct GraphTestPeer;
};

// Admissible heuristic pieces, exposed for direct testing. h_opt(s) is the
// minimum over C(s, f_best) and the cost of each remaining test.
double h_opt(const ProbEstimator& est, const CostModel& cost, const State& s);
double q_opt_unexpanded(const ProbEstimator& est, const CostModel& cost, const State& s,
                        int attr);

struct AoResult {
    PolicyPtr policy;
    std::vector<AnytimeRecord> log;
    SearchStats stats;
};

/// AO* main loop: select -> (optional SP check) -> expand -> backup, until
/// the optimistic policy has no unexpanded nodes or memory runs out.
AoResult run_ao(const ProbEstimator& est, const CostModel& cost, const SearchConfig& config);

}  // namespace costdiag
