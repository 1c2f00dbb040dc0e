#pragma once

#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "costdiag/mdp.hpp"

namespace costdiag {

/// One node of a diagnostic policy. Leaves carry a diagnosis action,
/// internal nodes a measurement with one child per observed outcome value.
struct PolicyNode {
    State state;
    Action action;
    std::map<int, std::unique_ptr<PolicyNode>> children;  // outcome value -> subtree
    std::map<int, double> branch_prob;                    // outcome value -> P(x=v|s)
    double value = 0.0;                                   // V^pi(state)
    long support = 0;                                     // matching training examples
    int fallback_diag = 0;  // diagnosis made here when an outcome has no branch

    bool is_leaf() const { return action.kind == Action::Diagnose; }
};

using PolicyPtr = std::unique_ptr<PolicyNode>;

PolicyPtr make_leaf(const State& s, int diagnosis);
PolicyPtr make_measure(const State& s, int attr);
PolicyPtr clone_policy(const PolicyNode& root);

long node_count(const PolicyNode& root);
long internal_node_count(const PolicyNode& root);
/// True when every node of `sub` appears (same state, same split structure
/// above it) in `full`; post-pruned policies are contractions of their input.
bool is_contraction_of(const PolicyNode& sub, const PolicyNode& full);

struct TraceStep {
    Action action;
    int observed = 0;  // measured value, or chosen class for the diagnose step
    double cost = 0.0;
};

struct Trace {
    std::vector<TraceStep> steps;
    double total = 0.0;
    bool fallback = false;  // an unseen outcome forced a diagnose-here
};

/// Bellman sweep: recomputes branch probabilities, supports and node values
/// from the estimator in one pass and returns V^pi(s0).
double policy_value(PolicyNode& root, const ProbEstimator& est, const CostModel& cost);

Trace execute(const PolicyNode& root, const Example& ex, const CostModel& cost);

struct EvalResult {
    double v_test = 0.0;
    std::vector<double> per_example;
};

EvalResult evaluate(const PolicyNode& root, std::span<const Example> testset,
                    const CostModel& cost);

Action step(const PolicyNode& root, std::span<const std::pair<int, int>> answers);

struct PolicyFile {
    PolicyPtr root;
    std::string fingerprint;
    std::vector<std::string> attr_names;
    std::vector<int> attr_arity;
    std::vector<std::string> class_names;
};

std::string serialize(const PolicyNode& root, const CostModel& cost, const Dataset& schema);
PolicyFile deserialize(const std::string& text);

}  // namespace costdiag
