#pragma once

#include "costdiag/policy.hpp"

namespace costdiag {

enum class GreedyVariant { Norton, McNorton, Voi };

struct GreedyConfig {
    GreedyVariant variant = GreedyVariant::Norton;
    bool laplace = false;
    long min_support = 2;
    double z_c = 1.15;  // 75% normal critical value, C4.5 pruning
    bool voi_min_support = true;
};

double entropy(std::span<const double> dist);

/// Conditional mutual information I(x; y | s) in bits, always from raw ML
/// counts regardless of the estimator mode.
double info_gain(const ProbEstimator& est, const State& s, int attr);

double norton_score(const ProbEstimator& est, const CostModel& cost, const State& s, int attr);

/// Expected cost of measuring x and then diagnosing at minimum expected cost
/// in every resulting state; probabilities follow the estimator mode.
double one_step_la(const ProbEstimator& est, const CostModel& cost, const State& s, int attr);
double one_step_voi(const ProbEstimator& est, const CostModel& cost, const State& s, int attr);

/// The greedy template: stopping condition, action selection and leaf
/// diagnosis per variant, followed by the variant's post-pruning (C4.5
/// pessimistic pruning for Norton, total-cost pruning for MC+Norton, none
/// for VOI).
PolicyPtr grow_greedy(const ProbEstimator& est, const CostModel& cost, const GreedyConfig& cfg);

/// Growth phase only, before post-pruning.
PolicyPtr grow_greedy_raw(const ProbEstimator& est, const CostModel& cost,
                          const GreedyConfig& cfg);

double c45_upper_bound(long n, double p, double z);

PolicyPtr c45_ppp(PolicyPtr policy, const ProbEstimator& est, const GreedyConfig& cfg);

PolicyPtr total_cost_prune(PolicyPtr policy, const ProbEstimator& est, const CostModel& cost,
                           bool laplace);

}  // namespace costdiag
