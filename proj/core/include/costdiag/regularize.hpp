#pragma once

#include "costdiag/ao.hpp"

namespace costdiag {

struct SpConfig {
    double confidence = 0.95;
    long min_support = 2;
};

/// Statistical pruning check at an OR node whose optimistic action was just
/// selected for expansion. Builds a normal confidence interval from the
/// per-example realistic totals (centered at the sample mean under ML, at
/// V_real(s) under Laplace); if v_opt(s) falls inside, the action is deleted
/// from A(s) and the optimistic values are backed up. States with fewer than
/// min_support matching examples are pruned outright.
SpDecision sp_check(AndOrGraph& graph, int or_id, const SpConfig& cfg);

std::function<SpDecision(AndOrGraph&, int)> make_sp_hook(const SpConfig& cfg);

struct EsResult {
    PolicyPtr policy;
    long best_iter = 0;
    double best_holdout_cost = 0.0;
    double converged_holdout_cost = 0.0;
    std::vector<AnytimeRecord> log;
    SearchStats stats;
};

/// Early stopping: stratified half split of the training data, AO* on the
/// subtraining half, and the realistic policy with the lowest holdout cost
/// (earliest iteration on ties) is returned.
EsResult run_es(const Dataset& train, const CostModel& cost, Smoothing mode,
                SearchConfig config, uint64_t split_seed);

/// Pessimistic post-pruning of a complete policy using upper confidence
/// limits on subtree misdiagnosis costs. Laplace mode adds one virtual
/// example per diagnosis to each leaf sample.
PolicyPtr ppp_ao(PolicyPtr policy, const ProbEstimator& est, const CostModel& cost,
                 double confidence = 0.95);

// Upper limit of a normal confidence interval for the mean of a sample;
// width 0 when fewer than two values.
double normal_upper_limit(std::span<const double> sample, double confidence);
double normal_z(double confidence);  // two-sided critical value

}  // namespace costdiag
