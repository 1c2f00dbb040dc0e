#pragma once

#include <map>
#include <tuple>

#include "costdiag/policy.hpp"

namespace costdiag {

enum class CompResult { Win, Tie, Loss };

std::string comp_result_str(CompResult r);

struct ComparisonOutcome {
    CompResult result = CompResult::Tie;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    int resamples = 0;
};

/// Paired percentile bootstrap on per-example cost differences c1 - c2.
/// Win means c1 is cheaper (CI entirely below zero). Resample indices are
/// drawn once from the seed, so swapping the arguments mirrors the outcome
/// exactly.
ComparisonOutcome bdeltacost(std::span<const double> c1, std::span<const double> c2,
                             int resamples = 1000, double confidence = 0.95,
                             uint64_t seed = 0);

struct GameRecord {
    std::string alg1, alg2, domain;
    CompResult result = CompResult::Tie;
};

struct PairScore {
    long wins = 0, ties = 0, losses = 0;
    double score() const { return wins + 0.5 * ties; }
    long games() const { return wins + ties + losses; }
};

struct ChessTable {
    // Ordered pair scores: (alg1, alg2, domain) -> record of alg1 vs alg2.
    std::map<std::tuple<std::string, std::string, std::string>, PairScore> pairs;
    // (alg, domain) -> summed score against all opponents, and games played.
    std::map<std::pair<std::string, std::string>, double> overall;
    std::map<std::pair<std::string, std::string>, long> games;

    double tie_score(const std::string& alg, const std::string& domain) const;
};

ChessTable chess_scores(const std::vector<GameRecord>& outcomes);

struct OracleResult {
    double v_star = 0.0;
    PolicyPtr policy;
};

/// Exhaustive optimal policy by memoized depth-first enumeration over all
/// reachable states; the independent reference for the search algorithms.
OracleResult brute_force_optimal(const ProbEstimator& est, const CostModel& cost,
                                 int max_tests = 4);

}  // namespace costdiag
