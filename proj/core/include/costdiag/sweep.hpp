#pragma once

#include <filesystem>

#include "costdiag/eval.hpp"
#include "costdiag/regularize.hpp"

namespace costdiag {

// The 14 algorithm names: Nor, MC-N, VOI, AO*, SP, ES, PPP and their
// Laplace-corrected "-L" versions.
const std::vector<std::string>& algorithm_names();
bool is_valid_algorithm(const std::string& name);
bool is_systematic(const std::string& name);
bool is_laplace(const std::string& name);

struct TrainOptions {
    long long memory_limit_bytes = 100ll * 1024 * 1024;
    bool use_heuristic = true;
    bool voi_min_support = true;
    std::span<const Example> anytime_eval;
};

struct TrainResult {
    PolicyPtr policy;
    SearchStats stats;              // zeros for greedy algorithms
    std::vector<AnytimeRecord> log; // empty for greedy algorithms
};

TrainResult train_algorithm(const std::string& name, const Dataset& train,
                            const CostModel& cost, uint64_t seed, const TrainOptions& opts);

struct SweepDomain {
    std::string name;
    Dataset data;
    std::vector<Replica> replicas;
    std::vector<MCMatrix> mc_by_level;  // indexed by level - 1
};

struct SweepSpec {
    std::vector<SweepDomain> domains;
    std::vector<std::string> algorithms;
    std::vector<int> levels;       // subset of 1..5
    std::vector<int> replica_ids;  // empty = all replicas of each domain
    uint64_t seed = 0;
    int resamples = 1000;
    double confidence = 0.95;
    int jobs = 1;
    TrainOptions train_opts;
    std::filesystem::path out_dir;
    bool write_anytime = true;
};

struct SweepOutcome {
    long runs = 0;
    long failures = 0;
    long comparisons = 0;
};

/// Full evaluation harness: trains every (domain, level, replica, algorithm)
/// cell on a bounded worker pool, compares algorithms pairwise with the
/// bootstrap test, and writes summary.csv, chess.csv, pairs/memory/cpu CSVs
/// and per-run anytime logs under out_dir.
SweepOutcome run_sweep(const SweepSpec& spec);

}  // namespace costdiag
