#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "costdiag/data.hpp"

namespace costdiag {

/// Knowledge state: the set of attribute=value pairs observed so far, kept
/// sorted by attribute index. The empty state is the start state s0.
struct State {
    std::vector<std::pair<int, int>> observed;

    bool empty() const { return observed.empty(); }
    bool has(int attr) const;
    int value_of(int attr) const;  // -1 when unobserved
    State with(int attr, int value) const;
    std::string key() const;

    bool operator==(const State& o) const { return observed == o.observed; }
};

struct StateHash {
    size_t operator()(const State& s) const;
};

struct Action {
    enum Kind { Diagnose, Measure };
    Kind kind = Diagnose;
    int index = 0;

    static Action diagnose(int k) { return {Diagnose, k}; }
    static Action measure(int n) { return {Measure, n}; }
    bool operator==(const Action& o) const { return kind == o.kind && index == o.index; }
};

// Total order used for every argmin tie-break in the toolkit:
// Diagnose(0..K-1) first, then Measure(0..N-1), each by ascending index.
inline int action_rank(const Action& a, int num_classes) {
    return a.kind == Action::Diagnose ? a.index : num_classes + a.index;
}

std::string action_str(const Action& a);

struct CostModel {
    std::vector<double> measure_cost;  // C(x_n), per attribute
    MCMatrix mc;

    double total_measure_cost() const;
    /// Stable hash of all cost constants; stored in policy files so a policy
    /// is never evaluated under a different cost model than it was built for.
    std::string fingerprint() const;
};

CostModel make_cost_model(const Dataset& ds, const MCMatrix& mc);

enum class Smoothing { ML, Laplace };

struct ClassCounts {
    long total = 0;
    std::vector<long> per_class;
};

// Probability estimates from explicit counts. ML on zero support is an
// error by contract; search code never queries it on zero-support states.
double p_value_from(long count_sv, long count_s, int arity, Smoothing mode);
double p_class_from(long count_sy, long count_s, int num_classes, Smoothing mode);
double diag_cost_from(const ClassCounts& counts, const CostModel& cost, int k, Smoothing mode);
std::pair<int, double> best_diagnosis_from(const ClassCounts& counts, const CostModel& cost,
                                           Smoothing mode);

/// Counting-based probability estimator over a training set. Immutable after
/// construction; all queries are plain scans or arithmetic over caller-held
/// index lists, so concurrent reads are safe.
class ProbEstimator {
public:
    ProbEstimator(const Dataset& ds, Smoothing mode);

    const Dataset& data() const { return *ds_; }
    Smoothing mode() const { return mode_; }
    int num_classes() const { return ds_->num_classes; }
    int arity(int attr) const { return ds_->attrs[attr].arity; }

    std::vector<int> match_indices(const State& s) const;
    ClassCounts match_count(const State& s) const;

    double p_value(int attr, int v, const State& s) const;
    double p_class(int y, const State& s) const;
    double diag_cost(const CostModel& cost, const State& s, int k) const;
    std::pair<int, double> best_diagnosis(const CostModel& cost, const State& s) const;

    // Index-flow helpers: identical semantics to full scans, restricted to
    // the rows that already match the enclosing state.
    ClassCounts class_counts(std::span<const int> rows) const;
    std::vector<std::vector<int>> partition(std::span<const int> rows, int attr) const;

private:
    const Dataset* ds_;
    Smoothing mode_;
};

}  // namespace costdiag
