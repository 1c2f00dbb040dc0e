#include "costdiag/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <sstream>

namespace costdiag {

bool State::has(int attr) const {
    for (const auto& [a, v] : observed)
        if (a == attr) return true;
    return false;
}

int State::value_of(int attr) const {
    for (const auto& [a, v] : observed)
        if (a == attr) return v;
    return -1;
}

State State::with(int attr, int value) const {
    State s = *this;
    auto it = std::lower_bound(s.observed.begin(), s.observed.end(),
                               std::make_pair(attr, value));
    if (it != s.observed.end() && it->first == attr)
        throw Error("attribute " + std::to_string(attr) + " already observed");
    s.observed.insert(it, {attr, value});
    return s;
}

std::string State::key() const {
    std::ostringstream out;
    for (size_t i = 0; i < observed.size(); ++i) {
        if (i) out << ",";
        out << observed[i].first << "=" << observed[i].second;
    }
    return out.str();
}

size_t StateHash::operator()(const State& s) const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& [a, v] : s.observed) {
        h = (h ^ static_cast<uint64_t>(a)) * 0x100000001b3ULL;
        h = (h ^ static_cast<uint64_t>(v)) * 0x100000001b3ULL;
    }
    return static_cast<size_t>(h);
}

std::string action_str(const Action& a) {
    return (a.kind == Action::Diagnose ? "diagnose:" : "measure:") + std::to_string(a.index);
}

double CostModel::total_measure_cost() const {
    double s = 0;
    for (double c : measure_cost) s += c;
    return s;
}

std::string CostModel::fingerprint() const {
    uint64_t h = 0xcbf29ce484222325ULL;
    auto mix = [&h](double x) {
        uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        h = (h ^ bits) * 0x100000001b3ULL;
    };
    mix(static_cast<double>(measure_cost.size()));
    for (double c : measure_cost) mix(c);
    mix(static_cast<double>(mc.classes()));
    for (const auto& row : mc.cost)
        for (double c : row) mix(c);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

CostModel make_cost_model(const Dataset& ds, const MCMatrix& mc) {
    if (mc.classes() != ds.num_classes)
        throw ConfigError("MC matrix is " + std::to_string(mc.classes()) + "x" +
                          std::to_string(mc.classes()) + " but dataset has " +
                          std::to_string(ds.num_classes) + " classes");
    CostModel cm;
    cm.mc = mc;
    for (const auto& a : ds.attrs) cm.measure_cost.push_back(a.cost);
    return cm;
}

double p_value_from(long count_sv, long count_s, int arity, Smoothing mode) {
    if (mode == Smoothing::Laplace)
        return (count_sv + 1.0) / (count_s + static_cast<double>(arity));
    if (count_s == 0)
        throw Error("maximum-likelihood estimate undefined: no examples match the state");
    return static_cast<double>(count_sv) / count_s;
}

double p_class_from(long count_sy, long count_s, int num_classes, Smoothing mode) {
    if (mode == Smoothing::Laplace)
        return (count_sy + 1.0) / (count_s + static_cast<double>(num_classes));
    if (count_s == 0)
        throw Error("maximum-likelihood estimate undefined: no examples match the state");
    return static_cast<double>(count_sy) / count_s;
}

double diag_cost_from(const ClassCounts& counts, const CostModel& cost, int k, Smoothing mode) {
    double total = 0;
    int num_classes = cost.mc.classes();
    for (int y = 0; y < num_classes; ++y)
        total += p_class_from(counts.per_class[y], counts.total, num_classes, mode) *
                 cost.mc.at(k, y);
    return total;
}

std::pair<int, double> best_diagnosis_from(const ClassCounts& counts, const CostModel& cost,
                                           Smoothing mode) {
    int best = 0;
    double best_cost = diag_cost_from(counts, cost, 0, mode);
    for (int k = 1; k < cost.mc.classes(); ++k) {
        double c = diag_cost_from(counts, cost, k, mode);
        if (c < best_cost) {  // ties keep the smallest class index
            best_cost = c;
            best = k;
        }
    }
    return {best, best_cost};
}

ProbEstimator::ProbEstimator(const Dataset& ds, Smoothing mode) : ds_(&ds), mode_(mode) {
    if (ds.num_classes < 2) throw ConfigError("estimator needs at least 2 classes");
}

std::vector<int> ProbEstimator::match_indices(const State& s) const {
    std::vector<int> out;
    for (int i = 0; i < ds_->size(); ++i) {
        const auto& vals = ds_->examples[i].values;
        bool ok = true;
        for (const auto& [a, v] : s.observed)
            if (vals[a] != v) { ok = false; break; }
        if (ok) out.push_back(i);
    }
    return out;
}

ClassCounts ProbEstimator::match_count(const State& s) const {
    ClassCounts c;
    c.per_class.assign(ds_->num_classes, 0);
    for (const auto& ex : ds_->examples) {
        bool ok = true;
        for (const auto& [a, v] : s.observed)
            if (ex.values[a] != v) { ok = false; break; }
        if (ok) {
            ++c.total;
            ++c.per_class[ex.label];
        }
    }
    return c;
}

ClassCounts ProbEstimator::class_counts(std::span<const int> rows) const {
    ClassCounts c;
    c.total = static_cast<long>(rows.size());
    c.per_class.assign(ds_->num_classes, 0);
    for (int i : rows) ++c.per_class[ds_->examples[i].label];
    return c;
}

std::vector<std::vector<int>> ProbEstimator::partition(std::span<const int> rows, int attr) const {
    std::vector<std::vector<int>> parts(ds_->attrs[attr].arity);
    for (int i : rows) parts[ds_->examples[i].values[attr]].push_back(i);
    return parts;
}

double ProbEstimator::p_value(int attr, int v, const State& s) const {
    if (s.has(attr)) throw Error("attribute " + std::to_string(attr) + " already observed");
    long count_s = 0, count_sv = 0;
    for (const auto& ex : ds_->examples) {
        bool ok = true;
        for (const auto& [a, w] : s.observed)
            if (ex.values[a] != w) { ok = false; break; }
        if (!ok) continue;
        ++count_s;
        if (ex.values[attr] == v) ++count_sv;
    }
    return p_value_from(count_sv, count_s, ds_->attrs[attr].arity, mode_);
}

double ProbEstimator::p_class(int y, const State& s) const {
    ClassCounts c = match_count(s);
    return p_class_from(c.per_class[y], c.total, ds_->num_classes, mode_);
}

double ProbEstimator::diag_cost(const CostModel& cost, const State& s, int k) const {
    return diag_cost_from(match_count(s), cost, k, mode_);
}

std::pair<int, double> ProbEstimator::best_diagnosis(const CostModel& cost, const State& s) const {
    return best_diagnosis_from(match_count(s), cost, mode_);
}

}  // namespace costdiag
