#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "costdiag/common.hpp"

namespace costdiag {

/// Raw tabular data as read from disk: tokens, not codes.
struct RawDataset {
    std::vector<std::string> attribute_names;
    std::string class_name;
    std::vector<double> costs;                    // per attribute, parallel to names
    std::vector<std::vector<std::string>> rows;   // attribute tokens per row
    std::vector<std::string> labels;              // class token per row
};

struct AttributeMeta {
    std::string name;
    int arity = 0;
    double cost = 1.0;
    // Cut points for a discretized continuous attribute, ascending
    // (value 0: x <= t[0], value i: t[i-1] < x <= t[i], last: above).
    // Empty for categorical attributes.
    std::vector<double> thresholds;
    bool usable = true;  // false when arity < 2: cannot be measured
};

struct Example {
    std::vector<int> values;
    int label = 0;
};

struct Dataset {
    std::vector<AttributeMeta> attrs;
    std::vector<std::string> class_names;
    int num_classes = 0;
    std::vector<Example> examples;

    int num_attrs() const { return static_cast<int>(attrs.size()); }
    int size() const { return static_cast<int>(examples.size()); }
};

/// Misdiagnosis cost matrix: cost[k][y] = cost of predicting k when truth is y.
struct MCMatrix {
    int level = 0;  // 1..5 when built by build_mc_matrix, 0 for custom matrices
    std::vector<std::vector<double>> cost;

    int classes() const { return static_cast<int>(cost.size()); }
    double at(int k, int y) const { return cost[k][y]; }
    bool all_zero() const;
};

struct Replica {
    std::vector<int> train;
    std::vector<int> test;
    uint64_t seed = 0;
};

struct CleanResult {
    RawDataset data;
    int removed = 0;
};

// Multipliers for misdiagnosis levels MC1..MC5 relative to the base unit.
inline constexpr double kMcLevelMultiplier[5] = {0.5, 1.0, 2.0, 4.0, 8.0};

RawDataset load_dataset(const std::filesystem::path& csv_path,
                        const std::string& class_column,
                        const std::filesystem::path& cost_sidecar = {});

CleanResult clean(const RawDataset& raw,
                  const std::map<std::string, int>& class_merge,
                  const std::string& missing_token);

Dataset discretize(const RawDataset& raw, const std::set<std::string>& continuous_attrs);

std::vector<Replica> make_replicas(const Dataset& ds, int n, double train_frac, uint64_t seed);

MCMatrix build_mc_matrix(const Dataset& ds, int level,
                         std::optional<double> base_unit = std::nullopt);

/// Specification of a synthetic diagnosis problem: a full joint table over
/// (x_1..x_N, y). Cell index = ((v_1*V_2 + v_2)*V_3 + ...)*K + y.
struct SyntheticSpec {
    std::vector<AttributeMeta> attrs;
    std::vector<std::string> class_names;
    int num_classes = 0;
    std::vector<double> joint;
    std::optional<MCMatrix> mc;

    size_t cell_index(std::span<const int> values, int y) const;
    size_t table_size() const;
    void validate() const;
};

Dataset gen_synthetic(const SyntheticSpec& spec, uint64_t seed, int m);

/// Dataset with exact cell frequencies (round(joint[cell]*m) examples per
/// cell); used where empirical probabilities must hit stated constants.
Dataset materialize_exact(const SyntheticSpec& spec, int m);

Dataset subset(const Dataset& ds, std::span<const int> indices);

// Attribute-level info gain of a candidate 2-threshold split, exposed for the
// discretization search and its tests.
double info_gain_of_thresholds(std::span<const double> values, std::span<const int> labels,
                               int num_classes, double t1, double t2);

// File formats (see README): dataset and MC matrix as JSON, replicas as
// "seed:" header plus train:/test: index sections.
void save_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset load_prepared_dataset(const std::filesystem::path& path);
void save_replica(const Replica& r, const std::filesystem::path& path);
Replica load_replica(const std::filesystem::path& path);
void save_mc_matrix(const MCMatrix& mc, const std::filesystem::path& path);
MCMatrix load_mc_matrix(const std::filesystem::path& path);
SyntheticSpec load_synthetic_spec(const std::filesystem::path& path);
void save_synthetic_spec(const SyntheticSpec& spec, const std::filesystem::path& path);

}  // namespace costdiag
