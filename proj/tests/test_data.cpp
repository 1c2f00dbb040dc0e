#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <costdiag/data.hpp>

#include "support.hpp"

using namespace costdiag;
namespace fs = std::filesystem;

namespace {

fs::path tmp_dir() {
    auto dir = fs::temp_directory_path() / "costdiag_test_data";
    fs::create_directories(dir);
    return dir;
}

fs::path write_file(const std::string& name, const std::string& content) {
    auto path = tmp_dir() / name;
    std::ofstream out(path, std::ios::binary);
    out << content;
    return path;
}

}  // namespace

TEST_CASE("load_dataset parses rows and costs") {
    auto csv = write_file("basic.csv", "a,b,cls\n1,x,yes\n2,y,no\n3,x,yes\n");
    auto costs = write_file("basic_costs.csv", "a,2.5\nb,7\n");
    RawDataset raw = load_dataset(csv, "cls", costs);
    CHECK(raw.rows.size() == 3);
    CHECK(raw.attribute_names == std::vector<std::string>{"a", "b"});
    CHECK(raw.costs[0] == 2.5);
    CHECK(raw.costs[1] == 7.0);
    CHECK(raw.labels[1] == "no");
}

TEST_CASE("load_dataset defaults missing sidecar entries to cost 1") {
    auto csv = write_file("defc.csv", "a,b,cls\n1,x,yes\n");
    auto costs = write_file("defc_costs.csv", "a,3\n");
    RawDataset raw = load_dataset(csv, "cls", costs);
    CHECK(raw.costs[0] == 3.0);
    CHECK(raw.costs[1] == 1.0);
    RawDataset no_sidecar = load_dataset(csv, "cls");
    CHECK(no_sidecar.costs[0] == 1.0);
}

TEST_CASE("load_dataset rejects ragged rows and unknown class column") {
    auto csv = write_file("ragged.csv", "a,b,c,d,cls\n1,2,3,4,yes\n1,2,3,yes\n");
    CHECK_THROWS_WITH_AS(load_dataset(csv, "cls"), doctest::Contains("row 3"), ParseError);
    auto ok = write_file("okcol.csv", "a,cls\n1,yes\n");
    CHECK_THROWS_AS(load_dataset(ok, "nope"), ConfigError);
}

TEST_CASE("clean removes missing rows and remaps labels") {
    RawDataset raw;
    raw.attribute_names = {"a"};
    raw.costs = {1.0};
    for (int i = 0; i < 10; ++i) {
        raw.rows.push_back({i == 2 || i == 6 ? "?" : std::to_string(i)});
        raw.labels.push_back(std::to_string(1 + i % 4));
    }
    std::map<std::string, int> merge{{"1", 0}, {"2", 0}, {"3", 1}, {"4", 1}};
    CleanResult res = clean(raw, merge, "?");
    CHECK(res.removed == 2);
    CHECK(res.data.rows.size() == 8);
    for (const auto& l : res.data.labels) CHECK((l == "0" || l == "1"));

    // re-cleaning the cleaned output changes nothing
    CleanResult again = clean(res.data, {{"0", 0}, {"1", 1}}, "?");
    CHECK(again.removed == 0);
    CHECK(again.data.rows == res.data.rows);
    CHECK(again.data.labels == res.data.labels);

    std::map<std::string, int> incomplete{{"1", 0}, {"2", 0}, {"3", 1}};
    CHECK_THROWS_WITH_AS(clean(raw, incomplete, "?"), doctest::Contains("'4'"), ConfigError);

    RawDataset all_missing;
    all_missing.attribute_names = {"a"};
    all_missing.costs = {1.0};
    all_missing.rows = {{"?"}, {"?"}};
    all_missing.labels = {"1", "1"};
    CHECK_THROWS_WITH_AS(clean(all_missing, {{"1", 0}}, "?"),
                         doctest::Contains("no examples remain"), Error);
}

namespace {

RawDataset one_column(const std::vector<double>& values, const std::vector<int>& labels) {
    RawDataset raw;
    raw.attribute_names = {"x"};
    raw.costs = {1.0};
    for (size_t i = 0; i < values.size(); ++i) {
        raw.rows.push_back({fmt_double(values[i])});
        raw.labels.push_back(std::to_string(labels[i]));
    }
    return raw;
}

// independent oracle: all threshold pairs over midpoints, best gain
double brute_best_gain(const std::vector<double>& values, const std::vector<int>& labels,
                       int num_classes) {
    std::vector<double> uniq = values;
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    std::vector<double> cuts;
    for (size_t i = 0; i + 1 < uniq.size(); ++i) cuts.push_back((uniq[i] + uniq[i + 1]) / 2);
    double best = -1;
    for (size_t i = 0; i < cuts.size(); ++i)
        for (size_t j = i + 1; j < cuts.size(); ++j)
            best = std::max(best, info_gain_of_thresholds(values, labels, num_classes, cuts[i],
                                                          cuts[j]));
    return best;
}

}  // namespace

TEST_CASE("discretize: three distinct values force midpoint thresholds") {
    RawDataset raw = one_column({1, 2, 3, 1, 2, 3}, {0, 1, 0, 0, 1, 0});
    Dataset ds = discretize(raw, {"x"});
    REQUIRE(ds.attrs[0].thresholds.size() == 2);
    CHECK(ds.attrs[0].thresholds[0] == 1.5);
    CHECK(ds.attrs[0].thresholds[1] == 2.5);
    CHECK(ds.attrs[0].arity == 3);
    for (const auto& ex : ds.examples) CHECK(ex.values[0] < 3);
}

TEST_CASE("discretize picks the maximal-gain threshold pair") {
    // y = 1 iff x > 10; the informative cut is the midpoint of 6 and 14
    std::vector<double> values{5, 6, 14, 15};
    std::vector<int> labels{0, 0, 1, 1};
    RawDataset raw = one_column(values, labels);
    Dataset ds = discretize(raw, {"x"});
    REQUIRE(ds.attrs[0].thresholds.size() == 2);
    double t1 = ds.attrs[0].thresholds[0];
    double t2 = ds.attrs[0].thresholds[1];
    CHECK((t1 == 10.0 || t2 == 10.0));  // one threshold splits at (6+14)/2
    double chosen = info_gain_of_thresholds(values, labels, 2, t1, t2);
    CHECK(chosen == doctest::Approx(brute_best_gain(values, labels, 2)).epsilon(1e-12));
}

TEST_CASE("discretize zero-gain tie breaks to the smallest pair") {
    // single class: every pair has gain 0, cuts are 1.5, 2.5, 3.5
    Dataset same = discretize(one_column({1, 2, 3, 4}, {0, 0, 0, 0}), {"x"});
    CHECK(same.attrs[0].thresholds[0] == 1.5);
    CHECK(same.attrs[0].thresholds[1] == 2.5);
}

TEST_CASE("discretize handles degenerate and binary attributes") {
    Dataset constant = discretize(one_column({7, 7, 7}, {0, 1, 0}), {"x"});
    CHECK(constant.attrs[0].arity == 1);
    CHECK_FALSE(constant.attrs[0].usable);

    Dataset binary = discretize(one_column({1, 5, 1, 5}, {0, 1, 0, 1}), {"x"});
    CHECK(binary.attrs[0].arity == 2);
    REQUIRE(binary.attrs[0].thresholds.size() == 1);
    CHECK(binary.attrs[0].thresholds[0] == 3.0);
}

TEST_CASE("discretize then re-discretize is the identity on codes") {
    auto inst = testsup::make_instance(3, false);
    // convert codes back to tokens and discretize as categorical
    RawDataset raw;
    for (const auto& a : inst.data.attrs) raw.attribute_names.push_back(a.name);
    raw.costs.assign(inst.data.attrs.size(), 1.0);
    for (const auto& ex : inst.data.examples) {
        std::vector<std::string> row;
        for (int v : ex.values) row.push_back(std::to_string(v));
        raw.rows.push_back(row);
        raw.labels.push_back(std::to_string(ex.label));
    }
    Dataset again = discretize(raw, {});
    REQUIRE(again.size() == inst.data.size());
    for (int i = 0; i < again.size(); ++i) {
        CHECK(again.examples[i].values == inst.data.examples[i].values);
        CHECK(again.examples[i].label == inst.data.examples[i].label);
    }
}

namespace {

Dataset two_class_dataset(int n0, int n1) {
    Dataset ds;
    ds.attrs = {{"a", 2, 1.0, {}, true}, {"b", 2, 3.0, {}, true}};
    ds.class_names = {"0", "1"};
    ds.num_classes = 2;
    for (int i = 0; i < n0 + n1; ++i) {
        Example ex;
        ex.values = {i % 2, (i / 2) % 2};
        ex.label = i < n0 ? 0 : 1;
        ds.examples.push_back(ex);
    }
    return ds;
}

}  // namespace

TEST_CASE("make_replicas stratifies a 200/100 split") {
    Dataset ds = two_class_dataset(200, 100);
    auto reps = make_replicas(ds, 5, 2.0 / 3.0, 42);
    for (const auto& rep : reps) {
        long train0 = 0, train1 = 0;
        for (int i : rep.train) (ds.examples[i].label == 0 ? train0 : train1)++;
        CHECK((train0 == 133 || train0 == 134));
        CHECK((train1 == 66 || train1 == 67));
        CHECK(rep.train.size() + rep.test.size() == 300);
        // disjointness
        std::set<int> seen(rep.train.begin(), rep.train.end());
        for (int i : rep.test) CHECK(seen.count(i) == 0);
    }
}

TEST_CASE("make_replicas is deterministic and varied") {
    Dataset ds = two_class_dataset(40, 25);
    auto a = make_replicas(ds, 20, 2.0 / 3.0, 7);
    auto b = make_replicas(ds, 20, 2.0 / 3.0, 7);
    REQUIRE(a.size() == 20);
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].train == b[i].train);
        CHECK(a[i].test == b[i].test);
    }
    int distinct = 0;
    for (size_t i = 1; i < a.size(); ++i)
        if (a[i].train != a[0].train) ++distinct;
    CHECK(distinct == 19);
}

TEST_CASE("make_replicas stratification stays within one example per class") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        auto inst = testsup::make_instance(seed, false);
        std::vector<long> class_count(2, 0);
        for (const auto& ex : inst.data.examples) ++class_count[ex.label];
        auto reps = make_replicas(inst.data, 4, 2.0 / 3.0, seed);
        for (const auto& rep : reps) {
            for (int y = 0; y < 2; ++y) {
                long tr = 0;
                for (int i : rep.train)
                    if (inst.data.examples[i].label == y) ++tr;
                double frac = static_cast<double>(tr) / class_count[y];
                CHECK(std::abs(frac - 2.0 / 3.0) <= 1.0 / class_count[y] + 1e-12);
            }
        }
    }
}

TEST_CASE("make_replicas rejects singleton classes") {
    Dataset ds = two_class_dataset(5, 1);
    CHECK_THROWS_AS(make_replicas(ds, 2, 2.0 / 3.0, 1), Error);
}

TEST_CASE("build_mc_matrix: symmetric priors give symmetric costs") {
    Dataset ds = two_class_dataset(50, 50);
    MCMatrix mc = build_mc_matrix(ds, 2, 10.0);  // level 2 has multiplier 1
    CHECK(mc.at(0, 0) == 0.0);
    CHECK(mc.at(1, 1) == 0.0);
    CHECK(mc.at(0, 1) == doctest::Approx(10.0));
    CHECK(mc.at(1, 0) == doctest::Approx(10.0));
}

TEST_CASE("build_mc_matrix satisfies the equal-expected-cost identity") {
    Dataset ds = two_class_dataset(60, 40);
    double base = 4.0;  // sum of the two measurement costs above
    for (int level = 1; level <= 5; ++level) {
        MCMatrix mc = build_mc_matrix(ds, level);
        CHECK(0.6 * mc.at(1, 0) == doctest::Approx(0.4 * mc.at(0, 1)).epsilon(1e-12));
        double m = kMcLevelMultiplier[level - 1];
        CHECK(std::min(mc.at(0, 1), mc.at(1, 0)) == doctest::Approx(m * base).epsilon(1e-9));
    }
    MCMatrix l1 = build_mc_matrix(ds, 1);
    MCMatrix l5 = build_mc_matrix(ds, 5);
    CHECK(l5.at(0, 1) == doctest::Approx(16.0 * l1.at(0, 1)));
    CHECK(l5.at(1, 0) == doctest::Approx(16.0 * l1.at(1, 0)));
}

TEST_CASE("build_mc_matrix rejects a zero class prior") {
    Dataset ds = two_class_dataset(6, 0);
    ds.num_classes = 2;  // class 1 exists but has no examples
    CHECK_THROWS_AS(build_mc_matrix(ds, 1), Error);
}

TEST_CASE("gen_synthetic: deterministic rule, marginals, determinism") {
    SyntheticSpec spec;
    spec.attrs = {{"x1", 2, 1.0, {}, true}};
    spec.class_names = {"0", "1"};
    spec.num_classes = 2;
    spec.joint = {0.5, 0.0, 0.0, 0.5};  // y == x1
    Dataset ds = gen_synthetic(spec, 9, 100);
    for (const auto& ex : ds.examples) CHECK(ex.label == ex.values[0]);

    SyntheticSpec bits;
    bits.attrs = {{"x1", 2, 1.0, {}, true}, {"x2", 2, 1.0, {}, true}};
    bits.class_names = {"0", "1"};
    bits.num_classes = 2;
    bits.joint.assign(8, 0.125);  // uniform independent bits
    Dataset big = gen_synthetic(bits, 4, 10000);
    for (int a = 0; a < 2; ++a) {
        long ones = 0;
        for (const auto& ex : big.examples) ones += ex.values[a];
        double marginal = static_cast<double>(ones) / big.size();
        CHECK(marginal > 0.45);
        CHECK(marginal < 0.55);
    }

    Dataset again = gen_synthetic(bits, 4, 10000);
    REQUIRE(again.size() == big.size());
    for (int i = 0; i < big.size(); ++i) {
        CHECK(again.examples[i].values == big.examples[i].values);
        CHECK(again.examples[i].label == big.examples[i].label);
    }

    SyntheticSpec bad = spec;
    bad.joint = {0.5, 0.0, 0.0, 0.4};
    CHECK_THROWS_AS(gen_synthetic(bad, 1, 10), ConfigError);
}

TEST_CASE("dataset, replica and MC files round-trip") {
    auto inst = testsup::make_instance(11, false);
    auto dir = tmp_dir();
    save_dataset(inst.data, dir / "ds.json");
    Dataset loaded = load_prepared_dataset(dir / "ds.json");
    REQUIRE(loaded.size() == inst.data.size());
    CHECK(loaded.num_classes == inst.data.num_classes);
    for (int i = 0; i < loaded.size(); ++i)
        CHECK(loaded.examples[i].values == inst.data.examples[i].values);

    auto reps = make_replicas(inst.data, 2, 2.0 / 3.0, 5);
    save_replica(reps[0], dir / "rep.txt");
    Replica rep = load_replica(dir / "rep.txt");
    CHECK(rep.train == reps[0].train);
    CHECK(rep.test == reps[0].test);
    CHECK(rep.seed == reps[0].seed);

    save_mc_matrix(inst.cost.mc, dir / "mc.json");
    MCMatrix mc = load_mc_matrix(dir / "mc.json");
    CHECK(mc.cost == inst.cost.mc.cost);
}
