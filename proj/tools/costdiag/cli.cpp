#include "cli.hpp"

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "costdiag/sweep.hpp"

namespace costdiag {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kVersion = "0.1.0";

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    for (const auto& tok : split_csv_line(s))
        if (!tok.empty()) out.push_back(tok);
    return out;
}

std::vector<int> split_ints(const std::string& s) {
    std::vector<int> out;
    for (const auto& tok : split_list(s)) out.push_back(std::stoi(tok));
    return out;
}

void write_manifest(const fs::path& dir, const std::string& command, const json& args) {
    json j{{"tool", "costdiag"}, {"version", kVersion}, {"command", command}, {"args", args}};
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    out << j.dump(1) << "\n";
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct PreparedPaths {
    fs::path dataset;
    fs::path mc(int level) const { return dir / ("mc_" + std::to_string(level) + ".json"); }
    fs::path replica(int r) const {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "replica_%02d.txt", r);
        return dir / buf;
    }
    fs::path dir;
};

PreparedPaths prepared(const fs::path& dir) {
    return PreparedPaths{dir / "dataset.json", dir};
}

void validate_algorithm(const std::string& alg) {
    if (!is_valid_algorithm(alg)) {
        std::string all;
        for (const auto& n : algorithm_names()) all += (all.empty() ? "" : ", ") + n;
        throw ConfigError("unknown algorithm '" + alg + "'; valid names: " + all);
    }
}

struct TrainInputs {
    Dataset full;
    Dataset train;
    Dataset test;
    CostModel cost;
};

TrainInputs load_train_inputs(const fs::path& dir, int level, int replica_id) {
    PreparedPaths p = prepared(dir);
    TrainInputs in;
    in.full = load_prepared_dataset(p.dataset);
    MCMatrix mc = load_mc_matrix(p.mc(level));
    in.cost = make_cost_model(in.full, mc);
    Replica rep = load_replica(p.replica(replica_id));
    in.train = subset(in.full, rep.train);
    in.test = subset(in.full, rep.test);
    return in;
}

void write_costs_csv(const fs::path& path, std::span<const double> costs) {
    std::ofstream out(path, std::ios::binary);
    out << "cost\n";
    for (double c : costs) out << fmt_double(c) << "\n";
}

std::vector<double> read_costs_csv(const fs::path& path) {
    std::vector<double> out;
    std::ifstream in(path);
    if (!in) throw Error("cannot open file: " + path.string());
    std::string line;
    while (std::getline(in, line)) {
        auto t = trim(line);
        if (t.empty() || t == "cost") continue;
        out.push_back(std::stod(std::string(t)));
    }
    return out;
}

// ---------------------------------------------------------------- commands

int cmd_prepare(const fs::path& data, const fs::path& dataset_json,
                const std::string& class_col, const fs::path& costs_path,
                const std::string& merge_spec, const std::string& missing,
                const std::string& continuous_spec, bool continuous_all, int replicas,
                double train_frac, uint64_t seed, const std::string& levels_spec,
                const fs::path& out_dir, std::ostream& out) {
    fs::create_directories(out_dir);
    Dataset ds;
    if (!dataset_json.empty()) {
        ds = load_prepared_dataset(dataset_json);
    } else {
        RawDataset raw = load_dataset(data, class_col, costs_path);
        std::map<std::string, int> merge;
        if (merge_spec.empty()) {
            std::set<std::string> labels(raw.labels.begin(), raw.labels.end());
            int next = 0;
            for (const auto& l : labels) merge[l] = next++;
        } else {
            for (const auto& part : split_list(merge_spec)) {
                auto eq = part.find('=');
                if (eq == std::string::npos)
                    throw ConfigError("bad --merge entry '" + part + "', expected label=class");
                merge[part.substr(0, eq)] = std::stoi(part.substr(eq + 1));
            }
        }
        CleanResult cleaned = clean(raw, merge, missing);
        out << "removed " << cleaned.removed << " rows with missing values\n";
        std::set<std::string> continuous;
        if (continuous_all)
            continuous.insert(raw.attribute_names.begin(), raw.attribute_names.end());
        else
            for (const auto& name : split_list(continuous_spec)) continuous.insert(name);
        ds = discretize(cleaned.data, continuous);
    }
    save_dataset(ds, out_dir / "dataset.json");

    auto reps = make_replicas(ds, replicas, train_frac, seed);
    for (size_t r = 0; r < reps.size(); ++r)
        save_replica(reps[r], prepared(out_dir).replica(static_cast<int>(r)));

    std::vector<int> levels = levels_spec.empty() ? std::vector<int>{1, 2, 3, 4, 5}
                                                  : split_ints(levels_spec);
    for (int level : levels)
        save_mc_matrix(build_mc_matrix(ds, level), prepared(out_dir).mc(level));

    write_manifest(out_dir, "prepare",
                   json{{"seed", seed},
                        {"replicas", replicas},
                        {"train_frac", train_frac},
                        {"levels", levels}});
    out << "prepared " << ds.size() << " examples, " << ds.num_attrs() << " attributes, "
        << reps.size() << " replicas -> " << out_dir.string() << "\n";
    return 0;
}

int cmd_synth(const fs::path& spec_path, int m, uint64_t seed, bool exact,
              const fs::path& out_path, std::ostream& out) {
    SyntheticSpec spec = load_synthetic_spec(spec_path);
    Dataset ds = exact ? materialize_exact(spec, m) : gen_synthetic(spec, seed, m);
    save_dataset(ds, out_path);
    out << "wrote " << ds.size() << " examples -> " << out_path.string() << "\n";
    return 0;
}

int cmd_train(const fs::path& dir, const std::string& alg, int level, int replica_id,
              uint64_t seed, const fs::path& out_dir, int mem_limit_mb, bool no_heuristic,
              bool no_min_support_voi, bool anytime_test, std::ostream& out) {
    validate_algorithm(alg);
    TrainInputs in = load_train_inputs(dir, level, replica_id);
    fs::create_directories(out_dir);

    TrainOptions opts;
    opts.memory_limit_bytes = static_cast<long long>(mem_limit_mb) * 1024 * 1024;
    opts.use_heuristic = !no_heuristic;
    opts.voi_min_support = !no_min_support_voi;
    if (anytime_test) opts.anytime_eval = in.test.examples;

    TrainResult tr = train_algorithm(alg, in.train, in.cost, seed, opts);
    ProbEstimator est(in.train, is_laplace(alg) ? Smoothing::Laplace : Smoothing::ML);
    double v_train = policy_value(*tr.policy, est, in.cost);

    std::ofstream pf(out_dir / "policy.json", std::ios::binary);
    pf << serialize(*tr.policy, in.cost, in.full);
    pf.close();

    if (!tr.log.empty()) {
        std::ofstream lf(out_dir / "anytime.csv", std::ios::binary);
        lf << "iter,v_real_train,v_opt_train,v_test,nodes,bytes\n";
        for (const auto& r : tr.log)
            lf << r.iter << ',' << fmt_double(r.v_real_train) << ','
               << fmt_double(r.v_opt_train) << ',' << (r.v_test ? fmt_double(*r.v_test) : "")
               << ',' << r.nodes << ',' << r.bytes << '\n';
    }
    write_manifest(out_dir, "train",
                   json{{"alg", alg},
                        {"level", level},
                        {"replica", replica_id},
                        {"seed", seed},
                        {"mem_limit_mb", mem_limit_mb},
                        {"heuristic", !no_heuristic}});
    out << "alg=" << alg << " level=" << level << " replica=" << replica_id
        << " v_train=" << fmt_double(v_train) << " nodes=" << node_count(*tr.policy);
    if (is_systematic(alg))
        out << " iterations=" << tr.stats.iterations << " expansions=" << tr.stats.expansions
            << " or_nodes=" << tr.stats.or_nodes << " and_nodes=" << tr.stats.and_nodes
            << " bytes=" << tr.stats.bytes << " cutoffs=" << tr.stats.heuristic_cutoffs
            << " sp_prunes=" << tr.stats.sp_prunes
            << (tr.stats.hit_memory_limit ? " memory_limit=hit" : "");
    out << "\n";
    return 0;
}

int cmd_eval(const fs::path& policy_path, const fs::path& dir, int level, int replica_id,
             const fs::path& out_path, std::ostream& out) {
    PolicyFile pf = deserialize(read_file(policy_path));
    TrainInputs in = load_train_inputs(dir, level, replica_id);
    if (pf.fingerprint != in.cost.fingerprint())
        throw ConfigError("policy was built under a different cost model (fingerprint " +
                          pf.fingerprint + " != " + in.cost.fingerprint() + ")");
    EvalResult ev = evaluate(*pf.root, in.test.examples, in.cost);
    if (!out_path.empty()) write_costs_csv(out_path, ev.per_example);
    out << "v_test=" << fmt_double(ev.v_test) << " examples=" << ev.per_example.size() << "\n";
    return 0;
}

int cmd_compare(const fs::path& costs1, const fs::path& costs2, int resamples,
                double confidence, uint64_t seed, std::ostream& out) {
    auto c1 = read_costs_csv(costs1);
    auto c2 = read_costs_csv(costs2);
    auto cmp = bdeltacost(c1, c2, resamples, confidence, seed);
    out << "result=" << comp_result_str(cmp.result) << " ci=[" << fmt_double(cmp.ci_lo) << ","
        << fmt_double(cmp.ci_hi) << "] resamples=" << cmp.resamples << "\n";
    return 0;
}

int cmd_sweep(const std::string& prepared_dirs, const std::string& algs_spec,
              const std::string& levels_spec, const std::string& replicas_spec, uint64_t seed,
              int jobs, int resamples, int mem_limit_mb, const fs::path& out_dir,
              std::ostream& out) {
    SweepSpec spec;
    for (const auto& d : split_list(prepared_dirs)) {
        SweepDomain dom;
        fs::path dir(d);
        dom.name = dir.filename().empty() ? dir.parent_path().filename().string()
                                          : dir.filename().string();
        dom.data = load_prepared_dataset(prepared(dir).dataset);
        for (int r = 0;; ++r) {
            fs::path rp = prepared(dir).replica(r);
            if (!fs::exists(rp)) break;
            dom.replicas.push_back(load_replica(rp));
        }
        if (dom.replicas.empty()) throw ConfigError("no replica files under " + d);
        for (int level = 1; level <= 5; ++level) {
            fs::path mp = prepared(dir).mc(level);
            if (fs::exists(mp))
                dom.mc_by_level.push_back(load_mc_matrix(mp));
            else
                dom.mc_by_level.push_back(MCMatrix{});
        }
        spec.domains.push_back(std::move(dom));
    }
    spec.algorithms = split_list(algs_spec);
    for (const auto& a : spec.algorithms) validate_algorithm(a);
    spec.levels = levels_spec.empty() ? std::vector<int>{1, 2, 3, 4, 5} : split_ints(levels_spec);
    if (!replicas_spec.empty()) spec.replica_ids = split_ints(replicas_spec);
    spec.seed = seed;
    spec.jobs = jobs;
    spec.resamples = resamples;
    spec.train_opts.memory_limit_bytes = static_cast<long long>(mem_limit_mb) * 1024 * 1024;
    spec.out_dir = out_dir;
    SweepOutcome res = run_sweep(spec);
    write_manifest(out_dir, "sweep",
                   json{{"seed", seed},
                        {"algorithms", spec.algorithms},
                        {"levels", spec.levels},
                        {"resamples", resamples}});
    out << "runs=" << res.runs << " failures=" << res.failures
        << " comparisons=" << res.comparisons << " -> " << out_dir.string() << "\n";
    return res.failures == 0 ? 0 : 1;
}

int cmd_walk(const fs::path& policy_path, std::istream& in, std::ostream& out) {
    PolicyFile pf = deserialize(read_file(policy_path));
    auto class_name = [&](int k) {
        return k < static_cast<int>(pf.class_names.size()) ? pf.class_names[k]
                                                           : std::to_string(k);
    };
    const PolicyNode* node = pf.root.get();
    while (!node->is_leaf()) {
        int attr = node->action.index;
        std::string name = attr < static_cast<int>(pf.attr_names.size())
                               ? pf.attr_names[attr]
                               : ("x" + std::to_string(attr));
        int arity = attr < static_cast<int>(pf.attr_arity.size()) ? pf.attr_arity[attr] : 0;
        out << "Measure " << name << " [0.." << arity - 1 << "]: " << std::flush;
        std::string token;
        if (!(in >> token)) throw Error("input ended before a diagnosis was reached");
        int v;
        try {
            v = std::stoi(token);
        } catch (...) {
            throw ParseError("expected a value code, got '" + token + "'");
        }
        auto it = node->children.find(v);
        if (it == node->children.end()) {
            out << "Diagnose " << class_name(node->fallback_diag) << " (unseen outcome)\n";
            return 0;
        }
        node = it->second.get();
    }
    out << "Diagnose " << class_name(node->action.index) << "\n";
    return 0;
}

int cmd_oracle(const fs::path& dir, int level, int replica_id, bool full, int max_tests,
               bool laplace, const fs::path& out_path, std::ostream& out) {
    TrainInputs in = load_train_inputs(dir, level, full ? 0 : replica_id);
    const Dataset& train = full ? in.full : in.train;
    ProbEstimator est(train, laplace ? Smoothing::Laplace : Smoothing::ML);
    OracleResult oracle = brute_force_optimal(est, in.cost, max_tests);
    if (!out_path.empty()) {
        std::ofstream pf(out_path, std::ios::binary);
        pf << serialize(*oracle.policy, in.cost, in.full);
    }
    out << "v_star=" << fmt_double(oracle.v_star) << " nodes=" << node_count(*oracle.policy)
        << "\n";
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out,
            std::ostream& err) {
    CLI::App app{"costdiag: learning diagnostic policies that trade measurement cost "
                 "against misdiagnosis cost"};
    app.require_subcommand(1);

    // prepare
    auto* prep = app.add_subcommand("prepare", "discretize a CSV and build replicas + MC matrices");
    std::string data, dataset_json, class_col, costs_file, merge, missing = "?", continuous,
                levels;
    bool continuous_all = false;
    int replicas = 20;
    double train_frac = 2.0 / 3.0;
    uint64_t seed = 1;
    std::string out_dir;
    prep->add_option("--data", data, "CSV file with a header row");
    prep->add_option("--dataset", dataset_json, "already-discretized dataset.json");
    prep->add_option("--class-col", class_col, "name of the class column");
    prep->add_option("--costs", costs_file, "cost sidecar: name,cost lines");
    prep->add_option("--merge", merge, "label=class,... class merge map");
    prep->add_option("--missing", missing, "missing-value token (default '?')");
    prep->add_option("--continuous", continuous, "comma list of continuous attributes");
    prep->add_flag("--continuous-all", continuous_all, "treat every attribute as continuous");
    prep->add_option("--replicas", replicas, "number of train/test replicas");
    prep->add_option("--train-frac", train_frac, "training fraction of each replica");
    prep->add_option("--seed", seed, "replica RNG seed");
    prep->add_option("--levels", levels, "MC levels to build (default 1..5)");
    prep->add_option("--out", out_dir, "output directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "sample a dataset from a synthetic joint spec");
    std::string synth_spec, synth_out;
    int synth_m = 1000;
    uint64_t synth_seed = 1;
    bool synth_exact = false;
    synth->add_option("--spec", synth_spec, "synthetic spec JSON")->required();
    synth->add_option("--m", synth_m, "number of examples");
    synth->add_option("--seed", synth_seed, "sampling seed");
    synth->add_flag("--exact", synth_exact, "emit exact cell frequencies instead of sampling");
    synth->add_option("--out", synth_out, "output dataset.json")->required();

    // train
    auto* train = app.add_subcommand("train", "learn a policy on one replica");
    std::string tr_dir, tr_alg, tr_out;
    int tr_level = 1, tr_replica = 0, tr_mem = 100;
    uint64_t tr_seed = 1;
    bool tr_no_heur = false, tr_no_msv = false, tr_anytime_test = false;
    train->add_option("--prepared", tr_dir, "prepared directory")->required();
    train->add_option("--alg", tr_alg, "algorithm name")->required();
    train->add_option("--level", tr_level, "MC level 1..5");
    train->add_option("--replica", tr_replica, "replica index");
    train->add_option("--seed", tr_seed, "run seed");
    train->add_option("--mem-limit-mb", tr_mem, "AND/OR graph memory budget (MiB)");
    train->add_flag("--no-heuristic", tr_no_heur, "score unexpanded nodes as zero");
    train->add_flag("--no-min-support-voi", tr_no_msv, "drop the VOI minimum-support rule");
    train->add_flag("--anytime-test", tr_anytime_test, "log V_test per iteration");
    train->add_option("--out", tr_out, "output directory")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a policy on a replica's test set");
    std::string ev_policy, ev_dir, ev_out;
    int ev_level = 1, ev_replica = 0;
    ev->add_option("--policy", ev_policy, "policy.json")->required();
    ev->add_option("--prepared", ev_dir, "prepared directory")->required();
    ev->add_option("--level", ev_level, "MC level 1..5");
    ev->add_option("--replica", ev_replica, "replica index");
    ev->add_option("--out", ev_out, "write per-example costs CSV here");

    // compare
    auto* cmp = app.add_subcommand("compare", "paired bootstrap test on two cost vectors");
    std::string cmp_c1, cmp_c2;
    int cmp_resamples = 1000;
    double cmp_conf = 0.95;
    uint64_t cmp_seed = 0;
    cmp->add_option("--costs1", cmp_c1, "per-example costs of algorithm 1")->required();
    cmp->add_option("--costs2", cmp_c2, "per-example costs of algorithm 2")->required();
    cmp->add_option("--resamples", cmp_resamples, "bootstrap resamples");
    cmp->add_option("--confidence", cmp_conf, "confidence level");
    cmp->add_option("--seed", cmp_seed, "bootstrap seed");

    // sweep
    auto* sw = app.add_subcommand("sweep", "train and compare algorithms across cells");
    std::string sw_dirs, sw_algs, sw_levels, sw_replicas, sw_out;
    uint64_t sw_seed = 1;
    int sw_jobs = 1, sw_resamples = 1000, sw_mem = 100;
    sw->add_option("--prepared", sw_dirs, "comma list of prepared directories")->required();
    sw->add_option("--algs", sw_algs, "comma list of algorithm names")->required();
    sw->add_option("--levels", sw_levels, "MC levels (default 1..5)");
    sw->add_option("--replicas", sw_replicas, "replica subset (default all)");
    sw->add_option("--seed", sw_seed, "sweep seed");
    sw->add_option("--jobs", sw_jobs, "worker threads");
    sw->add_option("--resamples", sw_resamples, "bootstrap resamples");
    sw->add_option("--mem-limit-mb", sw_mem, "memory budget per run (MiB)");
    sw->add_option("--out", sw_out, "report directory")->required();

    // walk
    auto* walk = app.add_subcommand("walk", "drive a policy interactively");
    std::string walk_policy;
    walk->add_option("--policy", walk_policy, "policy.json")->required();

    // oracle
    auto* orc = app.add_subcommand("oracle", "exhaustive optimal policy (small instances)");
    std::string orc_dir, orc_out;
    int orc_level = 1, orc_replica = 0, orc_max_tests = 4;
    bool orc_full = false, orc_laplace = false;
    orc->add_option("--prepared", orc_dir, "prepared directory")->required();
    orc->add_option("--level", orc_level, "MC level 1..5");
    orc->add_option("--replica", orc_replica, "replica index");
    orc->add_flag("--full", orc_full, "use the full dataset instead of a replica");
    orc->add_option("--max-tests", orc_max_tests, "enumeration guard");
    orc->add_flag("--laplace", orc_laplace, "Laplace-corrected probabilities");
    orc->add_option("--out", orc_out, "write the optimal policy here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {  // --help
            out << app.help();
            return 0;
        }
        err << "error: usage: " << e.what() << "\n";
        return 2;
    }

    try {
        if (prep->parsed())
            return cmd_prepare(data, dataset_json, class_col, costs_file, merge, missing,
                               continuous, continuous_all, replicas, train_frac, seed, levels,
                               out_dir, out);
        if (synth->parsed())
            return cmd_synth(synth_spec, synth_m, synth_seed, synth_exact, synth_out, out);
        if (train->parsed())
            return cmd_train(tr_dir, tr_alg, tr_level, tr_replica, tr_seed, tr_out, tr_mem,
                             tr_no_heur, tr_no_msv, tr_anytime_test, out);
        if (ev->parsed())
            return cmd_eval(ev_policy, ev_dir, ev_level, ev_replica, ev_out, out);
        if (cmp->parsed())
            return cmd_compare(cmp_c1, cmp_c2, cmp_resamples, cmp_conf, cmp_seed, out);
        if (sw->parsed())
            return cmd_sweep(sw_dirs, sw_algs, sw_levels, sw_replicas, sw_seed, sw_jobs,
                             sw_resamples, sw_mem, sw_out, out);
        if (walk->parsed()) return cmd_walk(walk_policy, in, out);
        if (orc->parsed())
            return cmd_oracle(orc_dir, orc_level, orc_replica, orc_full, orc_max_tests,
                              orc_laplace, orc_out, out);
    } catch (const ConfigError& e) {
        err << "error: config: " << e.what() << "\n";
        return 2;
    } catch (const ParseError& e) {
        err << "error: parse: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

}  // namespace costdiag
